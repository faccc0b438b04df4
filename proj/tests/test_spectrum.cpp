#include <catch2/catch_amalgamated.hpp>

#include "fhn/spectrum.hpp"
#include "oracles.hpp"

using namespace fhn;

namespace {
Params defaults(double c, double tau) {
    Params p;
    p.c = c;
    p.tau = tau;
    return p;
}
}  // namespace

TEST_CASE("rightmost_spectrum: stable window before the first crossing") {
    const auto sp = rightmost_spectrum(defaults(0.2, 1.0), State{});
    REQUIRE(sp.unstable_count() == 0);
    REQUIRE(sp.rightmost_real() < 0.0);
    for (const auto& e : sp.eigenvalues)
        if (e.converged) REQUIRE(e.residual <= 1e-6);
}

TEST_CASE("rightmost_spectrum: one unstable pair between the first crossings") {
    const auto sp = rightmost_spectrum(defaults(0.2, 2.0), State{});
    REQUIRE(sp.unstable_count() == 2);
    // the pair inherits a frequency near omega_2
    bool found = false;
    for (const auto& e : sp.eigenvalues)
        if (e.lambda.real() > 0.0 && e.lambda.imag() > 0.0) {
            REQUIRE(e.lambda.imag() == Catch::Approx(0.88).margin(0.05));
            found = true;
        }
    REQUIRE(found);
}

TEST_CASE("rightmost_spectrum: restabilized window") {
    const auto sp = rightmost_spectrum(defaults(0.2, 4.0), State{});
    REQUIRE(sp.unstable_count() == 0);
}

TEST_CASE("rightmost_spectrum: count jumps by two with the crossing sign") {
    const Params p = defaults(0.2, 0.0);
    const auto pts = hopf_delays(p, 1);
    REQUIRE(pts.size() >= 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& hp = pts[i];
        const int before =
            rightmost_spectrum(p.with_tau(hp.tau - 0.05), State{}).unstable_count();
        const int after =
            rightmost_spectrum(p.with_tau(hp.tau + 0.05), State{}).unstable_count();
        REQUIRE(after - before == 2 * hp.crossing_sign);
    }
}

TEST_CASE("rightmost_spectrum: ODE limit agrees with the quartic roots") {
    for (double c : {0.2, 0.5}) {
        const Params p = defaults(c, 0.0);
        const auto sp = rightmost_spectrum(p, State{});
        const auto a = ode_limit_coeffs(p);
        const auto roots = oracle::quartic_roots_companion(a[0], a[1], a[2], a[3]);
        for (const auto& r : roots) {
            if (r.real() <= -1.0) continue;
            double best = 1e9;
            for (const auto& e : sp.eigenvalues) best = std::min(best, std::abs(e.lambda - r));
            REQUIRE(best <= 1e-8);
        }
    }
}

TEST_CASE("rightmost_spectrum: nontrivial rest point against dense eigensolve at tau = 0") {
    const Params p = defaults(1.0, 0.0);
    const auto rp = find_rest_points(p);
    const State rest = rp.points[0].state;
    const auto sp = rightmost_spectrum(p, rest);
    const auto jp = jacobian_blocks(p, rest);
    Eigen::EigenSolver<Eigen::Matrix4d> es(jp.now + jp.delayed);
    for (int i = 0; i < 4; ++i) {
        const cplx r = es.eigenvalues()[i];
        if (r.real() <= -1.0) continue;
        double best = 1e9;
        for (const auto& e : sp.eigenvalues) best = std::min(best, std::abs(e.lambda - r));
        REQUIRE(best <= 1e-8);
    }
}

TEST_CASE("rightmost_spectrum: nontrivial point destabilizes below the sub-Hopf") {
    // tau = 0: the antipodal pair is unstable below c = 0.9751 and stable above
    const auto rp_lo = find_rest_points(defaults(0.95, 0.0));
    const auto sp_lo = rightmost_spectrum(defaults(0.95, 0.0), rp_lo.points[0].state);
    REQUIRE(sp_lo.unstable_count() > 0);
    const auto rp_hi = find_rest_points(defaults(1.0, 0.0));
    const auto sp_hi = rightmost_spectrum(defaults(1.0, 0.0), rp_hi.points[0].state);
    REQUIRE(sp_hi.unstable_count() == 0);
}

TEST_CASE("rightmost_spectrum: delayed nontrivial point carries residuals") {
    const Params p = defaults(1.08, 3.9);
    const auto rp = find_rest_points(p);
    const auto sp = rightmost_spectrum(p, rp.points[0].state);
    for (const auto& e : sp.eigenvalues)
        if (e.converged)
            REQUIRE(std::abs(char_eval_at(p, rp.points[0].state, e.lambda)) <= 1e-6);
}

TEST_CASE("rightmost_spectrum: crossing located by sign change matches the closed form") {
    // bisect the rightmost real part in tau and compare with hopf_delays
    const Params p = defaults(0.2, 0.0);
    const double tau_cf = hopf_delays(p, 0).front().tau;
    double lo = 1.5, hi = 1.7;
    const auto rm = [&](double tau) {
        return rightmost_spectrum(p.with_tau(tau), State{}).rightmost_real();
    };
    REQUIRE(rm(lo) < 0.0);
    REQUIRE(rm(hi) > 0.0);
    for (int it = 0; it < 18; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (rm(mid) < 0.0) lo = mid; else hi = mid;
    }
    REQUIRE(std::abs(0.5 * (lo + hi) - tau_cf) <= 1e-3);
}

TEST_CASE("rightmost_spectrum: rejects tiny orders") {
    REQUIRE_THROWS_AS(rightmost_spectrum(defaults(0.2, 1.0), State{}, 4), std::invalid_argument);
}
