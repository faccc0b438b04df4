#include <catch2/catch_amalgamated.hpp>

#include "fhn/atlas.hpp"
#include "oracles.hpp"

using namespace fhn;

namespace {
Params base() { return Params{}; }

double min_dist_to(const Branch& br, double tau, double c) {
    double best = 1e9;
    for (const auto& q : br.points)
        best = std::min(best, std::hypot(q.tau - tau, q.c - c));
    return best;
}
}  // namespace

TEST_CASE("trivial_hopf_curves: first crossing branch passes the paper points") {
    const ParamBox box{0.0, 9.0, 0.0, 0.7};
    const auto curves = trivial_hopf_curves(base(), box);
    REQUIRE_FALSE(curves.empty());

    // branch (k=2, j=0) through (tau0, c) = (1.6211, 0.2)
    double d20 = 1e9;
    for (const auto& br : curves)
        if (br.k == 2 && br.j == 0) d20 = std::min(d20, min_dist_to(br, 1.6211, 0.2));
    REQUIRE(d20 < 0.01);

    // the first branch emanates at (0, 0.3974) and ends on the pitchfork line
    double d_start = 1e9, d_hp = 1e9;
    for (const auto& br : curves) {
        if (br.k != 1 || br.j != 0) continue;
        d_start = std::min(d_start, min_dist_to(br, 0.0, 0.3974));
        d_hp = std::min(d_hp, min_dist_to(br, 0.5219, 0.6285));
    }
    REQUIRE(d_start < 1e-3);
    REQUIRE(d_hp < 2e-3);
}

TEST_CASE("trivial_hopf_curves: every emitted point satisfies the characteristic equation") {
    const ParamBox box{0.0, 6.0, 0.1, 0.5};
    const auto curves = trivial_hopf_curves(base(), box, 2, 2, 200);
    int checked = 0;
    for (const auto& br : curves)
        for (std::size_t i = 0; i < br.points.size(); i += 7) {
            const auto& q = br.points[i];
            if (q.value <= 0.0) continue;  // analytic anchor rows carry omega = 0
            Params p = base().with_c(q.c);
            p.tau = q.tau;
            REQUIRE(std::abs(char_eval(p, cplx(0.0, q.value))) < 1e-7);
            ++checked;
        }
    REQUIRE(checked > 30);
}

TEST_CASE("pitchfork_line: constant coupling, rest-point count flips across it") {
    const ParamBox box{0.0, 9.0, 0.0, 1.4};
    const Branch line = pitchfork_line(base(), box);
    REQUIRE(line.points.size() >= 2);
    for (const auto& q : line.points) REQUIRE(q.c == Catch::Approx(0.6285).margin(5e-4));

    const double cp = line.points.front().c;
    REQUIRE(find_rest_points(base().with_c(cp - 1e-3)).points.size() == 1);
    REQUIRE(find_rest_points(base().with_c(cp + 1e-3)).points.size() == 3);
    // zero eigenvalue changes sign across the line at fixed tau
    const double f_lo = char_eval(base().with_c(cp - 1e-3).with_tau(2.0), 0.0).real();
    const double f_hi = char_eval(base().with_c(cp + 1e-3).with_tau(2.0), 0.0).real();
    REQUIRE(f_lo * f_hi < 0.0);
}

TEST_CASE("nontrivial_hopf_curves: endpoint at the instantaneous sub-Hopf", "[slow]") {
    const ParamBox box{0.0, 2.0, 0.6, 1.2};
    const auto curves = nontrivial_hopf_curves(base(), box, {0.95, 1.05});
    REQUIRE_FALSE(curves.empty());
    double d_end = 1e9;
    for (const auto& br : curves) d_end = std::min(d_end, min_dist_to(br, 0.0, 0.9751));
    REQUIRE(d_end < 2e-3);

    // spot-check defining residual via the characteristic function
    const auto& br = curves.front();
    for (std::size_t i = 0; i < br.points.size(); i += 11) {
        const auto& q = br.points[i];
        Params p = base().with_c(q.c);
        p.tau = q.tau;
        const auto rp = find_rest_points(p);
        REQUIRE(rp.points.size() == 3);
        REQUIRE(std::abs(char_eval_at(p, rp.points.front().state, cplx(0.0, q.value))) < 1e-6);
    }
}

TEST_CASE("nontrivial_hopf_curves: crossing the second branch destabilizes the rests",
          "[slow]") {
    // at c = 1.03 the spectrum index of the plus point flips 0 -> 2 across the
    // second nontrivial Hopf branch
    const ParamBox box{0.0, 6.0, 0.98, 1.2};
    const auto curves = nontrivial_hopf_curves(base(), box, {1.03});
    double tau_cross = -1.0;
    for (const auto& br : curves)
        for (const auto& q : br.points)
            if (std::abs(q.c - 1.03) < 2e-3 && q.tau > 0.5)
                tau_cross = tau_cross < 0 ? q.tau : std::min(tau_cross, q.tau);
    REQUIRE(tau_cross > 0.5);

    const auto rest = find_rest_points(base().with_c(1.03)).points.front().state;
    Params lo = base().with_c(1.03).with_tau(std::max(0.0, tau_cross - 0.1));
    Params hi = base().with_c(1.03).with_tau(tau_cross + 0.1);
    REQUIRE(rightmost_spectrum(lo, rest).unstable_count() == 0);
    REQUIRE(rightmost_spectrum(hi, rest).unstable_count() == 2);
}

TEST_CASE("codim2_points: Hopf-pitchfork and double-Hopf locations", "[slow]") {
    const ParamBox box{0.0, 9.0, 0.0, 0.7};
    auto branches = trivial_hopf_curves(base(), box);
    branches.push_back(pitchfork_line(base(), box));
    const auto pts = codim2_points(base(), branches);

    bool found_hp = false, found_dh = false;
    for (const auto& pt : pts) {
        if (pt.kind == Codim2Kind::HopfPitchfork) {
            found_hp = true;
            REQUIRE(pt.tau == Catch::Approx(0.5219).margin(2e-3));
            REQUIRE(pt.c == Catch::Approx(0.6285).margin(2e-3));
        }
        if (pt.kind == Codim2Kind::DoubleHopf && pt.tau >= 3.0 && pt.tau <= 6.0 &&
            pt.c >= 0.25 && pt.c <= 0.45) {
            found_dh = true;
            REQUIRE(pt.residual <= 1e-7);
            // both frequencies satisfy the characteristic equation
            Params p = base().with_c(pt.c);
            p.tau = pt.tau;
            REQUIRE(std::abs(char_eval(p, cplx(0.0, pt.omega1))) <= 1e-7);
            REQUIRE(std::abs(char_eval(p, cplx(0.0, pt.omega2))) <= 1e-7);
        }
    }
    REQUIRE(found_hp);
    REQUIRE(found_dh);
}

TEST_CASE("continue_cycle_branch: degenerate empty range returns the seed only", "[slow]") {
    const Params p = base().with_c(0.7);
    SimConfig cfg{0.0, 900.0, 600.0, 1};
    const auto traj = integrate(p, State{1.3, 1.5, 1.4, 1.0}, cfg);
    const auto det = detect_orbit(traj, DetectConfig{600.0});
    REQUIRE(det.outcome == DetectionOutcome::Periodic);
    const CycleBVP seed = cycle_seed_from_trajectory(p, traj, det.orbit->T, traj.t1() - 20.0);

    const auto res = continue_cycle_branch(p, seed, ContParam::C, {0.7, 0.7});
    REQUIRE(res.archive.size() == 1);
    REQUIRE(res.events.empty());
    REQUIRE(res.branch.points.size() == 1);
}

TEST_CASE("continue_cycle_branch: fold of cycles and homoclinic proxy at tau = 0",
          "[slow][cascade]") {
    const Params p = base().with_c(0.9);
    SimConfig cfg{0.0, 900.0, 600.0, 1};
    const auto traj = integrate(p, State{1.3, 1.5, 1.4, 1.0}, cfg);
    const auto det = detect_orbit(traj, DetectConfig{600.0});
    REQUIRE(det.outcome == DetectionOutcome::Periodic);
    const CycleBVP seed =
        cycle_seed_from_trajectory(p, traj, det.orbit->T, traj.t1() - 20.0, 60);

    CycleContOptions opt;
    opt.T_max = 120.0;  // enough to pin the homoclinic c to ~1e-8
    const auto res = continue_cycle_branch(p, seed, ContParam::C, {0.85, 1.2}, opt);
    REQUIRE(res.archive.size() > 10);

    bool fold = false, homoclinic = false;
    for (const auto& ev : res.events) {
        if (ev.kind == CycleEventKind::Fold && !fold) {
            fold = true;
            REQUIRE(ev.param == Catch::Approx(1.0721).margin(5e-3));
        }
        if (ev.kind == CycleEventKind::HomoclinicProxy) {
            homoclinic = true;
            REQUIRE(ev.param == Catch::Approx(1.0545).margin(5e-3));
        }
    }
    REQUIRE(fold);
    REQUIRE(homoclinic);
    REQUIRE(res.hit_period_threshold);
}

TEST_CASE("continue_cycle_branch: Hopf endpoint shrinking to the instantaneous Hopf",
          "[slow]") {
    const Params p = base().with_c(0.45);
    SimConfig cfg{0.0, 900.0, 600.0, 1};
    const auto traj = integrate(p, State{0.5, 0.3, 0.4, 0.2}, cfg);
    const auto det = detect_orbit(traj, DetectConfig{600.0});
    REQUIRE(det.outcome == DetectionOutcome::Periodic);
    const CycleBVP seed = cycle_seed_from_trajectory(p, traj, det.orbit->T, traj.t1() - 20.0);

    const auto res = continue_cycle_branch(p, seed, ContParam::C, {0.3, 0.45});
    bool hopf_end = false;
    for (const auto& ev : res.events)
        if (ev.kind == CycleEventKind::HopfEndpoint) {
            hopf_end = true;
            REQUIRE(ev.param == Catch::Approx(0.3974).margin(5e-3));
        }
    REQUIRE(hopf_end);
}

TEST_CASE("continue_cycle_branch: torus bifurcation of the anti-phase family at c = 1.2",
          "[slow][torus]") {
    // the low-frequency anti-phase cycle destabilizes in a torus bifurcation
    // near tau = 6.21; detect the event and cross-check the onset with
    // simulations on both sides
    const Params p = base().with_c(1.2).with_tau(6.0);
    SimConfig cfg{0.0, 4000.0, 3200.0, 1};
    State ic_hit{};
    DetectionResult det;
    for (const State& ic : random_ics(40, 2.0, 42)) {
        const auto traj = integrate(p, ic, cfg);
        det = detect_orbit(traj, DetectConfig{3200.0});
        if (det.outcome == DetectionOutcome::Periodic && det.orbit->T > 10.0) {
            ic_hit = ic;
            break;
        }
    }
    REQUIRE(det.outcome == DetectionOutcome::Periodic);
    const auto traj = integrate(p, ic_hit, cfg);
    const auto seed =
        cycle_seed_from_trajectory(p, traj, det.orbit->T, traj.t1() - 30.0, 60);
    const auto res0 = solve_cycle_bvp(p, seed);
    REQUIRE(res0.status == CycleSolveStatus::Converged);

    CycleContOptions opt;
    opt.floquet_N = 40;
    opt.ds_max = 0.05;
    const auto br = continue_cycle_branch(p, res0.cycle, ContParam::Tau, {5.9, 6.5}, opt);
    double tau_torus = -1.0;
    for (const auto& ev : br.events)
        if (ev.kind == CycleEventKind::Torus) tau_torus = ev.param;
    REQUIRE(tau_torus == Catch::Approx(6.21).margin(0.05));

    // multiplier condition at the flagged point: refine the bracketing pair
    for (const auto& ev : br.events)
        if (ev.kind == CycleEventKind::Torus) {
            REQUIRE(ev.multiplier_angle > 1e-3);
            REQUIRE(ev.multiplier_angle < M_PI - 1e-3);
        }

    // onset cross-check: simulation started on the cycle stays on it below the
    // torus point and leaves it above
    const auto probe = [&](double tau) {
        const Params pt = base().with_c(1.2).with_tau(tau);
        const auto rs = solve_cycle_bvp(pt, res0.cycle);
        REQUIRE(rs.status == CycleSolveStatus::Converged);
        SimConfig scfg{0.0, 2500.0, 1800.0, 1};
        const auto tr = integrate(pt, rs.cycle.eval(0.0), scfg);
        return detect_orbit(tr, DetectConfig{1800.0});
    };
    const auto before = probe(tau_torus - 0.1);
    REQUIRE(before.outcome == DetectionOutcome::Periodic);
    REQUIRE(before.orbit->T == Catch::Approx(res0.cycle.T).epsilon(0.1));
    const auto after = probe(tau_torus + 0.15);
    const bool left_cycle = after.outcome != DetectionOutcome::Periodic ||
                            std::abs(after.orbit->T - res0.cycle.T) > 0.1 * res0.cycle.T;
    REQUIRE(left_cycle);
}

TEST_CASE("continue_cycle_branch: pitchfork of cycles on the symmetric branch at c = 1.2",
          "[slow]") {
    // the symmetric unstable cycle born at the first trivial-point crossing
    // sheds an asymmetric pair and turns stable shortly above the crossing
    const Params p = base().with_c(1.2);
    const auto pts = hopf_delays(p, 0);
    REQUIRE_FALSE(pts.empty());
    const auto& h0 = pts.front();
    const auto res = cycle_from_hopf(p.with_tau(h0.tau), ContParam::Tau, State{}, h0.omega,
                                     h0.tau + 0.1);
    REQUIRE(res.status == CycleSolveStatus::Converged);
    REQUIRE(res.cycle.symmetry_indicator() < 1e-6);

    CycleContOptions opt;
    opt.floquet_N = 40;
    opt.ds_max = 0.05;
    const auto br = continue_cycle_branch(p.with_tau(h0.tau + 0.1), res.cycle, ContParam::Tau,
                                          {h0.tau + 0.05, h0.tau + 1.0}, opt);
    bool pfc = false;
    for (const auto& ev : br.events)
        if (ev.kind == CycleEventKind::PitchforkCycle) {
            pfc = true;
            REQUIRE(ev.param > h0.tau);
            REQUIRE(ev.param < h0.tau + 0.5);
        }
    REQUIRE(pfc);
    // index drops 1 -> 0 across the event
    REQUIRE(br.archive.front().floquet.unstable == 1);
    REQUIRE(br.archive.back().floquet.unstable == 0);
}

TEST_CASE("classify_regime: representative cells", "[slow]") {
    BasinConfig bc;
    bc.sim.t_end = 1200.0;
    bc.sim.t_transient = 800.0;
    bc.detect.transient = 800.0;
    const std::vector<State> ics =
        ICProtocol{{{1.3, 1.5, 1.4, 1.0}, {0.05, 0.03, 0.04, 0.2}}, 6, 2.0, 42}.materialize();

    const auto a = classify_regime(base().with_c(0.7).with_tau(0.12), ics, bc);
    REQUIRE(a.periodic == 1);
    REQUIRE(a.stable_rest == 0);

    const auto d = classify_regime(base().with_c(1.1).with_tau(0.12), ics, bc);
    REQUIRE(d.periodic == 0);
    REQUIRE(d.stable_rest == 2);
    REQUIRE(d.label.substr(0, 9) == "quiescent");
}

TEST_CASE("regime_grid: labels change only near branch crossings on a transect", "[slow]") {
    // vertical transect at c = 0.2: crossings at tau = 1.6211, 3.6853, 5.1985
    BasinConfig bc;
    bc.sim.t_end = 1500.0;
    bc.sim.t_transient = 1000.0;
    bc.detect.transient = 1000.0;
    const ICProtocol proto{{{0.1, 0.1, 0.1, 0.1}}, 2, 0.8, 42};
    const RegimeGrid grid =
        regime_grid(base(), ParamBox{1.0, 6.0, 0.2, 0.2001}, 10, 1, proto, bc);
    REQUIRE(grid.cells.size() == 10);
    // tau cell centers: 1.25, 1.75, ..., 5.75
    const std::vector<double> crossings{1.6211, 3.6853, 5.1985};
    for (int i = 0; i + 1 < 10; ++i) {
        const auto& c0 = grid.cells[i];
        const auto& c1 = grid.cells[i + 1];
        // structural part of the label: attractor counts (the sync refinement
        // drifts continuously across the band edges, without a bifurcation)
        const bool changed = c0.periodic != c1.periodic || c0.stable_rest != c1.stable_rest ||
                             c0.nonperiodic != c1.nonperiodic;
        if (changed) {
            const double edge = 0.5 * (c0.tau + c1.tau);
            double nearest = 1e9;
            for (double x : crossings) nearest = std::min(nearest, std::abs(x - edge));
            REQUIRE(nearest <= 0.5);  // within one cell of a branch crossing
        }
    }
    // and the pattern itself: quiescent / periodic alternation
    REQUIRE(grid.cells[0].periodic == 0);
    REQUIRE(grid.cells[2].periodic == 1);
    REQUIRE(grid.cells[6].periodic == 0);
    REQUIRE(grid.cells[8].periodic == 1);
}
