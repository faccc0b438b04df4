#include <catch2/catch_amalgamated.hpp>

#include "fhn/orbit.hpp"
#include "fhn/sim.hpp"
#include "oracles.hpp"

using namespace fhn;

namespace {
Params defaults(double c, double tau) {
    Params p;
    p.c = c;
    p.tau = tau;
    return p;
}

double tail_amplitude_v1(const HistoryTrajectory& traj, double window) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < traj.size(); ++i)
        if (traj.t[i] >= traj.t1() - window) {
            lo = std::min(lo, traj.y[i].v1);
            hi = std::max(hi, traj.y[i].v1);
        }
    return hi - lo;
}
}  // namespace

TEST_CASE("integrate: uncoupled neurons decay, zero stays zero") {
    const Params p = defaults(0.0, 0.0);
    SimConfig cfg{0.01, 200.0, 100.0, 1};
    const auto traj = integrate(p, State{0.5, 0.2, 0.0, 0.0}, cfg);
    REQUIRE(traj.y.back().max_abs() < 1e-6);
    REQUIRE(traj.y.back().v2 == 0.0);
    REQUIRE(traj.y.back().w2 == 0.0);
}

TEST_CASE("integrate: quiescent below and oscillating above the first crossing") {
    // the decay at tau = 1.5 rides a slow spiral (Re lambda ~ -0.012), so the
    // quiescence threshold needs a horizon beyond ~700 time units
    SimConfig cfg{0.0, 800.0, 300.0, 1};
    const auto quiet = integrate(defaults(0.2, 1.5), State{0.1, 0.1, 0.1, 0.1}, cfg);
    REQUIRE(tail_amplitude_v1(quiet, 60.0) < 1e-4);

    const auto osc = integrate(defaults(0.2, 1.8), State{0.1, 0.1, 0.1, 0.1}, cfg);
    REQUIRE(tail_amplitude_v1(osc, 60.0) > 1e-2);
}

TEST_CASE("integrate: Z2 equivariance of the scheme") {
    SimConfig cfg{0.0, 60.0, 10.0, 1};
    const Params p = defaults(0.5, 1.2);
    const State s{0.7, -0.3, 0.4, 0.1};
    const auto t1 = integrate(p, s, cfg);
    const auto t2 = integrate(p, -s, cfg);
    for (std::size_t i = 0; i < t1.size(); ++i)
        REQUIRE((t1.y[i] + t2.y[i]).max_abs() <= 1e-9);
}

TEST_CASE("integrate: deterministic") {
    SimConfig cfg{0.0, 40.0, 10.0, 1};
    const Params p = defaults(0.325, 4.7756);
    const auto t1 = integrate(p, State{1.0, 0.9, 0.8, 0.7}, cfg);
    const auto t2 = integrate(p, State{1.0, 0.9, 0.8, 0.7}, cfg);
    REQUIRE(t1.size() == t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i) {
        REQUIRE(t1.y[i].v1 == t2.y[i].v1);
        REQUIRE(t1.y[i].w2 == t2.y[i].w2);
    }
}

TEST_CASE("integrate: trajectories from a ball converge to the origin without coupling") {
    SimConfig cfg{0.01, 1200.0, 100.0, 1};
    for (int i = 0; i < 8; ++i) {
        const auto traj = integrate(defaults(0.0, 0.0), oracle::random_state(2.0), cfg);
        REQUIRE(traj.y.back().max_abs() < 1e-4);
    }
}

TEST_CASE("integrate: restart from a previous trajectory matches one long run") {
    const Params p = defaults(0.2, 1.8);
    SimConfig one{0.01, 80.0, 10.0, 1};
    const auto full = integrate(p, State{0.1, 0.1, 0.1, 0.1}, one);
    SimConfig first{0.01, 40.0, 10.0, 1};
    const auto head = integrate(p, State{0.1, 0.1, 0.1, 0.1}, first);
    const auto tail = integrate(p, head, first);
    REQUIRE(tail.y.back().v1 == Catch::Approx(full.y.back().v1).margin(1e-9));
}

TEST_CASE("integrate: blow-up guard") {
    SimConfig cfg{5.0, 100.0, 10.0, 1};
    REQUIRE_THROWS_AS(integrate(defaults(0.0, 0.0), State{2.0, 0.0, -2.0, 0.0}, cfg),
                      DivergenceError);
}

TEST_CASE("integrate: config validation") {
    REQUIRE_THROWS_AS(integrate(defaults(0.2, 1.0), State{}, SimConfig{0.5, 100.0, 10.0, 1}),
                      ConfigError);  // h > tau/4
    REQUIRE_THROWS_AS(integrate(defaults(0.2, 1.0), State{}, SimConfig{0.0, 100.0, 200.0, 1}),
                      ConfigError);  // transient beyond t_end
    REQUIRE_THROWS_AS(integrate(defaults(0.2, 1.0), State{}, SimConfig{0.0, 100.0, 10.0, 0}),
                      ConfigError);  // bad stride
}

TEST_CASE("sample: node values are reproduced exactly") {
    SimConfig cfg{0.0, 20.0, 5.0, 1};
    const auto traj = integrate(defaults(0.2, 1.8), State{0.1, 0.1, 0.1, 0.1}, cfg);
    for (std::size_t i = 0; i < traj.size(); i += 37) {
        const State s = traj.sample(traj.t[i]);
        REQUIRE((s - traj.y[i]).max_abs() == 0.0);
    }
}

TEST_CASE("sample: cubic polynomials are interpolated exactly") {
    // synthetic trajectory holding a cubic in each component
    HistoryTrajectory traj;
    const auto f = [](double t) {
        return State{t * t * t - 2 * t, 0.5 * t * t, -t * t * t + t * t, 3.0 * t};
    };
    const auto df = [](double t) {
        return State{3 * t * t - 2, t, -3 * t * t + 2 * t, 3.0};
    };
    for (int i = 0; i <= 10; ++i) traj.push(0.3 * i, f(0.3 * i), df(0.3 * i));
    for (double t : {0.11, 0.77, 1.93, 2.55}) {
        REQUIRE((traj.sample(t) - f(t)).max_abs() < 1e-13);
    }
}

TEST_CASE("sample: out-of-window access is a hard error") {
    HistoryTrajectory traj;
    traj.push(0.0, State{}, State{});
    traj.push(1.0, State{}, State{});
    REQUIRE_THROWS_AS(traj.sample(-0.5), std::out_of_range);
    REQUIRE_THROWS_AS(traj.sample(1.5), std::out_of_range);
}

TEST_CASE("sample: interpolation error falls sixteen-fold when halving the mesh") {
    const auto f = [](double t) { return std::sin(t); };
    const auto df = [](double t) { return std::cos(t); };
    const auto max_err = [&](double h) {
        HistoryTrajectory traj;
        for (int i = 0; 0.0 + h * i <= 6.0 + 1e-12; ++i)
            traj.push(h * i, State{f(h * i), 0, 0, 0}, State{df(h * i), 0, 0, 0});
        double e = 0.0;
        for (int k = 0; k < 500; ++k) {
            const double t = 6.0 * k / 500.0;
            e = std::max(e, std::abs(traj.sample(t).v1 - f(t)));
        }
        return e;
    };
    const double e1 = max_err(0.2), e2 = max_err(0.1);
    REQUIRE(e1 / e2 > 12.0);
    REQUIRE(e1 / e2 < 20.0);
}

TEST_CASE("integrate: fourth-order convergence in the ODE limit") {
    const Params p = defaults(0.5, 0.0);
    const State ic{0.3, 0.1, -0.2, 0.05};
    const double t_end = 20.0;
    const auto run = [&](double h) {
        SimConfig cfg{h, t_end, 1.0, 1};
        return integrate(p, ic, cfg).y.back();
    };
    const State ref = run(0.02 / 8.0);
    const double e1 = (run(0.02) - ref).max_abs();
    const double e2 = (run(0.01) - ref).max_abs();
    const double rate = std::log2(e1 / e2);
    REQUIRE(rate > 4.0 - std::log2(3.0));
    REQUIRE(rate < 4.0 + std::log2(3.0));
}

TEST_CASE("integrate: record stride thins output but keeps ends") {
    SimConfig cfg{0.01, 10.0, 1.0, 10};
    const auto traj = integrate(defaults(0.2, 1.8), State{0.1, 0.1, 0.1, 0.1}, cfg);
    REQUIRE(traj.t.front() == 0.0);
    REQUIRE(traj.t.back() == Catch::Approx(10.0));
    REQUIRE(traj.size() <= 102);
}
