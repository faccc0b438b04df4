#include <catch2/catch_amalgamated.hpp>

#include "fhn/chareq.hpp"
#include "fhn/model.hpp"
#include "oracles.hpp"

using namespace fhn;

namespace {
Params defaults(double c, double tau = 0.0) {
    Params p;
    p.c = c;
    p.tau = tau;
    return p;
}
}  // namespace

TEST_CASE("rhs: origin is a rest point") {
    const Params p = defaults(0.0);
    const State z{};
    const State d = rhs(p, z, z);
    REQUIRE(d.max_abs() == 0.0);
}

TEST_CASE("rhs: cubic term at unit membrane potential") {
    const Params p = defaults(0.0);
    const State s{1.0, 0.0, 0.0, 0.0};
    const State d = rhs(p, s, State{});
    REQUIRE(d.v1 == Catch::Approx(-0.45).margin(1e-15));
    REQUIRE(d.w1 == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(d.v2 == 0.0);
    REQUIRE(d.w2 == 0.0);
}

TEST_CASE("rhs: Z2 equivariance on random samples") {
    const Params p = defaults(0.7, 1.0);
    for (int i = 0; i < 200; ++i) {
        const State s = oracle::random_state();
        const State d = oracle::random_state();
        const State f = rhs(p, s, d);
        const State g = rhs(p, -s, -d);
        REQUIRE((f + g).max_abs() <= 1e-15);
    }
}

TEST_CASE("jacobian blocks: coupling entries at the origin") {
    const Params p = defaults(0.2, 1.0);
    const auto jp = jacobian_blocks(p, State{});
    REQUIRE(jp.delayed(0, 2) == 0.2);
    REQUIRE(jp.delayed(2, 0) == 0.2);
    REQUIRE(jp.delayed.cwiseAbs().sum() == Catch::Approx(0.4));
    REQUIRE(jp.now(0, 0) == Catch::Approx(0.55));
}

TEST_CASE("jacobian blocks: diagonal entry away from the origin") {
    const Params p = defaults(0.2);
    const auto jp = jacobian_blocks(p, State{1.0, 0.0, 0.0, 0.0});
    REQUIRE(jp.now(0, 0) == Catch::Approx(-2.45));
}

TEST_CASE("jacobian blocks: determinant reproduces the characteristic function") {
    const Params p = defaults(0.2, 0.8);
    for (int i = 0; i < 20; ++i) {
        const cplx lam = oracle::random_lambda();
        const cplx det = oracle::det4_char(p, State{}, lam);
        const cplx ce = char_eval(p, lam);
        REQUIRE(std::abs(det - ce) <= 1e-9 * std::max(1.0, std::abs(ce)));
    }
}

TEST_CASE("find_rest_points: only the origin below the pitchfork") {
    const auto rp = find_rest_points(defaults(0.5, 0.3));
    REQUIRE(rp.points.size() == 1);
    REQUIRE(rp.points[0].kind == RestPointKind::Trivial);
    REQUIRE_FALSE(rp.at_pitchfork);
}

TEST_CASE("find_rest_points: antipodal pair above the pitchfork") {
    const auto rp = find_rest_points(defaults(1.0, 0.3));
    REQUIRE(rp.points.size() == 3);
    REQUIRE(rp.points[0].kind == RestPointKind::NontrivialPlus);
    REQUIRE(rp.points[1].kind == RestPointKind::Trivial);
    REQUIRE(rp.points[2].kind == RestPointKind::NontrivialMinus);
    // minus point is the exact negation
    const State sum = rp.points[0].state + rp.points[2].state;
    REQUIRE(sum.max_abs() == 0.0);
    for (const auto& r : rp.points) REQUIRE(r.residual <= 1e-10);
    // sorted by v1 descending
    REQUIRE(rp.points[0].state.v1 > rp.points[1].state.v1);
    REQUIRE(rp.points[1].state.v1 > rp.points[2].state.v1);
}

TEST_CASE("find_rest_points: independent of the delay") {
    const auto r0 = find_rest_points(defaults(1.0, 0.0));
    const auto r5 = find_rest_points(defaults(1.0, 5.0));
    REQUIRE(r0.points.size() == r5.points.size());
    for (std::size_t i = 0; i < r0.points.size(); ++i)
        REQUIRE((r0.points[i].state - r5.points[i].state).max_abs() == 0.0);
}

TEST_CASE("find_rest_points: count flips across the pitchfork coupling") {
    const Params base = defaults(0.0);
    const double cp = *pitchfork_coupling(base).c;
    REQUIRE(find_rest_points(defaults(cp - 1e-6)).points.size() == 1);
    REQUIRE(find_rest_points(defaults(cp + 1e-6)).points.size() == 3);
    const auto at = find_rest_points(defaults(cp));
    REQUIRE(at.at_pitchfork);
    REQUIRE(at.points.size() == 1);
}

TEST_CASE("find_rest_points: uncoupled neurons rest at the origin") {
    const auto rp = find_rest_points(defaults(0.0));
    REQUIRE(rp.points.size() == 1);
    REQUIRE(rp.points[0].state.max_abs() == 0.0);
}

TEST_CASE("single-neuron quiescence at c = 0") {
    const Params p = defaults(0.0);
    const auto jp = jacobian_blocks(p, State{});
    for (int blk : {0, 2}) {
        const double tr = jp.now(blk, blk) + jp.now(blk + 1, blk + 1);
        const double det = jp.now(blk, blk) * jp.now(blk + 1, blk + 1) -
                           jp.now(blk, blk + 1) * jp.now(blk + 1, blk);
        REQUIRE(tr < 0.0);
        REQUIRE(det > 0.0);
    }
}
