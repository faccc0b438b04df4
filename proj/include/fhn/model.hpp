#pragma once

// Two delay-coupled non-identical FitzHugh-Nagumo neurons:
//
//   v1' = -v1^3 + a v1 - w1 + c tanh(v2(t - tau))
//   w1' = v1 - b1 w1
//   v2' = -v2^3 + a v2 - w2 + c tanh(v1(t - tau))
//   w2' = v2 - b2 w2
//
// Each neuron reads the *other* neuron's delayed membrane potential. The
// vector field is odd (Z2-equivariant), so rest points and cycles come in
// antipodal pairs.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fhn {

/// Model constants for one system instance. a, b1, b2 must be positive,
/// tau non-negative; c and tau are the bifurcation parameters.
struct Params {
    double a = 0.55;
    double b1 = 1.128;
    double b2 = 0.58;
    double c = 0.0;
    double tau = 0.0;

    void validate() const {
        if (!(a > 0.0) || !(b1 > 0.0) || !(b2 > 0.0))
            throw std::invalid_argument("Params: a, b1, b2 must be strictly positive");
        if (!(tau >= 0.0))
            throw std::invalid_argument("Params: tau must be non-negative");
    }

    Params with_c(double cc) const { Params q = *this; q.c = cc; return q; }
    Params with_tau(double t) const { Params q = *this; q.tau = t; return q; }
};

/// Phase-space point (v1, w1, v2, w2). Also used for derivatives.
struct State {
    double v1 = 0.0;
    double w1 = 0.0;
    double v2 = 0.0;
    double w2 = 0.0;

    double operator[](int i) const { return (&v1)[i]; }
    double& operator[](int i) { return (&v1)[i]; }

    State operator+(const State& o) const { return {v1 + o.v1, w1 + o.w1, v2 + o.v2, w2 + o.w2}; }
    State operator-(const State& o) const { return {v1 - o.v1, w1 - o.w1, v2 - o.v2, w2 - o.w2}; }
    State operator-() const { return {-v1, -w1, -v2, -w2}; }
    State operator*(double s) const { return {v1 * s, w1 * s, v2 * s, w2 * s}; }
    State& operator+=(const State& o) {
        v1 += o.v1; w1 += o.w1; v2 += o.v2; w2 += o.w2; return *this;
    }

    double max_abs() const {
        return std::max(std::max(std::abs(v1), std::abs(w1)),
                        std::max(std::abs(v2), std::abs(w2)));
    }
    bool finite() const {
        return std::isfinite(v1) && std::isfinite(w1) && std::isfinite(v2) && std::isfinite(w2);
    }

    Eigen::Vector4d vec() const { return {v1, w1, v2, w2}; }
    static State from_vec(const Eigen::Vector4d& x) { return {x[0], x[1], x[2], x[3]}; }
};

static_assert(sizeof(State) == 4 * sizeof(double));

inline State operator*(double s, const State& x) { return x * s; }

/// Vector field of the coupled system. `now` is the state at time t,
/// `delayed` the state at t - tau. Total function, no failure modes.
inline State rhs(const Params& p, const State& now, const State& delayed) {
    return {
        -now.v1 * now.v1 * now.v1 + p.a * now.v1 - now.w1 + p.c * std::tanh(delayed.v2),
        now.v1 - p.b1 * now.w1,
        -now.v2 * now.v2 * now.v2 + p.a * now.v2 - now.w2 + p.c * std::tanh(delayed.v1),
        now.v2 - p.b2 * now.w2,
    };
}

inline double sech2(double x) {
    const double ch = std::cosh(x);
    return 1.0 / (ch * ch);
}

struct JacobianPair {
    Eigen::Matrix4d now;      // d rhs / d(current state)
    Eigen::Matrix4d delayed;  // d rhs / d(delayed state), evaluated with `at` as the delayed state
};

/// Jacobian blocks of the linearization about a point. For the delayed block
/// the coupling entries are c*sech^2(v_j) with v_j taken from `at`; callers
/// linearizing about a trajectory pass the delayed state here.
inline JacobianPair jacobian_blocks(const Params& p, const State& at) {
    JacobianPair jp;
    jp.now.setZero();
    jp.delayed.setZero();
    jp.now(0, 0) = -3.0 * at.v1 * at.v1 + p.a;
    jp.now(0, 1) = -1.0;
    jp.now(1, 0) = 1.0;
    jp.now(1, 1) = -p.b1;
    jp.now(2, 2) = -3.0 * at.v2 * at.v2 + p.a;
    jp.now(2, 3) = -1.0;
    jp.now(3, 2) = 1.0;
    jp.now(3, 3) = -p.b2;
    jp.delayed(0, 2) = p.c * sech2(at.v2);
    jp.delayed(2, 0) = p.c * sech2(at.v1);
    return jp;
}

enum class RestPointKind { Trivial, NontrivialPlus, NontrivialMinus };

struct RestPoint {
    State state;
    RestPointKind kind = RestPointKind::Trivial;
    double residual = 0.0;  // max-norm of the vector field at `state`
};

/// Result of the rest-point solve. `at_pitchfork` is set when c sits on the
/// pitchfork value to round-off, where the antipodal pair has zero separation
/// and only the trivial point is reported.
struct RestPointSet {
    std::vector<RestPoint> points;
    bool at_pitchfork = false;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// D coefficient of the characteristic equation; the pitchfork sits at
// c^2 = D / (b1 b2).
inline double coeff_D(const Params& p) {
    return p.a * p.a * p.b1 * p.b2 - p.a * (p.b1 + p.b2) + 1.0;
}

inline double pitchfork_c_squared(const Params& p) {
    return coeff_D(p) / (p.b1 * p.b2);
}

// Rest points satisfy c tanh(v2) = g1(v1) and c tanh(v1) = g2(v2) with
// g_i(v) = v^3 - (a - 1/b_i) v. For c != 0 eliminate v2 through atanh.
struct RestScalar {
    const Params& p;
    double k1, k2;

    explicit RestScalar(const Params& pp)
        : p(pp), k1(pp.a - 1.0 / pp.b1), k2(pp.a - 1.0 / pp.b2) {}

    double g1(double v) const { return v * v * v - k1 * v; }
    double g2(double v) const { return v * v * v - k2 * v; }

    bool valid(double v1) const { return std::abs(g1(v1)) < p.c * (1.0 - 1e-14); }

    double v2_of(double v1) const { return std::atanh(g1(v1) / p.c); }

    double operator()(double v1) const {
        const double v2 = v2_of(v1);
        return p.c * std::tanh(v1) - g2(v2);
    }
};

// 2D Newton polish on (v1, v2) for the reduced rest-point system.
inline bool polish_rest_pair(const Params& p, double& v1, double& v2) {
    const double k1 = p.a - 1.0 / p.b1;
    const double k2 = p.a - 1.0 / p.b2;
    for (int it = 0; it < 60; ++it) {
        const double f1 = p.c * std::tanh(v2) - (v1 * v1 * v1 - k1 * v1);
        const double f2 = p.c * std::tanh(v1) - (v2 * v2 * v2 - k2 * v2);
        if (std::abs(f1) < 1e-14 && std::abs(f2) < 1e-14) return true;
        const double j11 = -(3.0 * v1 * v1 - k1);
        const double j12 = p.c * sech2(v2);
        const double j21 = p.c * sech2(v1);
        const double j22 = -(3.0 * v2 * v2 - k2);
        const double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-300) return false;
        v1 -= (f1 * j22 - f2 * j12) / det;
        v2 -= (f2 * j11 - f1 * j21) / det;
        if (!std::isfinite(v1) || !std::isfinite(v2)) return false;
    }
    return false;
}

}  // namespace detail

/// All rest points of the system, sorted by v1 descending. The origin is
/// always present; the antipodal pair appears for c above the pitchfork
/// coupling and the minus point is the exact negation of the plus point.
/// Rest points do not depend on tau.
inline RestPointSet find_rest_points(const Params& p) {
    p.validate();
    RestPointSet out;

    const auto residual_at = [&](const State& s) {
        return rhs(p, s, s).max_abs();
    };

    const double cps = detail::pitchfork_c_squared(p);
    if (cps > 0.0 && p.c > 0.0) {
        const double cp = std::sqrt(cps);
        if (std::abs(p.c - cp) <= 1e-12 * std::max(1.0, cp)) {
            out.at_pitchfork = true;
            out.points.push_back({State{}, RestPointKind::Trivial, 0.0});
            return out;
        }
    }

    std::vector<std::array<double, 2>> roots;  // (v1, v2) with v1 > 0

    if (p.c == 0.0) {
        // Decoupled: each neuron solved independently, combine the factors.
        const auto single = [&](double k) {
            std::vector<double> vs{0.0};
            if (k > 0.0) {
                vs.push_back(std::sqrt(k));
                vs.push_back(-std::sqrt(k));
            }
            return vs;
        };
        for (double v1 : single(p.a - 1.0 / p.b1))
            for (double v2 : single(p.a - 1.0 / p.b2))
                if (v1 > 0.0 || (v1 == 0.0 && v2 > 0.0)) roots.push_back({v1, v2});
    } else {
        const detail::RestScalar F(p);

        // Uniform bracketing scan over v1 in [-3, 3] plus near-origin nodes;
        // the pair born at the pitchfork can sit well below the grid spacing.
        std::vector<double> nodes;
        const int n_sub = 600;
        for (int i = 0; i <= n_sub; ++i) nodes.push_back(-3.0 + 6.0 * i / n_sub);
        for (double e : {1e-9, 1e-6, 1e-4, 1e-3, 3e-3, 6e-3})
            for (double s : {1.0, -1.0}) nodes.push_back(s * e);
        std::sort(nodes.begin(), nodes.end());

        double prev_x = 0.0, prev_f = 0.0;
        bool have_prev = false;
        for (double x : nodes) {
            if (!F.valid(x)) { have_prev = false; continue; }
            const double f = F(x);
            if (have_prev && prev_f * f <= 0.0 && (prev_f != 0.0 || f != 0.0)) {
                double lo = prev_x, hi = x, flo = prev_f;
                for (int it = 0; it < 90 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = F(mid);
                    if (flo * fm <= 0.0) hi = mid; else { lo = mid; flo = fm; }
                }
                double v1 = 0.5 * (lo + hi);
                double v2 = F.v2_of(v1);
                if (detail::polish_rest_pair(p, v1, v2) && v1 > 1e-12)
                    roots.push_back({v1, v2});
            }
            prev_x = x; prev_f = f; have_prev = true;
        }
    }

    // Dedupe and assemble: origin exact, minus pair by exact negation.
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](const auto& a, const auto& b) {
                                return std::abs(a[0] - b[0]) < 1e-8 && std::abs(a[1] - b[1]) < 1e-8;
                            }),
                roots.end());

    out.points.push_back({State{}, RestPointKind::Trivial, 0.0});
    for (const auto& r : roots) {
        State s{r[0], r[0] / p.b1, r[1], r[1] / p.b2};
        const double res = residual_at(s);
        if (res > 1e-10)
            throw ConvergenceError("find_rest_points: residual " + std::to_string(res) +
                                   " above tolerance at v1=" + std::to_string(r[0]));
        out.points.push_back({s, RestPointKind::NontrivialPlus, res});
        out.points.push_back({-s, RestPointKind::NontrivialMinus, residual_at(-s)});
    }

    std::sort(out.points.begin(), out.points.end(), [](const RestPoint& a, const RestPoint& b) {
        if (a.state.v1 != b.state.v1) return a.state.v1 > b.state.v1;
        return a.state.v2 > b.state.v2;
    });
    return out;
}

}  // namespace fhn
