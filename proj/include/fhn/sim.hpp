#pragma once

// Method-of-steps RK4 integrator for the delayed system with cubic-Hermite
// dense output. The step size never exceeds tau/4, so every delayed lookup
// lands in the already-computed part of the trajectory (or in the initial
// history, which is kept as a separate exact function).

#include <cstddef>
#include <functional>
#include <vector>

#include "fhn/model.hpp"

namespace fhn {

struct DivergenceError : std::runtime_error {
    double t;
    explicit DivergenceError(double at)
        : std::runtime_error("integration diverged (|component| > 1e6) at t = " +
                             std::to_string(at)),
          t(at) {}
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Densely interpolable solution segment: node times, states and state
/// derivatives for cubic Hermite interpolation between nodes.
struct HistoryTrajectory {
    std::vector<double> t;
    std::vector<State> y;
    std::vector<State> dy;

    double t0() const { return t.front(); }
    double t1() const { return t.back(); }
    std::size_t size() const { return t.size(); }

    void push(double tt, const State& yy, const State& dd) {
        t.push_back(tt);
        y.push_back(yy);
        dy.push_back(dd);
    }

    /// Hermite interpolation; hard error outside [t0, t1].
    State sample(double tt) const {
        std::size_t hint = 0;
        return sample_hint(tt, hint);
    }

    State sample_hint(double tt, std::size_t& hint) const {
        if (tt < t.front() - 1e-12 || tt > t.back() + 1e-12)
            throw std::out_of_range("HistoryTrajectory::sample: t = " + std::to_string(tt) +
                                    " outside [" + std::to_string(t.front()) + ", " +
                                    std::to_string(t.back()) + "]");
        if (tt <= t.front()) return y.front();
        if (tt >= t.back()) return y.back();
        // locate containing interval, starting from the hint
        std::size_t i = hint < t.size() ? hint : 0;
        if (!(t[i] <= tt && (i + 1 < t.size() && tt <= t[i + 1]))) {
            i = std::upper_bound(t.begin(), t.end(), tt) - t.begin();
            i = (i == 0) ? 0 : i - 1;
            if (i + 1 >= t.size()) i = t.size() - 2;
        }
        hint = i;
        const double dt = t[i + 1] - t[i];
        const double s = (tt - t[i]) / dt;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        return y[i] * h00 + dy[i] * (h10 * dt) + y[i + 1] * h01 + dy[i + 1] * (h11 * dt);
    }
};

inline State sample(const HistoryTrajectory& traj, double t) { return traj.sample(t); }

struct SimConfig {
    double h = 0.0;          // 0 = auto: min(tau/8, 0.01)
    double t_end = 500.0;
    double t_transient = 300.0;
    int record_stride = 1;

    double step_for(const Params& p) const {
        if (h > 0.0) return h;
        return p.tau > 0.0 ? std::min(p.tau / 8.0, 0.01) : 0.01;
    }

    void validate(const Params& p) const {
        const double hh = step_for(p);
        if (!(hh > 0.0)) throw ConfigError("SimConfig: step must be positive");
        if (p.tau > 0.0 && hh > p.tau / 4.0 + 1e-15)
            throw ConfigError("SimConfig: step must not exceed tau/4");
        if (!(t_end > 0.0)) throw ConfigError("SimConfig: t_end must be positive");
        if (!(t_transient < t_end)) throw ConfigError("SimConfig: transient must be below t_end");
        if (record_stride < 1) throw ConfigError("SimConfig: record_stride must be >= 1");
    }
};

namespace detail {

using HistoryFn = std::function<State(double)>;

inline HistoryTrajectory integrate_impl(const Params& p, const HistoryFn& initial,
                                        const SimConfig& cfg) {
    p.validate();
    cfg.validate(p);
    const double h0 = cfg.step_for(p);
    const long n = static_cast<long>(std::ceil(cfg.t_end / h0 - 1e-9));
    const double h = cfg.t_end / static_cast<double>(n);

    HistoryTrajectory traj;
    traj.t.reserve(n + 1);
    traj.y.reserve(n + 1);
    traj.dy.reserve(n + 1);

    std::size_t hint = 0;
    const auto delayed_at = [&](double tt) -> State {
        if (tt <= 0.0) return initial(tt);
        return traj.sample_hint(tt, hint);
    };

    const State y0 = initial(0.0);
    traj.push(0.0, y0, rhs(p, y0, p.tau > 0.0 ? delayed_at(-p.tau) : y0));

    for (long i = 0; i < n; ++i) {
        const double tn = h * static_cast<double>(i);
        const State& yn = traj.y.back();
        State k1, k2, k3, k4;
        if (p.tau == 0.0) {
            k1 = traj.dy.back();
            const State y2 = yn + k1 * (h / 2);
            k2 = rhs(p, y2, y2);
            const State y3 = yn + k2 * (h / 2);
            k3 = rhs(p, y3, y3);
            const State y4 = yn + k3 * h;
            k4 = rhs(p, y4, y4);
        } else {
            const State dm = delayed_at(tn + h / 2 - p.tau);
            const State d4 = delayed_at(tn + h - p.tau);
            k1 = traj.dy.back();
            k2 = rhs(p, yn + k1 * (h / 2), dm);
            k3 = rhs(p, yn + k2 * (h / 2), dm);
            k4 = rhs(p, yn + k3 * h, d4);
        }
        const State ynext = yn + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        const double tnext = h * static_cast<double>(i + 1);
        if (!ynext.finite() || ynext.max_abs() > 1e6) throw DivergenceError(tnext);
        const State dnext =
            p.tau == 0.0 ? rhs(p, ynext, ynext) : rhs(p, ynext, delayed_at(tnext - p.tau));
        traj.push(tnext, ynext, dnext);
    }

    if (cfg.record_stride > 1) {
        HistoryTrajectory thin;
        for (std::size_t i = 0; i < traj.size(); i += cfg.record_stride)
            thin.push(traj.t[i], traj.y[i], traj.dy[i]);
        if (thin.t.back() != traj.t.back())
            thin.push(traj.t.back(), traj.y.back(), traj.dy.back());
        return thin;
    }
    return traj;
}

}  // namespace detail

/// Integrate from a constant history equal to `initial` on [-tau, 0].
inline HistoryTrajectory integrate(const Params& p, const State& initial, const SimConfig& cfg) {
    return detail::integrate_impl(p, [&](double) { return initial; }, cfg);
}

/// Integrate continuing from a previous trajectory segment; the end of
/// `initial` is taken as time zero and it must span at least tau.
inline HistoryTrajectory integrate(const Params& p, const HistoryTrajectory& initial,
                                   const SimConfig& cfg) {
    if (initial.t1() - initial.t0() < p.tau - 1e-12)
        throw ConfigError("integrate: initial history shorter than the delay");
    const double shift = initial.t1();
    return detail::integrate_impl(
        p, [&, shift](double tt) { return initial.sample(shift + tt); }, cfg);
}

}  // namespace fhn
