#pragma once

// Attractor detection on simulated trajectories: Poincare-section period
// measurement, synchrony classification via circular cross-correlation, and
// multi-IC basin probing with attractor deduplication.

#include <optional>
#include <random>
#include <vector>

#include "fhn/model.hpp"
#include "fhn/parallel.hpp"
#include "fhn/sim.hpp"
#include "fhn/chareq.hpp"

namespace fhn {

struct OrbitStability {
    bool stable = true;
    int index = 0;  // Floquet multipliers outside the unit circle
};

struct OrbitSummary {
    double T = 0.0;
    std::array<double, 4> amplitude{};  // per-variable max - min over one period
    double phase_shift = 0.0;           // circular phase of v2 relative to v1, [0, 2pi)
    std::vector<cplx> floquet;          // sorted by descending modulus when computed
    OrbitStability stability;
    SyncClass sync = SyncClass::Other;
    State mean_state;                   // time average over one period
};

enum class DetectionOutcome { Periodic, Quiescent, NonPeriodic, TooShort };

struct DetectionResult {
    DetectionOutcome outcome = DetectionOutcome::TooShort;
    std::optional<OrbitSummary> orbit;
    State final_state;
};

struct DetectConfig {
    double transient = 300.0;
    double quiescent_tol = 1e-4;
    double spread_tol = 1e-3;   // relative spread of return times
    int min_returns = 6;
    double tail_window = 100.0; // window for the quiescence amplitude
};

inline SyncClass classify_sync_phase(double phase) {
    double ph = std::fmod(phase, 2.0 * M_PI);
    if (ph < 0) ph += 2.0 * M_PI;
    if (ph < M_PI / 4.0 || ph > 7.0 * M_PI / 4.0) return SyncClass::AlmostSynchronized;
    if (ph > 3.0 * M_PI / 4.0 && ph < 5.0 * M_PI / 4.0) return SyncClass::AlmostAntiPhase;
    return SyncClass::Other;
}

namespace detail {

// Upward mean-level crossing refined on the Hermite interpolant.
inline double refine_crossing(const HistoryTrajectory& traj, double lo, double hi, double level) {
    for (int it = 0; it < 60 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (traj.sample(mid).v1 - level <= 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct WindowStats {
    std::array<double, 4> amp{};
    State mean;
};

inline WindowStats window_stats(const HistoryTrajectory& traj, double a, double b, int n = 512) {
    WindowStats ws;
    std::array<double, 4> lo{}, hi{};
    State sum{};
    for (int i = 0; i <= n; ++i) {
        const State s = traj.sample(a + (b - a) * i / n);
        for (int q = 0; q < 4; ++q) {
            if (i == 0) { lo[q] = hi[q] = s[q]; }
            lo[q] = std::min(lo[q], s[q]);
            hi[q] = std::max(hi[q], s[q]);
        }
        sum += s * (i == 0 || i == n ? 0.5 : 1.0);
    }
    for (int q = 0; q < 4; ++q) ws.amp[q] = hi[q] - lo[q];
    ws.mean = sum * (1.0 / n);
    return ws;
}

}  // namespace detail

/// Phase shift of v2 relative to v1 over one period ending at t_end, from the
/// argmax of the circular cross-correlation. Returns a value in [0, 2pi).
inline double measure_phase_shift(const HistoryTrajectory& traj, double t_end, double T,
                                  int n = 512) {
    std::vector<double> a(n), b(n);
    double ma = 0, mb = 0;
    for (int i = 0; i < n; ++i) {
        const State s = traj.sample(t_end - T + T * i / n);
        a[i] = s.v1;
        b[i] = s.v2;
        ma += a[i];
        mb += b[i];
    }
    ma /= n; mb /= n;
    for (int i = 0; i < n; ++i) { a[i] -= ma; b[i] -= mb; }
    // C(l) = sum_i a_i b_{i+l}: peak lag = how far v2 trails v1
    std::vector<double> corr(n, 0.0);
    int best = 0;
    for (int l = 0; l < n; ++l) {
        double c = 0;
        for (int i = 0; i < n; ++i) c += a[i] * b[(i + l) % n];
        corr[l] = c;
        if (c > corr[best]) best = l;
    }
    // quadratic refinement around the peak
    const double cm = corr[(best + n - 1) % n], c0 = corr[best], cp = corr[(best + 1) % n];
    const double den = cm - 2.0 * c0 + cp;
    double off = 0.0;
    if (den < 0.0) off = 0.5 * (cm - cp) / den;
    double lag = best + off;
    if (lag < 0) lag += n;
    return 2.0 * M_PI * lag / n;
}

/// Measured synchrony class of a periodic window of the trajectory.
inline SyncClass classify_sync(const HistoryTrajectory& traj, double t_end, double T) {
    return classify_sync_phase(measure_phase_shift(traj, t_end, T));
}

/// Classifies the asymptotic behaviour of a trajectory: discards the
/// transient, measures quiescence on the final window, otherwise takes the
/// mean-level Poincare section of v1 and requires the return times to agree
/// to spread_tol. Reports NonPeriodic for quasiperiodic (torus) motion.
inline DetectionResult detect_orbit(const HistoryTrajectory& traj, const DetectConfig& cfg) {
    DetectionResult res;
    res.final_state = traj.y.back();
    const double a = std::max(traj.t0(), cfg.transient);
    const double b = traj.t1();
    if (b - a < 4.0 * cfg.tail_window / 3.0) return res;  // TooShort

    const double tail = std::min(cfg.tail_window, (b - a) / 3.0);
    const auto tail_stats = detail::window_stats(traj, b - tail, b);
    double tail_amp = 0.0;
    for (double x : tail_stats.amp) tail_amp = std::max(tail_amp, x);
    if (tail_amp < cfg.quiescent_tol) {
        res.outcome = DetectionOutcome::Quiescent;
        return res;
    }

    // Section level: mean of v1 over the analysis window.
    double level = 0.0;
    const int nm = 2048;
    for (int i = 0; i <= nm; ++i) level += traj.sample(a + (b - a) * i / nm).v1;
    level /= nm + 1;

    std::vector<double> crossings;
    double prev = traj.sample(a).v1 - level;
    double prev_t = a;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        if (traj.t[i] <= a) continue;
        const double f = traj.y[i].v1 - level;
        if (prev < 0.0 && f >= 0.0)
            crossings.push_back(detail::refine_crossing(traj, prev_t, traj.t[i], level));
        prev = f;
        prev_t = traj.t[i];
    }
    if (static_cast<int>(crossings.size()) < cfg.min_returns + 1) {
        res.outcome = DetectionOutcome::TooShort;
        return res;
    }

    const int m_use = std::min<int>(20, crossings.size() - 1);
    std::vector<double> d;
    for (int i = 0; i < m_use; ++i) {
        const std::size_t k = crossings.size() - 1 - i;
        d.push_back(crossings[k] - crossings[k - 1]);
    }
    std::sort(d.begin(), d.end());
    const double T = d[d.size() / 2];
    const double spread = (d.back() - d.front()) / T;
    if (spread >= cfg.spread_tol) {
        res.outcome = DetectionOutcome::NonPeriodic;
        return res;
    }

    // Guard against slowly decaying spirals masquerading as cycles: compare
    // the last-period amplitude against a window up to 30 returns earlier.
    const double t_last = crossings.back();
    const auto last = detail::window_stats(traj, t_last - T, t_last);
    if (crossings.size() >= 8) {
        const std::size_t back = std::min<std::size_t>(30, crossings.size() - 2);
        const double t_early = crossings[crossings.size() - 1 - back];
        const auto early = detail::window_stats(traj, t_early - T, t_early);
        const double ratio = last.amp[0] / std::max(early.amp[0], 1e-300);
        const bool decaying = ratio < 0.6 || (ratio < 0.9 && last.amp[0] < 1e-3);
        if (decaying) {
            res.outcome = last.amp[0] < 1e-2 ? DetectionOutcome::Quiescent
                                             : DetectionOutcome::NonPeriodic;
            return res;
        }
    }

    OrbitSummary orb;
    orb.T = T;
    orb.amplitude = last.amp;
    orb.mean_state = last.mean;
    orb.phase_shift = measure_phase_shift(traj, t_last, T);
    orb.sync = classify_sync_phase(orb.phase_shift);
    orb.stability = {true, 0};  // reached by forward simulation
    res.outcome = DetectionOutcome::Periodic;
    res.orbit = orb;
    return res;
}

// ---------------------------------------------------------------------------
// Basin probing

enum class AttractorKind { Rest, Periodic, NonPeriodic };

struct Attractor {
    AttractorKind kind = AttractorKind::Rest;
    int rest_index = -1;          // into AttractorInventory::rests for Rest kind
    std::optional<OrbitSummary> orbit;
    State mean_state;
    int hits = 0;
    State example_ic;
};

struct AttractorInventory {
    std::vector<Attractor> attractors;
    RestPointSet rests;

    int count(AttractorKind k) const {
        int n = 0;
        for (const auto& at : attractors) n += at.kind == k ? 1 : 0;
        return n;
    }
};

struct BasinConfig {
    SimConfig sim{0.0, 1500.0, 1000.0, 1};
    DetectConfig detect{1000.0};
    double dedupe_rel = 1e-2;     // relative (T, amplitude) proximity
    double rest_match_tol = 5e-2; // max-norm distance to a known rest point
};

namespace detail {

inline bool same_periodic(const Attractor& x, const OrbitSummary& o, double rel) {
    const OrbitSummary& a = *x.orbit;
    if (std::abs(a.T - o.T) > rel * std::max(a.T, o.T)) return false;
    double amp_a = 0, amp_o = 0;
    for (int q = 0; q < 4; ++q) {
        amp_a = std::max(amp_a, a.amplitude[q]);
        amp_o = std::max(amp_o, o.amplitude[q]);
    }
    if (std::abs(amp_a - amp_o) > rel * std::max(amp_a, amp_o)) return false;
    // antipodal twins have mirrored means; keep them distinct
    const double sep = (a.mean_state - o.mean_state).max_abs();
    return sep <= std::max(0.1 * amp_a, 1e-3);
}

}  // namespace detail

/// Integrates every initial condition (as a constant history), classifies the
/// attractor it reaches and merges duplicates. Distinct antipodal twins are
/// kept apart through their mean states.
inline AttractorInventory basin_probe(const Params& p, const std::vector<State>& ics,
                                      const BasinConfig& cfg = {}) {
    AttractorInventory inv;
    inv.rests = find_rest_points(p);

    // detection runs per IC in parallel; the merge below is sequential in IC
    // order so the inventory is deterministic
    std::vector<std::optional<DetectionResult>> results(ics.size());
    detail::parallel_for(static_cast<int>(ics.size()), [&](int i) {
        try {
            const auto traj = integrate(p, ics[i], cfg.sim);
            results[i] = detect_orbit(traj, cfg.detect);
        } catch (const DivergenceError&) {
            // not expected for this dissipative model; drop the run
        }
    });

    for (std::size_t i = 0; i < ics.size(); ++i) {
        if (!results[i]) continue;
        const State& ic = ics[i];
        const DetectionResult& det = *results[i];

        if (det.outcome == DetectionOutcome::Quiescent) {
            int ri = -1;
            for (std::size_t i = 0; i < inv.rests.points.size(); ++i)
                if ((det.final_state - inv.rests.points[i].state).max_abs() < cfg.rest_match_tol)
                    ri = static_cast<int>(i);
            bool merged = false;
            for (auto& at : inv.attractors)
                if (at.kind == AttractorKind::Rest && at.rest_index == ri &&
                    (ri >= 0 || (at.mean_state - det.final_state).max_abs() < cfg.rest_match_tol)) {
                    ++at.hits;
                    merged = true;
                    break;
                }
            if (!merged)
                inv.attractors.push_back(
                    {AttractorKind::Rest, ri, std::nullopt, det.final_state, 1, ic});
        } else if (det.outcome == DetectionOutcome::Periodic) {
            bool merged = false;
            for (auto& at : inv.attractors)
                if (at.kind == AttractorKind::Periodic &&
                    detail::same_periodic(at, *det.orbit, cfg.dedupe_rel)) {
                    ++at.hits;
                    merged = true;
                    break;
                }
            if (!merged)
                inv.attractors.push_back({AttractorKind::Periodic, -1, det.orbit,
                                          det.orbit->mean_state, 1, ic});
        } else if (det.outcome == DetectionOutcome::NonPeriodic) {
            bool merged = false;
            for (auto& at : inv.attractors)
                if (at.kind == AttractorKind::NonPeriodic &&
                    (at.mean_state - det.final_state).max_abs() < 0.5) {
                    ++at.hits;
                    merged = true;
                    break;
                }
            if (!merged)
                inv.attractors.push_back(
                    {AttractorKind::NonPeriodic, -1, std::nullopt, det.final_state, 1, ic});
        }
        // TooShort runs are dropped
    }

    std::sort(inv.attractors.begin(), inv.attractors.end(),
              [](const Attractor& x, const Attractor& y) {
                  if (x.kind != y.kind) return static_cast<int>(x.kind) < static_cast<int>(y.kind);
                  const double tx = x.orbit ? x.orbit->T : 0.0;
                  const double ty = y.orbit ? y.orbit->T : 0.0;
                  if (tx != ty) return tx < ty;
                  return x.mean_state.v1 > y.mean_state.v1;
              });
    return inv;
}

/// Uniformly random constant-history ICs in [-range, range]^4 (deterministic).
inline std::vector<State> random_ics(int n, double range, unsigned seed) {
    std::vector<State> out;
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-range, range);
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back({u(gen), u(gen), u(gen), u(gen)});
    return out;
}

}  // namespace fhn
