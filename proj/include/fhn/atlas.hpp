#pragma once

// Two-parameter bifurcation atlas in the (tau, c) plane: analytic Hopf curves
// of the trivial rest point, numerically continued Hopf curves of the
// nontrivial points, the pitchfork line, codimension-2 intersections, cycle
// branches continued by pseudo-arclength with event detection, and regime
// classification grids.

#include <map>
#include <string>
#include <vector>

#include "fhn/chareq.hpp"
#include "fhn/cycle.hpp"
#include "fhn/model.hpp"
#include "fhn/orbit.hpp"
#include "fhn/parallel.hpp"
#include "fhn/spectrum.hpp"

namespace fhn {

struct ParamBox {
    double tau_min = 0.0, tau_max = 9.0;
    double c_min = 0.0, c_max = 1.4;

    bool contains(double tau, double c) const {
        return tau >= tau_min && tau <= tau_max && c >= c_min && c <= c_max;
    }
};

enum class BranchKind {
    HopfTrivial,
    HopfNontrivial,
    Pitchfork,
    PitchforkCycle,
    FoldCycle,
    Torus,
    HomoclinicProxy
};

inline const char* branch_kind_name(BranchKind k) {
    switch (k) {
        case BranchKind::HopfTrivial: return "hopf_trivial";
        case BranchKind::HopfNontrivial: return "hopf_nontrivial";
        case BranchKind::Pitchfork: return "pitchfork";
        case BranchKind::PitchforkCycle: return "pitchfork_cycle";
        case BranchKind::FoldCycle: return "fold_cycle";
        case BranchKind::Torus: return "torus";
        case BranchKind::HomoclinicProxy: return "homoclinic_proxy";
    }
    return "?";
}

struct AtlasPoint {
    double tau = 0.0;
    double c = 0.0;
    double value = 0.0;  // omega for Hopf curves, T or multiplier angle for cycle curves
};

struct Branch {
    BranchKind kind;
    int k = 0, j = 0;  // root-branch / delay-sequence labels for HopfTrivial
    std::vector<AtlasPoint> points;
    std::string note;
};

// ---------------------------------------------------------------------------
// Hopf curves of the trivial rest point (closed form, threaded over a c-grid)

/// Threads hopf_delays points with equal (k, j) into polylines over a c-grid,
/// splitting where the arccos branch wraps (the delay sequence re-indexes
/// there). Analytic endpoints are appended where a curve closes on tau = 0 or
/// on the pitchfork line.
inline std::vector<Branch> trivial_hopf_curves(const Params& base, const ParamBox& box,
                                               int k_max = 4, int j_max = 4,
                                               int c_steps = 800) {
    std::map<std::pair<int, int>, std::vector<AtlasPoint>> raw;
    const double c_lo = std::max(box.c_min, 1e-3);
    for (int i = 0; i <= c_steps; ++i) {
        const double c = c_lo + (box.c_max - c_lo) * i / c_steps;
        for (const auto& hp : hopf_delays(base.with_c(c), j_max))
            if (hp.k <= k_max && hp.tau <= box.tau_max + 0.5)
                raw[{hp.k, hp.j}].push_back({hp.tau, c, hp.omega});
    }

    std::vector<Branch> out;
    const auto pc = pitchfork_coupling(base);
    const double c_grid = (box.c_max - c_lo) / c_steps;

    for (auto& [key, pts] : raw) {
        std::sort(pts.begin(), pts.end(),
                  [](const AtlasPoint& a, const AtlasPoint& b) { return a.c < b.c; });
        // split on tau jumps (arccos wrap-around)
        std::vector<std::vector<AtlasPoint>> pieces(1);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (!pieces.back().empty() &&
                std::abs(pts[i].tau - pieces.back().back().tau) > 0.5)
                pieces.emplace_back();
            pieces.back().push_back(pts[i]);
        }
        for (auto& piece : pieces) {
            if (piece.size() < 2) continue;
            Branch br;
            br.kind = BranchKind::HopfTrivial;
            br.k = key.first;
            br.j = key.second;
            // analytic anchors where the piece closes a known endpoint
            if (key.second == 0 && piece.front().tau < 0.2) {
                const double c0 = ode_hopf_coupling(base);
                if (std::abs(piece.front().c - c0) < 20.0 * c_grid) {
                    // crossing frequency at tau = 0: the quartic root continuous
                    // with the neighbouring branch point
                    double w0 = piece.front().value;
                    for (double z : hopf_quartic(base.with_c(c0)).positive_roots)
                        if (std::abs(std::sqrt(z) - piece.front().value) <
                            std::abs(w0 - piece.front().value) || w0 == piece.front().value)
                            w0 = std::sqrt(z);
                    piece.insert(piece.begin(), {0.0, c0, w0});
                }
            }
            if (key.first == 1 && key.second == 0 && pc.c && !pc.degenerate &&
                std::abs(piece.back().c - *pc.c) < 20.0 * c_grid && piece.back().c < *pc.c) {
                const auto hp = hopf_pitchfork_point(base);
                piece.push_back({hp.tau, hp.c, 0.0});
            }
            br.points = std::move(piece);
            // clip to the box
            std::erase_if(br.points, [&](const AtlasPoint& q) {
                return q.tau > box.tau_max || q.c < box.c_min || q.c > box.c_max;
            });
            if (br.points.size() >= 2) out.push_back(std::move(br));
        }
    }
    return out;
}

/// Vertical pitchfork line c = c_P (tau-independent zero eigenvalue).
inline Branch pitchfork_line(const Params& base, const ParamBox& box, int n_samples = 64) {
    const auto pc = pitchfork_coupling(base);
    Branch br;
    br.kind = BranchKind::Pitchfork;
    if (!pc.c || *pc.c < box.c_min || *pc.c > box.c_max) return br;
    for (int i = 0; i <= n_samples; ++i)
        br.points.push_back(
            {box.tau_min + (box.tau_max - box.tau_min) * i / n_samples, *pc.c, 0.0});
    return br;
}

// ---------------------------------------------------------------------------
// Hopf curves of the nontrivial rest points

namespace detail {

// characteristic value at the (c-dependent) nontrivial plus point
struct NontrivialChar {
    Params base;
    mutable double cached_c = std::numeric_limits<double>::quiet_NaN();
    mutable State rest{};

    explicit NontrivialChar(Params b) : base(b) {}

    bool rest_at(double c) const {
        if (c == cached_c) return true;
        const auto rp = find_rest_points(base.with_c(c));
        if (rp.points.size() < 3) return false;
        rest = rp.points.front().state;
        cached_c = c;
        return true;
    }

    cplx eval(double tau, double c, cplx lambda) const {
        if (!rest_at(c)) return cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
        Params p = base.with_c(c);
        p.tau = tau;
        return char_eval_at(p, rest, lambda);
    }

    cplx deriv_lambda(double tau, double c, cplx lambda) const {
        if (!rest_at(c)) return cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
        Params p = base.with_c(c);
        p.tau = tau;
        return char_deriv_at(p, rest, lambda);
    }

    // d chi / d tau  =  2 lambda K (l+b1)(l+b2) e^{-2 l tau}
    cplx deriv_tau(double tau, double c, cplx lambda) const {
        if (!rest_at(c)) return cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
        const double K = c * c * sech2(rest.v1) * sech2(rest.v2);
        return 2.0 * lambda * K * (lambda + base.b1) * (lambda + base.b2) *
               std::exp(-2.0 * tau * lambda);
    }

    cplx deriv_c(double tau, double c, cplx lambda) const {  // finite difference
        const double d = 1e-6 * std::max(1.0, std::abs(c));
        NontrivialChar tmp1{base}, tmp2{base};
        return (tmp1.eval(tau, c + d, lambda) - tmp2.eval(tau, c - d, lambda)) / (2.0 * d);
    }
};

// Newton in (tau, omega) at fixed c on Re chi = Im chi = 0.
inline bool newton_hopf_tau_omega(const NontrivialChar& ch, double c, double& tau,
                                  double& omega) {
    for (int it = 0; it < 60; ++it) {
        const cplx lam(0.0, omega);
        const cplx f = ch.eval(tau, c, lam);
        if (!std::isfinite(f.real())) return false;
        const cplx ft = ch.deriv_tau(tau, c, lam);
        const cplx fw = ch.deriv_lambda(tau, c, lam) * cplx(0.0, 1.0);
        const double det = ft.real() * fw.imag() - fw.real() * ft.imag();
        if (std::abs(det) < 1e-300) return false;
        const double dtau = (f.real() * fw.imag() - fw.real() * f.imag()) / det;
        const double dome = (ft.real() * f.imag() - f.real() * ft.imag()) / det;
        tau -= dtau;
        omega -= dome;
        if (!std::isfinite(tau) || !std::isfinite(omega) || omega <= 0.0) return false;
        if (std::abs(f) < 1e-11 && std::abs(dtau) + std::abs(dome) < 1e-11) return true;
    }
    return false;
}

// Newton in (c, omega) at fixed tau (used to land branch endpoints on tau = 0).
inline bool newton_hopf_c_omega(const NontrivialChar& ch, double tau, double& c,
                                double& omega) {
    for (int it = 0; it < 60; ++it) {
        const cplx lam(0.0, omega);
        const cplx f = ch.eval(tau, c, lam);
        if (!std::isfinite(f.real())) return false;
        const cplx fc = ch.deriv_c(tau, c, lam);
        const cplx fw = ch.deriv_lambda(tau, c, lam) * cplx(0.0, 1.0);
        const double det = fc.real() * fw.imag() - fw.real() * fc.imag();
        if (std::abs(det) < 1e-300) return false;
        const double dc = (f.real() * fw.imag() - fw.real() * f.imag()) / det;
        const double dome = (fc.real() * f.imag() - f.real() * fc.imag()) / det;
        c -= dc;
        omega -= dome;
        if (!std::isfinite(c) || !std::isfinite(omega) || omega <= 0.0) return false;
        if (std::abs(f) < 1e-11 && std::abs(dc) + std::abs(dome) < 1e-11) return true;
    }
    return false;
}

}  // namespace detail

/// Hopf curves of the antipodal rest points: seeds located by scanning the
/// rightmost spectrum along tau at a few couplings, refined by Newton on the
/// characteristic function, then continued in (tau, c) by pseudo-arclength.
/// Branches reaching tau = 0 get an exact endpoint solve there.
inline std::vector<Branch> nontrivial_hopf_curves(const Params& base, const ParamBox& box,
                                                  std::vector<double> seed_cs = {},
                                                  double seed_tau_step = 0.25) {
    const auto pc = pitchfork_coupling(base);
    if (!pc.c) return {};
    const double c_floor = *pc.c + 5e-3;
    if (seed_cs.empty()) {
        for (double f : {0.30, 0.55, 0.80})
            seed_cs.push_back(c_floor + f * (box.c_max - c_floor));
    }

    std::vector<Branch> out;
    const auto near_existing = [&](double tau, double c) {
        for (const auto& br : out)
            for (const auto& q : br.points)
                if (std::abs(q.tau - tau) < 0.15 && std::abs(q.c - c) < 0.02) return true;
        return false;
    };

    detail::NontrivialChar ch{base};

    for (double c_seed : seed_cs) {
        if (c_seed <= c_floor || c_seed > box.c_max) continue;
        const auto rp = find_rest_points(base.with_c(c_seed));
        if (rp.points.size() < 3) continue;
        const State rest = rp.points.front().state;

        // scan tau for real-part sign changes of complex pairs
        struct Probe {
            double tau, re, im;
        };
        std::vector<Probe> probes;
        for (double tau = box.tau_min; tau <= box.tau_max + 1e-9; tau += seed_tau_step) {
            Params p = base.with_c(c_seed);
            p.tau = tau;
            const auto sp = rightmost_spectrum(p, rest);
            double re = -1e9, im = 0.0;
            for (const auto& e : sp.eigenvalues)
                if (e.converged && e.lambda.imag() > 0.05 && e.lambda.real() > re) {
                    re = e.lambda.real();
                    im = e.lambda.imag();
                }
            probes.push_back({tau, re, im});
        }
        for (std::size_t i = 1; i < probes.size(); ++i) {
            if (probes[i - 1].re == -1e9 || probes[i].re == -1e9) continue;
            if (probes[i - 1].re * probes[i].re >= 0.0) continue;
            double tau = 0.5 * (probes[i - 1].tau + probes[i].tau);
            double omega = 0.5 * (probes[i - 1].im + probes[i].im);
            if (!detail::newton_hopf_tau_omega(ch, c_seed, tau, omega)) continue;
            if (tau < box.tau_min - 1e-9 || tau > box.tau_max || near_existing(tau, c_seed))
                continue;

            // pseudo-arclength continuation in (tau, c) both directions
            Branch br;
            br.kind = BranchKind::HopfNontrivial;
            br.points.push_back({tau, c_seed, omega});
            for (int dir : {+1, -1}) {
                double t0 = tau, c0 = c_seed, w0 = omega;
                double t1 = t0, c1 = c0, w1 = w0;
                // initial tangent: continue in c
                double dt = 0.0, dc = dir * 0.004;
                double ds = 0.004;
                int fails = 0;
                std::vector<AtlasPoint> side;
                for (int step = 0; step < 2000; ++step) {
                    double tp = t1 + dt * (ds / std::hypot(dt, dc));
                    double cp = c1 + dc * (ds / std::hypot(dt, dc));
                    double wp = w1 + (w1 - w0);  // frequency drifts slowly
                    bool ok = false;
                    if (cp > c_floor && cp <= box.c_max + 0.02) {
                        // corrector: fix the arclength direction by freezing the
                        // dominant coordinate and solving the complementary pair
                        if (std::abs(dc) >= std::abs(dt)) {
                            double tt = tp;
                            ok = detail::newton_hopf_tau_omega(ch, cp, tt, wp);
                            tp = tt;
                        } else {
                            double cc = cp;
                            ok = detail::newton_hopf_c_omega(ch, tp, cc, wp);
                            cp = cc;
                        }
                    }
                    if (!ok) {
                        ds *= 0.5;
                        if (++fails > 3 || ds < 1e-5) break;
                        continue;
                    }
                    fails = 0;
                    if (ds < 0.02) ds *= 1.4;
                    dt = tp - t1;
                    dc = cp - c1;
                    t0 = t1; c0 = c1; w0 = w1;
                    t1 = tp; c1 = cp; w1 = wp;
                    if (tp < box.tau_min) {
                        // land exactly on tau = 0 (or the box floor)
                        double ce = c1, we = w1;
                        if (detail::newton_hopf_c_omega(ch, box.tau_min, ce, we))
                            side.push_back({box.tau_min, ce, we});
                        break;
                    }
                    side.push_back({tp, cp, wp});
                    if (tp > box.tau_max || cp > box.c_max || cp < c_floor) break;
                }
                if (dir > 0) {
                    br.points.insert(br.points.end(), side.begin(), side.end());
                } else {
                    br.points.insert(br.points.begin(), side.rbegin(), side.rend());
                }
            }
            if (br.points.size() >= 3) out.push_back(std::move(br));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Codimension-2 points

enum class Codim2Kind { DoubleHopf, HopfPitchfork };

struct Codim2Point {
    Codim2Kind kind;
    double tau = 0.0, c = 0.0;
    double omega1 = 0.0, omega2 = 0.0;
    double residual = 0.0;
    bool trivial_point = true;  // rest point the eigenvalues belong to
};

namespace detail {

inline bool segments_intersect(const AtlasPoint& a1, const AtlasPoint& a2, const AtlasPoint& b1,
                               const AtlasPoint& b2, double& tau, double& c) {
    const double d1t = a2.tau - a1.tau, d1c = a2.c - a1.c;
    const double d2t = b2.tau - b1.tau, d2c = b2.c - b1.c;
    const double den = d1t * d2c - d1c * d2t;
    if (std::abs(den) < 1e-14) return false;
    const double rt = b1.tau - a1.tau, rc = b1.c - a1.c;
    const double s = (rt * d2c - rc * d2t) / den;
    const double u = (rt * d1c - rc * d1t) / den;
    if (s < -0.02 || s > 1.02 || u < -0.02 || u > 1.02) return false;
    tau = a1.tau + s * d1t;
    c = a1.c + s * d1c;
    return true;
}

// Newton on two simultaneous imaginary pairs of the trivial-point equation.
inline bool newton_double_hopf(const Params& base, double& tau, double& c, double& w1,
                               double& w2) {
    for (int it = 0; it < 80; ++it) {
        Params p = base.with_c(c);
        p.tau = tau;
        const cplx l1(0.0, w1), l2(0.0, w2);
        const cplx f1 = char_eval(p, l1), f2 = char_eval(p, l2);
        Eigen::Vector4d F(f1.real(), f1.imag(), f2.real(), f2.imag());
        if (F.cwiseAbs().maxCoeff() < 1e-11 && it > 0) return true;

        const auto dtau = [&](cplx lam) {
            return 2.0 * lam * p.c * p.c * (lam + p.b1) * (lam + p.b2) *
                   std::exp(-2.0 * tau * lam);
        };
        const auto dcc = [&](cplx lam) {
            return -2.0 * p.c * (lam + p.b1) * (lam + p.b2) * std::exp(-2.0 * tau * lam);
        };
        const cplx dw1 = char_deriv_at(p, State{}, l1) * cplx(0.0, 1.0);
        const cplx dw2 = char_deriv_at(p, State{}, l2) * cplx(0.0, 1.0);

        Eigen::Matrix4d J;
        J << dtau(l1).real(), dcc(l1).real(), dw1.real(), 0.0,
             dtau(l1).imag(), dcc(l1).imag(), dw1.imag(), 0.0,
             dtau(l2).real(), dcc(l2).real(), 0.0, dw2.real(),
             dtau(l2).imag(), dcc(l2).imag(), 0.0, dw2.imag();
        const Eigen::Vector4d dx = J.partialPivLu().solve(F);
        if (!dx.allFinite()) return false;
        tau -= dx[0];
        c -= dx[1];
        w1 -= dx[2];
        w2 -= dx[3];
        if (!std::isfinite(tau) || w1 <= 0.0 || w2 <= 0.0 || c <= 0.0) return false;
        if (dx.cwiseAbs().maxCoeff() < 1e-12) {
            Params q = base.with_c(c);
            q.tau = tau;
            return std::max(std::abs(char_eval(q, cplx(0, w1))),
                            std::abs(char_eval(q, cplx(0, w2)))) < 1e-9;
        }
    }
    return false;
}

}  // namespace detail

/// Intersects branch polylines pairwise and Newton-refines the joint
/// conditions: two imaginary pairs for a double-Hopf, zero eigenvalue plus
/// the closed-form double-root condition for the Hopf-pitchfork.
inline std::vector<Codim2Point> codim2_points(const Params& base,
                                              const std::vector<Branch>& branches) {
    std::vector<Codim2Point> out;
    const auto add_unique = [&](const Codim2Point& pt) {
        for (const auto& q : out)
            if (q.kind == pt.kind && std::abs(q.tau - pt.tau) < 1e-4 &&
                std::abs(q.c - pt.c) < 1e-4)
                return;
        out.push_back(pt);
    };

    for (std::size_t i = 0; i < branches.size(); ++i) {
        for (std::size_t jj = i + 1; jj < branches.size(); ++jj) {
            const Branch& A = branches[i];
            const Branch& B = branches[jj];
            const bool a_hopf = A.kind == BranchKind::HopfTrivial;
            const bool b_hopf = B.kind == BranchKind::HopfTrivial;
            const bool a_pf = A.kind == BranchKind::Pitchfork;
            const bool b_pf = B.kind == BranchKind::Pitchfork;
            if (!((a_hopf && b_hopf) || (a_hopf && b_pf) || (a_pf && b_hopf))) continue;
            if (a_hopf && b_hopf && A.k == B.k && A.j == B.j) continue;

            for (std::size_t s = 0; s + 1 < A.points.size(); ++s) {
                for (std::size_t t = 0; t + 1 < B.points.size(); ++t) {
                    double tau, c;
                    if (!detail::segments_intersect(A.points[s], A.points[s + 1], B.points[t],
                                                    B.points[t + 1], tau, c))
                        continue;
                    if (a_hopf && b_hopf) {
                        double w1 = 0.5 * (A.points[s].value + A.points[s + 1].value);
                        double w2 = 0.5 * (B.points[t].value + B.points[t + 1].value);
                        if (std::abs(w1 - w2) < 1e-3) continue;  // same pair, not codim-2
                        double tt = tau, cc = c;
                        if (detail::newton_double_hopf(base, tt, cc, w1, w2)) {
                            Params q = base.with_c(cc);
                            q.tau = tt;
                            Codim2Point pt;
                            pt.kind = Codim2Kind::DoubleHopf;
                            pt.tau = tt;
                            pt.c = cc;
                            pt.omega1 = std::min(w1, w2);
                            pt.omega2 = std::max(w1, w2);
                            pt.residual = std::max(std::abs(char_eval(q, cplx(0, w1))),
                                                   std::abs(char_eval(q, cplx(0, w2))));
                            add_unique(pt);
                        }
                    } else {
                        const auto hp = hopf_pitchfork_point(base);
                        if (std::abs(hp.tau - tau) < 0.2 && std::abs(hp.c - c) < 0.05) {
                            Params q = base.with_c(hp.c);
                            q.tau = hp.tau;
                            Codim2Point pt;
                            pt.kind = Codim2Kind::HopfPitchfork;
                            pt.tau = hp.tau;
                            pt.c = hp.c;
                            pt.residual = std::abs(char_eval(q, cplx(0.0, 0.0)));
                            add_unique(pt);
                        }
                    }
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cycle branch continuation

struct CycleContOptions {
    double ds0 = 0.02;
    double ds_min = 1e-4;
    double ds_max = 0.1;
    int max_steps = 600;
    double T_max = 500.0;    // homoclinic proxy threshold
    double amp_min = 1e-3;   // Hopf endpoint threshold
    bool with_floquet = true;
    int floquet_N = 32;
    bool adapt_mesh = true;
    int max_mesh = 560;
    CycleEventOptions events;
};

struct CycleBranchResult {
    Branch branch;                   // (tau, c) polyline, payload = period
    std::vector<CyclePoint> archive;  // traversal order
    std::vector<CycleEvent> events;
    bool hit_period_threshold = false;
};

inline Params base_with(const Params& base, ContParam which, double mu) {
    Params p = base;
    if (which == ContParam::C) p.c = mu; else p.tau = mu;
    return p;
}

namespace detail {

struct ScaledCoords {
    double wp, wT, wmu;
    int np;

    double dist(const std::vector<State>& Ya, double Ta, double mua,
                const std::vector<State>& Yb, double Tb, double mub) const {
        double s = 0.0;
        for (std::size_t g = 0; g < Ya.size(); ++g)
            for (int q = 0; q < 4; ++q) {
                const double d = (Ya[g][q] - Yb[g][q]) * wp;
                s += d * d;
            }
        const double dT = (Ta - Tb) * wT, dm = (mua - mub) * wmu;
        return std::sqrt(s + dT * dT + dm * dm);
    }
};

}  // namespace detail

/// Pseudo-arclength continuation of a converged cycle in c or tau over
/// `range`, with Floquet multipliers and bifurcation events collected along
/// the way. The mesh is re-equidistributed (and enlarged) when the period
/// stretches. Continuation runs from the seed towards both ends of the range.
inline CycleBranchResult continue_cycle_branch(const Params& base, const CycleBVP& seed,
                                               ContParam which,
                                               std::pair<double, double> range,
                                               const CycleContOptions& opt = {}) {
    CycleBranchResult out;
    out.branch.kind = BranchKind::FoldCycle;  // payload polyline; kind refined by caller
    out.branch.note = which == ContParam::C ? "continued in c" : "continued in tau";

    const double mu_seed = which == ContParam::C ? seed.params.c : seed.params.tau;
    if (range.first > range.second) std::swap(range.first, range.second);

    Params p0 = base;
    if (which == ContParam::C) p0.c = mu_seed; else p0.tau = mu_seed;
    const auto first = solve_cycle_bvp(p0, seed);
    if (first.status != CycleSolveStatus::Converged) return out;

    const auto make_point = [&](const CycleBVP& cyc, double mu) {
        CyclePoint cp;
        cp.param = mu;
        cp.cycle = cyc;
        if (opt.with_floquet)
            cp.floquet = floquet_multipliers(base_with(base, which, mu), cyc, opt.floquet_N);
        cp.sym = cyc.symmetry_indicator();
        return cp;
    };

    // one-direction march; returns points excluding the seed point
    const auto march = [&](const CyclePoint& start, int dir) {
        std::vector<CyclePoint> pts;
        CycleBVP cur = start.cycle;
        double mu_cur = start.param;
        double T_remesh = cur.T;

        // first step: natural continuation
        double ds = opt.ds0;
        std::vector<State> Yprev = cur.profile;
        double Tprev = cur.T, muprev = mu_cur;
        bool have_prev = false;

        int reductions = 0;
        bool period_mode = false;  // step T directly along a homoclinic tail
        double period_gain = 0.15;
        for (int step = 0; step < opt.max_steps; ++step) {
            const int np = 4 * cur.n_nodes();
            detail::ScaledCoords sc{1.0 / std::sqrt(static_cast<double>(np)),
                                    1.0 / std::max(5.0, cur.T), 1.0, np};

            bool accepted = false;
            CycleBVP next;
            double mu_next = mu_cur;
            int used_iters = 0;

            if (period_mode) {
                // the parameter has pinned itself (period blow-up): continue in
                // T, leaving the parameter free
                CycleBVP work = cur;
                if (opt.adapt_mesh && (1.0 + period_gain) * cur.T > 1.25 * T_remesh) {
                    const int M_new = std::clamp(
                        static_cast<int>(40 + 1.1 * (1.0 + period_gain) * cur.T),
                        cur.n_intervals, opt.max_mesh);
                    work = remesh_cycle(cur, M_new);
                }
                const double T_target = cur.T * (1.0 + period_gain);
                const BorderRow row = [T_target](const std::vector<State>& Y, double T, double,
                                                 Eigen::VectorXd& grad) -> double {
                    grad[static_cast<int>(Y.size()) * 4] = 1.0;
                    return T - T_target;
                };
                const auto res = solve_cycle_bordered(base, which, work, mu_cur, work, row);
                if (res.status == CycleSolveStatus::Converged) {
                    period_gain = std::min(0.3, period_gain * 1.3);
                    Yprev = cur.profile;
                    Tprev = cur.T;
                    muprev = mu_cur;
                    cur = res.cycle;
                    mu_cur = res.mu;
                    T_remesh = std::max(T_remesh, cur.T);
                    pts.push_back(make_point(cur, mu_cur));
                    if (cur.T > opt.T_max) {
                        out.hit_period_threshold = true;
                        break;
                    }
                    continue;
                }
                period_gain *= 0.4;
                if (++reductions > 4 || period_gain < 0.01) break;
                continue;
            }

            if (!have_prev) {
                // natural step in mu
                const double dmu = dir * std::max(opt.ds_min, ds);
                Params p = base;
                if (which == ContParam::C) p.c = mu_cur + dmu; else p.tau = mu_cur + dmu;
                const auto res = solve_cycle_bvp(p, cur);
                if (res.status == CycleSolveStatus::Converged) {
                    accepted = true;
                    next = res.cycle;
                    mu_next = mu_cur + dmu;
                    used_iters = res.iterations;
                }
            } else {
                // secant tangent in scaled coordinates
                const double norm = sc.dist(cur.profile, cur.T, mu_cur, Yprev, Tprev, muprev);
                if (norm <= 0.0) break;
                CycleBVP pred = cur;
                const double f = ds / norm;
                for (int g = 0; g < cur.n_nodes(); ++g)
                    for (int q = 0; q < 4; ++q)
                        pred.profile[g][q] += f * (cur.profile[g][q] - Yprev[g][q]);
                pred.T += f * (cur.T - Tprev);
                const double mu_pred = mu_cur + f * (mu_cur - muprev);

                // arclength row: t_hat . (x - x_cur) = ds in scaled coords
                std::vector<double> tprof(np);
                for (int g = 0; g < cur.n_nodes(); ++g)
                    for (int q = 0; q < 4; ++q)
                        tprof[4 * g + q] =
                            (cur.profile[g][q] - Yprev[g][q]) / norm * sc.wp * sc.wp;
                const double tT = (cur.T - Tprev) / norm * sc.wT * sc.wT;
                const double tmu = (mu_cur - muprev) / norm * sc.wmu * sc.wmu;
                const auto Ycur = cur.profile;
                const double Tcur = cur.T, mucur = mu_cur;
                const BorderRow row = [&, tprof, tT, tmu, Ycur, Tcur, mucur,
                                       ds](const std::vector<State>& Y, double T, double mu,
                                           Eigen::VectorXd& grad) -> double {
                    double r = -ds;
                    for (int g = 0; g < static_cast<int>(Y.size()); ++g)
                        for (int q = 0; q < 4; ++q) {
                            r += tprof[4 * g + q] * (Y[g][q] - Ycur[g][q]);
                            grad[4 * g + q] = tprof[4 * g + q];
                        }
                    r += tT * (T - Tcur) + tmu * (mu - mucur);
                    grad[static_cast<int>(Y.size()) * 4] = tT;
                    grad[static_cast<int>(Y.size()) * 4 + 1] = tmu;
                    return r;
                };
                const auto res = solve_cycle_bordered(base, which, pred, mu_pred, cur, row);
                if (res.status == CycleSolveStatus::Converged) {
                    accepted = true;
                    next = res.cycle;
                    mu_next = res.mu;
                    used_iters = res.iterations;
                }
            }

            if (!accepted) {
                ds *= 0.4;
                if (++reductions > 3 || ds < opt.ds_min) break;
                continue;
            }
            reductions = 0;

            // mesh adaptation when the period stretches
            if (opt.adapt_mesh && next.T > 1.3 * T_remesh) {
                const int M_new = std::clamp(static_cast<int>(40 + 1.1 * next.T),
                                             next.n_intervals, opt.max_mesh);
                CycleBVP rm = remesh_cycle(next, M_new);
                Params p = base;
                if (which == ContParam::C) p.c = mu_next; else p.tau = mu_next;
                const auto rs = solve_cycle_bvp(p, rm);
                if (rs.status == CycleSolveStatus::Converged) {
                    // re-express the previous point on the new mesh for the secant
                    CycleBVP prev_rm = rs.cycle;
                    CycleBVP old = cur;
                    old.profile = Yprev;
                    old.T = Tprev;
                    for (int g = 0; g < prev_rm.n_nodes(); ++g)
                        prev_rm.profile[g] = old.eval(prev_rm.node_s(g));
                    Yprev = prev_rm.profile;
                    Tprev = old.T;
                    next = rs.cycle;
                    T_remesh = next.T;
                } else {
                    T_remesh = next.T;  // keep the old mesh, retry later
                }
            } else {
                Yprev = cur.profile;
                Tprev = cur.T;
            }
            muprev = mu_cur;
            have_prev = true;
            cur = next;
            mu_cur = mu_next;

            pts.push_back(make_point(cur, mu_cur));

            if (used_iters <= 4) ds = std::min(ds * 1.3, opt.ds_max);
            else if (used_iters > 8) ds = std::max(ds * 0.6, opt.ds_min);

            if (cur.T > opt.T_max) {
                out.hit_period_threshold = true;
                break;
            }
            if (cur.max_amplitude() < opt.amp_min) break;
            if (mu_cur < range.first - 1e-9 || mu_cur > range.second + 1e-9) break;
            if (cur.T > 30.0 && cur.T > Tprev &&
                std::abs(mu_cur - muprev) < 1e-6 * std::max(1.0, std::abs(mu_cur)))
                period_mode = true;
        }
        return pts;
    };

    const CyclePoint seed_pt = make_point(first.cycle, mu_seed);
    std::vector<CyclePoint> fwd, bwd;
    if (mu_seed < range.second) fwd = march(seed_pt, +1);
    if (mu_seed > range.first) bwd = march(seed_pt, -1);

    out.archive.reserve(bwd.size() + 1 + fwd.size());
    for (auto it = bwd.rbegin(); it != bwd.rend(); ++it) out.archive.push_back(std::move(*it));
    out.archive.push_back(seed_pt);
    for (auto& cp : fwd) out.archive.push_back(std::move(cp));

    for (const auto& cp : out.archive)
        out.branch.points.push_back({cp.cycle.params.tau, cp.cycle.params.c, cp.cycle.T});

    CycleEventOptions ev = opt.events;
    ev.T_max = opt.T_max;
    ev.amp_hopf = opt.amp_min;
    out.events = detect_cycle_bifurcations(out.archive, ev);

    // A branch that stalls with a small (but not yet collapsed) amplitude is
    // shrinking into a Hopf point: extrapolate amp^2, which is linear in the
    // parameter there, to locate the endpoint.
    const auto try_hopf_end = [&](bool front_end) {
        const int n = static_cast<int>(out.archive.size());
        if (n < 5) return;
        const int i_end = front_end ? 0 : n - 1;
        const int dir = front_end ? +1 : -1;
        const auto& last = out.archive[i_end];
        if (last.cycle.max_amplitude() > 0.08 || last.cycle.T > opt.T_max) return;
        const double mu_end = last.param;
        if (std::abs(mu_end - range.first) < 1e-6 || std::abs(mu_end - range.second) < 1e-6)
            return;
        for (const auto& e : out.events)
            if (e.kind == CycleEventKind::HopfEndpoint && std::abs(e.param - mu_end) < 0.1)
                return;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int k = 0; k < 4; ++k) {
            const auto& cp = out.archive[i_end + dir * k];
            const double a = cp.cycle.max_amplitude();
            sx += cp.param;
            sy += a * a;
            sxx += cp.param * cp.param;
            sxy += cp.param * a * a;
        }
        const double slope = (4.0 * sxy - sx * sy) / (4.0 * sxx - sx * sx);
        if (!std::isfinite(slope) || slope == 0.0) return;
        const double mu_h = mu_end - last.cycle.max_amplitude() *
                                         last.cycle.max_amplitude() / slope;
        if (std::abs(mu_h - mu_end) > 0.1) return;
        CycleEvent e;
        e.kind = CycleEventKind::HopfEndpoint;
        e.candidates = {CycleEventKind::HopfEndpoint};
        e.param = mu_h;
        e.tau = which == ContParam::Tau ? mu_h : base.tau;
        e.c = which == ContParam::C ? mu_h : base.c;
        e.T = last.cycle.T;
        e.between_lo = front_end ? 0 : n - 2;
        e.between_hi = front_end ? 1 : n - 1;
        out.events.push_back(e);
    };
    try_hopf_end(true);
    try_hopf_end(false);
    return out;
}

// ---------------------------------------------------------------------------
// Regime classification grid

struct ICProtocol {
    std::vector<State> explicit_ics{{1.3, 1.5, 1.4, 1.0},
                                    {0.05, 0.03, 0.04, 0.2},
                                    {0.1, 0.3, 0.4, 0.2},
                                    {1.0, 0.9, 0.8, 0.7}};
    int n_random = 32;
    double range = 2.0;
    unsigned seed = 42;

    std::vector<State> materialize() const {
        std::vector<State> out = explicit_ics;
        const auto rnd = random_ics(n_random, range, seed);
        out.insert(out.end(), rnd.begin(), rnd.end());
        return out;
    }
};

struct RegimeCell {
    double tau = 0.0, c = 0.0;
    int stable_rest = 0;
    int periodic = 0;
    int nonperiodic = 0;
    std::vector<SyncClass> syncs;  // one per periodic attractor
    std::string label;
};

struct RegimeGrid {
    ParamBox box;
    int n_tau = 0, n_c = 0;
    std::vector<RegimeCell> cells;  // row-major, tau fastest

    const RegimeCell& at(int it, int ic) const { return cells[ic * n_tau + it]; }
};

inline std::string regime_label(int periodic, int stable_rest,
                                const std::vector<SyncClass>& syncs) {
    std::string s;
    if (periodic == 0 && stable_rest > 0) s = "quiescent";
    else if (periodic == 1 && stable_rest == 0) s = "mono-periodic";
    else if (periodic >= 3) s = "tri-periodic";
    else s = "mixed";
    s += "(P" + std::to_string(periodic) + ",R" + std::to_string(stable_rest);
    for (SyncClass sc : syncs) {
        s += sc == SyncClass::AlmostSynchronized ? ",sync"
             : sc == SyncClass::AlmostAntiPhase ? ",anti" : ",other";
    }
    s += ")";
    return s;
}

/// Classifies one parameter point: analytic stable-rest count from the
/// rightmost spectra plus the attractor inventory from a basin probe.
inline RegimeCell classify_regime(const Params& p, const std::vector<State>& ics,
                                  const BasinConfig& bc = {}) {
    RegimeCell cell;
    cell.tau = p.tau;
    cell.c = p.c;
    const auto rests = find_rest_points(p);
    for (const auto& r : rests.points)
        if (rightmost_spectrum(p, r.state).unstable_count() == 0) ++cell.stable_rest;
    const auto inv = basin_probe(p, ics, bc);
    cell.periodic = inv.count(AttractorKind::Periodic);
    cell.nonperiodic = inv.count(AttractorKind::NonPeriodic);
    for (const auto& at : inv.attractors)
        if (at.kind == AttractorKind::Periodic) cell.syncs.push_back(at.orbit->sync);
    cell.label = regime_label(cell.periodic, cell.stable_rest, cell.syncs);
    return cell;
}

struct TriStabilityResult {
    bool found = false;
    double tau = 0.0;
    AttractorInventory inventory;
    std::vector<std::pair<double, int>> scan_log;  // (tau, periodic attractor count)
};

/// Scans tau for a point with at least three coexisting stable periodic
/// attractors: two anti-phase ones with distinct frequencies plus one
/// almost-synchronized one.
inline TriStabilityResult scan_tri_stability(const Params& base, double tau_lo, double tau_hi,
                                             double step, const ICProtocol& proto = {},
                                             const BasinConfig& bc = {},
                                             bool stop_at_first = true) {
    TriStabilityResult out;
    const auto ics = proto.materialize();
    for (double tau = tau_lo; tau <= tau_hi + 1e-9; tau += step) {
        const auto inv = basin_probe(base.with_tau(tau), ics, bc);
        out.scan_log.emplace_back(tau, inv.count(AttractorKind::Periodic));
        std::vector<double> anti;
        int sync = 0;
        for (const auto& at : inv.attractors) {
            if (at.kind != AttractorKind::Periodic) continue;
            if (at.orbit->sync == SyncClass::AlmostAntiPhase) anti.push_back(at.orbit->T);
            if (at.orbit->sync == SyncClass::AlmostSynchronized) ++sync;
        }
        bool distinct_anti = false;
        for (std::size_t i = 0; i < anti.size(); ++i)
            for (std::size_t j = i + 1; j < anti.size(); ++j)
                if (std::abs(anti[i] - anti[j]) > 1e-2 * std::max(anti[i], anti[j]))
                    distinct_anti = true;
        if (inv.count(AttractorKind::Periodic) >= 3 && distinct_anti && sync >= 1) {
            out.found = true;
            out.tau = tau;
            out.inventory = inv;
            if (stop_at_first) return out;
        }
    }
    return out;
}

/// Regime labels over a (tau, c) grid; cells are computed concurrently and
/// merged deterministically by index.
inline RegimeGrid regime_grid(const Params& base, const ParamBox& box, int n_tau, int n_c,
                              const ICProtocol& protocol = {}, const BasinConfig& bc = {}) {
    RegimeGrid grid;
    grid.box = box;
    grid.n_tau = n_tau;
    grid.n_c = n_c;
    grid.cells.resize(static_cast<std::size_t>(n_tau) * n_c);
    const auto ics = protocol.materialize();
    detail::parallel_for(n_tau * n_c, [&](int idx) {
        const int it = idx % n_tau, ic = idx / n_tau;
        Params p = base;
        p.tau = box.tau_min + (box.tau_max - box.tau_min) * (it + 0.5) / n_tau;
        p.c = box.c_min + (box.c_max - box.c_min) * (ic + 0.5) / n_c;
        grid.cells[idx] = classify_regime(p, ics, bc);
    });
    return grid;
}

}  // namespace fhn
