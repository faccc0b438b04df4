#pragma once

// Closed-form characteristic-equation machinery for the trivial rest point.
//
// Linearizing at the origin gives the quasipolynomial
//
//   P(lambda) = lambda^4 + A lambda^3 + B lambda^2 + C lambda + D
//               - E (lambda + b1)(lambda + b2) e^{-2 lambda tau},   E = c^2.
//
// Purely imaginary roots lambda = i*omega satisfy a quartic in z = omega^2,
//   h(z) = z^4 + P z^3 + Q z^2 + R z + S,
// whose positive roots give the Hopf frequencies; for each frequency the
// admissible delays form an arithmetic sequence tau_k^(j) recovered from the
// (sin, cos) linear system. The resolvent cubic of h' drives the closed-form
// case analysis for stability; all roots are Newton-polished afterwards so
// the closed form only seeds the computation.

#include <algorithm>
#include <complex>
#include <optional>
#include <vector>

#include "fhn/model.hpp"

namespace fhn {

using cplx = std::complex<double>;

struct CharCoeffs {
    double A, B, C, D, E;
};

inline CharCoeffs char_coeffs(const Params& p) {
    const double a = p.a, b1 = p.b1, b2 = p.b2;
    return {
        b1 + b2 - 2.0 * a,
        b1 * b2 - 2.0 * a * (b1 + b2) + a * a + 2.0,
        (a * a + 1.0) * (b1 + b2) - 2.0 * a * b1 * b2 - 2.0 * a,
        a * a * b1 * b2 - a * (b1 + b2) + 1.0,
        p.c * p.c,
    };
}

/// Characteristic function of the trivial rest point at lambda.
inline cplx char_eval(const Params& p, cplx lambda) {
    const auto [A, B, C, D, E] = char_coeffs(p);
    const cplx poly = (((lambda + A) * lambda + B) * lambda + C) * lambda + D;
    return poly - E * (lambda + p.b1) * (lambda + p.b2) * std::exp(-2.0 * p.tau * lambda);
}

/// Characteristic function at an arbitrary rest point (v1*, v2*), in the
/// factored form  M1(l) M2(l) - K (l+b1)(l+b2) e^{-2 l tau}  with
/// M_i = (l - alpha_i)(l + b_i) + 1 and K = c^2 sech^2(v1*) sech^2(v2*).
/// Reduces to char_eval at the origin.
inline cplx char_eval_at(const Params& p, const State& rest, cplx lambda) {
    const double a1 = -3.0 * rest.v1 * rest.v1 + p.a;
    const double a2 = -3.0 * rest.v2 * rest.v2 + p.a;
    const double K = p.c * p.c * sech2(rest.v1) * sech2(rest.v2);
    const cplx m1 = (lambda - a1) * (lambda + p.b1) + 1.0;
    const cplx m2 = (lambda - a2) * (lambda + p.b2) + 1.0;
    return m1 * m2 - K * (lambda + p.b1) * (lambda + p.b2) * std::exp(-2.0 * p.tau * lambda);
}

/// d/dlambda of char_eval_at.
inline cplx char_deriv_at(const Params& p, const State& rest, cplx lambda) {
    const double a1 = -3.0 * rest.v1 * rest.v1 + p.a;
    const double a2 = -3.0 * rest.v2 * rest.v2 + p.a;
    const double K = p.c * p.c * sech2(rest.v1) * sech2(rest.v2);
    const cplx m1 = (lambda - a1) * (lambda + p.b1) + 1.0;
    const cplx m2 = (lambda - a2) * (lambda + p.b2) + 1.0;
    const cplx dm1 = 2.0 * lambda + p.b1 - a1;
    const cplx dm2 = 2.0 * lambda + p.b2 - a2;
    const cplx ex = std::exp(-2.0 * p.tau * lambda);
    const cplx prod = (lambda + p.b1) * (lambda + p.b2);
    return dm1 * m2 + m1 * dm2 -
           K * ex * (2.0 * lambda + p.b1 + p.b2 - 2.0 * p.tau * prod);
}

// ---------------------------------------------------------------------------
// Quartic in z = omega^2

struct CharQuartic {
    double P, Q, R, S;
    double Delta;                        // resolvent discriminant
    std::array<cplx, 3> z_candidates;    // resolvent roots shifted by -P/4
    std::vector<double> positive_roots;  // polished positive roots of h, ascending
    bool case_a = false;                 // S < 0
    bool case_b = false;                 // S >= 0, Delta >= 0, z1 > 0, h(z1) <= 0
    bool case_c = false;                 // S >= 0, Delta < 0, some real z* > 0 with h(z*) <= 0

    double h(double z) const { return ((z + P) * z + Q) * z * z + R * z + S; }
    double h_deriv(double z) const { return ((4.0 * z + 3.0 * P) * z + 2.0 * Q) * z + R; }
    bool has_positive_root() const { return case_a || case_b || case_c; }
};

namespace detail {

// Roots of the depressed cubic y^3 + P1 y + Q1 via Cardano. One cube root is
// taken on the principal branch, the partner is derived from u v = -P1/3 to
// keep the pair consistent on every branch.
inline std::array<cplx, 3> depressed_cubic_roots(double P1, double Q1) {
    const cplx eps(-0.5, 0.5 * std::sqrt(3.0));
    const cplx sq = std::sqrt(cplx(Q1 * Q1 / 4.0 + P1 * P1 * P1 / 27.0, 0.0));
    cplx u = std::pow(-Q1 / 2.0 + sq, 1.0 / 3.0);
    if (std::abs(u) < 1e-100) u = std::pow(-Q1 / 2.0 - sq, 1.0 / 3.0);
    if (std::abs(u) < 1e-100) return {cplx(0), cplx(0), cplx(0)};
    const cplx v = -P1 / (3.0 * u);
    return {u + v, u * eps + v * eps * eps, u * eps * eps + v * eps};
}

}  // namespace detail

/// Quartic h(z) for the Hopf frequencies, with the resolvent-cubic data the
/// stability lemma needs and the polished positive roots.
inline CharQuartic hopf_quartic(const Params& p) {
    const auto [A, B, C, D, E] = char_coeffs(p);
    const double b1 = p.b1, b2 = p.b2;
    CharQuartic q;
    q.P = -2.0 * B + A * A;
    q.Q = B * B + 2.0 * D - 2.0 * A * C - E * E;
    q.R = -2.0 * B * D + C * C - E * E * (b1 * b1 + b2 * b2);
    q.S = D * D - E * E * (b1 * b2) * (b1 * b2);

    // Critical points of h: roots of h'(z) = 4z^3 + 3Pz^2 + 2Qz + R, depressed
    // by z = y - P/4.
    const double P1 = q.Q / 2.0 - 3.0 * q.P * q.P / 16.0;
    const double Q1 = q.P * q.P * q.P / 32.0 - q.P * q.Q / 8.0 + q.R / 4.0;
    q.Delta = (Q1 / 2.0) * (Q1 / 2.0) + (P1 / 3.0) * (P1 / 3.0) * (P1 / 3.0);
    const auto ys = detail::depressed_cubic_roots(P1, Q1);
    for (int i = 0; i < 3; ++i) q.z_candidates[i] = ys[i] - q.P / 4.0;

    std::vector<double> crit;
    for (const cplx& z : q.z_candidates)
        if (std::abs(z.imag()) < 1e-9 * (1.0 + std::abs(z))) crit.push_back(z.real());
    std::sort(crit.begin(), crit.end());

    // Lemma case analysis (z1 is the first resolvent root).
    const cplx z1 = q.z_candidates[0];
    const bool z1_real = std::abs(z1.imag()) < 1e-9 * (1.0 + std::abs(z1));
    if (q.S < 0.0) {
        q.case_a = true;
    } else if (q.Delta >= 0.0) {
        q.case_b = z1_real && z1.real() > 0.0 && q.h(z1.real()) <= 0.0;
    } else {
        for (const cplx& z : q.z_candidates)
            if (std::abs(z.imag()) < 1e-9 * (1.0 + std::abs(z)) && z.real() > 0.0 &&
                q.h(z.real()) <= 0.0)
                q.case_c = true;
    }

    // Positive roots: bisect between consecutive positive critical points,
    // then Newton-polish on h.
    double hi_bound = 1.0;
    for (double coef : {q.P, q.Q, q.R, q.S}) hi_bound = std::max(hi_bound, std::abs(coef));
    hi_bound = 1.0 + hi_bound;  // Cauchy bound for monic quartic

    std::vector<double> knots{0.0};
    for (double z : crit)
        if (z > 0.0 && z < hi_bound) knots.push_back(z);
    knots.push_back(hi_bound);

    const double scale = std::max(1.0, std::abs(q.S));
    for (size_t i = 0; i + 1 < knots.size(); ++i) {
        double lo = knots[i], hi = knots[i + 1];
        double flo = q.h(lo), fhi = q.h(hi);
        double root;
        if (flo == 0.0) root = lo;
        else if (flo * fhi < 0.0) {
            for (int it = 0; it < 80 && hi - lo > 1e-16 * (1.0 + lo); ++it) {
                const double mid = 0.5 * (lo + hi);
                if (flo * q.h(mid) <= 0.0) hi = mid; else { lo = mid; flo = q.h(lo); }
            }
            root = 0.5 * (lo + hi);
        } else continue;
        for (int it = 0; it < 8; ++it) {
            const double d = q.h_deriv(root);
            if (std::abs(d) < 1e-300) break;
            root -= q.h(root) / d;
        }
        if (root > 0.0 && std::abs(q.h(root)) <= 1e-9 * scale)
            q.positive_roots.push_back(root);
    }
    // Tangency: a critical point sitting on the axis counts as a (double) root.
    for (double z : crit)
        if (z > 0.0 && std::abs(q.h(z)) <= 1e-12 * scale &&
            std::none_of(q.positive_roots.begin(), q.positive_roots.end(),
                         [&](double r) { return std::abs(r - z) < 1e-7 * (1.0 + z); }))
            q.positive_roots.push_back(z);
    std::sort(q.positive_roots.begin(), q.positive_roots.end());
    return q;
}

// ---------------------------------------------------------------------------
// Hopf delay sequences

enum class HopfFlavor { TrivialAnalytic, NontrivialNumeric };

struct HopfPoint {
    double c = 0.0;
    double tau = 0.0;
    double omega = 0.0;  // crossing frequency, > 0
    int k = 0;           // root-branch index (1-based, roots ascending)
    int j = 0;           // delay-sequence index
    int crossing_sign = 0;  // sign of d(Re lambda)/d tau, = sign h'(z*_k)
    HopfFlavor flavor = HopfFlavor::TrivialAnalytic;
};

/// Hopf points of the trivial rest point for all root branches and delay
/// indices j = 0..j_max, sorted by tau. Empty when h has no positive roots
/// (or c = 0, where the delayed term vanishes).
inline std::vector<HopfPoint> hopf_delays(const Params& p, int j_max) {
    std::vector<HopfPoint> out;
    const auto [A, B, C, D, E] = char_coeffs(p);
    if (E <= 0.0) return out;
    const CharQuartic q = hopf_quartic(p);
    const double b1 = p.b1, b2 = p.b2;

    int k = 0;
    for (double z : q.positive_roots) {
        ++k;
        const double dh = q.h_deriv(z);
        if (dh == 0.0) continue;  // non-transversal double root, no crossing sign
        const double w = std::sqrt(z);
        const double den = E * ((b1 + b2) * (b1 + b2) * w * w + (z - b1 * b2) * (z - b1 * b2));
        const double re = z * z - B * z + D;   // omega^4 - B omega^2 + D
        const double im = A * w * z - C * w;   // A omega^3 - C omega
        const double astar = (re * (b1 + b2) * w + im * (b1 * b2 - z)) / den;
        const double bstar = (re * (b1 * b2 - z) - im * (b1 + b2) * w) / den;
        const double th = std::acos(std::clamp(bstar, -1.0, 1.0));
        const double th0 = astar >= 0.0 ? th : 2.0 * M_PI - th;
        for (int j = 0; j <= j_max; ++j) {
            HopfPoint hp;
            hp.c = p.c;
            hp.tau = (th0 + 2.0 * M_PI * j) / (2.0 * w);
            hp.omega = w;
            hp.k = k;
            hp.j = j;
            hp.crossing_sign = dh > 0.0 ? +1 : -1;
            // Newton polish of (tau, omega) on the characteristic equation;
            // near-tangent quartic roots otherwise leave residuals ~1e-7
            for (int it = 0; it < 4; ++it) {
                const Params pt = p.with_tau(hp.tau);
                const cplx lam(0.0, hp.omega);
                const cplx f = char_eval(pt, lam);
                if (std::abs(f) < 1e-13) break;
                const cplx ft = 2.0 * lam * E * (lam + b1) * (lam + b2) *
                                std::exp(-2.0 * hp.tau * lam);
                const cplx fw = char_deriv_at(pt, State{}, lam) * cplx(0.0, 1.0);
                const double det = ft.real() * fw.imag() - fw.real() * ft.imag();
                if (std::abs(det) < 1e-12) break;
                const double dtau = (f.real() * fw.imag() - fw.real() * f.imag()) / det;
                const double dome = (ft.real() * f.imag() - f.real() * ft.imag()) / det;
                if (std::abs(dtau) > 0.1 || std::abs(dome) > 0.1) break;
                hp.tau -= dtau;
                hp.omega -= dome;
            }
            if (hp.tau >= 0.0) out.push_back(hp);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const HopfPoint& x, const HopfPoint& y) { return x.tau < y.tau; });
    return out;
}

// ---------------------------------------------------------------------------
// Routh-Hurwitz conditions for the tau = 0 quartic

struct RouthHurwitz {
    std::array<bool, 4> flags{};
    std::array<double, 4> margins{};  // condition quantities, positive when satisfied
    bool ok = false;
};

/// The four (R-H) inequalities for the trivial rest point at tau = 0.
inline RouthHurwitz routh_hurwitz(const Params& p) {
    const auto [A, B, C, D, E] = char_coeffs(p);
    const double s = p.b1 + p.b2, m = p.b1 * p.b2;
    RouthHurwitz r;
    r.margins[0] = A;
    r.margins[1] = A * (B - E) - (C - E * s);
    r.margins[2] = D - E * m;
    r.margins[3] = (C - E * s) * (A * (B - E) - C + E * s) - A * A * (D - E * m);
    for (int i = 0; i < 4; ++i) r.flags[i] = r.margins[i] > 0.0;
    r.ok = r.flags[0] && r.flags[1] && r.flags[2] && r.flags[3];
    return r;
}

/// Coefficients of the tau = 0 characteristic quartic
/// lambda^4 + a1 lambda^3 + a2 lambda^2 + a3 lambda + a4.
inline std::array<double, 4> ode_limit_coeffs(const Params& p) {
    const auto [A, B, C, D, E] = char_coeffs(p);
    return {A, B - E, C - E * (p.b1 + p.b2), D - E * p.b1 * p.b2};
}

/// Smallest c > 0 at which the tau = 0 characteristic quartic acquires an
/// imaginary-axis root (bisection on the first failing R-H margin).
inline double ode_hopf_coupling(const Params& p, double c_max = 2.0) {
    const auto worst = [&](double c) {
        const RouthHurwitz r = routh_hurwitz(p.with_c(c));
        return std::min(std::min(r.margins[0], r.margins[1]),
                        std::min(r.margins[2], r.margins[3]));
    };
    const int n = 2000;
    double prev = worst(0.0);
    for (int i = 1; i <= n; ++i) {
        const double c = c_max * i / n;
        const double w = worst(c);
        if (prev > 0.0 && w <= 0.0) {
            double lo = c_max * (i - 1) / n, hi = c;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (worst(mid) > 0.0) lo = mid; else hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev = w;
    }
    throw ConvergenceError("ode_hopf_coupling: no R-H boundary in (0, c_max]");
}

// ---------------------------------------------------------------------------
// Stability classification of the trivial rest point

enum class TrivialStabilityKind { StableAllTau, StableUpTo, UnstableAtTauZero };

struct TrivialStability {
    TrivialStabilityKind kind;
    double tau0 = std::numeric_limits<double>::quiet_NaN();
    RouthHurwitz rh;
    CharQuartic quartic;
};

inline TrivialStability trivial_stability(const Params& p) {
    TrivialStability ts{TrivialStabilityKind::StableAllTau, {}, routh_hurwitz(p), hopf_quartic(p)};
    if (!ts.rh.ok) {
        ts.kind = TrivialStabilityKind::UnstableAtTauZero;
        return ts;
    }
    if (ts.quartic.has_positive_root() && !ts.quartic.positive_roots.empty()) {
        ts.kind = TrivialStabilityKind::StableUpTo;
        const auto pts = hopf_delays(p, 0);
        ts.tau0 = pts.empty() ? std::numeric_limits<double>::infinity() : pts.front().tau;
    }
    return ts;
}

// ---------------------------------------------------------------------------
// Pitchfork and Hopf-pitchfork

struct PitchforkCoupling {
    std::optional<double> c;  // empty when no zero-eigenvalue coupling exists
    bool degenerate = false;  // c = 0 edge case
};

/// Coupling strength at which the trivial rest point has a zero eigenvalue
/// (independent of tau): c^2 = D / (b1 b2).
inline PitchforkCoupling pitchfork_coupling(const Params& p) {
    const double num = detail::coeff_D(p);
    if (num < 0.0) return {std::nullopt, false};
    if (num == 0.0) return {0.0, true};
    return {std::sqrt(num / (p.b1 * p.b2)), false};
}

struct HopfPitchforkPoint {
    double c;
    double tau;
    double d2p_at_zero;  // second lambda-derivative of P at 0; nonzero keeps lambda=0 a double root
};

/// Codimension-2 point where lambda = 0 becomes a double root: c at the
/// pitchfork value and tau from dP/dlambda|_0 = 0, which gives
/// tau = (c^2 (b1+b2) - C) / (2 c^2 b1 b2).
inline HopfPitchforkPoint hopf_pitchfork_point(const Params& p) {
    const auto pc = pitchfork_coupling(p);
    if (!pc.c || *pc.c <= 0.0)
        throw std::invalid_argument("hopf_pitchfork_point: no pitchfork for these parameters");
    const auto [A, B, C, D, E0] = char_coeffs(p);
    const double c = *pc.c, E = c * c;
    const double s = p.b1 + p.b2, m = p.b1 * p.b2;
    const double tau = (E * s - C) / (2.0 * E * m);
    const double d2p = m * (1.0 - 2.0 * E * tau * tau) + p.a * p.a - E + 2.0 +
                       s * (2.0 * tau * E - 2.0 * p.a);
    return {c, tau, d2p};
}

// ---------------------------------------------------------------------------
// Synchrony prediction from the critical eigenvector

enum class SyncClass { AlmostSynchronized, AlmostAntiPhase, Other };

struct MixedModeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Predicts the oscillation mode at a Hopf point (omega, tau_j) of the trivial
/// rest point from the quadrants of the critical eigenvector components:
/// u1 = (b1 + i w) u2, u3 = e^{i w tau} (1 - (a - i w)(b1 + i w)) u2 / c.
/// Phase gaps inside (pi/4, 3pi/4) are refused as mixed-mode.
inline SyncClass sync_mode_predictor(const Params& p, const HopfPoint& hp) {
    const cplx iw(0.0, hp.omega);
    const cplx u1 = p.b1 + iw;  // with u2 = 1
    const cplx u3 = std::exp(iw * hp.tau) *
                    (1.0 - (p.a - iw) * (p.b1 + iw)) / p.c;
    double d = std::abs(std::arg(u1) - std::arg(u3));
    if (d > M_PI) d = 2.0 * M_PI - d;
    if (d <= M_PI / 4.0) return SyncClass::AlmostSynchronized;
    if (d >= 3.0 * M_PI / 4.0) return SyncClass::AlmostAntiPhase;
    throw MixedModeError("sync_mode_predictor: eigenvector phases in the ambiguous band");
}

}  // namespace fhn
