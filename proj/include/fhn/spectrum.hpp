#pragma once

// Rightmost characteristic roots of the linearized DDE at a rest point.
//
// The infinitesimal generator of the solution semigroup is discretized by
// polynomial collocation on Chebyshev points over [-tau, 0] (Breda-style);
// eigenvalues of the resulting finite matrix seed a Newton polish against the
// exact characteristic function, so the reported rightmost roots carry
// characteristic residuals near round-off rather than discretization error.

#include <vector>

#include <Eigen/Dense>

#include "fhn/chareq.hpp"
#include "fhn/model.hpp"

namespace fhn {

struct SpectrumEigenvalue {
    cplx lambda;
    int multiplicity = 1;
    bool converged = true;  // false when the Newton polish failed; raw value kept
    double residual = 0.0;  // |char function| after polish
};

struct SpectrumApprox {
    std::vector<SpectrumEigenvalue> eigenvalues;  // sorted by descending real part
    int discretization_order = 0;
    double rightmost_residual = 0.0;

    /// Morse index: eigenvalues with positive real part, with multiplicity.
    int unstable_count() const {
        int n = 0;
        for (const auto& e : eigenvalues)
            if (e.lambda.real() > 0.0) n += e.multiplicity;
        return n;
    }
    double rightmost_real() const {
        return eigenvalues.empty() ? -std::numeric_limits<double>::infinity()
                                   : eigenvalues.front().lambda.real();
    }
};

namespace detail {

// Trefethen's Chebyshev differentiation matrix on x_j = cos(j pi / N).
inline Eigen::MatrixXd cheb_diff(int N) {
    Eigen::MatrixXd D(N + 1, N + 1);
    Eigen::VectorXd x(N + 1), c(N + 1);
    for (int j = 0; j <= N; ++j) {
        x[j] = std::cos(M_PI * j / N);
        c[j] = (j == 0 || j == N) ? 2.0 : 1.0;
        if (j % 2 == 1) c[j] = -c[j];
    }
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            if (i != j) D(i, j) = (c[i] / c[j]) / (x[i] - x[j]);
    for (int i = 0; i <= N; ++i) {
        double s = 0.0;
        for (int j = 0; j <= N; ++j)
            if (j != i) s += D(i, j);
        D(i, i) = -s;  // negative sum trick
    }
    return D;
}

inline std::vector<cplx> collocation_eigens(const Params& p, const State& rest, int N) {
    const auto jp = jacobian_blocks(p, rest);
    if (p.tau == 0.0) {
        Eigen::EigenSolver<Eigen::Matrix4d> es(jp.now + jp.delayed);
        std::vector<cplx> out;
        for (int i = 0; i < 4; ++i) out.push_back(es.eigenvalues()[i]);
        return out;
    }
    // Nodes theta_j = (x_j - 1) tau / 2 in [0, -tau]; theta_0 = 0, theta_N = -tau.
    const Eigen::MatrixXd D = cheb_diff(N) * (2.0 / p.tau);
    const int n = 4 * (N + 1);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    M.block(0, 0, 4, 4) = jp.now;
    M.block(0, 4 * N, 4, 4) += jp.delayed;
    for (int i = 1; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            for (int q = 0; q < 4; ++q) M(4 * i + q, 4 * j + q) = D(i, j);
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    std::vector<cplx> out(n);
    for (int i = 0; i < n; ++i) out[i] = es.eigenvalues()[i];
    return out;
}

}  // namespace detail

/// Spectrum of the linearization at `rest` with the rightmost part polished
/// against the characteristic function. Candidates with Re > -1 are polished;
/// failures are flagged rather than dropped. The discretization order doubles
/// until the rightmost eigenvalue settles to 1e-7.
inline SpectrumApprox rightmost_spectrum(const Params& p, const State& rest, int order = 32) {
    if (order < 8) throw std::invalid_argument("rightmost_spectrum: order must be >= 8");

    const auto polish = [&](cplx lam, SpectrumEigenvalue& out) {
        cplx z = lam;
        for (int it = 0; it < 50; ++it) {
            const cplx f = char_eval_at(p, rest, z);
            const cplx df = char_deriv_at(p, rest, z);
            if (std::abs(df) < 1e-300) break;
            const cplx step = f / df;
            z -= step;
            if (std::abs(step) < 1e-14 * (1.0 + std::abs(z))) break;
        }
        const double scale = std::pow(1.0 + std::abs(z), 4);
        const double res = std::abs(char_eval_at(p, rest, z));
        out.residual = res;
        if (std::isfinite(z.real()) && res <= 1e-9 * scale) {
            out.lambda = z;
            out.converged = true;
        } else {
            out.lambda = lam;  // keep raw collocation value, flagged
            out.converged = false;
            out.residual = std::abs(char_eval_at(p, rest, lam));
        }
    };

    const auto compute = [&](int N) {
        SpectrumApprox sp;
        sp.discretization_order = N;
        std::vector<SpectrumEigenvalue> evs;
        for (const cplx& lam : detail::collocation_eigens(p, rest, N)) {
            if (lam.real() <= -1.0) continue;
            SpectrumEigenvalue e;
            polish(lam, e);
            evs.push_back(e);
        }
        // Merge eigenvalues that polished to the same root.
        std::sort(evs.begin(), evs.end(), [](const auto& a, const auto& b) {
            if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
            return a.lambda.imag() > b.lambda.imag();
        });
        for (const auto& e : evs) {
            bool merged = false;
            for (auto& f : sp.eigenvalues) {
                if (e.converged && f.converged && std::abs(e.lambda - f.lambda) < 1e-6) {
                    ++f.multiplicity;
                    merged = true;
                    break;
                }
            }
            if (!merged) sp.eigenvalues.push_back(e);
        }
        if (!sp.eigenvalues.empty()) sp.rightmost_residual = sp.eigenvalues.front().residual;
        return sp;
    };

    SpectrumApprox sp = compute(order);
    if (p.tau == 0.0) return sp;
    for (int N = 2 * order; N <= 8 * order && N <= 512; N *= 2) {
        SpectrumApprox sp2 = compute(N);
        const bool settled = !sp.eigenvalues.empty() && !sp2.eigenvalues.empty() &&
                             std::abs(sp.rightmost_real() - sp2.rightmost_real()) < 1e-7 &&
                             sp.unstable_count() == sp2.unstable_count();
        sp = std::move(sp2);
        if (settled) break;
    }
    return sp;
}

inline SpectrumApprox rightmost_spectrum(const Params& p, const RestPoint& rp, int order = 32) {
    return rightmost_spectrum(p, rp.state, order);
}

}  // namespace fhn
