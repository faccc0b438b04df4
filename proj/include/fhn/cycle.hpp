#pragma once

// Periodic orbits as boundary-value problems.
//
// A cycle is stored as a piecewise-polynomial profile y(s) on [0, 1] (degree-d
// Lagrange pieces on M mesh intervals, periodically closed) together with its
// period T. Collocation at Gauss points of the period-rescaled equation
//
//   y'(s) = T f(y(s), y((s - tau/T) mod 1))
//
// plus an integral phase condition yields a square Newton system, solved with
// a sparse LU. The delay wraps around the profile as often as needed, so
// tau > T is fine. Unstable cycles are reached from Hopf-eigenvector seeds or
// by continuation; Floquet multipliers come from evolving a discretized
// history basis over one period with the variational method of steps.

#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "fhn/chareq.hpp"
#include "fhn/model.hpp"
#include "fhn/orbit.hpp"
#include "fhn/sim.hpp"
#include "fhn/spectrum.hpp"

namespace fhn {

namespace detail {

struct BasisTable {
    int degree;
    std::vector<double> nodes;    // d+1 equispaced representation nodes on [0,1]
    std::vector<double> gauss;    // d Gauss-Legendre collocation points on (0,1)
    std::vector<double> weights;  // matching quadrature weights (sum 1)
    // basis values/derivatives at each collocation point, [m][l]
    std::vector<std::vector<double>> bv, bd;
};

inline void lagrange_basis(const std::vector<double>& xs, double u, std::vector<double>& val,
                           std::vector<double>& der) {
    const int n = static_cast<int>(xs.size());
    val.assign(n, 0.0);
    der.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double denom = 1.0;
        for (int m = 0; m < n; ++m)
            if (m != j) denom *= xs[j] - xs[m];
        double num = 1.0;
        for (int m = 0; m < n; ++m)
            if (m != j) num *= u - xs[m];
        val[j] = num / denom;
        double dsum = 0.0;
        for (int k = 0; k < n; ++k) {
            if (k == j) continue;
            double prod = 1.0;
            for (int m = 0; m < n; ++m)
                if (m != j && m != k) prod *= u - xs[m];
            dsum += prod;
        }
        der[j] = dsum / denom;
    }
}

inline const BasisTable& basis_table(int degree) {
    static std::vector<BasisTable> cache;
    for (const auto& bt : cache)
        if (bt.degree == degree) return bt;

    BasisTable bt;
    bt.degree = degree;
    for (int l = 0; l <= degree; ++l) bt.nodes.push_back(static_cast<double>(l) / degree);

    // Gauss-Legendre on (-1,1) by Newton on P_d, mapped to (0,1).
    for (int i = 0; i < degree; ++i) {
        double x = std::cos(M_PI * (4.0 * i + 3.0) / (4.0 * degree + 2.0));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= degree; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = degree * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= degree; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = degree * (x * p1 - p0) / (x * x - 1.0);
        bt.gauss.push_back(0.5 * (x + 1.0));
        bt.weights.push_back(1.0 / ((1.0 - x * x) * dp * dp));
    }
    std::sort(bt.gauss.begin(), bt.gauss.end());
    // weights re-derived in sorted order
    {
        std::vector<double> w(degree);
        for (int i = 0; i < degree; ++i) {
            const double x = 2.0 * bt.gauss[i] - 1.0;
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= degree; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = degree * (x * p1 - p0) / (x * x - 1.0);
            w[i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        bt.weights = w;
    }

    bt.bv.resize(degree);
    bt.bd.resize(degree);
    for (int m = 0; m < degree; ++m) lagrange_basis(bt.nodes, bt.gauss[m], bt.bv[m], bt.bd[m]);

    cache.push_back(std::move(bt));
    return cache.back();
}

}  // namespace detail

/// Periodic profile as collocation data: M mesh intervals, degree-d Lagrange
/// pieces through M*d distinct nodes (the profile is closed by construction,
/// profile(0) == profile(1)).
struct CycleBVP {
    int n_intervals = 0;
    int degree = 4;
    std::vector<double> mesh;    // M+1 breakpoints, mesh[0]=0, mesh[M]=1
    std::vector<State> profile;  // M*degree node values
    double T = 0.0;
    Params params;
    double residual = 0.0;
    double phase_anchor = 0.0;  // value of the integral phase condition
    bool converged = false;

    int n_nodes() const { return n_intervals * degree; }

    double node_s(int g) const {
        const int i = g / degree, l = g % degree;
        return mesh[i] + (mesh[i + 1] - mesh[i]) * l / degree;
    }

    int interval_of(double s) const {
        const auto it = std::upper_bound(mesh.begin(), mesh.end(), s);
        int i = static_cast<int>(it - mesh.begin()) - 1;
        return std::clamp(i, 0, n_intervals - 1);
    }

    State eval(double s) const {
        State out{};
        double sw = s - std::floor(s);
        const int i = interval_of(sw);
        const double u = (sw - mesh[i]) / (mesh[i + 1] - mesh[i]);
        const auto& bt = detail::basis_table(degree);
        std::vector<double> val, der;
        detail::lagrange_basis(bt.nodes, u, val, der);
        for (int l = 0; l <= degree; ++l)
            out += profile[(i * degree + l) % n_nodes()] * val[l];
        return out;
    }

    State deriv(double s) const {  // d/ds
        State out{};
        double sw = s - std::floor(s);
        const int i = interval_of(sw);
        const double dd = mesh[i + 1] - mesh[i];
        const double u = (sw - mesh[i]) / dd;
        const auto& bt = detail::basis_table(degree);
        std::vector<double> val, der;
        detail::lagrange_basis(bt.nodes, u, val, der);
        for (int l = 0; l <= degree; ++l)
            out += profile[(i * degree + l) % n_nodes()] * (der[l] / dd);
        return out;
    }

    std::array<double, 4> amplitude(int samples = 512) const {
        std::array<double, 4> lo{}, hi{};
        for (int k = 0; k <= samples; ++k) {
            const State s = eval(static_cast<double>(k) / samples);
            for (int q = 0; q < 4; ++q) {
                if (k == 0) lo[q] = hi[q] = s[q];
                lo[q] = std::min(lo[q], s[q]);
                hi[q] = std::max(hi[q], s[q]);
            }
        }
        std::array<double, 4> amp{};
        for (int q = 0; q < 4; ++q) amp[q] = hi[q] - lo[q];
        return amp;
    }

    double max_amplitude() const {
        const auto a = amplitude();
        return *std::max_element(a.begin(), a.end());
    }

    State mean_state(int samples = 256) const {
        State m{};
        for (int k = 0; k < samples; ++k) m += eval(static_cast<double>(k) / samples);
        return m * (1.0 / samples);
    }

    /// Distance to the antipodal image with half-period shift, relative to the
    /// amplitude; ~0 for symmetric cycles (y(s + 1/2) = -y(s)).
    double symmetry_indicator(int samples = 256) const {
        double worst = 0.0;
        for (int k = 0; k < samples; ++k) {
            const double s = static_cast<double>(k) / samples;
            worst = std::max(worst, (eval(s + 0.5) + eval(s)).max_abs());
        }
        return worst / std::max(max_amplitude(), 1e-12);
    }

    /// Antipodal image (same period, negated profile) for Z2 pairing checks.
    CycleBVP antipodal() const {
        CycleBVP q = *this;
        for (State& s : q.profile) s = -s;
        return q;
    }
};

enum class CycleSolveStatus { Converged, NoConvergence, PeriodCollapse };

struct CycleSolveResult {
    CycleSolveStatus status = CycleSolveStatus::NoConvergence;
    CycleBVP cycle;
    int iterations = 0;
    double residual = 0.0;
};

enum class ContParam { C, Tau };

namespace detail {

// Sparse Newton system for the periodic collocation equations. Unknowns are
// the profile nodes and T, plus (optionally) a continuation parameter with a
// caller-supplied closing row.
class CycleSystem {
public:
    CycleSystem(const Params& p, const CycleBVP& shape)
        : p_(p), M_(shape.n_intervals), d_(shape.degree), mesh_(shape.mesh),
          bt_(basis_table(shape.degree)) {}

    int n_nodes() const { return M_ * d_; }
    int n_profile() const { return 4 * n_nodes(); }

    // reference derivative for the phase condition, sampled at collocation pts
    void set_reference(const CycleBVP& ref) {
        ref_d_.clear();
        ref_d_.reserve(M_ * d_);
        for (int i = 0; i < M_; ++i)
            for (int m = 0; m < d_; ++m) {
                const double s = mesh_[i] + (mesh_[i + 1] - mesh_[i]) * bt_.gauss[m];
                ref_d_.push_back(ref.deriv(s));
            }
    }

    // Assemble residual and Jacobian triplets for the collocation block and
    // the phase row. `param` adds d(residual)/d(param) entries in column
    // n_profile()+1.
    void assemble(const std::vector<State>& Y, double T,
                  std::optional<ContParam> param, Eigen::VectorXd& r,
                  std::vector<Eigen::Triplet<double>>& trip) const {
        const int np = n_profile();
        const int n_rows = np + 1;
        r.setZero(n_rows);
        trip.clear();
        trip.reserve(static_cast<std::size_t>(np) * (2 * (d_ + 1) + 2) * 4);

        std::vector<double> wval, wder;
        const Params pp = p_;
        const double tau_frac = pp.tau / T;

        double phase = 0.0;
        int row0 = 0;
        for (int i = 0; i < M_; ++i) {
            const double dd = mesh_[i + 1] - mesh_[i];
            for (int m = 0; m < d_; ++m, row0 += 4) {
                const double s = mesh_[i] + dd * bt_.gauss[m];
                // y, y' at the collocation point from the local basis
                State yc{}, ydc{};
                for (int l = 0; l <= d_; ++l) {
                    const State& yn = Y[(i * d_ + l) % n_nodes()];
                    yc += yn * bt_.bv[m][l];
                    ydc += yn * (bt_.bd[m][l] / dd);
                }
                // wrapped delay point
                double sw = s - tau_frac;
                sw -= std::floor(sw);
                const int iw = interval_of(sw);
                const double ddw = mesh_[iw + 1] - mesh_[iw];
                const double uw = (sw - mesh_[iw]) / ddw;
                lagrange_basis(bt_.nodes, uw, wval, wder);
                State yw{}, ydw{};
                for (int l = 0; l <= d_; ++l) {
                    const State& yn = Y[(iw * d_ + l) % n_nodes()];
                    yw += yn * wval[l];
                    ydw += yn * (wder[l] / ddw);
                }

                const State f = rhs(pp, yc, yw);
                const State res = ydc - f * T;
                for (int q = 0; q < 4; ++q) r[row0 + q] = res[q];

                const Eigen::Matrix4d Jn = jacobian_blocks(pp, yc).now;
                const Eigen::Matrix4d Jd = jacobian_blocks(pp, yw).delayed;

                for (int l = 0; l <= d_; ++l) {
                    const int gc = (i * d_ + l) % n_nodes();
                    const double bv = bt_.bv[m][l], bd = bt_.bd[m][l] / dd;
                    for (int q = 0; q < 4; ++q) {
                        trip.emplace_back(row0 + q, 4 * gc + q, bd);
                        for (int qq = 0; qq < 4; ++qq)
                            if (Jn(q, qq) != 0.0)
                                trip.emplace_back(row0 + q, 4 * gc + qq, -T * Jn(q, qq) * bv);
                    }
                }
                for (int l = 0; l <= d_; ++l) {
                    const int gw = (iw * d_ + l) % n_nodes();
                    for (int q = 0; q < 4; ++q)
                        for (int qq = 0; qq < 4; ++qq)
                            if (Jd(q, qq) != 0.0)
                                trip.emplace_back(row0 + q, 4 * gw + qq,
                                                  -T * Jd(q, qq) * wval[l]);
                }
                // d/dT: -f - (tau/T) Jd y'(sw)
                const Eigen::Vector4d jdw = Jd * ydw.vec();
                for (int q = 0; q < 4; ++q)
                    trip.emplace_back(row0 + q, np, -f[q] - tau_frac * jdw[q]);

                if (param) {
                    Eigen::Vector4d dfp = Eigen::Vector4d::Zero();
                    if (*param == ContParam::C) {
                        dfp[0] = -T * std::tanh(yw.v2);
                        dfp[2] = -T * std::tanh(yw.v1);
                    } else {
                        dfp = jdw;  // d/dtau = Jd y'(sw)
                    }
                    for (int q = 0; q < 4; ++q)
                        if (dfp[q] != 0.0) trip.emplace_back(row0 + q, np + 1, dfp[q]);
                }

                // phase condition: integral of <y, ref'> with Gauss weights
                const State& rd = ref_d_[i * d_ + m];
                const double wq = dd * bt_.weights[m];
                for (int q = 0; q < 4; ++q) phase += wq * yc[q] * rd[q];
                for (int l = 0; l <= d_; ++l) {
                    const int gc = (i * d_ + l) % n_nodes();
                    for (int q = 0; q < 4; ++q)
                        trip.emplace_back(np, 4 * gc + q, wq * rd[q] * bt_.bv[m][l]);
                }
            }
        }
        r[np] = phase;
    }

    int interval_of(double s) const {
        const auto it = std::upper_bound(mesh_.begin(), mesh_.end(), s);
        return std::clamp(static_cast<int>(it - mesh_.begin()) - 1, 0, M_ - 1);
    }

    const Params& params() const { return p_; }
    void set_param(double value, ContParam which) {
        if (which == ContParam::C) p_.c = value; else p_.tau = value;
    }

private:
    Params p_;
    int M_, d_;
    std::vector<double> mesh_;
    const BasisTable& bt_;
    std::vector<State> ref_d_;
};

}  // namespace detail

struct CycleSolveOptions {
    int max_iterations = 30;
    double tol_residual = 1e-9;  // max-norm, scaled by max(1, T)
    double tol_step = 1e-9;
    double period_floor = 1e-3;
};

/// Newton solve of the periodic collocation system at fixed parameters,
/// starting from `seed` (its profile, period, mesh and degree). The phase
/// condition anchors the solution to the seed's time parametrization.
inline CycleSolveResult solve_cycle_bvp(const Params& p, const CycleBVP& seed,
                                        const CycleSolveOptions& opt = {}) {
    CycleSolveResult out;
    detail::CycleSystem sys(p, seed);
    sys.set_reference(seed);

    std::vector<State> Y = seed.profile;
    double T = seed.T;
    const int np = sys.n_profile();
    const int n = np + 1;

    Eigen::VectorXd r;
    std::vector<Eigen::Triplet<double>> trip;
    double rnorm = std::numeric_limits<double>::infinity();

    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it + 1;
        sys.assemble(Y, T, std::nullopt, r, trip);
        rnorm = r.cwiseAbs().maxCoeff();
        if (!std::isfinite(rnorm)) return out;

        Eigen::SparseMatrix<double> J(n, n);
        J.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) return out;
        const Eigen::VectorXd dx = lu.solve(r);
        if (!dx.allFinite()) return out;

        double damp = 1.0;
        const auto try_apply = [&](double a) {
            std::vector<State> Y2 = Y;
            for (int g = 0; g < sys.n_nodes(); ++g)
                for (int q = 0; q < 4; ++q) Y2[g][q] -= a * dx[4 * g + q];
            return std::pair(Y2, T - a * dx[np]);
        };
        auto [Y2, T2] = try_apply(damp);
        for (int bt = 0; bt < 4; ++bt) {
            Eigen::VectorXd r2;
            std::vector<Eigen::Triplet<double>> t2;
            detail::CycleSystem probe(p, seed);
            probe.set_reference(seed);
            if (T2 > opt.period_floor) {
                probe.assemble(Y2, T2, std::nullopt, r2, t2);
                const double rn2 = r2.cwiseAbs().maxCoeff();
                if (std::isfinite(rn2) && (rn2 < rnorm || rnorm < opt.tol_residual)) break;
            }
            damp *= 0.5;
            std::tie(Y2, T2) = try_apply(damp);
        }
        Y = std::move(Y2);
        T = T2;
        if (T < opt.period_floor) {
            out.status = CycleSolveStatus::PeriodCollapse;
            return out;
        }
        const double step = dx.cwiseAbs().maxCoeff() * damp;
        if (rnorm <= opt.tol_residual * std::max(1.0, T) && step <= opt.tol_step) break;
    }

    sys.assemble(Y, T, std::nullopt, r, trip);
    rnorm = r.segment(0, np).cwiseAbs().maxCoeff();
    if (rnorm > 1e-8 * std::max(1.0, T)) return out;

    out.cycle = seed;
    out.cycle.profile = std::move(Y);
    out.cycle.T = T;
    out.cycle.params = p;
    out.cycle.residual = rnorm;
    out.cycle.phase_anchor = r[np];
    out.cycle.converged = true;
    out.residual = rnorm;
    out.status = CycleSolveStatus::Converged;
    return out;
}

/// One extra scalar equation closing a bordered system in the unknowns
/// [profile nodes..., T, mu]: returns the residual and fills the gradient.
using BorderRow = std::function<double(const std::vector<State>& Y, double T, double mu,
                                       Eigen::VectorXd& grad)>;

struct BorderedResult {
    CycleSolveStatus status = CycleSolveStatus::NoConvergence;
    CycleBVP cycle;
    double mu = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

/// Newton solve of the collocation system with the continuation parameter
/// free and one caller-supplied closing row (arclength normalization or an
/// amplitude pin). `phase_ref` fixes the time parametrization.
inline BorderedResult solve_cycle_bordered(const Params& base, ContParam which,
                                           const CycleBVP& seed, double mu0,
                                           const CycleBVP& phase_ref, const BorderRow& row,
                                           const CycleSolveOptions& opt = {}) {
    BorderedResult out;
    detail::CycleSystem sys(base, seed);
    sys.set_reference(phase_ref);

    std::vector<State> Y = seed.profile;
    double T = seed.T;
    double mu = mu0;
    const int np = sys.n_profile();
    const int n = np + 2;

    Eigen::VectorXd r, grad;
    std::vector<Eigen::Triplet<double>> trip;

    const auto full_residual = [&](const std::vector<State>& Yv, double Tv, double muv,
                                   Eigen::VectorXd& rv,
                                   std::vector<Eigen::Triplet<double>>* tv) {
        sys.set_param(muv, which);
        Eigen::VectorXd rc;
        std::vector<Eigen::Triplet<double>> tc;
        sys.assemble(Yv, Tv, which, rc, tc);
        rv.resize(n);
        rv.head(np + 1) = rc;
        grad.setZero(n);
        rv[np + 1] = row(Yv, Tv, muv, grad);
        if (tv) {
            *tv = std::move(tc);
            for (int j = 0; j < n; ++j)
                if (grad[j] != 0.0) tv->emplace_back(np + 1, j, grad[j]);
        }
    };

    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it + 1;
        full_residual(Y, T, mu, r, &trip);
        const double rnorm = r.cwiseAbs().maxCoeff();
        if (!std::isfinite(rnorm)) return out;

        Eigen::SparseMatrix<double> J(n, n);
        J.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) return out;
        const Eigen::VectorXd dx = lu.solve(r);
        if (!dx.allFinite()) return out;

        double damp = 1.0;
        std::vector<State> Y2;
        double T2 = T, mu2 = mu;
        for (int bt = 0; bt < 5; ++bt) {
            Y2 = Y;
            for (int g = 0; g < sys.n_nodes(); ++g)
                for (int q = 0; q < 4; ++q) Y2[g][q] -= damp * dx[4 * g + q];
            T2 = T - damp * dx[np];
            mu2 = mu - damp * dx[np + 1];
            if (T2 > opt.period_floor) {
                Eigen::VectorXd r2;
                full_residual(Y2, T2, mu2, r2, nullptr);
                const double rn2 = r2.cwiseAbs().maxCoeff();
                if (std::isfinite(rn2) && (rn2 < rnorm || rnorm < opt.tol_residual)) break;
            }
            damp *= 0.5;
        }
        Y = std::move(Y2);
        T = T2;
        mu = mu2;
        if (T < opt.period_floor) {
            out.status = CycleSolveStatus::PeriodCollapse;
            return out;
        }
        if (rnorm <= opt.tol_residual * std::max(1.0, T) &&
            damp * dx.cwiseAbs().maxCoeff() <= opt.tol_step)
            break;
    }

    full_residual(Y, T, mu, r, nullptr);
    const double rnorm = r.head(np).cwiseAbs().maxCoeff();
    if (rnorm > 1e-8 * std::max(1.0, T)) return out;

    out.cycle = seed;
    out.cycle.profile = std::move(Y);
    out.cycle.T = T;
    out.cycle.params = base;
    if (which == ContParam::C) out.cycle.params.c = mu; else out.cycle.params.tau = mu;
    out.cycle.residual = rnorm;
    out.cycle.phase_anchor = r[np];
    out.cycle.converged = true;
    out.mu = mu;
    out.residual = rnorm;
    out.status = CycleSolveStatus::Converged;
    return out;
}

/// Closing row pinning the L2 amplitude of v1: integral (v1 - mean)^2 = A^2.
/// Used to walk onto small sub/super-critical cycles near a Hopf point with
/// the parameter left free.
inline BorderRow amplitude_pin_row(const CycleBVP& shape, double A_target) {
    const int M = shape.n_intervals, d = shape.degree;
    const auto mesh = shape.mesh;
    return [M, d, mesh, A_target](const std::vector<State>& Y, double, double,
                                  Eigen::VectorXd& grad) -> double {
        const auto& bt = detail::basis_table(d);
        const int nn = M * d;
        double I1 = 0.0, I2 = 0.0;  // integral of v1 and v1^2
        for (int i = 0; i < M; ++i) {
            const double dd = mesh[i + 1] - mesh[i];
            for (int m = 0; m < d; ++m) {
                double v = 0.0;
                for (int l = 0; l <= d; ++l) v += Y[(i * d + l) % nn].v1 * bt.bv[m][l];
                I1 += dd * bt.weights[m] * v;
                I2 += dd * bt.weights[m] * v * v;
            }
        }
        for (int i = 0; i < M; ++i) {
            const double dd = mesh[i + 1] - mesh[i];
            for (int m = 0; m < d; ++m) {
                double v = 0.0;
                for (int l = 0; l <= d; ++l) v += Y[(i * d + l) % nn].v1 * bt.bv[m][l];
                for (int l = 0; l <= d; ++l) {
                    const int g = (i * d + l) % nn;
                    grad[4 * g] += dd * bt.weights[m] * bt.bv[m][l] * 2.0 * (v - I1);
                }
            }
        }
        return I2 - I1 * I1 - A_target * A_target;
    };
}

/// Equidistributes the mesh against a curvature monitor and resamples the
/// profile; used when continuation stretches the cycle (long-period passages
/// near a saddle need their intervals concentrated at the fast excursions).
inline CycleBVP remesh_cycle(const CycleBVP& cycle, int M_new) {
    const int F = 6 * cycle.n_intervals;  // sampling resolution for the monitor
    std::vector<double> s(F + 1), rho(F + 1);
    for (int k = 0; k <= F; ++k) s[k] = static_cast<double>(k) / F;
    // |y''| by differencing the profile derivative
    double mean = 0.0;
    std::vector<double> curv(F + 1);
    for (int k = 0; k <= F; ++k) {
        const double h = 0.5 / F;
        const State d1 = cycle.deriv(s[k] - h), d2 = cycle.deriv(s[k] + h);
        curv[k] = (d2 - d1).max_abs() / (2.0 * h);
        mean += curv[k];
    }
    mean /= F + 1;
    for (int k = 0; k <= F; ++k) rho[k] = std::sqrt(0.05 * mean + curv[k]);

    std::vector<double> cum(F + 1, 0.0);
    for (int k = 1; k <= F; ++k) cum[k] = cum[k - 1] + 0.5 * (rho[k] + rho[k - 1]) * (s[k] - s[k - 1]);

    CycleBVP out = cycle;
    out.n_intervals = M_new;
    out.mesh.assign(M_new + 1, 0.0);
    out.mesh[M_new] = 1.0;
    int k = 0;
    for (int i = 1; i < M_new; ++i) {
        const double target = cum[F] * i / M_new;
        while (k < F && cum[k + 1] < target) ++k;
        const double w = (target - cum[k]) / std::max(cum[k + 1] - cum[k], 1e-300);
        out.mesh[i] = s[k] + w * (s[k + 1] - s[k]);
    }
    // guard strictly increasing
    for (int i = 1; i <= M_new; ++i)
        out.mesh[i] = std::max(out.mesh[i], out.mesh[i - 1] + 1e-9);
    out.mesh[M_new] = 1.0;

    out.profile.resize(out.n_nodes());
    for (int g = 0; g < out.n_nodes(); ++g) out.profile[g] = cycle.eval(out.node_s(g));
    return out;
}

/// Seed a cycle from one period of a simulated trajectory.
inline CycleBVP cycle_seed_from_trajectory(const Params& p, const HistoryTrajectory& traj,
                                           double T, double t_last, int M = 40, int degree = 4) {
    CycleBVP c;
    c.n_intervals = M;
    c.degree = degree;
    c.params = p;
    c.T = T;
    c.mesh.resize(M + 1);
    for (int i = 0; i <= M; ++i) c.mesh[i] = static_cast<double>(i) / M;
    c.profile.resize(c.n_nodes());
    for (int g = 0; g < c.n_nodes(); ++g) {
        const double s = static_cast<double>(g) / c.n_nodes();
        c.profile[g] = traj.sample(t_last - T + s * T);
    }
    return c;
}

/// Seed a small-amplitude cycle from the critical eigenvector at a Hopf point
/// of `rest`: y(s) = rest + eps Re(u e^{2 pi i s}), T = 2 pi / omega.
inline CycleBVP cycle_seed_from_hopf(const Params& p, const State& rest, double omega,
                                     double eps, int M = 40, int degree = 4) {
    // critical eigenvector: null vector of lambda I - J0 - Jd e^{-lambda tau}
    const auto jp = jacobian_blocks(p, rest);
    const cplx lam(0.0, omega);
    Eigen::Matrix4cd A = lam * Eigen::Matrix4cd::Identity();
    A -= jp.now.cast<cplx>();
    A -= jp.delayed.cast<cplx>() * std::exp(-lam * p.tau);
    Eigen::JacobiSVD<Eigen::Matrix4cd> svd(A, Eigen::ComputeFullV);
    const Eigen::Vector4cd u = svd.matrixV().col(3);

    CycleBVP c;
    c.n_intervals = M;
    c.degree = degree;
    c.params = p;
    c.T = 2.0 * M_PI / omega;
    c.mesh.resize(M + 1);
    for (int i = 0; i <= M; ++i) c.mesh[i] = static_cast<double>(i) / M;
    c.profile.resize(c.n_nodes());
    for (int g = 0; g < c.n_nodes(); ++g) {
        const double s = static_cast<double>(g) / c.n_nodes();
        const cplx ph = std::exp(cplx(0.0, 2.0 * M_PI * s));
        State y = rest;
        for (int q = 0; q < 4; ++q) y[q] += eps * (u[q] * ph).real();
        c.profile[g] = y;
    }
    return c;
}

/// Grows a cycle out of a Hopf point by amplitude stepping: starting from the
/// critical-eigenvector ansatz, the L2 amplitude of v1 is pinned and the
/// parameter left free, so the solver walks onto the branch on whichever side
/// it exists (super- or sub-critical); the amplitude is then stepped until the
/// branch crosses `mu_target`, where a fixed-parameter solve finishes.
inline CycleSolveResult cycle_from_hopf(const Params& p_hopf, ContParam which,
                                        const State& rest, double omega, double mu_target,
                                        double A0 = 0.04, int M = 40, int degree = 4) {
    CycleSolveResult fail;
    const double mu_hopf = which == ContParam::C ? p_hopf.c : p_hopf.tau;
    CycleBVP seed = cycle_seed_from_hopf(p_hopf, rest, omega, 2.0 * A0, M, degree);
    double A = A0, A_good = 0.0;
    BorderedResult cur;
    bool have = false;
    double best_gap = std::numeric_limits<double>::infinity();
    CycleBVP best;

    for (int step = 0; step < 80; ++step) {
        const CycleBVP& from = have ? cur.cycle : seed;
        const double mu_from = have ? cur.mu : mu_hopf;
        const auto res = solve_cycle_bordered(p_hopf, which, from, mu_from, from,
                                              amplitude_pin_row(from, A));
        // reject branch jumps and runaways along with outright failures
        const bool sane = res.status == CycleSolveStatus::Converged &&
                          std::abs(res.mu - mu_from) <= 0.5 * std::max(1.0, std::abs(mu_from)) &&
                          res.cycle.T < 1e4;
        if (!sane) {
            if (!have) return fail;
            const double A_next = std::sqrt(A * A_good);
            if (!(A_next < 0.98 * A)) break;  // pinned down to the last success; give up
            A = A_next;
            continue;
        }
        cur = res;
        have = true;
        A_good = A;
        const double gap = std::abs(cur.mu - mu_target);
        if (gap < best_gap) {
            best_gap = gap;
            best = cur.cycle;
        }
        const bool crossed = (mu_from - mu_target) * (cur.mu - mu_target) <= 0.0 && step > 0;
        if (crossed || gap < 1e-3 || A > 1.5) break;
        A *= 1.5;
    }
    if (!have) return fail;

    Params p_t = p_hopf;
    if (which == ContParam::C) p_t.c = mu_target; else p_t.tau = mu_target;
    CycleSolveResult fin = solve_cycle_bvp(p_t, best);
    if (fin.status == CycleSolveStatus::Converged && fin.cycle.max_amplitude() > 1e-4)
        return fin;
    return fail;
}

/// Re-solve at the same parameters with the mesh doubled until the period
/// settles below `tol` (at most `max_doublings`).
inline CycleSolveResult refine_cycle(const Params& p, const CycleBVP& cycle, double tol = 1e-7,
                                     int max_doublings = 2) {
    CycleSolveResult cur = solve_cycle_bvp(p, cycle);
    for (int k = 0; k < max_doublings && cur.status == CycleSolveStatus::Converged; ++k) {
        CycleBVP fine;
        fine.n_intervals = 2 * cur.cycle.n_intervals;
        fine.degree = cur.cycle.degree;
        fine.params = p;
        fine.T = cur.cycle.T;
        fine.mesh.resize(fine.n_intervals + 1);
        for (int i = 0; i <= fine.n_intervals; ++i) {
            // split every interval of the current mesh in half
            const int half = i / 2;
            const double a = cur.cycle.mesh[half];
            const double b = cur.cycle.mesh[std::min(half + 1, cur.cycle.n_intervals)];
            fine.mesh[i] = (i % 2 == 0) ? a : 0.5 * (a + b);
        }
        fine.profile.resize(fine.n_nodes());
        for (int g = 0; g < fine.n_nodes(); ++g) fine.profile[g] = cur.cycle.eval(fine.node_s(g));
        const CycleSolveResult next = solve_cycle_bvp(p, fine);
        if (next.status != CycleSolveStatus::Converged) break;
        const bool settled = std::abs(next.cycle.T - cur.cycle.T) < tol;
        cur = next;
        if (settled) break;
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Floquet multipliers

struct FloquetResult {
    std::vector<cplx> multipliers;  // sorted by descending modulus
    double trivial_error = 1.0;    // |mu_trivial - 1|
    bool valid = false;
    int unstable = 0;  // multipliers outside the unit circle, trivial excluded

    cplx trivial() const {
        cplx best(0, 0);
        double err = 1e300;
        for (const cplx& m : multipliers)
            if (std::abs(m - 1.0) < err) {
                err = std::abs(m - 1.0);
                best = m;
            }
        return best;
    }
};

namespace detail {

// One-period flow of the variational equation about the cycle, acting on a
// piecewise-linear history basis of N nodes over [-tau, 0] (4N x 4N matrix).
// For tau = 0 this degenerates to the 4x4 fundamental matrix.
inline Eigen::MatrixXd monodromy_matrix(const Params& p, const CycleBVP& cycle, int N) {
    const double T = cycle.T;
    const auto J_now = [&](double t) { return jacobian_blocks(p, cycle.eval(t / T)).now; };
    const auto J_del = [&](double t) {
        return jacobian_blocks(p, cycle.eval((t - p.tau) / T)).delayed;
    };

    if (p.tau == 0.0) {
        Eigen::Matrix4d Phi = Eigen::Matrix4d::Identity();
        const int steps = std::max(2000, static_cast<int>(std::ceil(T / 0.004)));
        const double h = T / steps;
        for (int i = 0; i < steps; ++i) {
            const double t = h * i;
            const auto A = [&](double tt) {
                return (jacobian_blocks(p, cycle.eval(tt / T)).now +
                        jacobian_blocks(p, cycle.eval(tt / T)).delayed).eval();
            };
            const Eigen::Matrix4d k1 = A(t) * Phi;
            const Eigen::Matrix4d k2 = A(t + h / 2) * (Phi + (h / 2) * k1);
            const Eigen::Matrix4d k3 = A(t + h / 2) * (Phi + (h / 2) * k2);
            const Eigen::Matrix4d k4 = A(t + h) * (Phi + h * k3);
            Phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return Phi;
    }

    const int K = 4 * N;
    const double dth = p.tau / (N - 1);
    // basis history: piecewise-linear hats on the theta grid, evaluated at t <= 0
    const auto basis_at = [&](double t) {
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, K);
        const double th = std::clamp(t, -p.tau, 0.0);
        const double x = (th + p.tau) / dth;  // in [0, N-1]
        const int i0 = std::clamp(static_cast<int>(std::floor(x)), 0, N - 2);
        const double w1 = x - i0, w0 = 1.0 - w1;
        for (int q = 0; q < 4; ++q) {
            B(q, 4 * i0 + q) = w0;
            B(q, 4 * (i0 + 1) + q) = w1;
        }
        return B;
    };

    const double h0 = std::min({p.tau / 8.0, 0.01, T / 400.0});
    const long steps = static_cast<long>(std::ceil(T / h0));
    const double h = T / static_cast<double>(steps);

    // Only a window of [t - tau, t] plus the final segment [T - tau, T] is
    // ever read back; older nodes are pruned to keep memory bounded.
    std::deque<Eigen::MatrixXd> ys, dys;
    std::deque<double> ts;
    long base = 0;  // global index of ts.front()

    const auto delayed = [&](double t) -> Eigen::MatrixXd {
        if (t <= 0.0) return basis_at(t);
        long i = static_cast<long>(std::floor(t / h)) - base;
        i = std::clamp<long>(i, 0, static_cast<long>(ts.size()) - 2);
        const double dt = ts[i + 1] - ts[i];
        const double s = (t - ts[i]) / dt;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * ys[i] + (s3 - 2 * s2 + s) * dt * dys[i] +
               (-2 * s3 + 3 * s2) * ys[i + 1] + (s3 - s2) * dt * dys[i + 1];
    };

    const auto frhs = [&](double t, const Eigen::MatrixXd& x, const Eigen::MatrixXd& xd) {
        return (J_now(t) * x + J_del(t) * xd).eval();
    };

    Eigen::MatrixXd y = basis_at(0.0);
    ts.push_back(0.0);
    ys.push_back(y);
    dys.push_back(frhs(0.0, y, basis_at(-p.tau)));

    for (long i = 0; i < steps; ++i) {
        const double t = h * static_cast<double>(i);
        const Eigen::MatrixXd dm = delayed(t + h / 2 - p.tau);
        const Eigen::MatrixXd d4 = delayed(t + h - p.tau);
        const Eigen::MatrixXd k1 = dys.back();
        const Eigen::MatrixXd k2 = frhs(t + h / 2, y + (h / 2) * k1, dm);
        const Eigen::MatrixXd k3 = frhs(t + h / 2, y + (h / 2) * k2, dm);
        const Eigen::MatrixXd k4 = frhs(t + h, y + h * k3, d4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double tn = h * static_cast<double>(i + 1);
        ts.push_back(tn);
        ys.push_back(y);
        dys.push_back(frhs(tn, y, delayed(tn - p.tau)));
        const double keep_from = std::min(tn - p.tau, T - p.tau) - 2.0 * h;
        while (ts.size() > 2 && ts.front() < keep_from) {
            ts.pop_front();
            ys.pop_front();
            dys.pop_front();
            ++base;
        }
    }

    // sample the evolved segment on [T - tau, T] at the basis nodes
    Eigen::MatrixXd B(K, K);
    for (int i = 0; i < N; ++i) {
        const double t = T - p.tau + dth * i;
        B.block(4 * i, 0, 4, K) = t <= 0.0 ? basis_at(t) : delayed(t);
    }
    return B;
}

}  // namespace detail

/// Floquet multipliers of a converged cycle via the monodromy operator on a
/// discretized history basis (N nodes over [-tau, 0]); 4x4 fundamental matrix
/// in the ODE limit. The result is invalidated when the trivial multiplier
/// strays more than 5e-2 from 1.
inline FloquetResult floquet_multipliers(const Params& p, const CycleBVP& cycle, int N = 32) {
    FloquetResult fr;
    const Eigen::MatrixXd B = detail::monodromy_matrix(p, cycle, N);
    Eigen::EigenSolver<Eigen::MatrixXd> es(B);
    for (int i = 0; i < B.rows(); ++i) fr.multipliers.push_back(es.eigenvalues()[i]);
    std::sort(fr.multipliers.begin(), fr.multipliers.end(),
              [](const cplx& a, const cplx& b) { return std::abs(a) > std::abs(b); });

    int trivial_idx = -1;
    double err = 1e300;
    for (std::size_t i = 0; i < fr.multipliers.size(); ++i)
        if (std::abs(fr.multipliers[i] - 1.0) < err) {
            err = std::abs(fr.multipliers[i] - 1.0);
            trivial_idx = static_cast<int>(i);
        }
    fr.trivial_error = err;
    fr.valid = err <= 5e-2;
    for (std::size_t i = 0; i < fr.multipliers.size(); ++i)
        if (static_cast<int>(i) != trivial_idx && std::abs(fr.multipliers[i]) > 1.0)
            ++fr.unstable;
    return fr;
}

// ---------------------------------------------------------------------------
// Cycle bifurcation events along a continued branch

enum class CycleEventKind { Fold, PitchforkCycle, Torus, HopfEndpoint, HomoclinicProxy };

struct CycleEvent {
    CycleEventKind kind;
    std::vector<CycleEventKind> candidates;  // > 1 entry for ambiguous events
    double param = 0.0;                      // continuation parameter at the event
    double tau = 0.0, c = 0.0;
    double T = 0.0;
    double multiplier_angle = 0.0;  // for Torus
    int between_lo = -1, between_hi = -1;  // bracketing indices into the branch
};

struct CyclePoint {
    double param = 0.0;
    CycleBVP cycle;
    FloquetResult floquet;
    double sym = 0.0;  // symmetry indicator
};

struct CycleEventOptions {
    double T_max = 500.0;      // homoclinic proxy threshold
    double amp_hopf = 1e-3;    // amplitude collapse threshold
    double angle_tol = 1e-3;   // ambiguity band around angles 0 and pi
};

namespace detail {

// largest real multiplier (trivial removed) and largest complex-pair modulus
struct MultiplierIndicators {
    double real_max = -std::numeric_limits<double>::infinity();
    double cplx_max = -std::numeric_limits<double>::infinity();
    double cplx_angle = 0.0;
};

inline MultiplierIndicators indicators(const FloquetResult& fr, double angle_tol) {
    MultiplierIndicators mi;
    int trivial_idx = -1;
    double err = 1e300;
    for (std::size_t i = 0; i < fr.multipliers.size(); ++i)
        if (std::abs(fr.multipliers[i] - 1.0) < err) {
            err = std::abs(fr.multipliers[i] - 1.0);
            trivial_idx = static_cast<int>(i);
        }
    for (std::size_t i = 0; i < fr.multipliers.size(); ++i) {
        if (static_cast<int>(i) == trivial_idx) continue;
        const cplx m = fr.multipliers[i];
        const double ang = std::abs(std::arg(m));
        if (ang <= angle_tol) {
            mi.real_max = std::max(mi.real_max, m.real());
        } else if (std::abs(m) > mi.cplx_max) {
            // everything off the positive real axis, including angles near pi
            mi.cplx_max = std::abs(m);
            mi.cplx_angle = ang;
        }
    }
    return mi;
}

}  // namespace detail

/// Scans a continued branch for cycle bifurcations: parameter turning points
/// (folds), real multipliers through +1 on a symmetric branch (pitchforks of
/// cycles), complex pairs through the unit circle (torus), period blow-up
/// (homoclinic proxy) and amplitude collapse (Hopf endpoint). Crossings with
/// multiplier angle within angle_tol of 0 or pi are reported with both
/// candidate labels.
inline std::vector<CycleEvent> detect_cycle_bifurcations(const std::vector<CyclePoint>& pts,
                                                         const CycleEventOptions& opt = {}) {
    std::vector<CycleEvent> events;
    if (pts.size() < 2) return events;

    const auto fill_location = [&](CycleEvent& ev, int lo, int hi, double param) {
        ev.between_lo = lo;
        ev.between_hi = hi;
        ev.param = param;
        ev.tau = pts[hi].cycle.params.tau;
        ev.c = pts[hi].cycle.params.c;
        ev.T = pts[hi].cycle.T;
    };

    // parameter turning points; the variation floor keeps the 1e-9-level
    // parameter jitter of a pinned homoclinic tail from registering as folds
    std::vector<std::pair<int, double>> folds;
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
        const double d1 = pts[k].param - pts[k - 1].param;
        const double d2 = pts[k + 1].param - pts[k].param;
        const double floor_ = 1e-7 * std::max(1.0, std::abs(pts[k].param));
        if (d1 * d2 < 0.0 && std::abs(d1) > floor_ && std::abs(d2) > floor_) {
            // parabola vertex through the three bracketing points (uniform
            // pseudo-arclength spacing assumed)
            const double mu0 = pts[k - 1].param, mu1 = pts[k].param, mu2 = pts[k + 1].param;
            const double den = mu0 - 2.0 * mu1 + mu2;
            double mu_fold = mu1;
            if (std::abs(den) > 0.0) mu_fold = mu1 - (mu2 - mu0) * (mu2 - mu0) / (8.0 * den);
            CycleEvent ev;
            // a turning point where the amplitude collapses is the branch
            // shrinking into (and re-emerging from) a Hopf point
            const double amp_min =
                std::min({pts[k - 1].cycle.max_amplitude(), pts[k].cycle.max_amplitude(),
                          pts[k + 1].cycle.max_amplitude()});
            ev.kind = amp_min < 0.05 ? CycleEventKind::HopfEndpoint : CycleEventKind::Fold;
            ev.candidates = {ev.kind};
            fill_location(ev, static_cast<int>(k) - 1, static_cast<int>(k) + 1, mu_fold);
            events.push_back(ev);
            folds.emplace_back(static_cast<int>(k), mu_fold);
        }
    }

    const auto near_fold = [&](int k) {
        for (const auto& [idx, mu] : folds)
            if (std::abs(k - idx) <= 1) return true;
        return false;
    };

    for (std::size_t k = 1; k < pts.size(); ++k) {
        // period blow-up with bounded amplitude (independent of multipliers)
        if (pts[k - 1].cycle.T <= opt.T_max && pts[k].cycle.T > opt.T_max &&
            pts[k].cycle.max_amplitude() > 10.0 * opt.amp_hopf) {
            CycleEvent ev;
            ev.kind = CycleEventKind::HomoclinicProxy;
            ev.candidates = {CycleEventKind::HomoclinicProxy};
            fill_location(ev, static_cast<int>(k) - 1, static_cast<int>(k), pts[k].param);
            events.push_back(ev);
        }

        // amplitude collapse at finite period
        if (pts[k - 1].cycle.max_amplitude() > opt.amp_hopf &&
            pts[k].cycle.max_amplitude() <= opt.amp_hopf && pts[k].cycle.T < opt.T_max) {
            CycleEvent ev;
            ev.kind = CycleEventKind::HopfEndpoint;
            ev.candidates = {CycleEventKind::HopfEndpoint};
            fill_location(ev, static_cast<int>(k) - 1, static_cast<int>(k), pts[k].param);
            events.push_back(ev);
        }

        if (!pts[k - 1].floquet.valid || !pts[k].floquet.valid) continue;
        const auto i0 = detail::indicators(pts[k - 1].floquet, opt.angle_tol);
        const auto i1 = detail::indicators(pts[k].floquet, opt.angle_tol);

        // real multiplier through +1
        if (std::isfinite(i0.real_max) && std::isfinite(i1.real_max) &&
            (i0.real_max - 1.0) * (i1.real_max - 1.0) < 0.0 && !near_fold(static_cast<int>(k))) {
            const double t = (1.0 - i0.real_max) / (i1.real_max - i0.real_max);
            const double mu = pts[k - 1].param + t * (pts[k].param - pts[k - 1].param);
            CycleEvent ev;
            const bool symmetric = pts[k - 1].sym < 1e-2 && pts[k].sym < 1e-2;
            if (symmetric) {
                ev.kind = CycleEventKind::PitchforkCycle;
                ev.candidates = {CycleEventKind::PitchforkCycle};
            } else {
                ev.kind = CycleEventKind::Fold;
                ev.candidates = {CycleEventKind::Fold, CycleEventKind::PitchforkCycle};
            }
            fill_location(ev, static_cast<int>(k) - 1, static_cast<int>(k), mu);
            events.push_back(ev);
        }

        // complex pair through the unit circle
        if (std::isfinite(i0.cplx_max) && std::isfinite(i1.cplx_max) &&
            (i0.cplx_max - 1.0) * (i1.cplx_max - 1.0) < 0.0) {
            const double t = (1.0 - i0.cplx_max) / (i1.cplx_max - i0.cplx_max);
            const double mu = pts[k - 1].param + t * (pts[k].param - pts[k - 1].param);
            CycleEvent ev;
            ev.kind = CycleEventKind::Torus;
            ev.candidates = {CycleEventKind::Torus};
            const double ang = 0.5 * (i0.cplx_angle + i1.cplx_angle);
            if (ang < 10 * opt.angle_tol)
                ev.candidates.push_back(CycleEventKind::Fold);  // angle ~ 0: ambiguous
            ev.multiplier_angle = ang;
            fill_location(ev, static_cast<int>(k) - 1, static_cast<int>(k), mu);
            events.push_back(ev);
        }

    }

    std::sort(events.begin(), events.end(),
              [](const CycleEvent& a, const CycleEvent& b) { return a.between_hi < b.between_hi; });
    return events;
}

}  // namespace fhn
