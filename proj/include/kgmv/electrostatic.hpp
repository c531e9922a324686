#ifndef KGMV_ELECTROSTATIC_HPP
#define KGMV_ELECTROSTATIC_HPP

// Unit-frequency electrostatic response: -Laplacian Phi + q^2 u^2 Phi = q u^2,
// Neumann at the axis, homogeneous Dirichlet on the outer boundary.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "kgmv/errors.hpp"
#include "kgmv/grid.hpp"

namespace kgmv {

struct PhiSolveOptions {
    double tol = 1e-10;  ///< relative residual, ||A x - b|| <= tol ||b||
    int max_iter = 20000;
};

struct PhiSolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

namespace detail {

/// Assembled form of the screened Poisson operator: W(-Laplacian) + diag(W q^2 u^2).
struct ScreenedPoisson {
    AxiStencil lap;
    std::vector<double> mass;  // w q^2 u^2
    std::vector<double> rhs;   // w q u^2

    ScreenedPoisson(const ScalarField& u, double q) : lap(laplacian_stencil(u.grid(), OuterBC::Dirichlet0)) {
        const AxiGrid& g = u.grid();
        mass.resize(g.size());
        rhs.resize(g.size());
        for (int i = 0; i < g.n_r(); ++i) {
            const double w = g.cell_volume(i);
            for (int j = 0; j < g.n_z(); ++j) {
                const std::size_t k = g.index(i, j);
                const double u2 = u[k] * u[k];
                mass[k] = w * q * q * u2;
                rhs[k] = w * q * u2;
            }
        }
    }

    void apply(std::span<const double> x, std::span<double> y) const {
        lap.apply(x, y);
        for (std::size_t k = 0; k < x.size(); ++k) y[k] += mass[k] * x[k];
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

}  // namespace detail

namespace detail {

/// Preconditioned conjugate gradients on A x = b, starting from x.
template <class Apply, class Precondition>
inline PhiSolveStats pcg(const Apply& apply, const std::vector<double>& b, std::span<double> x,
                         const Precondition& precondition, const PhiSolveOptions& opts) {
    const std::size_t n = b.size();
    const double bnorm = std::sqrt(dot(b, b));
    std::vector<double> r(n), z(n), p(n), Ap(n);
    apply(x, std::span<double>(Ap));
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
    double rnorm = std::sqrt(dot(r, r));
    int it = 0;
    if (rnorm > opts.tol * bnorm) {
        precondition(r, z);
        p = z;
        double rz = dot(r, z);
        while (it < opts.max_iter) {
            ++it;
            apply(std::span<const double>(p), std::span<double>(Ap));
            const double alpha = rz / dot(p, Ap);
            for (std::size_t k = 0; k < n; ++k) {
                x[k] += alpha * p[k];
                r[k] -= alpha * Ap[k];
            }
            rnorm = std::sqrt(dot(r, r));
            if (rnorm <= opts.tol * bnorm) break;
            precondition(r, z);
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
        }
    }
    const PhiSolveStats stats{it, rnorm / bnorm};
    if (!(rnorm <= opts.tol * bnorm)) throw NoConvergence(it, stats.relative_residual);
    return stats;
}

}  // namespace detail

/// Jacobi-preconditioned conjugate gradients on the SPD screened Poisson system.
/// Returns Phi_u; phi = omega Phi_u for a given frequency omega.
inline ScalarField solve_phi(const ScalarField& u, double q, const PhiSolveOptions& opts = {},
                             const ScalarField* warm_start = nullptr, PhiSolveStats* stats = nullptr) {
    const AxiGrid& g = u.grid();
    ScalarField phi(g, AxisBC::Neumann0, OuterBC::Dirichlet0);
    if (stats) *stats = {};
    if (q == 0.0) return phi;

    const detail::ScreenedPoisson A(u, q);
    if (std::sqrt(detail::dot(A.rhs, A.rhs)) == 0.0) return phi;
    if (warm_start) {
        require_same_grid(*warm_start, u);
        std::copy(warm_start->values().begin(), warm_start->values().end(), phi.values().begin());
    }
    std::vector<double> inv_diag(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) inv_diag[k] = 1.0 / (A.lap.diagonal(k) + A.mass[k]);
    const PhiSolveStats st = detail::pcg(
        [&](std::span<const double> x, std::span<double> y) { A.apply(x, y); }, A.rhs, phi.values(),
        [&](const std::vector<double>& r, std::vector<double>& z) {
            for (std::size_t k = 0; k < r.size(); ++k) z[k] = inv_diag[k] * r[k];
        },
        opts);
    if (stats) *stats = st;
    return phi;
}

/// Repeated Phi solves for slowly varying u. A sparse Cholesky factor of the
/// operator at a reference u preconditions CG; the factor is rebuilt when CG
/// needs more than `refactor_after` iterations.
class PhiSolver {
public:
    explicit PhiSolver(double q, PhiSolveOptions opts = {}, int refactor_after = 8)
        : q_(q), opts_(opts), refactor_after_(refactor_after) {}

    ScalarField solve(const ScalarField& u, const ScalarField* warm_start = nullptr) {
        const AxiGrid& g = u.grid();
        ScalarField phi(g, AxisBC::Neumann0, OuterBC::Dirichlet0);
        last_ = {};
        if (q_ == 0.0) return phi;
        const detail::ScreenedPoisson A(u, q_);
        if (std::sqrt(detail::dot(A.rhs, A.rhs)) == 0.0) return phi;
        if (warm_start) {
            require_same_grid(*warm_start, u);
            std::copy(warm_start->values().begin(), warm_start->values().end(), phi.values().begin());
        }
        if (!factor_ || !(factor_grid_ == g)) refactor(A, g);
        auto apply = [&](std::span<const double> x, std::span<double> y) { A.apply(x, y); };
        auto precondition = [&](const std::vector<double>& r, std::vector<double>& z) {
            Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
            Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size())) = factor_->solve(rv);
        };
        last_ = detail::pcg(apply, A.rhs, phi.values(), precondition, opts_);
        if (last_.iterations > refactor_after_) factor_.reset();
        return phi;
    }

    double q() const { return q_; }
    const PhiSolveStats& last_stats() const { return last_; }

private:
    void refactor(const detail::ScreenedPoisson& A, const AxiGrid& g) {
        const int nz = g.n_z();
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(5 * g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            const int kk = static_cast<int>(k), i = kk / nz, j = kk % nz;
            trips.emplace_back(kk, kk, A.lap.diagonal(k) + A.mass[k]);
            if (i + 1 < g.n_r()) {
                trips.emplace_back(kk, kk + nz, -A.lap.c_r[k]);
                trips.emplace_back(kk + nz, kk, -A.lap.c_r[k]);
            }
            if (j + 1 < nz) {
                trips.emplace_back(kk, kk + 1, -A.lap.c_z[k]);
                trips.emplace_back(kk + 1, kk, -A.lap.c_z[k]);
            }
        }
        Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
        m.setFromTriplets(trips.begin(), trips.end());
        factor_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(m);
        if (factor_->info() != Eigen::Success) throw NoConvergence(0, 1.0);
        factor_grid_ = g;
    }

    double q_;
    PhiSolveOptions opts_;
    int refactor_after_;
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
    AxiGrid factor_grid_{4, 4, 1.0, 1.0};
    PhiSolveStats last_;
};

struct CouplingSample {
    double q = 0.0;
    double coupling = 0.0;  ///< q * integral(Phi_u u^2)
};

/// q * integral(Phi_u u^2) for each q; tends to zero like q^2 as q -> 0.
inline std::vector<CouplingSample> smallq_coupling(const ScalarField& u, const std::vector<double>& q_list,
                                                   const PhiSolveOptions& opts = {}) {
    std::vector<CouplingSample> out;
    out.reserve(q_list.size());
    for (double q : q_list) {
        if (q < 0.0) throw std::invalid_argument("smallq_coupling: q must be nonnegative");
        const ScalarField phi = solve_phi(u, q, opts);
        const double c = q * integrate_nodes(u.grid(), [&](std::size_t k, int) { return phi[k] * u[k] * u[k]; });
        out.push_back({q, c});
    }
    return out;
}

/// Least-squares slope of log(coupling) against log(q).
inline double loglog_slope(const std::vector<CouplingSample>& samples) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(samples.size());
    for (const auto& s : samples) {
        const double x = std::log(s.q), y = std::log(s.coupling);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace kgmv

#endif  // KGMV_ELECTROSTATIC_HPP
