#ifndef KGMV_TRIALFN_HPP
#define KGMV_TRIALFN_HPP

// Torus trial functions and the energy/charge ratio scan that certifies
// Lambda < 1 for them.

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "kgmv/electrostatic.hpp"
#include "kgmv/errors.hpp"
#include "kgmv/functionals.hpp"
#include "kgmv/grid.hpp"
#include "kgmv/potentials.hpp"

namespace kgmv {

/// 6t^5 - 15t^4 + 10t^3, clamped to [0, 1]; maximal slope 15/8.
inline double smoothstep5(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

struct TorusTrial {
    double lambda;
    double s0;
    ScalarField field;
    double sigma_lambda;  ///< integral u_lambda^2
};

/// Plateau value s0 within distance lambda/2 of the circle (r, x3) = (lambda, 0),
/// zero beyond lambda/2 + 1, quintic smoothstep across the unit shell between.
inline double torus_profile(double lambda, double s0, double r, double z) {
    const double d = std::hypot(r - lambda, z);
    return s0 * (1.0 - smoothstep5(d - 0.5 * lambda));
}

inline TorusTrial build_torus_trial(double lambda, double s0, const AxiGrid& grid, int ell = 1) {
    if (!(lambda > 2.0)) throw std::invalid_argument("build_torus_trial: lambda must exceed 2");
    const double outer = 0.5 * lambda + 1.0;
    if (lambda + outer > grid.R() || outer > grid.Z())
        throw DomainTooSmall("torus of major radius " + std::to_string(lambda) + " and outer minor radius " +
                             std::to_string(outer) + " does not fit in R=" + std::to_string(grid.R()) +
                             ", Z=" + std::to_string(grid.Z()));
    ScalarField u = ScalarField::from_function(
        grid, [&](double r, double z) { return torus_profile(lambda, s0, r, z); }, matter_axis_bc(ell));
    const double sigma = integrate_nodes(grid, [&](std::size_t k, int) { return u[k] * u[k]; });
    return TorusTrial{lambda, s0, std::move(u), sigma};
}

/// One row of the ratio scan; term1..term4 are the four summands of
///   Lambda = 1/2 + sigma/(2 K_q) + (|grad u|^2 + l^2 u^2/r^2)/(2 |u|^2) + N(u)/|u|^2
/// (integrals implied), with sigma = integral u^2.
struct ScanRow {
    double lambda = 0.0;
    double q = 0.0;
    double Lambda = 0.0;
    double term1 = 0.0;  ///< integral u^2 / (2 sigma)
    double term2 = 0.0;  ///< sigma / (2 K_q)
    double term3 = 0.0;  ///< gradient + centrifugal
    double term4 = 0.0;  ///< integral N(u) / sigma
    double sigma = 0.0;
    double K_q = 0.0;
};

inline ScanRow scan_point(double lambda, double q, double s0, const AxiGrid& grid, int ell,
                          const PotentialSpec& potential, const PhiSolveOptions& opts = {}) {
    TorusTrial t = build_torus_trial(lambda, s0, grid, ell);
    VortexState s = VortexState::with_zero_a(t.field, ell, q, t.sigma_lambda);
    ReducedFunctional F(grid, s.u.outer_bc(), potential);
    const ScalarField Phi = solve_phi(s.u, q, opts);
    const EnergyBreakdown e = F.E_sigma(s, Phi);

    const double sigma = t.sigma_lambda;
    const double mass = integrate_nodes(grid, [&](std::size_t k, int) { return s.u[k] * s.u[k]; });
    const double nint = integrate_nodes(grid, [&](std::size_t k, int) { return eval_potential(potential, s.u[k]).N; });

    ScanRow row;
    row.lambda = lambda;
    row.q = q;
    row.Lambda = e.Lambda;
    row.term1 = mass / (2.0 * sigma);
    row.term2 = sigma / (2.0 * e.K_q);
    row.term3 = (e.dirichlet_u + e.centrifugal) / sigma;
    row.term4 = nint / sigma;
    row.sigma = sigma;
    row.K_q = e.K_q;
    return row;
}

/// Lambda for every (lambda, q) pair, in lambda-major order. Pairs are
/// evaluated on up to `threads` workers.
inline std::vector<ScanRow> lambda_scan(const std::vector<double>& lambdas, const std::vector<double>& qs, double s0,
                                        const AxiGrid& grid, int ell = 1,
                                        const PotentialSpec& potential = PotentialSpec::poly_double_zero(),
                                        const PhiSolveOptions& opts = {}, unsigned threads = 0) {
    std::vector<ScanRow> rows(lambdas.size() * qs.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(rows.size()));
    std::vector<std::exception_ptr> errors(rows.size());
    auto work = [&](unsigned worker) {
        for (std::size_t idx = worker; idx < rows.size(); idx += threads) {
            try {
                rows[idx] = scan_point(lambdas[idx / qs.size()], qs[idx % qs.size()], s0, grid, ell, potential, opts);
            } catch (...) {
                errors[idx] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

}  // namespace kgmv

#endif  // KGMV_TRIALFN_HPP
