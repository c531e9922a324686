#ifndef KGMV_FUNCTIONALS_HPP
#define KGMV_FUNCTIONALS_HPP

// Discrete reduced functionals of the charge-constrained vortex problem.
//
//   I(u, a)      = 1/2 |grad u|^2 + 1/2 |curl(a grad theta)|^2 + 1/2 (l - q a)^2 u^2 / r^2 + W(u)
//   K_q(u)       = integral (1 - q Phi_u) u^2
//   E_sigma(u,a) = I(u, a) + sigma^2 / (2 K_q(u)),     omega = sigma / K_q(u)
//
// Everything is defined on the grid first and differentiated afterwards, so the
// gradients below are exact gradients of the discrete energy.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kgmv/electrostatic.hpp"
#include "kgmv/errors.hpp"
#include "kgmv/grid.hpp"
#include "kgmv/potentials.hpp"

namespace kgmv {

/// Axis behaviour of the matter amplitude: finiteness of l^2 u^2 / r^2 forces
/// u(0) = 0 whenever l != 0.
inline AxisBC matter_axis_bc(int ell) { return ell != 0 ? AxisBC::Dirichlet0 : AxisBC::Neumann0; }

struct VortexState {
    ScalarField u;  ///< matter amplitude, >= 0
    ScalarField a;  ///< magnetic amplitude, A = a grad theta
    int ell = 1;
    double q = 0.0;
    double sigma = 1.0;

    /// State with a = 0 on the grid of u.
    static VortexState with_zero_a(ScalarField u, int ell, double q, double sigma) {
        u.set_axis_bc(matter_axis_bc(ell));
        ScalarField a(u.grid(), AxisBC::Dirichlet0, OuterBC::Dirichlet0);
        return VortexState{std::move(u), std::move(a), ell, q, sigma};
    }

    const AxiGrid& grid() const { return u.grid(); }
};

struct EnergyBreakdown {
    double dirichlet_u = 0.0;   ///< 1/2 integral |grad u|^2
    double magnetic = 0.0;      ///< 1/2 integral |curl A|^2
    double centrifugal = 0.0;   ///< 1/2 integral (l - q a)^2 u^2 / r^2
    double potential = 0.0;     ///< integral W(u)
    double charge_term = 0.0;   ///< sigma^2 / (2 K_q)
    double total = 0.0;
    double omega = 0.0;
    double K_q = 0.0;
    double Lambda = 0.0;        ///< total / sigma
    double electric_charge = 0.0;

    double I() const { return dirichlet_u + magnetic + centrifugal + potential; }
};

struct Gradient {
    ScalarField g_u;
    ScalarField g_a;
};

/// Evaluator with the grid stencils assembled once. Gradients are returned in
/// the volume-weighted inner product <f, g> = integral f g dx.
class ReducedFunctional {
public:
    ReducedFunctional(const AxiGrid& grid, OuterBC matter_outer, PotentialSpec potential)
        : grid_(grid),
          lap_u_(laplacian_stencil(grid, matter_outer)),
          lap_phi_(laplacian_stencil(grid, OuterBC::Dirichlet0)),
          mag_(magnetic_stencil(grid)),
          potential_(potential) {}

    const AxiGrid& grid() const { return grid_; }
    const PotentialSpec& potential() const { return potential_; }
    const AxiStencil& laplacian_u() const { return lap_u_; }
    const AxiStencil& laplacian_phi() const { return lap_phi_; }
    const AxiStencil& magnetic() const { return mag_; }

    /// The four parts of I; the charge-dependent fields of the result stay zero.
    EnergyBreakdown reduced_terms(const VortexState& s) const {
        check(s);
        EnergyBreakdown e;
        e.dirichlet_u = lap_u_.half_quadratic(s.u.values());
        e.magnetic = mag_.half_quadratic(s.a.values());
        double cent = 0.0, pot = 0.0;
        for (int i = 0; i < grid_.n_r(); ++i) {
            const double w = grid_.cell_volume(i);
            const double inv_r2 = 1.0 / (grid_.r(i) * grid_.r(i));
            double rc = 0.0, rp = 0.0;
            for (int j = 0; j < grid_.n_z(); ++j) {
                const std::size_t k = grid_.index(i, j);
                const double kk = s.ell - s.q * s.a[k];
                rc += kk * kk * s.u[k] * s.u[k] * inv_r2;
                rp += eval_potential(potential_, s.u[k]).W;
            }
            cent += w * rc;
            pot += w * rp;
        }
        e.centrifugal = 0.5 * cent;
        e.potential = pot;
        return e;
    }

    double I(const VortexState& s) const { return reduced_terms(s).I(); }

    /// integral (1 - q Phi) u^2; throws ZeroMass when u vanishes identically.
    double K(const VortexState& s, const ScalarField& Phi) const {
        const double k = integrate_nodes(grid_, [&](std::size_t n, int) { return (1.0 - s.q * Phi[n]) * s.u[n] * s.u[n]; });
        if (!(k > 0.0)) {
            if (s.u.max_abs() == 0.0) throw ZeroMass("K_q undefined: u vanishes identically");
            if (!std::isfinite(k)) throw EnergyNonFinite("K_q is not finite");
        }
        return k;
    }

    EnergyBreakdown E_sigma(const VortexState& s, const ScalarField& Phi) const {
        EnergyBreakdown e = reduced_terms(s);
        e.K_q = K(s, Phi);
        if (!(e.K_q > 0.0)) throw ZeroMass("K_q is not positive");
        e.charge_term = s.sigma * s.sigma / (2.0 * e.K_q);
        e.total = e.I() + e.charge_term;
        e.omega = s.sigma / e.K_q;
        e.Lambda = e.total / s.sigma;
        e.electric_charge = s.q * s.sigma;
        return e;
    }

    /// Gradient of I alone (the energy with omega = phi = 0).
    Gradient grad_I(const VortexState& s) const {
        check(s);
        Gradient g{s.u.zeros_like(), ScalarField(grid_, AxisBC::Dirichlet0, OuterBC::Dirichlet0)};
        lap_u_.apply(s.u.values(), g.g_u.values());
        mag_.apply(s.a.values(), g.g_a.values());
        for (int i = 0; i < grid_.n_r(); ++i) {
            const double inv_w = 1.0 / grid_.cell_volume(i);
            const double inv_r2 = 1.0 / (grid_.r(i) * grid_.r(i));
            for (int j = 0; j < grid_.n_z(); ++j) {
                const std::size_t k = grid_.index(i, j);
                const double kk = s.ell - s.q * s.a[k];
                g.g_u[k] = g.g_u[k] * inv_w + kk * kk * s.u[k] * inv_r2 + eval_potential(potential_, s.u[k]).dW;
                g.g_a[k] = g.g_a[k] * inv_w - s.q * kk * s.u[k] * s.u[k] * inv_r2;
            }
        }
        return g;
    }

    /// Gradient of E_sigma. The K_q derivative uses the envelope formula
    /// K'(u) = 2 u (1 - q Phi_u)^2, valid because Phi solves its equation exactly.
    Gradient grad_E(const VortexState& s, const ScalarField& Phi) const {
        Gradient g = grad_I(s);
        const double kq = K(s, Phi);
        const double omega = s.sigma / kq;
        const double w2 = omega * omega;
        for (std::size_t k = 0; k < g.g_u.size(); ++k) {
            const double f = 1.0 - s.q * Phi[k];
            g.g_u[k] -= w2 * s.u[k] * f * f;
        }
        return g;
    }

    /// Energy of the stationary configuration with phi = omega Phi, evaluated
    /// directly from the full field expression (electric field energy included).
    double total_energy_direct(const VortexState& s, const ScalarField& Phi, double omega) const {
        const EnergyBreakdown e = reduced_terms(s);
        std::vector<double> phi(Phi.size());
        for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = omega * Phi[k];
        const double electric = lap_phi_.half_quadratic(phi);
        const double density = 0.5 * integrate_nodes(grid_, [&](std::size_t k, int) {
            const double om = omega - s.q * phi[k];
            return om * om * s.u[k] * s.u[k];
        });
        return e.I() + electric + density;
    }

private:
    void check(const VortexState& s) const {
        if (!(s.u.grid() == grid_) || !(s.a.grid() == grid_))
            throw std::invalid_argument("state does not live on the functional's grid");
    }

    AxiGrid grid_;
    AxiStencil lap_u_, lap_phi_, mag_;
    PotentialSpec potential_;
};

// Free-function forms for one-off evaluations.

inline ReducedFunctional make_functional(const VortexState& s, const PotentialSpec& potential) {
    return ReducedFunctional(s.grid(), s.u.outer_bc(), potential);
}

inline double K_q(const VortexState& s, const ScalarField& Phi) {
    return ReducedFunctional(s.grid(), s.u.outer_bc(), PotentialSpec{}).K(s, Phi);
}

inline double K_q(const VortexState& s, const PhiSolveOptions& opts = {}) {
    if (s.u.max_abs() == 0.0) throw ZeroMass("K_q undefined: u vanishes identically");
    return K_q(s, solve_phi(s.u, s.q, opts));
}

inline double I_reduced(const VortexState& s, const PotentialSpec& potential) {
    return make_functional(s, potential).I(s);
}

inline EnergyBreakdown E_sigma(const VortexState& s, const PotentialSpec& potential, const PhiSolveOptions& opts = {}) {
    if (s.u.max_abs() == 0.0) throw ZeroMass("E_sigma undefined: u vanishes identically");
    return make_functional(s, potential).E_sigma(s, solve_phi(s.u, s.q, opts));
}

inline double total_energy_direct(const VortexState& s, const PotentialSpec& potential, double omega,
                                  const PhiSolveOptions& opts = {}) {
    return make_functional(s, potential).total_energy_direct(s, solve_phi(s.u, s.q, opts), omega);
}

inline Gradient grad_E(const VortexState& s, const PotentialSpec& potential, const PhiSolveOptions& opts = {}) {
    if (s.u.max_abs() == 0.0) throw ZeroMass("grad_E undefined: u vanishes identically");
    return make_functional(s, potential).grad_E(s, solve_phi(s.u, s.q, opts));
}

/// Relative volume-weighted L2 residuals of the reduced field equations. Each
/// residual is divided by the largest norm among the terms of its equation.
struct EquationResiduals {
    double z1 = 0.0;  ///< matter equation
    double z3 = 0.0;  ///< Gauss law for phi
    double z4 = 0.0;  ///< reduced Ampere law b = q (l - q a) u^2
};

inline EquationResiduals equation_residuals(const ReducedFunctional& F, const VortexState& s, const ScalarField& Phi,
                                            double omega) {
    const AxiGrid& g = s.grid();
    const std::size_t n = g.size();
    std::vector<double> lap_u(n), lap_phi(n), mag(n), phi(n);
    for (std::size_t k = 0; k < n; ++k) phi[k] = omega * Phi[k];
    F.laplacian_u().apply(s.u.values(), lap_u);
    F.laplacian_phi().apply(phi, lap_phi);
    F.magnetic().apply(s.a.values(), mag);

    // Squared norms of each term, accumulated with the cell volume.
    double t1[4] = {0, 0, 0, 0}, r1 = 0;
    double t3[2] = {0, 0}, r3 = 0;
    double t4[2] = {0, 0}, r4 = 0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.cell_volume(i);
        const double r = g.r(i);
        for (int j = 0; j < g.n_z(); ++j) {
            const std::size_t k = g.index(i, j);
            const double kk = s.ell - s.q * s.a[k];
            const double om = omega - s.q * phi[k];
            const double u = s.u[k];
            const double a1 = lap_u[k] / w;                       // -Laplacian u
            const double a2 = kk * kk * u / (r * r);
            const double a3 = -om * om * u;
            const double a4 = eval_potential(F.potential(), u).dW;
            const double e1 = a1 + a2 + a3 + a4;
            t1[0] += w * a1 * a1;
            t1[1] += w * a2 * a2;
            t1[2] += w * a3 * a3;
            t1[3] += w * a4 * a4;
            r1 += w * e1 * e1;

            const double b1 = lap_phi[k] / w;                     // -Laplacian phi
            const double b2 = -s.q * om * u * u;
            t3[0] += w * b1 * b1;
            t3[1] += w * b2 * b2;
            r3 += w * (b1 + b2) * (b1 + b2);

            const double c1 = mag[k] * r * r / w;                 // b
            const double c2 = -s.q * kk * u * u;
            t4[0] += w * c1 * c1;
            t4[1] += w * c2 * c2;
            r4 += w * (c1 + c2) * (c1 + c2);
        }
    }
    auto rel = [](double res, double scale) { return scale > 0.0 ? std::sqrt(res / scale) : std::sqrt(res); };
    EquationResiduals out;
    out.z1 = rel(r1, std::max({t1[0], t1[1], t1[2], t1[3]}));
    out.z3 = rel(r3, std::max(t3[0], t3[1]));
    out.z4 = rel(r4, std::max(t4[0], t4[1]));
    return out;
}

}  // namespace kgmv

#endif  // KGMV_FUNCTIONALS_HPP
