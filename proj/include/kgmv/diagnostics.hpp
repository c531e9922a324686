#ifndef KGMV_DIAGNOSTICS_HPP
#define KGMV_DIAGNOSTICS_HPP

// Gauge-invariant fields, angular momentum and residuals of a solved vortex,
// plus the two numerical non-existence demonstrations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kgmv/errors.hpp"
#include "kgmv/functionals.hpp"
#include "kgmv/grid.hpp"
#include "kgmv/minimizer.hpp"
#include "kgmv/potentials.hpp"
#include "kgmv/trialfn.hpp"

namespace kgmv {

struct FieldSet {
    ScalarField E_r, E_z;   ///< -grad phi
    ScalarField H_r, H_z;   ///< curl(a grad theta) = (a_z / r, -a_r / r)
    ScalarField Omega;      ///< omega - q phi
    ScalarField K_theta;    ///< (l - q a) / r
    ScalarField rho;        ///< q Omega u^2
    ScalarField j_theta;    ///< q (l - q a) u^2 / r
    double hole_radius = 0.0;      ///< radius of the density maximum
    double solenoid_ratio = 0.0;   ///< integral |H|^2 over r < hole_radius divided by the rest; 0 when H = 0
};

/// a_r / r for a field behaving like r^2 near the axis, written through the
/// smooth even function f = a / r^2 so the axis row stays second order.
inline ScalarField a_r_over_r(const ScalarField& a) {
    const AxiGrid& g = a.grid();
    ScalarField f(g, AxisBC::Neumann0, a.outer_bc());
    for (int i = 0; i < g.n_r(); ++i)
        for (int j = 0; j < g.n_z(); ++j) f(i, j) = a(i, j) / (g.r(i) * g.r(i));
    const ScalarField fr = d_dr(f);
    ScalarField out = a.zeros_like();
    for (int i = 0; i < g.n_r(); ++i)
        for (int j = 0; j < g.n_z(); ++j) out(i, j) = 2.0 * f(i, j) + g.r(i) * fr(i, j);
    return out;
}

/// Magnetic field (H_r, H_z) of A = a grad theta.
inline std::pair<ScalarField, ScalarField> magnetic_field(const ScalarField& a) {
    const AxiGrid& g = a.grid();
    ScalarField Hr = d_dz(a);
    ScalarField Hz = a_r_over_r(a);
    for (int i = 0; i < g.n_r(); ++i)
        for (int j = 0; j < g.n_z(); ++j) {
            Hr(i, j) /= g.r(i);
            Hz(i, j) = -Hz(i, j);
        }
    return {std::move(Hr), std::move(Hz)};
}

inline FieldSet gauge_fields(const SolveReport& rep) {
    const VortexState& s = rep.state;
    const AxiGrid& g = s.grid();
    ScalarField phi = rep.phi;
    phi.set_axis_bc(AxisBC::Neumann0);
    phi.set_outer_bc(OuterBC::Dirichlet0);
    ScalarField Er = d_dr(phi), Ez = d_dz(phi);
    for (auto& v : Er.values()) v = -v;
    for (auto& v : Ez.values()) v = -v;
    auto [Hr, Hz] = magnetic_field(s.a);

    FieldSet f{std::move(Er), std::move(Ez), std::move(Hr), std::move(Hz),
               phi.zeros_like(), phi.zeros_like(), phi.zeros_like(), phi.zeros_like()};
    double umax = -1.0;
    for (int i = 0; i < g.n_r(); ++i)
        for (int j = 0; j < g.n_z(); ++j) {
            const std::size_t k = g.index(i, j);
            const double r = g.r(i), u2 = s.u[k] * s.u[k];
            const double kk = s.ell - s.q * s.a[k];
            f.Omega[k] = rep.omega - s.q * rep.phi[k];
            f.K_theta[k] = kk / r;
            f.rho[k] = s.q * f.Omega[k] * u2;
            f.j_theta[k] = s.q * kk * u2 / r;
            if (s.u[k] > umax) {
                umax = s.u[k];
                f.hole_radius = r;
            }
        }
    double inside = 0.0, outside = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.cell_volume(i);
        for (int j = 0; j < g.n_z(); ++j) {
            const std::size_t k = g.index(i, j);
            const double h2 = f.H_r[k] * f.H_r[k] + f.H_z[k] * f.H_z[k];
            (g.r(i) < f.hole_radius ? inside : outside) += w * h2;
        }
    }
    f.solenoid_ratio = outside > 0.0 ? inside / outside : 0.0;
    return f;
}

/// e3 component of the matter angular momentum, -integral (l - q a)(omega - q phi) u^2.
inline double angular_momentum(const SolveReport& rep) {
    const VortexState& s = rep.state;
    return -integrate_nodes(s.grid(), [&](std::size_t k, int) {
        return (s.ell - s.q * s.a[k]) * (rep.omega - s.q * rep.phi[k]) * s.u[k] * s.u[k];
    });
}

struct AngularMomentumDistribution {
    ScalarField per_particle;         ///< -(l - q a)
    std::vector<double> bin_edges;    ///< n_bins + 1 edges
    std::vector<double> bin_weights;  ///< integral of the particle density (omega - q phi) u^2 per bin
    double mean = 0.0;                ///< density-weighted mean; equals M3 / total weight
    bool quantized = false;           ///< every occupied node carries exactly -l
};

inline AngularMomentumDistribution angular_momentum_distribution(const SolveReport& rep, int n_bins = 20) {
    if (n_bins < 1) throw std::invalid_argument("angular_momentum_distribution: n_bins must be >= 1");
    const VortexState& s = rep.state;
    const AxiGrid& g = s.grid();
    AngularMomentumDistribution d{ScalarField(g), {}, {}, 0.0, true};
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k = 0; k < g.size(); ++k) {
        d.per_particle[k] = -(s.ell - s.q * s.a[k]);
        if (s.u[k] > 0.0) {
            lo = std::min(lo, d.per_particle[k]);
            hi = std::max(hi, d.per_particle[k]);
            if (d.per_particle[k] != -static_cast<double>(s.ell)) d.quantized = false;
        }
    }
    if (!(hi >= lo)) lo = hi = -static_cast<double>(s.ell);
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    d.bin_edges.resize(n_bins + 1);
    for (int b = 0; b <= n_bins; ++b) d.bin_edges[b] = lo + (hi - lo) * b / n_bins;
    d.bin_weights.assign(n_bins, 0.0);
    double total = 0.0, moment = 0.0;
    for (int i = 0; i < g.n_r(); ++i) {
        const double w = g.cell_volume(i);
        for (int j = 0; j < g.n_z(); ++j) {
            const std::size_t k = g.index(i, j);
            const double density = w * (rep.omega - s.q * rep.phi[k]) * s.u[k] * s.u[k];
            if (density == 0.0) continue;
            const int b = std::clamp(static_cast<int>((d.per_particle[k] - lo) / (hi - lo) * n_bins), 0, n_bins - 1);
            d.bin_weights[b] += density;
            total += density;
            moment += density * d.per_particle[k];
        }
    }
    d.mean = total != 0.0 ? moment / total : 0.0;
    return d;
}

struct PdeResiduals {
    double z1 = 0.0, z3 = 0.0, z4 = 0.0;
    double continuity = 0.0;  ///< max |div j| from Cartesian differences of the azimuthal current
};

/// Divergence of j = j_theta(r, x3) e_theta at (r, 0, x3), by central
/// differences in Cartesian coordinates with step h. The x1 differences see
/// j_1 = 0, and the x2 differences see a j_2 that is even in x2, so the result
/// vanishes up to rounding.
inline double azimuthal_divergence_at(double j_theta, double r, double h) {
    auto j_cart = [&](double x1, double x2) {
        const double rr = std::hypot(x1, x2);
        return std::array<double, 2>{-j_theta * x2 / rr, j_theta * x1 / rr};
    };
    const double d1 = (j_cart(r + h, 0.0)[0] - j_cart(r - h, 0.0)[0]) / (2.0 * h);
    const double d2 = (j_cart(r, h)[1] - j_cart(r, -h)[1]) / (2.0 * h);
    return d1 + d2;
}

inline PdeResiduals pde_residuals(const SolveReport& rep) {
    const VortexState& s = rep.state;
    const AxiGrid& g = s.grid();
    const ReducedFunctional F(g, s.u.outer_bc(), rep.potential);
    ScalarField Phi = rep.Phi;
    const EquationResiduals e = equation_residuals(F, s, Phi, rep.omega);
    PdeResiduals out{e.z1, e.z3, e.z4, 0.0};
    const double h = 0.5 * std::min(g.dr(), g.dz());
    for (int i = 0; i < g.n_r(); ++i)
        for (int j = 0; j < g.n_z(); ++j) {
            const std::size_t k = g.index(i, j);
            const double jt = s.q * (s.ell - s.q * s.a[k]) * s.u[k] * s.u[k] / g.r(i);
            out.continuity = std::max(out.continuity, std::abs(azimuthal_divergence_at(jt, g.r(i), h)));
        }
    return out;
}

// Non-existence demonstrations. Both are numerical evidence by scaling, not proofs.

struct DoubleWellOptions {
    int ell = 1;
    double Z = 2.0;      ///< half height of the slab; u is free (Neumann) on the outer faces
    int n_z = 8;
    double dr = 0.125;   ///< radial spacing, held fixed across domain sizes
    SolverConfig solver{};
};

struct DoubleWellRow {
    double R = 0.0;
    double Z = 0.0;
    int ell = 0;
    double energy = 0.0;      ///< minimised I with omega = phi = 0
    int iterations = 0;
    bool converged = false;
};

/// Minimised energy with the double-well potential on domains of growing radius.
/// With l != 0 the centrifugal energy grows like 2 pi Z l^2 ln R once u has
/// relaxed to the well value 1 away from the axis.
inline std::vector<DoubleWellRow> doublewell_divergence_demo(const std::vector<double>& domain_sizes,
                                                             const DoubleWellOptions& opt = {}) {
    SolverConfig cfg = opt.solver;
    cfg.mode = ChargeMode::ZeroFrequency;
    cfg.recenter_every = 0;
    const PotentialSpec pot = PotentialSpec::double_well();
    std::vector<DoubleWellRow> rows;
    for (double R : domain_sizes) {
        const int n_r = static_cast<int>(std::lround(R / opt.dr));
        const AxiGrid g(n_r, opt.n_z, R, opt.Z);
        ScalarField u = ScalarField::from_function(
            g,
            [&](double r, double) {
                return opt.ell != 0 ? std::tanh(r) : 1.0 - 0.5 * std::exp(-r * r);
            },
            matter_axis_bc(opt.ell), OuterBC::Neumann0);
        VortexState s = VortexState::with_zero_a(std::move(u), opt.ell, 0.0, 1.0);
        const SolveReport rep = minimize(s, cfg, pot);
        rows.push_back({R, opt.Z, opt.ell, rep.energy.total, rep.iterations, rep.converged});
    }
    return rows;
}

/// Energy increase predicted for one doubling of R: 2 pi Z l^2 ln 2.
inline double doublewell_doubling_increment(int ell, double Z) { return two_pi * Z * ell * ell * std::log(2.0); }

/// Successive energy differences of a domain-size table.
inline std::vector<double> energy_increments(const std::vector<DoubleWellRow>& rows) {
    std::vector<double> inc;
    for (std::size_t k = 1; k < rows.size(); ++k) inc.push_back(rows[k].energy - rows[k - 1].energy);
    return inc;
}

struct CollapseDemoConfig {
    AxiGrid grid{64, 64, 20.0, 20.0};
    int ell = 1;
    double q = 0.0;
    double lambda = 8.0;  ///< torus trial used as initial profile
    SolverConfig solver{};
};

/// omega = phi = 0 with W = s^2/2: the energy is a positive quadratic form in
/// u, so descent drives u to zero.
inline SolveReport magnetostatic_collapse_demo(const CollapseDemoConfig& cfg) {
    SolverConfig sc = cfg.solver;
    sc.mode = ChargeMode::ZeroFrequency;
    const TorusTrial t = build_torus_trial(cfg.lambda, 1.0, cfg.grid, cfg.ell);
    VortexState s = VortexState::with_zero_a(t.field, cfg.ell, cfg.q, t.sigma_lambda);
    SolveReport rep = minimize(s, sc, PotentialSpec::quadratic());
    rep.checks.push_back({"collapsed (consistent with absence of magnetostatic vortices)", rep.collapsed,
                          rep.initial_l2 > 0.0 ? rep.final_l2 / rep.initial_l2 : 0.0, sc.collapse_ratio, false});
    return rep;
}

/// Control for the collapse demo: same potential and trial, frequency restored
/// through the charge constraint, so the energy is bounded below by sigma and
/// the minimiser is a nontrivial profile.
inline SolveReport magnetostatic_control_run(const CollapseDemoConfig& cfg) {
    SolverConfig sc = cfg.solver;
    sc.mode = ChargeMode::FixedCharge;
    sc.require_eligible = false;
    const TorusTrial t = build_torus_trial(cfg.lambda, 1.0, cfg.grid, cfg.ell);
    VortexState s = VortexState::with_zero_a(t.field, cfg.ell, cfg.q, t.sigma_lambda);
    return minimize(s, sc, PotentialSpec::quadratic());
}

}  // namespace kgmv

#endif  // KGMV_DIAGNOSTICS_HPP
