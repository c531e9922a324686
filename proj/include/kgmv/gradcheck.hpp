#ifndef KGMV_GRADCHECK_HPP
#define KGMV_GRADCHECK_HPP

// Seeded random smooth states and central-difference checks of grad_E.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "kgmv/electrostatic.hpp"
#include "kgmv/functionals.hpp"
#include "kgmv/grid.hpp"
#include "kgmv/potentials.hpp"

namespace kgmv {

namespace detail {

struct Bump {
    double amp, r0, z0, width;
};

inline std::vector<Bump> random_bumps(std::mt19937_64& rng, const AxiGrid& g, int count, double amp_lo,
                                      double amp_hi) {
    std::uniform_real_distribution<double> amp(amp_lo, amp_hi), rr(0.2 * g.R(), 0.5 * g.R()),
        zz(-0.3 * g.Z(), 0.3 * g.Z()), width(0.08 * g.R(), 0.18 * g.R());
    std::vector<Bump> out;
    for (int k = 0; k < count; ++k) out.push_back({amp(rng), rr(rng), zz(rng), width(rng)});
    return out;
}

inline double eval_bumps(const std::vector<Bump>& bumps, double r, double z) {
    double s = 0.0;
    for (const auto& b : bumps) {
        const double d2 = (r - b.r0) * (r - b.r0) + (z - b.z0) * (z - b.z0);
        s += b.amp * std::exp(-d2 / (b.width * b.width));
    }
    return s;
}

}  // namespace detail

/// Smooth nonnegative u with the axis behaviour r^l, and a = r^2 times a smooth
/// bump sum, both negligible at the outer boundary. Deterministic in `seed`.
inline VortexState random_smooth_state(const AxiGrid& g, int ell, double q, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto ub = detail::random_bumps(rng, g, 3, 0.3, 0.9);
    const auto ab = detail::random_bumps(rng, g, 3, -0.2, 0.2);
    const double rs = 0.15 * g.R();
    ScalarField u = ScalarField::from_function(
        g,
        [&](double r, double z) {
            const double axis = std::pow(r / std::hypot(r, rs), std::abs(ell));
            return axis * detail::eval_bumps(ub, r, z);
        },
        matter_axis_bc(ell));
    ScalarField a = ScalarField::from_function(
        g, [&](double r, double z) { return r * r / (g.R() * g.R()) * detail::eval_bumps(ab, r, z) * 4.0; },
        AxisBC::Dirichlet0, OuterBC::Dirichlet0);
    return VortexState{std::move(u), std::move(a), ell, q, sigma};
}

struct DirectionalCheck {
    double analytic = 0.0;
    double finite_difference = 0.0;
    double rel_error = 0.0;
};

struct GradCheckResult {
    std::vector<DirectionalCheck> directions;
    double max_rel_error = 0.0;
    double step = 0.0;
};

/// Compare <grad_E, d> with (E(x + h d) - E(x - h d)) / 2h for `n_directions`
/// seeded smooth directions d in (u, a). Phi is re-solved at every evaluation.
inline GradCheckResult gradcheck(const VortexState& s, const PotentialSpec& potential, double step = 1e-5,
                                 int n_directions = 4, std::uint64_t seed = 1,
                                 PhiSolveOptions opts = {1e-14, 100000}) {
    const AxiGrid& g = s.grid();
    const ReducedFunctional F(g, s.u.outer_bc(), potential);
    auto energy = [&](const VortexState& x) { return F.E_sigma(x, solve_phi(x.u, x.q, opts)).total; };
    const Gradient grad = F.grad_E(s, solve_phi(s.u, s.q, opts));

    GradCheckResult res;
    res.step = step;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int d = 0; d < n_directions; ++d) {
        const VortexState dir = random_smooth_state(g, s.ell, s.q, s.sigma, rng());
        const double analytic = integrate_nodes(g, [&](std::size_t k, int) {
            return grad.g_u[k] * dir.u[k] + grad.g_a[k] * dir.a[k];
        });
        VortexState plus = s, minus = s;
        for (std::size_t k = 0; k < g.size(); ++k) {
            plus.u[k] += step * dir.u[k];
            minus.u[k] -= step * dir.u[k];
            plus.a[k] += step * dir.a[k];
            minus.a[k] -= step * dir.a[k];
        }
        const double fd = (energy(plus) - energy(minus)) / (2.0 * step);
        const double rel = std::abs(analytic - fd) / std::max(std::abs(analytic), 1e-300);
        res.directions.push_back({analytic, fd, rel});
        res.max_rel_error = std::max(res.max_rel_error, rel);
    }
    return res;
}

}  // namespace kgmv

#endif  // KGMV_GRADCHECK_HPP
