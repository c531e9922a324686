#ifndef KGMV_MINIMIZER_HPP
#define KGMV_MINIMIZER_HPP

// Charge-constrained minimisation of E_sigma over (u, a), u >= 0, with
// continuation in the coupling q.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kgmv/electrostatic.hpp"
#include "kgmv/errors.hpp"
#include "kgmv/functionals.hpp"
#include "kgmv/grid.hpp"
#include "kgmv/potentials.hpp"

namespace kgmv {

enum class ChargeMode {
    FixedCharge,    ///< minimise E_sigma, omega = sigma / K_q(u)
    ZeroFrequency,  ///< omega = phi = 0, minimise I alone
};

enum class DescentDirection {
    PreconditionedGradient,
    LBFGS,  ///< quasi-Newton directions built on the same preconditioner
};

inline const char* to_string(ChargeMode m) { return m == ChargeMode::FixedCharge ? "fixed_charge" : "zero_frequency"; }
inline const char* to_string(DescentDirection d) {
    return d == DescentDirection::LBFGS ? "lbfgs" : "preconditioned_gradient";
}

/// Snapshot passed to SolverConfig::on_iteration after every accepted step.
struct IterationInfo {
    int iteration = 0;
    double objective = 0.0;
    double step = 0.0;
    double stationarity = 0.0;
    double omega = 0.0;
    int backtracks = 0;
    bool quasi_newton = false;
};

struct SolverConfig {
    int max_outer_iter = 20000;
    double grad_tol = 1e-6;
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 60;
    int recenter_every = 50;  ///< 0 disables recentering
    std::vector<double> q_steps{};
    ChargeMode mode = ChargeMode::FixedCharge;
    DescentDirection direction = DescentDirection::PreconditionedGradient;
    int lbfgs_memory = 10;
    double collapse_ratio = 1e-8;  ///< ||u|| below this fraction of ||u_0|| counts as collapse
    bool require_eligible = true;
    PhiSolveOptions phi{1e-12, 20000};
    std::function<void(const IterationInfo&)> on_iteration{};

    /// 0 followed by n geometric steps ending at q_max.
    static std::vector<double> geometric_q_steps(double q_max, int n, double ratio = 2.0) {
        std::vector<double> qs{0.0};
        for (int k = n - 1; k >= 0; --k) qs.push_back(q_max / std::pow(ratio, k));
        return qs;
    }

    void validate() const {
        if (max_outer_iter < 1) throw ConfigError("max_outer_iter", "must be >= 1");
        if (!(grad_tol > 0.0)) throw ConfigError("grad_tol", "must be positive");
        if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw ConfigError("armijo_c1", "must lie in (0, 1)");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtrack", "must lie in (0, 1)");
        if (recenter_every < 0) throw ConfigError("recenter_every", "must be >= 0");
        if (!(collapse_ratio > 0.0)) throw ConfigError("collapse_ratio", "must be positive");
        if (!q_steps.empty()) {
            if (q_steps.front() != 0.0) throw ConfigError("q_steps", "must start at 0");
            for (std::size_t k = 1; k < q_steps.size(); ++k)
                if (q_steps[k] < q_steps[k - 1]) throw ConfigError("q_steps", "must be nondecreasing");
        }
    }
};

/// Named pass/fail entry with its measured value, as written into reports.
struct InvariantCheck {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    bool hard = true;  ///< hard checks decide the CLI exit status
};

struct SolveReport {
    VortexState state;
    ScalarField Phi;  ///< unit-frequency response
    ScalarField phi;  ///< omega * Phi
    PotentialSpec potential;
    ChargeMode mode = ChargeMode::FixedCharge;
    double omega = 0.0;
    double sigma = 0.0;
    double K_q = 0.0;
    EnergyBreakdown energy{};
    EquationResiduals residuals{};
    int iterations = 0;
    bool converged = false;
    bool collapsed = false;
    double grad_norm = 0.0;
    double grad_ref = 0.0;
    double stationarity = 0.0;  ///< max relative residual of the field equations
    bool stalled = false;       ///< line search could not decrease the energy further
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double max_energy_increase = 0.0;  ///< relative, over accepted steps
    double omega_min = 0.0, omega_max = 0.0;
    double total_shift = 0.0;          ///< accumulated recentering translation
    double initial_l2 = 0.0, final_l2 = 0.0;
    std::vector<InvariantCheck> checks{};

    bool all_hard_checks_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.pass || !c.hard; });
    }
    const InvariantCheck* find_check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Iteration budget exhausted; carries the state reached so far.
class MaxIterations : public Error {
public:
    explicit MaxIterations(SolveReport report)
        : Error("MaxIterations", "iteration budget exhausted after " + std::to_string(report.iterations) +
                                     " iterations (residual " + std::to_string(report.stationarity) + ")"),
          report_(std::move(report)) {}
    const SolveReport& report() const noexcept { return report_; }

private:
    SolveReport report_;
};

namespace detail {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

inline SparseMatrix to_sparse(const AxiStencil& s, const std::vector<double>& extra_diag) {
    const AxiGrid& g = s.grid;
    const int n = static_cast<int>(g.size());
    const int nz = g.n_z();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(5 * g.size());
    for (int k = 0; k < n; ++k) {
        trips.emplace_back(k, k, s.diagonal(k) + extra_diag[k]);
        const int i = k / nz, j = k % nz;
        if (i + 1 < g.n_r()) {
            trips.emplace_back(k, k + nz, -s.c_r[k]);
            trips.emplace_back(k + nz, k, -s.c_r[k]);
        }
        if (j + 1 < nz) {
            trips.emplace_back(k, k + 1, -s.c_z[k]);
            trips.emplace_back(k + 1, k, -s.c_z[k]);
        }
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

/// Block-diagonal SPD approximation of the Hessian of the energy in raw
/// (unweighted) coordinates: the quadratic part of I plus a unit mass for u,
/// the curl-curl stiffness plus the q^2 u^2 / r^2 screening for a.
class Preconditioner {
public:
    Preconditioner(const ReducedFunctional& F, const VortexState& s) : n_(s.grid().size()) {
        const AxiGrid& g = s.grid();
        std::vector<double> du(n_), da(n_);
        for (int i = 0; i < g.n_r(); ++i) {
            const double w = g.cell_volume(i), inv_r2 = 1.0 / (g.r(i) * g.r(i));
            for (int j = 0; j < g.n_z(); ++j) {
                const std::size_t k = g.index(i, j);
                du[k] = w * (s.ell * s.ell * inv_r2 + 1.0);
                da[k] = w * s.q * s.q * s.u[k] * s.u[k] * inv_r2;
            }
        }
        lu_.compute(to_sparse(F.laplacian_u(), du));
        la_.compute(to_sparse(F.magnetic(), da));
        if (lu_.info() != Eigen::Success || la_.info() != Eigen::Success)
            throw std::runtime_error("preconditioner factorisation failed");
    }

    /// x = P^{-1} y for the stacked vector (u-block, a-block).
    Vector solve(const Vector& y) const {
        Vector x(2 * n_);
        x.head(n_) = lu_.solve(y.head(n_));
        x.tail(n_) = la_.solve(y.tail(n_));
        return x;
    }

private:
    std::size_t n_;
    Eigen::SimplicialLDLT<SparseMatrix> lu_, la_;
};

}  // namespace detail

/// Projected descent with Armijo backtracking on (u, a):
///   x <- P(x + t d),   P(u, a) = (max(u, 0), a),
///   accepted when E(x_t) <= E(x) + c1 <grad E, x_t - x>.
/// Phi is re-solved (warm-started) at every trial point; u is recentred along
/// x3 every `recenter_every` iterations.
class Minimizer {
public:
    Minimizer(PotentialSpec potential, SolverConfig cfg) : potential_(potential), cfg_(std::move(cfg)) {
        cfg_.validate();
    }

    SolveReport run(const VortexState& initial, const ScalarField* phi_guess = nullptr) const {
        const AxiGrid& g = initial.grid();
        const std::size_t n = g.size();
        if (initial.u.max_abs() == 0.0) {
            if (cfg_.mode == ChargeMode::ZeroFrequency) return trivially_collapsed(initial);
            throw ZeroMass("minimize: initial u vanishes identically");
        }
        if (cfg_.mode == ChargeMode::FixedCharge) {
            if (!(initial.sigma > 0.0)) throw ConfigError("sigma", "must be positive");
            if (cfg_.require_eligible && !validate_hypotheses(potential_, 4.0, 400).eligible)
                throw ConfigError("potential", potential_.id() + " violates the hypotheses required by the solver");
        }
        if (initial.q < 0.0) throw ConfigError("q", "must be nonnegative");

        const ReducedFunctional F(g, initial.u.outer_bc(), potential_);
        VortexState state = initial;
        for (auto& v : state.u.values()) v = std::max(v, 0.0);
        const bool fixed = cfg_.mode == ChargeMode::FixedCharge;
        const bool use_phi = fixed && state.q > 0.0;

        PhiSolver phi_solver(state.q, cfg_.phi);
        ScalarField Phi = phi_guess ? *phi_guess : ScalarField(g, AxisBC::Neumann0, OuterBC::Dirichlet0);
        if (use_phi) Phi = phi_solver.solve(state.u, &Phi);
        else for (auto& v : Phi.values()) v = 0.0;

        SolveReport rep{state, Phi, Phi, potential_};
        rep.mode = cfg_.mode;
        rep.sigma = state.sigma;
        rep.initial_l2 = l2_norm(state.u);
        rep.omega_min = std::numeric_limits<double>::infinity();
        rep.omega_max = -std::numeric_limits<double>::infinity();

        auto objective = [&](const VortexState& s, const ScalarField& P) {
            const double v = fixed ? F.E_sigma(s, P).total : F.I(s);
            if (!std::isfinite(v)) throw EnergyNonFinite();
            return v;
        };
        auto gradient = [&](const VortexState& s, const ScalarField& P) {
            return fixed ? F.grad_E(s, P) : F.grad_I(s);
        };
        // Raw (coordinate) gradient, stacked (u, a); the projected-gradient norm
        // zeroes components of u pinned at the bound.
        auto stack_raw = [&](const Gradient& gr) {
            detail::Vector v(2 * n);
            for (int i = 0; i < g.n_r(); ++i) {
                const double w = g.cell_volume(i);
                for (int j = 0; j < g.n_z(); ++j) {
                    const std::size_t k = g.index(i, j);
                    v[k] = w * gr.g_u[k];
                    v[n + k] = w * gr.g_a[k];
                }
            }
            return v;
        };
        auto projected_norm = [&](const VortexState& s, const Gradient& gr) {
            return std::sqrt(integrate_nodes(g, [&](std::size_t k, int) {
                const double gu = (s.u[k] <= 0.0 && gr.g_u[k] > 0.0) ? 0.0 : gr.g_u[k];
                return gu * gu + gr.g_a[k] * gr.g_a[k];
            }));
        };
        auto track_omega = [&](const VortexState& s, const ScalarField& P) {
            if (!fixed) return;
            const double om = s.sigma / F.K(s, P);
            rep.omega_min = std::min(rep.omega_min, om);
            rep.omega_max = std::max(rep.omega_max, om);
        };

        double E = objective(state, Phi);
        rep.initial_objective = E;
        Gradient gr = gradient(state, Phi);
        detail::Vector graw = stack_raw(gr);
        double gnorm = projected_norm(state, gr);
        track_omega(state, Phi);
        rep.grad_ref = gnorm;
        // Stationarity is measured by the relative residuals of the field
        // equations, so a converged warm start stops immediately.
        auto stationarity = [&](const VortexState& s, const ScalarField& P) {
            const double om = fixed ? s.sigma / F.K(s, P) : 0.0;
            const EquationResiduals r = equation_residuals(F, s, P, om);
            return std::max({r.z1, r.z3, r.z4});
        };
        double stat = stationarity(state, Phi);

        detail::Preconditioner precond(F, state);
        std::deque<std::pair<detail::Vector, detail::Vector>> memory;  // (s, y)
        double step = 1.0;
        int it = 0;
        bool stalled = false;

        while (stat > cfg_.grad_tol && it < cfg_.max_outer_iter) {
            // Nodes held at the bound u = 0 by a positive gradient are frozen
            // for this step; the direction lives on the remaining free set.
            detail::Vector gfree = graw;
            std::vector<std::size_t> pinned;
            for (std::size_t k = 0; k < n; ++k)
                if (state.u[k] <= 0.0 && graw[k] > 0.0) {
                    gfree[k] = 0.0;
                    pinned.push_back(k);
                }
            auto restrict_to_free = [&](detail::Vector d) {
                for (std::size_t k : pinned) d[k] = 0.0;
                return d;
            };
            detail::Vector dir = restrict_to_free(direction(precond, gfree, memory));
            double slope = graw.dot(dir);
            if (!(slope < 0.0)) {
                memory.clear();
                dir = restrict_to_free(-precond.solve(gfree));
                slope = graw.dot(dir);
            }
            if (!(slope < 0.0)) {
                stalled = true;
                break;
            }
            double t = (cfg_.direction == DescentDirection::LBFGS && !memory.empty()) ? 1.0 : std::min(2.0 * step, 1e6);

            bool accepted = false;
            int backtracks = 0;
            const bool quasi_newton = cfg_.direction == DescentDirection::LBFGS && !memory.empty();
            VortexState trial = state;
            ScalarField trial_phi = Phi;
            double E_trial = E;
            for (int bt = 0; bt < cfg_.max_backtracks; ++bt, t *= cfg_.backtrack) {
                backtracks = bt;
                for (std::size_t k = 0; k < n; ++k) {
                    trial.u[k] = std::max(state.u[k] + t * dir[k], 0.0);
                    trial.a[k] = state.a[k] + t * dir[n + k];
                }
                double decrease = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    decrease += graw[k] * (trial.u[k] - state.u[k]) + graw[n + k] * (trial.a[k] - state.a[k]);
                if (trial.u.max_abs() == 0.0) {
                    if (!fixed) {
                        E_trial = F.I(trial);
                        accepted = E_trial <= E + cfg_.armijo_c1 * decrease;
                        if (accepted) break;
                    }
                    continue;
                }
                if (use_phi) trial_phi = phi_solver.solve(trial.u, &Phi);
                E_trial = objective(trial, trial_phi);
                if (E_trial <= E + cfg_.armijo_c1 * decrease) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                if (!memory.empty()) {
                    memory.clear();
                    continue;
                }
                stalled = true;
                break;
            }
            ++it;
            step = t;
            rep.max_energy_increase = std::max(rep.max_energy_increase, (E_trial - E) / std::max(std::abs(E), 1e-300));

            Gradient gr_new = gradient(trial, trial_phi);
            detail::Vector graw_new = stack_raw(gr_new);
            if (cfg_.direction == DescentDirection::LBFGS) {
                detail::Vector sv(2 * n);
                for (std::size_t k = 0; k < n; ++k) {
                    sv[k] = trial.u[k] - state.u[k];
                    sv[n + k] = trial.a[k] - state.a[k];
                }
                detail::Vector yv = graw_new - graw;
                if (sv.dot(yv) > 1e-12 * sv.norm() * yv.norm()) {
                    memory.emplace_back(std::move(sv), std::move(yv));
                    if (static_cast<int>(memory.size()) > cfg_.lbfgs_memory) memory.pop_front();
                }
            }
            state = std::move(trial);
            Phi = std::move(trial_phi);
            E = E_trial;
            gr = std::move(gr_new);
            graw = std::move(graw_new);
            gnorm = projected_norm(state, gr);
            track_omega(state, Phi);
            stat = stationarity(state, Phi);
            if (cfg_.on_iteration)
                cfg_.on_iteration({it, E, step, stat, fixed ? state.sigma / F.K(state, Phi) : 0.0, backtracks, quasi_newton});

            const double l2 = l2_norm(state.u);
            if (l2 < cfg_.collapse_ratio * rep.initial_l2) {
                if (fixed) throw ZeroMass("u collapsed during minimisation");
                rep.collapsed = true;
                break;
            }

            if (cfg_.recenter_every > 0 && it % cfg_.recenter_every == 0) {
                Recentered rc = recenter_z(state.u, {state.a, Phi});
                if (rc.shift != 0.0) {
                    state.u = std::move(rc.u);
                    state.a = std::move(rc.companions[0]);
                    Phi = std::move(rc.companions[1]);
                    if (use_phi) Phi = phi_solver.solve(state.u, &Phi);
                    rep.total_shift += rc.shift;
                    E = objective(state, Phi);
                    gr = gradient(state, Phi);
                    graw = stack_raw(gr);
                    gnorm = projected_norm(state, gr);
                    stat = stationarity(state, Phi);
                    memory.clear();
                }
            }
        }

        rep.iterations = it;
        rep.grad_norm = gnorm;
        rep.stationarity = stat;
        rep.converged = rep.collapsed || stat <= cfg_.grad_tol;
        // A stalled line search means the energy can no longer be decreased in
        // floating point; accept it when the residuals are within 10 grad_tol.
        rep.stalled = stalled;
        if (!rep.converged && stalled) rep.converged = stat <= 10.0 * cfg_.grad_tol;
        finalize(F, state, Phi, rep);
        if (!rep.converged) throw MaxIterations(std::move(rep));
        return rep;
    }

    const SolverConfig& config() const { return cfg_; }
    const PotentialSpec& potential() const { return potential_; }

private:
    detail::Vector direction(const detail::Preconditioner& P, const detail::Vector& graw,
                             const std::deque<std::pair<detail::Vector, detail::Vector>>& memory) const {
        if (cfg_.direction == DescentDirection::PreconditionedGradient || memory.empty()) return -P.solve(graw);
        // Two-loop recursion with H0 = gamma P^{-1}.
        detail::Vector q = graw;
        std::vector<double> alpha(memory.size()), rho(memory.size());
        for (int m = static_cast<int>(memory.size()) - 1; m >= 0; --m) {
            rho[m] = 1.0 / memory[m].second.dot(memory[m].first);
            alpha[m] = rho[m] * memory[m].first.dot(q);
            q -= alpha[m] * memory[m].second;
        }
        const auto& [s_last, y_last] = memory.back();
        const detail::Vector Py = P.solve(y_last);
        const double gamma = s_last.dot(y_last) / y_last.dot(Py);
        detail::Vector r = gamma * P.solve(q);
        for (std::size_t m = 0; m < memory.size(); ++m) {
            const double beta = rho[m] * memory[m].second.dot(r);
            r += (alpha[m] - beta) * memory[m].first;
        }
        return -r;
    }

    SolveReport trivially_collapsed(const VortexState& initial) const {
        const ScalarField zero(initial.grid(), AxisBC::Neumann0, OuterBC::Dirichlet0);
        SolveReport rep{initial, zero, zero, potential_};
        rep.mode = cfg_.mode;
        rep.sigma = initial.sigma;
        rep.converged = true;
        rep.collapsed = true;
        const ReducedFunctional F(initial.grid(), initial.u.outer_bc(), potential_);
        rep.energy = F.reduced_terms(initial);
        rep.energy.total = rep.energy.I();
        rep.final_objective = rep.initial_objective = rep.energy.total;
        rep.checks.push_back({"collapsed", true, 0.0, cfg_.collapse_ratio, false});
        return rep;
    }

    void finalize(const ReducedFunctional& F, const VortexState& state, const ScalarField& Phi, SolveReport& rep) const {
        const bool fixed = cfg_.mode == ChargeMode::FixedCharge;
        rep.state = state;
        rep.Phi = Phi;
        rep.final_l2 = l2_norm(state.u);
        if (fixed && !rep.collapsed) {
            rep.energy = F.E_sigma(state, Phi);
            rep.omega = rep.energy.omega;
            rep.K_q = rep.energy.K_q;
        } else {
            rep.energy = F.reduced_terms(state);
            rep.energy.total = rep.energy.I();
            rep.omega = 0.0;
            rep.K_q = integrate_nodes(state.grid(), [&](std::size_t k, int) { return state.u[k] * state.u[k]; });
        }
        rep.final_objective = rep.energy.total;
        rep.phi = Phi;
        for (std::size_t k = 0; k < Phi.size(); ++k) rep.phi[k] = rep.omega * Phi[k];
        rep.residuals = equation_residuals(F, state, Phi, rep.omega);
        add_invariant_checks(state, rep);
    }

    void add_invariant_checks(const VortexState& s, SolveReport& rep) const {
        auto& c = rep.checks;
        c.clear();
        const bool fixed = cfg_.mode == ChargeMode::FixedCharge;
        c.push_back({"converged", rep.converged, rep.stationarity, cfg_.grad_tol, true});
        c.push_back({"energy_monotone", rep.max_energy_increase <= 1e-14, rep.max_energy_increase, 1e-14, true});
        c.push_back({"u_nonnegative", s.u.min_value() >= 0.0, s.u.min_value(), 0.0, true});
        if (rep.collapsed) {
            c.push_back({"collapsed", true, rep.initial_l2 > 0 ? rep.final_l2 / rep.initial_l2 : 0.0, cfg_.collapse_ratio, false});
            return;
        }
        if (fixed) {
            c.push_back({"omega_interval", rep.omega_min >= 1e-6 && rep.omega_max <= 1e6, rep.omega, 1e6, true});
            const double mass = integrate_nodes(s.grid(), [&](std::size_t k, int) { return s.u[k] * s.u[k]; });
            c.push_back({"K_bounds", rep.K_q > 0.0 && rep.K_q <= mass * (1.0 + 1e-12), rep.K_q / mass, 1.0, true});
        }
        if (s.q > 0.0 && fixed) {
            double qphi_max = -std::numeric_limits<double>::infinity(), qphi_min = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < s.u.size(); ++k) {
                qphi_max = std::max(qphi_max, s.q * rep.phi[k] - rep.omega);
                qphi_min = std::min(qphi_min, rep.phi[k]);
            }
            c.push_back({"max_principle_phi", qphi_max <= 1e-8 && qphi_min >= -1e-10, qphi_max, 1e-8, true});
        }
        if (s.ell > 0 && s.q > 0.0) {
            double qa_max = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < s.a.size(); ++k) qa_max = std::max(qa_max, s.q * s.a[k] - s.ell);
            c.push_back({"max_principle_a", qa_max <= 1e-8, qa_max, 1e-8, true});
        }
        if (s.ell > 0 && fixed) {
            const double umax = s.u.max_abs();
            double worst = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < s.u.size(); ++k) {
                if (s.u[k] <= 1e-8 * umax) continue;
                worst = std::min(worst, (s.ell - s.q * s.a[k]) * (rep.omega - s.q * rep.phi[k]));
            }
            c.push_back({"sign_condition", worst > -1e-10, worst, -1e-10, true});
        }
        c.push_back({"residual_z1", rep.residuals.z1 <= 1e-5, rep.residuals.z1, 1e-5, false});
        c.push_back({"residual_z3", rep.residuals.z3 <= 1e-5, rep.residuals.z3, 1e-5, false});
        c.push_back({"residual_z4", rep.residuals.z4 <= 1e-5, rep.residuals.z4, 1e-5, false});
    }

    PotentialSpec potential_;
    SolverConfig cfg_;
};

inline SolveReport minimize(const VortexState& initial, const SolverConfig& cfg,
                            const PotentialSpec& potential = PotentialSpec::poly_double_zero(),
                            const ScalarField* phi_guess = nullptr) {
    return Minimizer(potential, cfg).run(initial, phi_guess);
}

/// Outcome of one continuation step: a report when the step produced one,
/// the error name otherwise.
struct ContinuationStep {
    double q = 0.0;
    std::optional<SolveReport> report;
    std::string error;
    std::vector<InvariantCheck> checks;  ///< structural checks of the small-coupling regime
};

/// Warm-started sweep over `qs` from `initial`; each step starts from the
/// previous solution. A q = 0 step zeroes a. Stops at the first ZeroMass.
inline std::vector<ContinuationStep> continuation_from(const VortexState& initial, const std::vector<double>& qs,
                                                       const SolverConfig& cfg,
                                                       const PotentialSpec& potential = PotentialSpec::poly_double_zero(),
                                                       const ScalarField* phi_guess = nullptr) {
    const Minimizer solver(potential, cfg);
    std::vector<ContinuationStep> steps;
    VortexState state = initial;
    std::optional<ScalarField> phi_prev;
    if (phi_guess) phi_prev = *phi_guess;
    for (double q : qs) {
        ContinuationStep step;
        step.q = q;
        state.q = q;
        if (q == 0.0)
            for (auto& v : state.a.values()) v = 0.0;
        try {
            step.report = solver.run(state, phi_prev ? &*phi_prev : nullptr);
        } catch (const MaxIterations& e) {
            step.report = e.report();
            step.error = e.name();
        } catch (const ZeroMass& e) {
            step.error = e.name();
            steps.push_back(std::move(step));
            break;
        } catch (const Error& e) {
            step.error = e.name();
            steps.push_back(std::move(step));
            continue;
        }
        const SolveReport& r = *step.report;
        const double a_norm = l2_norm(r.state.a);
        const double phi_norm = l2_norm(r.phi);
        if (q == 0.0) {
            step.checks.push_back({"q0_a_zero", a_norm == 0.0, a_norm, 0.0, true});
            step.checks.push_back({"q0_phi_zero", phi_norm == 0.0, phi_norm, 0.0, true});
        } else {
            step.checks.push_back({"phi_nonzero", phi_norm > 0.0, phi_norm, 0.0, true});
            if (r.state.ell != 0) step.checks.push_back({"a_nonzero", a_norm > 0.0, a_norm, 0.0, true});
        }
        if (r.state.ell == 0) step.checks.push_back({"ell0_a_zero", a_norm <= 1e-10, a_norm, 1e-10, true});
        state = r.state;
        phi_prev = r.Phi;
        steps.push_back(std::move(step));
    }
    return steps;
}

/// Solve at q = 0 with a = 0, then warm-start each later q of cfg.q_steps from
/// the previous solution.
inline std::vector<ContinuationStep> continuation(const VortexState& initial, const SolverConfig& cfg,
                                                  const PotentialSpec& potential = PotentialSpec::poly_double_zero()) {
    cfg.validate();
    if (cfg.q_steps.empty()) throw ConfigError("q_steps", "continuation needs at least one q value");
    return continuation_from(initial, cfg.q_steps, cfg, potential);
}

}  // namespace kgmv

#endif  // KGMV_MINIMIZER_HPP
