#include "catch_amalgamated.hpp"

#include <cmath>

#include "kgmv/minimizer.hpp"
#include "kgmv/trialfn.hpp"

using namespace kgmv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const AxiGrid grid(40, 40, 14.0, 14.0);

VortexState trial_state(int ell, double q) {
    const TorusTrial t = build_torus_trial(5.0, 1.0, grid, ell);
    return VortexState::with_zero_a(t.field, ell, q, t.sigma_lambda);
}

SolverConfig lbfgs() {
    SolverConfig c;
    c.direction = DescentDirection::LBFGS;
    return c;
}

}  // namespace

TEST_CASE("geometric q schedule") {
    const std::vector<double> q = SolverConfig::geometric_q_steps(0.8, 4);
    REQUIRE(q.size() == 5);
    CHECK(q[0] == 0.0);
    CHECK(q[1] == 0.1);
    CHECK(q[2] == 0.2);
    CHECK(q[4] == 0.8);
    CHECK(SolverConfig::geometric_q_steps(0.5, 1) == std::vector<double>{0.0, 0.5});
}

TEST_CASE("configuration errors name the offending key") {
    auto key_of = [](SolverConfig c) {
        try {
            c.validate();
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string();
    };
    SolverConfig c;
    CHECK(key_of(c).empty());
    c.grad_tol = 0.0;
    CHECK(key_of(c) == "grad_tol");
    c = {};
    c.backtrack = 1.0;
    CHECK(key_of(c) == "backtrack");
    c = {};
    c.q_steps = {0.1, 0.2};
    CHECK(key_of(c) == "q_steps");
    c = {};
    c.max_outer_iter = 0;
    CHECK(key_of(c) == "max_outer_iter");

    try {
        minimize(trial_state(1, -0.1), SolverConfig{});
        FAIL("negative q accepted");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "q");
    }
    try {
        minimize(trial_state(1, 0.0), SolverConfig{}, PotentialSpec::double_well());
        FAIL("ineligible potential accepted");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "potential");
    }
}

TEST_CASE("zero initial profile in fixed-charge mode raises ZeroMass") {
    CHECK_THROWS_AS(minimize(VortexState::with_zero_a(ScalarField(grid), 1, 0.0, 1.0), SolverConfig{}), ZeroMass);
}

TEST_CASE("iteration budget exhaustion raises MaxIterations with the partial report") {
    SolverConfig c;
    c.max_outer_iter = 3;
    try {
        minimize(trial_state(1, 0.0), c);
        FAIL("budget not enforced");
    } catch (const MaxIterations& e) {
        CHECK(e.report().iterations == 3);
        CHECK_FALSE(e.report().converged);
        CHECK(e.report().final_objective < e.report().initial_objective);
        const InvariantCheck* conv = e.report().find_check("converged");
        REQUIRE(conv != nullptr);
        CHECK_FALSE(conv->pass);
    }
}

TEST_CASE("q = 0 solve: monotone energy, residuals, invariants") {
    SolverConfig c;
    std::vector<double> objective;
    c.on_iteration = [&](const IterationInfo& info) { objective.push_back(info.objective); };
    const SolveReport rep = minimize(trial_state(1, 0.0), c);
    REQUIRE(rep.converged);
    CHECK(rep.all_hard_checks_pass());
    for (std::size_t k = 1; k < objective.size(); ++k) CHECK(objective[k] <= objective[k - 1]);
    CHECK(rep.final_objective < rep.initial_objective);
    CHECK(rep.energy.Lambda < 1.0);
    CHECK(rep.residuals.z1 <= 1e-5);
    CHECK(rep.residuals.z3 == 0.0);
    CHECK(rep.residuals.z4 == 0.0);
    CHECK(rep.state.u.min_value() >= 0.0);
    CHECK(rep.phi.max_abs() == 0.0);
    CHECK(rep.state.a.max_abs() == 0.0);
    CHECK_THAT(rep.omega, WithinRel(rep.sigma / rep.K_q, 1e-14));
    CHECK(rep.omega > 0.0);
    CHECK(rep.omega < 1.0);

    SECTION("warm start from the converged profile stops at once") {
        const SolveReport again = minimize(rep.state, SolverConfig{});
        CHECK(again.iterations <= 2);
        CHECK_THAT(again.energy.total, WithinRel(rep.energy.total, 1e-12));
    }
    SECTION("quasi-Newton directions reach the same minimum") {
        const SolveReport q = minimize(trial_state(1, 0.0), lbfgs());
        REQUIRE(q.converged);
        CHECK(q.iterations < rep.iterations);
        CHECK_THAT(q.energy.Lambda, WithinRel(rep.energy.Lambda, 1e-6));
    }
}

TEST_CASE("charged solve satisfies the maximum principles and the sign condition") {
    const SolveReport rep = minimize(trial_state(1, 0.2), lbfgs());
    REQUIRE(rep.converged);
    for (const char* name : {"max_principle_phi", "max_principle_a", "sign_condition", "omega_interval", "K_bounds",
                             "energy_monotone", "u_nonnegative", "residual_z1", "residual_z3", "residual_z4"}) {
        const InvariantCheck* c = rep.find_check(name);
        REQUIRE(c != nullptr);
        INFO(name << " measured " << c->measured);
        CHECK(c->pass);
    }
    CHECK(rep.K_q < integrate_nodes(grid, [&](std::size_t k, int) { return rep.state.u[k] * rep.state.u[k]; }));
    CHECK(rep.state.a.max_value() > 0.0);
    CHECK(rep.state.a.max_value() * 0.2 <= 1.0);
    CHECK(rep.phi.max_value() * 0.2 <= rep.omega);
}

TEST_CASE("zero-frequency mode reports collapse instead of raising") {
    SolverConfig c;
    c.mode = ChargeMode::ZeroFrequency;
    const SolveReport rep = minimize(trial_state(1, 0.0), c, PotentialSpec::quadratic());
    CHECK(rep.collapsed);
    CHECK(rep.final_l2 <= c.collapse_ratio * rep.initial_l2);
    const SolveReport trivial = minimize(VortexState::with_zero_a(ScalarField(grid), 1, 0.0, 1.0), c,
                                         PotentialSpec::quadratic());
    CHECK(trivial.collapsed);
    CHECK(trivial.iterations == 0);
}

TEST_CASE("continuation with winding: fields switch on with q") {
    SolverConfig c = lbfgs();
    c.q_steps = SolverConfig::geometric_q_steps(0.2, 3);
    const std::vector<ContinuationStep> steps = continuation(trial_state(1, 0.0), c);
    REQUIRE(steps.size() == 4);
    for (const ContinuationStep& s : steps) {
        INFO("q = " << s.q);
        REQUIRE(s.report);
        CHECK(s.error.empty());
        CHECK(s.report->all_hard_checks_pass());
        for (const InvariantCheck& chk : s.checks) {
            INFO(chk.name);
            CHECK(chk.pass);
        }
    }
    CHECK(steps[0].checks.size() == 2);
    CHECK(steps[3].report->energy.Lambda > steps[0].report->energy.Lambda);
    for (std::size_t k = 1; k < steps.size(); ++k)
        CHECK(steps[k].report->omega > steps[k - 1].report->omega);
}

TEST_CASE("continuation without winding keeps a = 0") {
    SolverConfig c = lbfgs();
    c.q_steps = {0.0, 0.1};
    const std::vector<ContinuationStep> steps = continuation(trial_state(0, 0.0), c);
    REQUIRE(steps.size() == 2);
    REQUIRE(steps[1].report);
    CHECK(steps[1].report->state.a.max_abs() == 0.0);
    CHECK(steps[1].report->phi.max_abs() > 0.0);
    bool has_ell0 = false;
    for (const InvariantCheck& chk : steps[1].checks) {
        CHECK(chk.pass);
        has_ell0 = has_ell0 || chk.name == "ell0_a_zero";
    }
    CHECK(has_ell0);
}
