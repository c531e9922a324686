#include "catch_amalgamated.hpp"

#include <cmath>

#include "kgmv/diagnostics.hpp"
#include "kgmv/gradcheck.hpp"
#include "oracles.hpp"

using namespace kgmv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SolveReport solved(double q, int ell = 1) {
    const AxiGrid g(48, 48, 16.0, 16.0);
    const TorusTrial t = build_torus_trial(6.0, 1.0, g, ell);
    SolverConfig cfg;
    cfg.direction = DescentDirection::LBFGS;
    return minimize(VortexState::with_zero_a(t.field, ell, q, t.sigma_lambda), cfg);
}

const SolveReport& solved_q0() {
    static const SolveReport rep = solved(0.0);
    return rep;
}

const SolveReport& solved_charged() {
    static const SolveReport rep = solved(0.15);
    return rep;
}

}  // namespace

TEST_CASE("uncharged solution carries no fields") {
    const SolveReport& rep = solved_q0();
    REQUIRE(rep.converged);
    const FieldSet f = gauge_fields(rep);
    for (const ScalarField* x : {&f.E_r, &f.E_z, &f.H_r, &f.H_z, &f.rho, &f.j_theta}) CHECK(x->max_abs() == 0.0);
    CHECK(f.solenoid_ratio == 0.0);
    for (std::size_t k = 0; k < f.Omega.size(); ++k) CHECK(f.Omega[k] == rep.omega);
}

TEST_CASE("angular momentum at q = 0 is minus sigma and quantized") {
    const SolveReport& rep = solved_q0();
    CHECK_THAT(angular_momentum(rep), WithinRel(-rep.sigma, 1e-10));
    const AngularMomentumDistribution d = angular_momentum_distribution(rep);
    CHECK(d.quantized);
    CHECK(d.mean == -1.0);
    double total = 0.0;
    for (double w : d.bin_weights) total += w;
    CHECK_THAT(total, WithinRel(rep.sigma, 1e-10));
    CHECK(d.bin_edges.size() == 21);
    CHECK_THROWS_AS(angular_momentum_distribution(rep, 0), std::invalid_argument);
}

TEST_CASE("no winding gives zero angular momentum") {
    const AxiGrid g(16, 16, 6.0, 6.0);
    SolveReport rep{VortexState::with_zero_a(ScalarField::from_function(g, [](double r, double z) {
                                                 return std::exp(-r * r - z * z);
                                             }),
                                             0, 0.3, 1.0),
                    ScalarField(g), ScalarField(g), PotentialSpec::poly_double_zero()};
    rep.omega = 0.7;
    CHECK(angular_momentum(rep) == 0.0);
}

TEST_CASE("charged solution: Omega in (0, omega], negative angular momentum, small residuals") {
    const SolveReport& rep = solved_charged();
    REQUIRE(rep.converged);
    CHECK(rep.all_hard_checks_pass());
    const FieldSet f = gauge_fields(rep);
    for (std::size_t k = 0; k < f.Omega.size(); ++k) {
        CHECK(f.Omega[k] > 0.0);
        CHECK(f.Omega[k] <= rep.omega);
        CHECK(f.rho[k] >= 0.0);
    }
    CHECK(f.H_z.max_abs() > 0.0);
    CHECK(f.E_r.max_abs() > 0.0);
    CHECK(f.hole_radius > 0.0);
    CHECK(f.solenoid_ratio > 0.0);
    CHECK(angular_momentum(rep) < 0.0);
    CHECK_FALSE(angular_momentum_distribution(rep).quantized);

    const PdeResiduals r = pde_residuals(rep);
    CHECK(r.z1 <= 1e-5);
    CHECK(r.z3 <= 1e-5);
    CHECK(r.z4 <= 1e-5);
    CHECK(r.continuity <= 1e-12);
}

TEST_CASE("residuals of the trivial state vanish") {
    const AxiGrid g(8, 8, 2.0, 2.0);
    const SolveReport rep{VortexState::with_zero_a(ScalarField(g), 1, 0.2, 1.0), ScalarField(g), ScalarField(g),
                          PotentialSpec::poly_double_zero()};
    const PdeResiduals r = pde_residuals(rep);
    CHECK(r.z1 == 0.0);
    CHECK(r.z3 == 0.0);
    CHECK(r.z4 == 0.0);
    CHECK(r.continuity == 0.0);
    CHECK(azimuthal_divergence_at(3.7, 1.3, 0.01) == 0.0);
}

TEST_CASE("magnetic field matches the Cartesian curl oracle at second order") {
    auto a = [](double r, double z) { return r * r * std::exp(-0.5 * (r * r + (z - 0.3) * (z - 0.3))); };
    double prev = 0.0;
    for (int n : {32, 64, 128}) {
        const AxiGrid g(n, n, 8.0, 8.0);
        const auto [Hr, Hz] = magnetic_field(ScalarField::from_function(g, a, AxisBC::Dirichlet0));
        double err = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const oracle::Vec3 c = oracle::curl_A(a, g.r(i), g.z(j));
                err = std::max({err, std::abs(Hr(i, j) - c[0]), std::abs(Hz(i, j) - c[2])});
                CHECK(std::abs(c[1]) < 1e-8);
            }
        if (prev > 0.0) CHECK(std::log2(prev / err) > 1.8);
        prev = err;
    }
}

TEST_CASE("double well: energy grows by 2 pi Z l^2 ln 2 per doubling") {
    const std::vector<DoubleWellRow> one = doublewell_divergence_demo({10.0, 20.0, 40.0});
    DoubleWellOptions o2;
    o2.ell = 2;
    const std::vector<DoubleWellRow> two = doublewell_divergence_demo({10.0, 20.0}, o2);
    DoubleWellOptions o0;
    o0.ell = 0;
    const std::vector<DoubleWellRow> zero = doublewell_divergence_demo({10.0, 20.0, 40.0}, o0);

    for (const auto* rows : {&one, &two, &zero})
        for (const DoubleWellRow& r : *rows) CHECK(r.converged);
    const std::vector<double> inc = energy_increments(one);
    REQUIRE(inc.size() == 2);
    const double predicted = doublewell_doubling_increment(1, 2.0);
    for (double d : inc) CHECK_THAT(d, WithinRel(predicted, 0.3));
    CHECK_THAT(inc[1], WithinRel(inc[0], 0.3));
    CHECK_THAT(energy_increments(two)[0] / inc[0], WithinRel(4.0, 0.3));
    for (const DoubleWellRow& r : zero) CHECK(std::abs(r.energy) < 1e-6);
}

TEST_CASE("magnetostatic collapse and its control") {
    CollapseDemoConfig cfg;
    cfg.grid = AxiGrid(32, 32, 16.0, 16.0);
    const SolveReport rep = magnetostatic_collapse_demo(cfg);
    CHECK(rep.collapsed);
    CHECK(rep.final_l2 <= 1e-8 * rep.initial_l2);
    CHECK(rep.max_energy_increase <= 0.0);
    const InvariantCheck* flag = rep.find_check("collapsed (consistent with absence of magnetostatic vortices)");
    REQUIRE(flag != nullptr);
    CHECK(flag->pass);

    const SolveReport ctl = magnetostatic_control_run(cfg);
    CHECK(ctl.converged);
    CHECK_FALSE(ctl.collapsed);
    CHECK(ctl.final_l2 > 1e-3 * ctl.initial_l2);

    SolverConfig sc;
    sc.mode = ChargeMode::ZeroFrequency;
    const SolveReport zero = minimize(VortexState::with_zero_a(ScalarField(cfg.grid), 1, 0.0, 1.0), sc,
                                      PotentialSpec::quadratic());
    CHECK(zero.collapsed);
}
