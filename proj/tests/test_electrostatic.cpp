#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "kgmv/electrostatic.hpp"
#include "kgmv/gradcheck.hpp"
#include "oracles.hpp"

using namespace kgmv;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ScalarField gaussian(const AxiGrid& g, double amp = 1.0) {
    return ScalarField::from_function(
        g, [&](double r, double z) { return amp * std::exp(-((r - 1.5) * (r - 1.5) + z * z)); });
}

double rel_diff(const ScalarField& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        num += (a[k] - b[k]) * (a[k] - b[k]);
        den += b[k] * b[k];
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("q = 0 gives Phi = 0") {
    const AxiGrid g(12, 12, 4.0, 4.0);
    const ScalarField phi = solve_phi(gaussian(g), 0.0);
    CHECK(phi.max_abs() == 0.0);
    CHECK(solve_phi(ScalarField(g), 0.7).max_abs() == 0.0);
}

TEST_CASE("CG solve matches the dense direct solve on 16x16") {
    const AxiGrid g(16, 16, 5.0, 5.0);
    const ScalarField u = gaussian(g);
    for (double q : {0.5, 0.05, 2.0}) {
        PhiSolveStats st;
        const ScalarField phi = solve_phi(u, q, {1e-13, 20000}, nullptr, &st);
        CHECK(st.relative_residual <= 1e-13);
        CHECK(rel_diff(phi, oracle::dense_phi(u, q)) <= 1e-10);
    }
}

TEST_CASE("factored solver agrees with plain CG") {
    const AxiGrid g(24, 24, 6.0, 6.0);
    PhiSolver solver(0.4, {1e-13, 1000});
    const ScalarField u1 = gaussian(g), u2 = gaussian(g, 1.2);
    const ScalarField a1 = solver.solve(u1);
    const ScalarField a2 = solver.solve(u2, &a1);
    auto reference = [](const ScalarField& u) {
        const ScalarField phi = solve_phi(u, 0.4, {1e-13, 20000});
        return std::vector<double>(phi.values().begin(), phi.values().end());
    };
    CHECK(rel_diff(a1, reference(u1)) < 1e-11);
    CHECK(rel_diff(a2, reference(u2)) < 1e-11);
    CHECK(solver.last_stats().iterations < 20);
}

TEST_CASE("maximum principle 0 <= q Phi <= 1 on random inputs") {
    const AxiGrid g(16, 16, 5.0, 5.0);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> Q(0.01, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        const VortexState s = random_smooth_state(g, trial % 3, 0.0, 1.0, rng());
        ScalarField u = s.u;
        const double scale = std::exp(std::uniform_real_distribution<double>(-2.0, 3.0)(rng));
        for (auto& v : u.values()) v *= scale;
        const double q = Q(rng);
        const ScalarField phi = solve_phi(u, q, {1e-12, 20000});
        CHECK(q * phi.max_value() <= 1.0 + 1e-10);
        CHECK(q * phi.min_value() >= -1e-10);
    }
}

TEST_CASE("q = 1 bound for a large amplitude") {
    const AxiGrid g(16, 16, 5.0, 5.0);
    const ScalarField phi = solve_phi(gaussian(g, 30.0), 1.0);
    CHECK(phi.max_value() <= 1.0 + 1e-10);
    CHECK(phi.min_value() >= -1e-10);
}

TEST_CASE("warm start converges in fewer iterations") {
    const AxiGrid g(32, 32, 6.0, 6.0);
    const ScalarField u = gaussian(g);
    PhiSolveStats cold, warm;
    const ScalarField phi = solve_phi(u, 0.3, {}, nullptr, &cold);
    solve_phi(u, 0.3, {}, &phi, &warm);
    CHECK(warm.iterations < cold.iterations);
    CHECK(warm.iterations <= 1);
}

TEST_CASE("iteration budget exhaustion raises NoConvergence") {
    const AxiGrid g(32, 32, 6.0, 6.0);
    CHECK_THROWS_AS(solve_phi(gaussian(g), 0.3, {1e-12, 2}), NoConvergence);
}

TEST_CASE("coupling scales like q^2 for small q") {
    const AxiGrid g(24, 24, 6.0, 6.0);
    const ScalarField u = gaussian(g);
    const std::vector<double> qs{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    const auto samples = smallq_coupling(u, qs);
    CHECK_THAT(loglog_slope(samples), WithinAbs(2.0, 0.1));
    for (const auto& s : samples) CHECK(s.coupling >= 0.0);
    for (std::size_t k = 1; k < samples.size(); ++k) CHECK(samples[k].coupling > samples[k - 1].coupling);
    const auto pair = smallq_coupling(u, {0.02, 0.01});
    CHECK_THAT(pair[0].coupling / pair[1].coupling, WithinRel(4.0, 0.05));
    CHECK(smallq_coupling(u, {0.0})[0].coupling == 0.0);
    CHECK_THROWS_AS(smallq_coupling(u, {-1.0}), std::invalid_argument);
}
