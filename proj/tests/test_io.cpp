#include "catch_amalgamated.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <unistd.h>

#include "kgmv/io.hpp"
#include "kgmv/run.hpp"

using namespace kgmv;
using Catch::Matchers::WithinRel;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kgmv_test_io_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error_key(const std::string& text) {
    try {
        parse_config_string(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

const char* small_solve = R"(
[run]
command = solve
[grid]
n_r = 40
n_z = 40
R = 14
Z = 14
[physics]
ell = 1
lambda = 5
)";

SolveReport small_charged_solution() {
    const AxiGrid g(40, 40, 14.0, 14.0);
    const TorusTrial t = build_torus_trial(5.0, 1.0, g, 1);
    SolverConfig c;
    c.direction = DescentDirection::LBFGS;
    return minimize(VortexState::with_zero_a(t.field, 1, 0.1, t.sigma_lambda), c);
}

}  // namespace

TEST_CASE("config defaults and parsed values") {
    const RunConfig d = parse_config_string("");
    CHECK(d.command == "solve");
    CHECK(d.grid.n_r == 128);
    CHECK(d.grid.R == 40.0);
    CHECK(d.physics.ell == 1);
    CHECK(d.physics.q == 0.0);
    CHECK_FALSE(d.physics.sigma);
    CHECK(d.solver.q_steps.size() == 9);

    const RunConfig c = parse_config_string(R"(
[run]
command = continuation
seed = 42
[grid]
n_r = 32
[physics]
ell = 2
q = 0.25
sigma = 7.5
potential = power_defocus
p = 3
[solver]
q_steps = 0, 0.1, 0.2
direction = lbfgs
grad_tol = 1e-7
[scan]
lambda_list = 8,16
)");
    CHECK(c.command == "continuation");
    CHECK(c.seed == 42u);
    CHECK(c.grid.n_r == 32);
    CHECK(c.physics.ell == 2);
    CHECK(c.physics.q == 0.25);
    CHECK(*c.physics.sigma == 7.5);
    CHECK(c.physics.potential.family == PotentialFamily::PowerDefocus);
    CHECK(c.physics.potential.p == 3.0);
    CHECK(c.solver.q_steps == std::vector<double>{0.0, 0.1, 0.2});
    CHECK(c.solver.direction == DescentDirection::LBFGS);
    CHECK(c.solver.grad_tol == 1e-7);
    CHECK(c.scan.lambdas == std::vector<double>{8.0, 16.0});
}

TEST_CASE("invalid configs name the offending key") {
    CHECK(config_error_key("[physics]\nq = -0.1\n") == "q");
    CHECK(config_error_key("[physics]\nell = 1.5\n") == "ell");
    CHECK(config_error_key("[physics]\nsigma = 0\n") == "sigma");
    CHECK(config_error_key("[physics]\nq = abc\n") == "q");
    CHECK(config_error_key("[run]\ncommand = fly\n") == "command");
    CHECK(config_error_key("[solver]\ngrad_tol = -1\n") == "grad_tol");
    CHECK(config_error_key("[solver]\nq_steps = 0, x\n") == "q_steps");
    CHECK(config_error_key("[solver]\ndirection = newton\n") == "direction");
    CHECK(config_error_key("[physics]\npotential = cubic\n") == "potential");
    CHECK(config_error_key("[physics]\npotential = quadratic\n") == "s0");
    CHECK(config_error_key("[run]\ncommand = nonexist-demo\n[physics]\npotential = quadratic\n").empty());
    CHECK_THROWS_AS(load_config("/nonexistent/kgmv.ini"), IoError);
}

TEST_CASE("checkpoint round trip") {
    const fs::path dir = scratch_dir("checkpoint");
    const SolveReport rep = small_charged_solution();
    REQUIRE(rep.converged);
    const std::string path = (dir / "cp.txt").string();
    save_checkpoint(make_checkpoint(rep), path);
    const Checkpoint cp = load_checkpoint(path, &rep.state.grid());

    auto max_rel = [](const ScalarField& a, const ScalarField& b) {
        double m = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
            if (a[k] != b[k]) m = std::max(m, std::abs(a[k] - b[k]) / std::abs(b[k]));
        return m;
    };
    CHECK(max_rel(cp.state.u, rep.state.u) <= 1e-15);
    CHECK(max_rel(cp.state.a, rep.state.a) <= 1e-15);
    CHECK(max_rel(cp.Phi, rep.Phi) <= 1e-15);
    CHECK(cp.omega == rep.omega);
    CHECK(cp.state.ell == 1);
    CHECK(cp.state.q == rep.state.q);
    CHECK(cp.state.sigma == rep.state.sigma);
    CHECK(cp.potential.id() == rep.potential.id());
    CHECK(cp.state.u.axis_bc() == rep.state.u.axis_bc());

    const ReducedFunctional F(rep.state.grid(), rep.state.u.outer_bc(), rep.potential);
    const double E0 = F.E_sigma(rep.state, rep.Phi).total, E1 = F.E_sigma(cp.state, cp.Phi).total;
    CHECK(std::abs(E1 - E0) <= 1e-14 * std::abs(E0));

    SECTION("grid mismatch") {
        const AxiGrid other(41, 40, 14.0, 14.0);
        CHECK_THROWS_AS(load_checkpoint(path, &other), FormatError);
    }
    SECTION("corrupted files") {
        std::string text = slurp(path);
        const std::string bad_version = std::regex_replace(text, std::regex("format_version = 1"), "format_version = 9");
        std::ofstream((dir / "v.txt").string()) << bad_version;
        CHECK_THROWS_AS(load_checkpoint((dir / "v.txt").string()), FormatError);
        const std::string short_block = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
        std::ofstream((dir / "s.txt").string()) << short_block;
        CHECK_THROWS_AS(load_checkpoint((dir / "s.txt").string()), FormatError);
        std::ofstream((dir / "n.txt").string()) << std::regex_replace(text, std::regex("n_r = 40"), "n_r = 39");
        CHECK_THROWS_AS(load_checkpoint((dir / "n.txt").string()), FormatError);
        CHECK_THROWS_AS(load_checkpoint((dir / "missing.txt").string()), IoError);
    }
}

TEST_CASE("field CSV shape and independent re-import") {
    const fs::path dir = scratch_dir("csv");
    const AxiGrid g4(4, 4, 1.0, 1.0);
    export_field_csv(ScalarField::from_function(g4, [](double r, double z) { return r + z; }),
                     (dir / "f4.csv").string());
    std::ifstream in(dir / "f4.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "r,x3,value");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 16);

    // Midpoint quadrature over the exported nodes, recomputing the spacing from
    // the file alone.
    const AxiGrid g(37, 23, 5.0, 3.0);
    const ScalarField f = ScalarField::from_function(g, [](double r, double z) { return std::exp(-r * r - z * z); });
    export_field_csv(f, (dir / "f.csv").string());
    std::ifstream fin(dir / "f.csv");
    std::getline(fin, line);
    std::vector<std::array<double, 3>> pts;
    while (std::getline(fin, line)) {
        std::array<double, 3> p{};
        std::sscanf(line.c_str(), "%lf,%lf,%lf", &p[0], &p[1], &p[2]);
        pts.push_back(p);
    }
    std::set<double> rs, zs;
    for (const auto& p : pts) {
        rs.insert(p[0]);
        zs.insert(p[1]);
    }
    const double dr = 2.0 * *rs.begin(), dz = (*zs.rbegin() - *zs.begin()) / (zs.size() - 1);
    double total = 0.0;
    for (const auto& p : pts) total += 2.0 * M_PI * p[0] * dr * dz * p[2];
    CHECK_THAT(total, WithinRel(integrate_volume(f), 1e-12));
}

TEST_CASE("scan CSV schema") {
    const fs::path dir = scratch_dir("scan");
    const auto rows = lambda_scan({6.0, 8.0}, {0.0}, 1.0, AxiGrid(60, 30, 15.0, 7.5), 1);
    export_scan_csv(rows, (dir / "scan.csv").string());
    std::ifstream in(dir / "scan.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "lambda,q,Lambda,term1,term2,term3,term4");
    CHECK_THROWS_AS(export_table_csv({"a", "b"}, {{1.0}}, (dir / "bad.csv").string()), std::invalid_argument);
    CHECK_THROWS_AS(export_field_csv(ScalarField(AxiGrid(4, 4, 1.0, 1.0)), "/nonexistent/dir/f.csv"), IoError);
}

TEST_CASE("report entries and hard failure tracking") {
    Report r;
    r.set("x", 0.1);
    r.set("n", 3);
    r.set("flag", true);
    r.set("x", 0.5);
    CHECK(r.str() == "x = 0.5\nn = 3\nflag = true\n");
    r.add_check({"soft", false, 1.0, 0.5, false});
    CHECK_FALSE(r.hard_failure());
    r.add_check({"hard", false, 2.0, 1.0, true});
    CHECK(r.hard_failure());
    CHECK(*r.get("check.hard") == "fail");
    CHECK(*r.get("check.hard.measured") == "2");
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("default solve exits 0 with Lambda below one") {
    RunConfig c;
    c.output_dir = scratch_dir("solve_default").string();
    std::ostringstream log;
    CHECK(run(c, log) == exit_ok);
    const std::string report = slurp(fs::path(c.output_dir) / "report.txt");
    std::istringstream lines(report);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(lines, line)) {
        const auto eq = line.find(" = ");
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    CHECK(std::stod(kv.at("Lambda")) < 1.0);
    CHECK(std::stod(kv.at("residual.z1")) <= 1e-5);
    CHECK(kv.at("converged") == "true");
    CHECK(kv.at("exit_status") == "0");
    CHECK(fs::exists(fs::path(c.output_dir) / "metadata.txt"));
    CHECK(fs::exists(fs::path(c.output_dir) / "checkpoint.txt"));
}

TEST_CASE("seeded runs write byte-identical reports") {
    for (const std::string command : {"gradcheck", "solve"}) {
        RunConfig c = parse_config_string(small_solve);
        c.command = command;
        c.physics.q = 0.2;
        c.seed = 7;
        std::ostringstream log;
        std::string reports[2];
        for (int k = 0; k < 2; ++k) {
            c.output_dir = scratch_dir(command + std::to_string(k)).string();
            CHECK(run(c, log) == exit_ok);
            reports[k] = slurp(fs::path(c.output_dir) / "report.txt");
        }
        CHECK_FALSE(reports[0].empty());
        CHECK(reports[0] == reports[1]);
    }
}

TEST_CASE("continuation resumes from a checkpoint at the saved energy") {
    RunConfig c = parse_config_string(small_solve);
    c.command = "continuation";
    c.solver.direction = DescentDirection::LBFGS;
    c.solver.q_steps = {0.0, 0.05, 0.1};
    c.output_dir = scratch_dir("cont").string();
    std::ostringstream log;
    REQUIRE(run(c, log) == exit_ok);
    const Checkpoint saved = load_checkpoint((fs::path(c.output_dir) / "checkpoint_step1.txt").string());
    const ReducedFunctional F(saved.state.grid(), saved.state.u.outer_bc(), PotentialSpec::poly_double_zero());
    const double saved_energy = F.E_sigma(saved.state, saved.Phi).total;

    RunConfig resume = c;
    resume.input = (fs::path(c.output_dir) / "checkpoint_step1.txt").string();
    const std::vector<ContinuationStep> steps =
        continuation_from(saved.state, {0.05, 0.1}, resume.solver, PotentialSpec::poly_double_zero(), &saved.Phi);
    REQUIRE(steps.size() == 2);
    REQUIRE(steps[0].report);
    CHECK(steps[0].report->iterations <= 2);
    CHECK(std::abs(steps[0].report->energy.total - saved_energy) <= 1e-12 * saved_energy);

    resume.output_dir = scratch_dir("cont_resume").string();
    CHECK(run(resume, log) == exit_ok);
    const std::string report = slurp(fs::path(resume.output_dir) / "report.txt");
    CHECK(report.find("step0.q = 0.050000000000000003") != std::string::npos);
    CHECK(report.find("step1.q = 0.10000000000000001") != std::string::npos);
}

TEST_CASE("export and errors reach the report") {
    RunConfig c = parse_config_string(small_solve);
    c.output_dir = scratch_dir("exp_src").string();
    std::ostringstream log;
    REQUIRE(run(c, log) == exit_ok);
    RunConfig e = c;
    e.command = "export";
    e.input = (fs::path(c.output_dir) / "checkpoint.txt").string();
    e.output_dir = scratch_dir("exp").string();
    CHECK(run(e, log) == exit_ok);
    for (const char* f : {"u.csv", "a.csv", "Phi.csv", "phi.csv"}) CHECK(fs::exists(fs::path(e.output_dir) / f));

    e.input = (fs::path(c.output_dir) / "nothing.txt").string();
    CHECK(run(e, log) == exit_error);
    CHECK(slurp(fs::path(e.output_dir) / "report.txt").find("error = IoError") != std::string::npos);

    RunConfig m = c;
    m.solver.max_outer_iter = 2;
    m.output_dir = scratch_dir("maxit").string();
    CHECK(run(m, log) == exit_error);
    CHECK(slurp(fs::path(m.output_dir) / "report.txt").find("error = MaxIterations") != std::string::npos);
}
