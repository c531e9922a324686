#ifndef KGMV_IO_HPP
#define KGMV_IO_HPP

// Run configuration (sectioned INI), text checkpoints, CSV export and the
// key = value report format.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kgmv/errors.hpp"
#include "kgmv/functionals.hpp"
#include "kgmv/grid.hpp"
#include "kgmv/minimizer.hpp"
#include "kgmv/potentials.hpp"
#include "kgmv/trialfn.hpp"

namespace kgmv {

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join(const std::vector<double>& xs, const char* sep = ",") {
    std::string s;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k) s += sep;
        s += format_double(xs[k]);
    }
    return s;
}

// ---------------------------------------------------------------- config

inline const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> cmds{"solve",    "continuation", "trial-scan", "gradcheck",
                                               "diagnose", "nonexist-demo", "export"};
    return cmds;
}

struct GridConfig {
    int n_r = 128, n_z = 128;
    double R = 40.0, Z = 40.0;
    AxiGrid make() const { return AxiGrid(n_r, n_z, R, Z); }
};

struct PhysicsConfig {
    int ell = 1;
    double q = 0.0;
    std::optional<double> sigma;  ///< defaults to the integral of the trial u^2
    double lambda = 12.0;         ///< trial torus radius of the initial guess
    double s0 = 1.0;
    PotentialSpec potential = PotentialSpec::poly_double_zero();
};

struct ScanConfig {
    std::vector<double> lambdas{8.0, 16.0, 32.0};
    std::vector<double> qs{0.0};
    unsigned threads = 0;
};

struct DemoConfig {
    std::vector<double> domain_sizes{10.0, 20.0, 40.0};
    double Z = 2.0;
    int n_z = 8;
    double dr = 0.125;
};

struct RunConfig {
    std::string command = "solve";
    GridConfig grid;
    PhysicsConfig physics;
    SolverConfig solver;
    ScanConfig scan;
    DemoConfig demo;
    std::string input;  ///< checkpoint consumed by diagnose / export / warm starts
    std::string output_dir = "out";
    std::uint64_t seed = 1;

    void validate() const {
        if (std::find(known_commands().begin(), known_commands().end(), command) == known_commands().end())
            throw ConfigError("command", "unknown command '" + command + "'");
        if (grid.n_r < 4) throw ConfigError("grid.n_r", "must be >= 4");
        if (grid.n_z < 4) throw ConfigError("grid.n_z", "must be >= 4");
        if (!(grid.R > 0.0)) throw ConfigError("grid.R", "must be positive");
        if (!(grid.Z > 0.0)) throw ConfigError("grid.Z", "must be positive");
        if (physics.q < 0.0 || !std::isfinite(physics.q)) throw ConfigError("q", "must be a finite value >= 0");
        if (physics.sigma && !(*physics.sigma > 0.0)) throw ConfigError("sigma", "must be positive");
        if (!(physics.lambda > 2.0)) throw ConfigError("lambda", "must exceed 2");
        const bool trial_based = command == "solve" || command == "continuation" || command == "trial-scan";
        if (trial_based && eval_potential(physics.potential, physics.s0).N >= 0.0)
            throw ConfigError("s0", "N(s0) must be negative");
        for (double q : scan.qs)
            if (q < 0.0) throw ConfigError("scan.q_list", "entries must be >= 0");
        for (double l : scan.lambdas)
            if (!(l > 2.0)) throw ConfigError("scan.lambda_list", "entries must exceed 2");
        solver.validate();
    }
};

namespace detail {

using boost::property_tree::ptree;

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        try {
            std::size_t used = 0;
            const std::string tok = item.substr(b, e - b + 1);
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError(key, "cannot parse list entry '" + item + "'");
        }
    }
    return out;
}

template <class T>
T get_value(const ptree& pt, const std::string& path, const std::string& key, T fallback) {
    const auto node = pt.get_optional<std::string>(path);
    if (!node) return fallback;
    std::istringstream is(*node);
    T v{};
    is >> v;
    if (is.fail() || !(is >> std::ws).eof()) throw ConfigError(key, "cannot parse '" + *node + "'");
    return v;
}

}  // namespace detail

/// Read a sectioned INI file:
///   [run] command, output_dir, seed, input
///   [grid] n_r, n_z, R, Z
///   [physics] ell, q, sigma, lambda, s0, potential, p
///   [solver] max_outer_iter, grad_tol, armijo_c1, backtrack, recenter_every,
///            q_steps | (q_max, q_count), direction, lbfgs_memory, phi_tol
///   [scan] lambda_list, q_list, threads
///   [demo] domain_sizes, Z, n_z, dr
inline RunConfig parse_config_stream(std::istream& in) {
    detail::ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("file", e.message() + " at line " + std::to_string(e.line()));
    }
    RunConfig c;
    using detail::get_value;
    c.command = get_value<std::string>(pt, "run.command", "command", c.command);
    c.output_dir = pt.get<std::string>("run.output_dir", c.output_dir);
    c.input = pt.get<std::string>("run.input", c.input);
    c.seed = get_value<std::uint64_t>(pt, "run.seed", "seed", c.seed);

    c.grid.n_r = get_value<int>(pt, "grid.n_r", "grid.n_r", c.grid.n_r);
    c.grid.n_z = get_value<int>(pt, "grid.n_z", "grid.n_z", c.grid.n_z);
    c.grid.R = get_value<double>(pt, "grid.R", "grid.R", c.grid.R);
    c.grid.Z = get_value<double>(pt, "grid.Z", "grid.Z", c.grid.Z);

    const double ell = get_value<double>(pt, "physics.ell", "ell", c.physics.ell);
    if (ell != std::floor(ell) || std::abs(ell) > 1000) throw ConfigError("ell", "must be an integer");
    c.physics.ell = static_cast<int>(ell);
    c.physics.q = get_value<double>(pt, "physics.q", "q", c.physics.q);
    if (pt.get_optional<std::string>("physics.sigma"))
        c.physics.sigma = get_value<double>(pt, "physics.sigma", "sigma", 0.0);
    c.physics.lambda = get_value<double>(pt, "physics.lambda", "lambda", c.physics.lambda);
    c.physics.s0 = get_value<double>(pt, "physics.s0", "s0", c.physics.s0);
    try {
        c.physics.potential.family = potential_family_from_string(
            pt.get<std::string>("physics.potential", to_string(c.physics.potential.family)));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("potential", e.what());
    }
    c.physics.potential.p = get_value<double>(pt, "physics.p", "p", c.physics.potential.p);
    c.physics.potential.s0 = c.physics.s0;

    SolverConfig& s = c.solver;
    s.max_outer_iter = get_value<int>(pt, "solver.max_outer_iter", "max_outer_iter", s.max_outer_iter);
    s.grad_tol = get_value<double>(pt, "solver.grad_tol", "grad_tol", s.grad_tol);
    s.armijo_c1 = get_value<double>(pt, "solver.armijo_c1", "armijo_c1", s.armijo_c1);
    s.backtrack = get_value<double>(pt, "solver.backtrack", "backtrack", s.backtrack);
    s.recenter_every = get_value<int>(pt, "solver.recenter_every", "recenter_every", s.recenter_every);
    s.lbfgs_memory = get_value<int>(pt, "solver.lbfgs_memory", "lbfgs_memory", s.lbfgs_memory);
    s.phi.tol = get_value<double>(pt, "solver.phi_tol", "phi_tol", s.phi.tol);
    const std::string dir = pt.get<std::string>("solver.direction", to_string(s.direction));
    if (dir == "lbfgs") s.direction = DescentDirection::LBFGS;
    else if (dir == "preconditioned_gradient") s.direction = DescentDirection::PreconditionedGradient;
    else throw ConfigError("direction", "expected lbfgs or preconditioned_gradient");
    if (auto qs = pt.get_optional<std::string>("solver.q_steps")) {
        s.q_steps = detail::parse_list("q_steps", *qs);
    } else {
        const double q_max = get_value<double>(pt, "solver.q_max", "q_max", 0.1);
        const int q_count = get_value<int>(pt, "solver.q_count", "q_count", 8);
        if (!(q_max > 0.0)) throw ConfigError("q_max", "must be positive");
        if (q_count < 1) throw ConfigError("q_count", "must be >= 1");
        s.q_steps = SolverConfig::geometric_q_steps(q_max, q_count);
    }

    if (auto v = pt.get_optional<std::string>("scan.lambda_list")) c.scan.lambdas = detail::parse_list("scan.lambda_list", *v);
    if (auto v = pt.get_optional<std::string>("scan.q_list")) c.scan.qs = detail::parse_list("scan.q_list", *v);
    c.scan.threads = get_value<unsigned>(pt, "scan.threads", "scan.threads", c.scan.threads);

    if (auto v = pt.get_optional<std::string>("demo.domain_sizes")) c.demo.domain_sizes = detail::parse_list("demo.domain_sizes", *v);
    c.demo.Z = get_value<double>(pt, "demo.Z", "demo.Z", c.demo.Z);
    c.demo.n_z = get_value<int>(pt, "demo.n_z", "demo.n_z", c.demo.n_z);
    c.demo.dr = get_value<double>(pt, "demo.dr", "demo.dr", c.demo.dr);

    c.validate();
    return c;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config_stream(in);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    return parse_config_stream(in);
}

// ------------------------------------------------------------ checkpoints

inline constexpr int checkpoint_format_version = 1;

struct Checkpoint {
    VortexState state;
    ScalarField Phi;
    double omega = 0.0;
    PotentialSpec potential;
};

inline Checkpoint make_checkpoint(const SolveReport& rep) { return {rep.state, rep.Phi, rep.omega, rep.potential}; }

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
    const AxiGrid& g = c.state.grid();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out << "# kgmv checkpoint\n";
    out << "format_version = " << checkpoint_format_version << "\n";
    out << "n_r = " << g.n_r() << "\nn_z = " << g.n_z() << "\n";
    out << "R = " << format_double(g.R()) << "\nZ = " << format_double(g.Z()) << "\n";
    out << "ell = " << c.state.ell << "\n";
    out << "q = " << format_double(c.state.q) << "\n";
    out << "sigma = " << format_double(c.state.sigma) << "\n";
    out << "omega = " << format_double(c.omega) << "\n";
    out << "potential = " << to_string(c.potential.family) << "\n";
    out << "potential_p = " << format_double(c.potential.p) << "\n";
    out << "potential_s0 = " << format_double(c.potential.s0) << "\n";
    out << "u_axis = " << to_string(c.state.u.axis_bc()) << "\n";
    out << "u_outer = " << to_string(c.state.u.outer_bc()) << "\n";
    auto block = [&](const char* name, const ScalarField& f) {
        out << "[" << name << "]\n";
        for (double v : f.values()) out << format_double(v) << "\n";
    };
    block("u", c.state.u);
    block("a", c.state.a);
    block("Phi", c.Phi);
    if (!out) throw IoError("write failed for '" + path + "'");
}

/// Reads a checkpoint and validates it. With `expected` set, the grid must
/// match it exactly.
inline Checkpoint load_checkpoint(const std::string& path, const AxiGrid* expected = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    std::map<std::string, std::string> header;
    std::map<std::string, std::vector<double>> blocks;
    std::string line, current;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw FormatError("malformed block header '" + line + "'");
            current = line.substr(1, line.size() - 2);
            if (blocks.count(current)) throw FormatError("duplicate block [" + current + "]");
            blocks[current];
            continue;
        }
        if (current.empty()) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw FormatError("malformed header line '" + line + "'");
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(' '), e = s.find_last_not_of(' ');
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            header[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        } else {
            char* end = nullptr;
            const double v = std::strtod(line.c_str(), &end);
            if (end == line.c_str() || *end != '\0') throw FormatError("bad value '" + line + "' in [" + current + "]");
            blocks[current].push_back(v);
        }
    }
    auto field = [&](const std::string& key) -> const std::string& {
        const auto it = header.find(key);
        if (it == header.end()) throw FormatError("checkpoint header lacks '" + key + "'");
        return it->second;
    };
    auto number = [&](const std::string& key) {
        const std::string& s = field(key);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') throw FormatError("header '" + key + "' is not a number");
        return v;
    };
    if (number("format_version") != checkpoint_format_version)
        throw FormatError("unsupported checkpoint format_version " + field("format_version"));
    const int n_r = static_cast<int>(number("n_r")), n_z = static_cast<int>(number("n_z"));
    const double R = number("R"), Z = number("Z");
    if (n_r < 4 || n_z < 4 || !(R > 0.0) || !(Z > 0.0)) throw FormatError("invalid grid in checkpoint header");
    const AxiGrid g(n_r, n_z, R, Z);
    if (expected && !(*expected == g))
        throw FormatError("checkpoint grid " + std::to_string(n_r) + "x" + std::to_string(n_z) +
                          " does not match the expected " + std::to_string(expected->n_r()) + "x" +
                          std::to_string(expected->n_z()));

    PotentialSpec pot;
    try {
        pot.family = potential_family_from_string(field("potential"));
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    pot.p = number("potential_p");
    pot.s0 = number("potential_s0");
    const int ell = static_cast<int>(number("ell"));
    const AxisBC u_axis = field("u_axis") == "dirichlet0" ? AxisBC::Dirichlet0 : AxisBC::Neumann0;
    const OuterBC u_outer = field("u_outer") == "neumann0" ? OuterBC::Neumann0 : OuterBC::Dirichlet0;

    auto take = [&](const char* name, AxisBC axis, OuterBC outer) {
        const auto it = blocks.find(name);
        if (it == blocks.end()) throw FormatError(std::string("checkpoint lacks block [") + name + "]");
        if (it->second.size() != g.size())
            throw FormatError(std::string("block [") + name + "] holds " + std::to_string(it->second.size()) +
                              " values, the header grid needs " + std::to_string(g.size()));
        ScalarField f(g, axis, outer);
        std::copy(it->second.begin(), it->second.end(), f.values().begin());
        return f;
    };
    VortexState st{take("u", u_axis, u_outer), take("a", AxisBC::Dirichlet0, OuterBC::Dirichlet0), ell,
                   number("q"), number("sigma")};
    ScalarField Phi = take("Phi", AxisBC::Neumann0, OuterBC::Dirichlet0);
    return Checkpoint{std::move(st), std::move(Phi), number("omega"), pot};
}

// -------------------------------------------------------------------- CSV

inline void export_field_csv(const ScalarField& f, const std::string& path) {
    const AxiGrid& g = f.grid();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "r,x3,value\n";
    for (int i = 0; i < g.n_r(); ++i)
        for (int j = 0; j < g.n_z(); ++j)
            out << format_double(g.r(i)) << ',' << format_double(g.z(j)) << ',' << format_double(f(i, j)) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

/// Named columns, one row per entry, full-precision numbers.
inline void export_table_csv(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != columns.size()) throw std::invalid_argument("export_table_csv: row width mismatch");
        out << join(row) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline void export_scan_csv(const std::vector<ScanRow>& rows, const std::string& path) {
    std::vector<std::vector<double>> data;
    for (const auto& r : rows) data.push_back({r.lambda, r.q, r.Lambda, r.term1, r.term2, r.term3, r.term4});
    export_table_csv({"lambda", "q", "Lambda", "term1", "term2", "term3", "term4"}, data, path);
}

// ----------------------------------------------------------------- report

/// Ordered key = value report. Numbers are printed with 17 significant digits,
/// so identical runs give identical files.
class Report {
public:
    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = value;
                return;
            }
        entries_.emplace_back(key, value);
    }
    void set(const std::string& key, const char* value) { set(key, std::string(value)); }
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    void set(const std::string& key, int value) { set(key, std::to_string(value)); }
    void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

    /// check.<name> = pass|fail with its measured value and threshold.
    void add_check(const InvariantCheck& c, const std::string& prefix = "") {
        const std::string base = "check." + prefix + c.name;
        set(base, c.pass ? "pass" : "fail");
        set(base + ".measured", c.measured);
        set(base + ".threshold", c.threshold);
        set(base + ".hard", c.hard);
        if (!c.pass && c.hard) hard_failure_ = true;
    }
    void add_checks(const std::vector<InvariantCheck>& cs, const std::string& prefix = "") {
        for (const auto& c : cs) add_check(c, prefix);
    }
    void mark_failure() { hard_failure_ = true; }
    bool hard_failure() const { return hard_failure_; }

    std::optional<std::string> get(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        return std::nullopt;
    }
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string str() const {
        std::string s;
        for (const auto& [k, v] : entries_) s += k + " = " + v + "\n";
        return s;
    }
    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot write report '" + path + "'");
        out << str();
        if (!out) throw IoError("write failed for '" + path + "'");
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    bool hard_failure_ = false;
};

/// Scalars, residuals and invariant checks of a solve.
inline void add_solve_report(Report& r, const SolveReport& s, const std::string& prefix = "") {
    const std::string p = prefix;
    r.set(p + "mode", to_string(s.mode));
    r.set(p + "potential", s.potential.id());
    r.set(p + "ell", s.state.ell);
    r.set(p + "q", s.state.q);
    r.set(p + "sigma", s.sigma);
    r.set(p + "omega", s.omega);
    r.set(p + "K_q", s.K_q);
    r.set(p + "energy.total", s.energy.total);
    r.set(p + "energy.dirichlet_u", s.energy.dirichlet_u);
    r.set(p + "energy.magnetic", s.energy.magnetic);
    r.set(p + "energy.centrifugal", s.energy.centrifugal);
    r.set(p + "energy.potential", s.energy.potential);
    r.set(p + "energy.charge_term", s.energy.charge_term);
    r.set(p + "Lambda", s.energy.Lambda);
    r.set(p + "residual.z1", s.residuals.z1);
    r.set(p + "residual.z3", s.residuals.z3);
    r.set(p + "residual.z4", s.residuals.z4);
    r.set(p + "iterations", s.iterations);
    r.set(p + "converged", s.converged);
    r.set(p + "collapsed", s.collapsed);
    r.set(p + "u_l2.initial", s.initial_l2);
    r.set(p + "u_l2.final", s.final_l2);
    r.set(p + "recenter_shift", s.total_shift);
    r.add_checks(s.checks, prefix);
}

/// Timestamps and other run metadata kept apart from the deterministic report.
inline void write_metadata(const std::string& path, const std::string& command) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    out << "command = " << command << "\nfinished_utc = " << buf << "\n";
}

}  // namespace kgmv

#endif  // KGMV_IO_HPP
