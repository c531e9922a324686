#ifndef KGMV_RUN_HPP
#define KGMV_RUN_HPP

// Command dispatch behind the command-line tool. Every command writes
// report.txt (deterministic) and metadata.txt (timestamps) into the output
// directory.

#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kgmv/diagnostics.hpp"
#include "kgmv/gradcheck.hpp"
#include "kgmv/io.hpp"
#include "kgmv/minimizer.hpp"
#include "kgmv/trialfn.hpp"

namespace kgmv {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_error = 2 };

namespace detail {

inline std::string path_in(const RunConfig& c, const std::string& name) {
    return (std::filesystem::path(c.output_dir) / name).string();
}

/// Torus trial on the configured grid, or the state stored in `input`.
inline VortexState initial_state(const RunConfig& c, std::optional<ScalarField>* phi = nullptr) {
    if (!c.input.empty()) {
        const AxiGrid g = c.grid.make();
        Checkpoint cp = load_checkpoint(c.input, &g);
        if (phi) *phi = cp.Phi;
        return cp.state;
    }
    const TorusTrial t = build_torus_trial(c.physics.lambda, c.physics.s0, c.grid.make(), c.physics.ell);
    return VortexState::with_zero_a(t.field, c.physics.ell, c.physics.q, c.physics.sigma.value_or(t.sigma_lambda));
}

inline void export_state(const RunConfig& c, const SolveReport& rep, const std::string& suffix = "") {
    export_field_csv(rep.state.u, path_in(c, "u" + suffix + ".csv"));
    export_field_csv(rep.state.a, path_in(c, "a" + suffix + ".csv"));
    export_field_csv(rep.phi, path_in(c, "phi" + suffix + ".csv"));
}

inline void cmd_solve(const RunConfig& c, Report& r) {
    std::optional<ScalarField> phi;
    VortexState s = initial_state(c, &phi);
    if (c.input.empty()) s.q = c.physics.q;
    const SolveReport rep = minimize(s, c.solver, c.physics.potential, phi ? &*phi : nullptr);
    add_solve_report(r, rep);
    r.set("angular_momentum", angular_momentum(rep));
    save_checkpoint(make_checkpoint(rep), path_in(c, "checkpoint.txt"));
    export_state(c, rep);
}

inline void cmd_continuation(const RunConfig& c, Report& r) {
    std::optional<ScalarField> phi;
    const VortexState s = initial_state(c, &phi);
    std::vector<ContinuationStep> steps;
    if (c.input.empty()) {
        steps = continuation(s, c.solver, c.physics.potential);
    } else {
        // Resume: re-solve at the saved q, then the scheduled values above it.
        std::vector<double> qs{s.q};
        for (double q : c.solver.q_steps)
            if (q > s.q) qs.push_back(q);
        steps = continuation_from(s, qs, c.solver, c.physics.potential, phi ? &*phi : nullptr);
    }
    std::vector<std::vector<double>> table;
    double largest = -1.0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const ContinuationStep& st = steps[k];
        const std::string p = "step" + std::to_string(k) + ".";
        r.set(p + "q", st.q);
        r.set(p + "error", st.error.empty() ? "none" : st.error);
        if (!st.report) {
            r.mark_failure();
            continue;
        }
        add_solve_report(r, *st.report, p);
        r.add_checks(st.checks, p);
        if (st.report->converged) {
            largest = st.q;
            save_checkpoint(make_checkpoint(*st.report), path_in(c, "checkpoint_step" + std::to_string(k) + ".txt"));
        }
        table.push_back({st.q, st.report->energy.Lambda, st.report->omega, st.report->energy.total,
                         static_cast<double>(st.report->iterations), st.report->converged ? 1.0 : 0.0});
    }
    r.set("steps", static_cast<int>(steps.size()));
    r.set("largest_converged_q", largest);
    export_table_csv({"q", "Lambda", "omega", "energy", "iterations", "converged"}, table,
                     path_in(c, "continuation.csv"));
}

inline void cmd_trial_scan(const RunConfig& c, Report& r) {
    const std::vector<ScanRow> rows = lambda_scan(c.scan.lambdas, c.scan.qs, c.physics.s0, c.grid.make(),
                                                  c.physics.ell, c.physics.potential, c.solver.phi, c.scan.threads);
    bool below_one_charged = false;
    double worst_sum = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const ScanRow& row = rows[k];
        const std::string p = "scan" + std::to_string(k) + ".";
        r.set(p + "lambda", row.lambda);
        r.set(p + "q", row.q);
        r.set(p + "Lambda", row.Lambda);
        r.set(p + "term1", row.term1);
        r.set(p + "term2", row.term2);
        r.set(p + "term3", row.term3);
        r.set(p + "term4", row.term4);
        const double sum = row.term1 + row.term2 + row.term3 + row.term4;
        worst_sum = std::max(worst_sum, std::abs(sum - row.Lambda) / std::abs(row.Lambda));
        if (row.q > 0.0 && row.Lambda < 1.0) below_one_charged = true;
    }
    r.add_check({"term_decomposition", worst_sum <= 1e-12, worst_sum, 1e-12, true});
    r.add_check({"charged_trial_below_one", below_one_charged, below_one_charged ? 1.0 : 0.0, 1.0, false});
    export_scan_csv(rows, path_in(c, "scan.csv"));
}

inline void cmd_gradcheck(const RunConfig& c, Report& r) {
    const VortexState s = random_smooth_state(c.grid.make(), c.physics.ell, c.physics.q,
                                              c.physics.sigma.value_or(10.0), c.seed);
    const GradCheckResult g = gradcheck(s, c.physics.potential, 1e-5, 4, c.seed);
    r.set("seed", std::to_string(c.seed));
    r.set("step", g.step);
    for (std::size_t k = 0; k < g.directions.size(); ++k) {
        const std::string p = "direction" + std::to_string(k) + ".";
        r.set(p + "analytic", g.directions[k].analytic);
        r.set(p + "finite_difference", g.directions[k].finite_difference);
        r.set(p + "rel_error", g.directions[k].rel_error);
    }
    r.set("max_rel_error", g.max_rel_error);
    r.add_check({"gradient_exact", g.max_rel_error <= 1e-6, g.max_rel_error, 1e-6, true});
}

inline void cmd_diagnose(const RunConfig& c, Report& r) {
    std::optional<ScalarField> phi;
    VortexState s = initial_state(c, &phi);
    if (c.input.empty()) s.q = c.physics.q;
    const SolveReport rep = minimize(s, c.solver, c.physics.potential, phi ? &*phi : nullptr);
    add_solve_report(r, rep);
    const FieldSet f = gauge_fields(rep);
    const PdeResiduals res = pde_residuals(rep);
    const AngularMomentumDistribution d = angular_momentum_distribution(rep);
    r.set("angular_momentum", angular_momentum(rep));
    r.set("angular_momentum.per_particle_mean", d.mean);
    r.set("angular_momentum.quantized", d.quantized);
    r.set("residual.continuity", res.continuity);
    r.set("solenoid.hole_radius", f.hole_radius);
    r.set("solenoid.ratio", f.solenoid_ratio);
    r.set("structural.transverse_components", "none (azimuthal reduction)");
    double omega_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.Omega.size(); ++k)
        if (rep.state.u[k] > 0.0) omega_min = std::min(omega_min, f.Omega[k]);
    r.set("Omega.min_on_support", omega_min);
    r.add_check({"continuity_exact", res.continuity <= 1e-12, res.continuity, 1e-12, true});
    if (rep.state.q == 0.0)
        r.add_check({"quantized_angular_momentum", d.quantized, d.mean, -static_cast<double>(rep.state.ell), true});
    std::vector<std::vector<double>> hist;
    for (std::size_t b = 0; b < d.bin_weights.size(); ++b)
        hist.push_back({d.bin_edges[b], d.bin_edges[b + 1], d.bin_weights[b]});
    export_table_csv({"bin_low", "bin_high", "weight"}, hist, path_in(c, "angular_momentum_hist.csv"));
    export_field_csv(f.E_r, path_in(c, "E_r.csv"));
    export_field_csv(f.E_z, path_in(c, "E_z.csv"));
    export_field_csv(f.H_r, path_in(c, "H_r.csv"));
    export_field_csv(f.H_z, path_in(c, "H_z.csv"));
    export_field_csv(f.Omega, path_in(c, "Omega.csv"));
    export_field_csv(f.rho, path_in(c, "rho.csv"));
    export_field_csv(f.j_theta, path_in(c, "j_theta.csv"));
}

inline void cmd_nonexist_demo(const RunConfig& c, Report& r) {
    r.set("note", "numerical evidence by scaling, not a proof");
    std::vector<std::vector<double>> table;
    std::vector<double> first_increment;
    for (int ell : {1, 2, 0}) {
        DoubleWellOptions o;
        o.ell = ell;
        o.Z = c.demo.Z;
        o.n_z = c.demo.n_z;
        o.dr = c.demo.dr;
        o.solver = c.solver;
        const std::vector<DoubleWellRow> rows = doublewell_divergence_demo(c.demo.domain_sizes, o);
        const std::string p = "doublewell.ell" + std::to_string(ell) + ".";
        for (std::size_t k = 0; k < rows.size(); ++k) {
            r.set(p + "R" + std::to_string(k), rows[k].R);
            r.set(p + "energy" + std::to_string(k), rows[k].energy);
            r.set(p + "converged" + std::to_string(k), rows[k].converged);
            table.push_back({static_cast<double>(ell), rows[k].R, rows[k].Z, rows[k].energy,
                             static_cast<double>(rows[k].iterations)});
        }
        const std::vector<double> inc = energy_increments(rows);
        for (std::size_t k = 0; k < inc.size(); ++k) r.set(p + "increment" + std::to_string(k), inc[k]);
        if (ell != 0) {
            r.set(p + "predicted_doubling_increment", doublewell_doubling_increment(ell, c.demo.Z));
            bool increasing = true, steady = true;
            for (std::size_t k = 0; k < inc.size(); ++k) {
                increasing = increasing && inc[k] > 0.0;
                if (k > 0) steady = steady && std::abs(inc[k] - inc[k - 1]) <= 0.3 * std::abs(inc[k - 1]);
            }
            r.add_check({"doublewell_ell" + std::to_string(ell) + "_energy_increasing", increasing,
                         inc.empty() ? 0.0 : inc.front(), 0.0, false});
            r.add_check({"doublewell_ell" + std::to_string(ell) + "_log_growth", steady,
                         inc.size() > 1 ? inc[1] / inc[0] : 0.0, 0.3, false});
            if (!inc.empty()) first_increment.push_back(inc.front());
        } else {
            double spread = 0.0;
            for (double d : inc) spread = std::max(spread, std::abs(d));
            r.add_check({"doublewell_ell0_bounded", spread <= 1e-6, spread, 1e-6, false});
        }
    }
    if (first_increment.size() == 2) {
        const double ratio = first_increment[1] / first_increment[0];
        r.set("doublewell.ell_ratio", ratio);
        r.add_check({"doublewell_ell_squared_scaling", std::abs(ratio - 4.0) <= 1.2, ratio, 4.0, false});
    }
    export_table_csv({"ell", "R", "Z", "energy", "iterations"}, table, path_in(c, "doublewell.csv"));

    CollapseDemoConfig cc;
    cc.solver = c.solver;
    const SolveReport col = magnetostatic_collapse_demo(cc);
    add_solve_report(r, col, "collapse.");
    const SolveReport ctl = magnetostatic_control_run(cc);
    add_solve_report(r, ctl, "control.");
    r.add_check({"control_not_collapsed", !ctl.collapsed, ctl.final_l2, 0.0, false});
}

inline void cmd_export(const RunConfig& c, Report& r) {
    if (c.input.empty()) throw ConfigError("input", "export needs a checkpoint");
    const Checkpoint cp = load_checkpoint(c.input);
    export_field_csv(cp.state.u, path_in(c, "u.csv"));
    export_field_csv(cp.state.a, path_in(c, "a.csv"));
    export_field_csv(cp.Phi, path_in(c, "Phi.csv"));
    ScalarField phi = cp.Phi;
    for (auto& v : phi.values()) v *= cp.omega;
    export_field_csv(phi, path_in(c, "phi.csv"));
    r.set("input", c.input);
    r.set("omega", cp.omega);
    r.set("u.integral", integrate_volume(cp.state.u));
}

}  // namespace detail

/// Run one configured command. Returns 0 when every hard check passed, 1 when
/// one failed, 2 on an error (named in the report).
inline int run(const RunConfig& c, std::ostream& log) {
    std::filesystem::create_directories(c.output_dir);
    Report r;
    r.set("command", c.command);
    r.set("grid", std::to_string(c.grid.n_r) + "x" + std::to_string(c.grid.n_z) + " R=" + format_double(c.grid.R) +
                      " Z=" + format_double(c.grid.Z));
    r.set("potential", c.physics.potential.id());
    int code = exit_ok;
    try {
        if (c.command == "solve") detail::cmd_solve(c, r);
        else if (c.command == "continuation") detail::cmd_continuation(c, r);
        else if (c.command == "trial-scan") detail::cmd_trial_scan(c, r);
        else if (c.command == "gradcheck") detail::cmd_gradcheck(c, r);
        else if (c.command == "diagnose") detail::cmd_diagnose(c, r);
        else if (c.command == "nonexist-demo") detail::cmd_nonexist_demo(c, r);
        else if (c.command == "export") detail::cmd_export(c, r);
        else throw ConfigError("command", "unknown command '" + c.command + "'");
        if (r.hard_failure()) code = exit_check_failed;
    } catch (const MaxIterations& e) {
        add_solve_report(r, e.report());
        r.set("error", e.name());
        r.set("error.message", e.what());
        code = exit_error;
    } catch (const Error& e) {
        r.set("error", e.name());
        r.set("error.message", e.what());
        code = exit_error;
    }
    r.set("exit_status", code);
    r.write(detail::path_in(c, "report.txt"));
    write_metadata(detail::path_in(c, "metadata.txt"), c.command);
    log << c.command << ": " << (code == exit_ok ? "all hard checks passed" : code == exit_check_failed
                                                                              ? "hard check failed"
                                                                              : "error")
        << " (report in " << detail::path_in(c, "report.txt") << ")\n";
    return code;
}

}  // namespace kgmv

#endif  // KGMV_RUN_HPP
