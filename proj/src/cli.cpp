#include "releq/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "releq/document.hpp"

namespace releq {

namespace {

using nlohmann::json;

struct CommonFlags {
    std::string input;
    std::string out_path;
    std::string format = "json";
};

struct SolverFlags {
    int max_iterations = 200;
    double damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 0.5;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
    cmd->add_option("--max-iter", flags.max_iterations, "Levenberg-Marquardt iteration cap")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--damping", flags.damping, "Initial LM damping")->check(CLI::PositiveNumber);
    cmd->add_option("--damping-up", flags.damping_up, "Damping factor on a rejected step")
        ->check(CLI::Range(1.0 + 1e-12, 1e6));
    cmd->add_option("--damping-down", flags.damping_down, "Damping factor on an accepted step")
        ->check(CLI::Range(1e-6, 1.0));
}

SolverOptions solver_options(const SolverFlags& flags, double tol) {
    SolverOptions opts;
    opts.tol_res = tol;
    opts.max_iterations = flags.max_iterations;
    opts.initial_damping = flags.damping;
    opts.damping_increase = flags.damping_up;
    opts.damping_decrease = flags.damping_down;
    return opts;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_format) {
    cmd->add_option("input", flags.input, "Problem document (JSON)")->required();
    cmd->add_option("--out", flags.out_path, "Write the full report here");
    if (with_format) {
        cmd->add_option("--format", flags.format, "Report format")
            ->check(CLI::IsMember({"json", "csv"}));
    }
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

// Full report goes to --out when given, otherwise after the summary on stdout.
void emit(std::ostream& out, const CommonFlags& flags, const std::string& summary,
          const std::string& report) {
    out << summary << '\n';
    if (flags.out_path.empty()) {
        out << report;
    } else {
        write_file_atomic(flags.out_path, report);
    }
}

double default_t_end(const Problem& problem) {
    return 2.0 * std::numbers::pi / problem.max_frequency();
}

int cmd_verify(const CommonFlags& flags, double tol, double t_end_flag, int samples,
               double integrator_tol, std::ostream& out) {
    const ProblemDocument doc = read_document(flags.input);
    const Problem problem = doc.problem();
    const Configuration config = doc.configuration();

    const ResidualReport res = residual(config, problem);
    json gaps = json::array();
    for (int l = 2; l <= config.size(); ++l) gaps.push_back(to_json(lemma_identity_gap(config, problem, l)));

    json report;
    report["residual"] = to_json(res);
    report["lemma_gaps"] = gaps;
    report["weighted_centroid_residual"] = to_json(weighted_centroid_residual(config, problem));
    const double t_end = t_end_flag > 0.0 ? t_end_flag : default_t_end(problem);
    report["t_end"] = t_end;
    try {
        report["relative_equilibrium_deviation"] =
            relative_equilibrium_deviation(config, problem, t_end, samples, integrator_tol);
    } catch (const SingularityError& e) {
        report["relative_equilibrium_deviation"] = nullptr;
        report["deviation_error"] = e.what();
        report["deviation_error_time"] = e.time();
    }
    const bool ok = res.max_norm <= tol;
    report["tolerance"] = tol;
    report["verified"] = ok;

    const std::string text = report.dump(2) + "\n";
    out << text;
    if (!flags.out_path.empty()) write_file_atomic(flags.out_path, text);
    return ok ? kExitOk : kExitVerificationFailed;
}

int cmd_solve(const CommonFlags& flags, const SolverOptions& opts, const std::string& document_path,
              std::ostream& out) {
    const ProblemDocument doc = read_document(flags.input);
    const Problem problem = doc.problem();
    const SolveResult r = solve_from_seed(doc.configuration(), problem, opts);
    const std::string summary = "solve: termination=" + std::string(to_string(r.termination)) +
                                " iterations=" + std::to_string(r.iterations) +
                                " residual_max=" + fmt(r.residual_max);
    if (!document_path.empty()) {
        ProblemDocument solved = ProblemDocument::from(problem, r.config);
        solved.metadata = doc.metadata;
        solved.metadata["termination"] = std::string(to_string(r.termination));
        solved.metadata["iterations"] = std::to_string(r.iterations);
        solved.metadata["residual_max"] = json(r.residual_max).dump();
        write_file_atomic(document_path, write_document(solved));
    }
    emit(out, flags, summary, to_json(r).dump(2) + "\n");
    return r.converged() ? kExitOk : kExitVerificationFailed;
}

int cmd_search(const CommonFlags& flags, const MultistartOptions& opts, std::ostream& out) {
    const Problem problem = read_document(flags.input).problem();
    const MultistartResult r = multistart_search(problem, opts);
    std::string report;
    if (flags.format == "csv") {
        std::ostringstream s;
        write_fingerprints_csv(s, r);
        report = s.str();
    } else {
        report = to_json(r).dump(2) + "\n";
    }
    const std::string summary = "search: classes=" + std::to_string(r.classes.size()) +
                                " trials=" + std::to_string(r.trials) +
                                " converged=" + std::to_string(r.converged) +
                                " dropped=" + std::to_string(r.dropped);
    emit(out, flags, summary, report);
    return kExitOk;
}

int cmd_continue(const CommonFlags& flags, const SolverOptions& opts, double a_target, int steps,
                 std::ostream& out) {
    const ProblemDocument doc = read_document(flags.input);
    const Problem problem = doc.problem();
    (void)Exponent(a_target);
    const SolveResult start = solve_from_seed(doc.configuration(), problem, opts);
    if (!start.converged()) {
        out << "continue: starting configuration did not converge ("
            << to_string(start.termination) << ")\n";
        return kExitVerificationFailed;
    }
    const ContinuationResult r = continuation_in_exponent(start, problem, a_target, steps, opts);
    std::string report;
    if (flags.format == "csv") {
        std::ostringstream s;
        write_continuation_csv(s, r);
        report = s.str();
    } else {
        report = to_json(r).dump(2) + "\n";
    }
    std::string summary = "continue: steps=" + std::to_string(r.steps.size()) + "/" +
                          std::to_string(steps) + " last_good_a=" + fmt(r.last_good_exponent);
    if (!r.completed) summary += " failure=\"" + r.failure + "\"";
    emit(out, flags, summary, report);
    return r.completed ? kExitOk : kExitVerificationFailed;
}

int cmd_probe(const CommonFlags& flags, int trials, std::uint64_t seed, const ProbeOptions& opts,
              const std::vector<double>& omegas, std::ostream& out) {
    const Problem problem = read_document(flags.input).problem();
    std::vector<ProbeReport> reports;
    if (omegas.empty()) {
        reports.push_back(bound_probe(problem, trials, seed, opts));
    } else {
        reports = frequency_sweep(problem, omegas, trials, seed, opts);
    }
    std::string report;
    if (flags.format == "csv") {
        std::ostringstream s;
        write_sweep_csv(s, reports);
        report = s.str();
    } else if (omegas.empty()) {
        report = to_json(reports.front()).dump(2) + "\n";
    } else {
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(to_json(r));
        report = arr.dump(2) + "\n";
    }
    std::string summary = "probe:";
    for (const auto& r : reports) {
        summary += " [omega_scale=" + fmt(r.omega_scale) + " classes=" +
                   std::to_string(r.classes_found) + " c_hat=" + fmt(r.min_pairwise_distance) +
                   " C_hat=" + fmt(r.max_point_norm) + "]";
    }
    emit(out, flags, summary, report);
    return kExitOk;
}

int cmd_integrate(const CommonFlags& flags, double t_end_flag, double tol, int samples,
                  std::ostream& out) {
    const ProblemDocument doc = read_document(flags.input);
    const Problem problem = doc.problem();
    const Configuration config = doc.configuration();
    const double t_end = t_end_flag > 0.0 ? t_end_flag : default_t_end(problem);

    IntegratorOptions opts;
    opts.tol = tol;
    for (int s = 1; s <= samples; ++s) opts.sample_times.push_back(t_end * s / samples);
    const PhaseState initial = rigid_rotation_state(config, problem);
    const Trajectory traj = integrate(initial, problem, t_end, opts);

    const double deviation = rigid_rotation_deviation(traj, config, problem);
    const ConservedQuantities c0 = conserved_quantities(traj.samples.front(), problem);
    const ConservedQuantities c1 = conserved_quantities(traj.samples.back(), problem);
    const double energy_drift =
        std::abs(c1.energy - c0.energy) / (c0.kinetic + std::abs(c0.potential));

    std::ostringstream csv;
    write_trajectory_csv(csv, traj);
    const std::string summary = "integrate: t_end=" + fmt(t_end) + " deviation=" + fmt(deviation) +
                                " energy_drift=" + fmt(energy_drift) +
                                " steps=" + std::to_string(traj.accepted_steps) +
                                " rejected=" + std::to_string(traj.rejected_steps);
    emit(out, flags, summary, csv.str());
    return kExitOk;
}

int resolve_jobs(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("RELEQ_JOBS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return v;
        } catch (const std::exception&) {
        }
        throw DomainError("RELEQ_JOBS must be a positive integer");
    }
    return 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Relative equilibria of the power-law n-body problem", "releq"};
    app.require_subcommand(1);

    CommonFlags common;
    SolverFlags solver_flags;
    double tol = -1.0;
    double t_end = -1.0;
    double integrator_tol = 1e-10;
    int samples = 64;
    int trials = 100;
    std::uint64_t seed = 0;
    int jobs = 0;
    double a_target = 0.0;
    int steps = 10;
    std::vector<double> omegas;
    std::string document_path;

    auto* verify = app.add_subcommand("verify", "Check a configuration against the equilibrium criterion");
    add_common(verify, common, false);
    verify->add_option("--tol", tol, "Pass threshold on the residual max-norm (default 1e-10)");
    verify->add_option("--t-end", t_end, "Integration horizon (default 2*pi/max frequency)");
    verify->add_option("--samples", samples, "Sample times for the dynamic check")->check(CLI::PositiveNumber);
    verify->add_option("--integrator-tol", integrator_tol, "Integrator local error tolerance");

    auto* solve = app.add_subcommand("solve", "Solve for an equilibrium from the document's positions");
    add_common(solve, common, false);
    solve->add_option("--tol", tol, "Relative residual tolerance (default 1e-12)");
    solve->add_option("--document", document_path, "Also write the solution as a problem document");
    add_solver_flags(solve, solver_flags);

    auto* search = app.add_subcommand("search", "Multistart search for equilibrium classes");
    add_common(search, common, true);
    search->add_option("--trials", trials, "Number of random seeds")->check(CLI::PositiveNumber);
    search->add_option("--seed", seed, "RNG seed");
    search->add_option("--jobs", jobs, "Worker threads (falls back to RELEQ_JOBS)");
    search->add_option("--tol", tol, "Relative residual tolerance (default 1e-12)");
    add_solver_flags(search, solver_flags);

    auto* cont = app.add_subcommand("continue", "Track an equilibrium as the exponent varies");
    add_common(cont, common, true);
    cont->add_option("--a-target", a_target, "Final exponent (< -1/2)")->required();
    cont->add_option("--steps", steps, "Number of geometric steps")->check(CLI::PositiveNumber);
    cont->add_option("--tol", tol, "Relative residual tolerance (default 1e-12)");
    add_solver_flags(cont, solver_flags);

    auto* probe = app.add_subcommand("probe", "Empirical minimum separation and maximum norm");
    add_common(probe, common, true);
    probe->add_option("--trials", trials, "Number of random seeds")->check(CLI::PositiveNumber);
    probe->add_option("--seed", seed, "RNG seed");
    probe->add_option("--jobs", jobs, "Worker threads (falls back to RELEQ_JOBS)");
    probe->add_option("--omega", omegas, "Frequency scale factors for a sweep")->delimiter(',');
    probe->add_option("--tol", tol, "Relative residual tolerance (default 1e-12)");
    add_solver_flags(probe, solver_flags);

    auto* integ = app.add_subcommand("integrate", "Integrate the rigidly rotating initial data");
    add_common(integ, common, false);
    integ->add_option("--t-end", t_end, "Integration horizon (default 2*pi/max frequency)");
    integ->add_option("--tol", tol, "Integrator local error tolerance (default 1e-10)");
    integ->add_option("--samples", samples, "Number of output samples")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitBadInput;
    }

    try {
        if (*verify) return cmd_verify(common, tol > 0 ? tol : 1e-10, t_end, samples, integrator_tol, out);
        const SolverOptions sopts = solver_options(solver_flags, tol > 0 ? tol : 1e-12);
        if (*solve) return cmd_solve(common, sopts, document_path, out);
        if (*search) {
            MultistartOptions mopts;
            mopts.trials = trials;
            mopts.rng_seed = seed;
            mopts.jobs = resolve_jobs(jobs);
            mopts.solver = sopts;
            return cmd_search(common, mopts, out);
        }
        if (*cont) return cmd_continue(common, sopts, a_target, steps, out);
        if (*probe) {
            ProbeOptions popts;
            popts.jobs = resolve_jobs(jobs);
            popts.solver = sopts;
            return cmd_probe(common, trials, seed, popts, omegas, out);
        }
        if (*integ) return cmd_integrate(common, t_end, tol > 0 ? tol : 1e-10, samples, out);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const DocumentError& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitBadInput;
    } catch (const SingularityError& e) {
        err << "error: " << e.what() << " (t = " << e.time() << ")\n";
        return kExitVerificationFailed;
    }
    return kExitBadInput;
}

}  // namespace releq
