// Command-line front end for the nonlocal/local SKT lab.
//
// Exit codes: 0 all checks pass, 2 solver error, 3 config error, 4 invariant violation.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sktlab/sktlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sktlab;

namespace {

constexpr int kOk = 0;
constexpr int kSolverError = 2;
constexpr int kConfigError = 3;
constexpr int kInvariantViolation = 4;

struct GlobalOptions {
    std::string config;
    std::string out;
    int jobs = 1;
};

StudyConfig load(const GlobalOptions& g) {
    StudyConfig cfg = parse_config_file(g.config);
    if (!g.out.empty()) cfg.out_dir = g.out;
    return cfg;
}

json base_report(const std::string& command, const StudyConfig& cfg) {
    return {{"command", command}, {"config", emit_config(cfg)}};
}

int finish(json report, const std::vector<CheckResult>& checks, const fs::path& out) {
    const bool ok = all_passed(checks);
    report["checks"] = checks_json(checks);
    report["all_passed"] = ok;
    write_report(out / "report.json", report);
    for (const auto& c : checks)
        std::cout << (c.passed ? "ok   " : "FAIL ") << c.name << " value=" << format_double(c.value)
                  << " threshold=" << format_double(c.threshold) << '\n';
    return ok ? kOk : kInvariantViolation;
}

void write_trajectory(const fs::path& out, const Trajectory& traj) {
    write_diagnostics_csv(out / "diagnostics.csv", traj.diagnostics);
    write_snapshots(out / "snapshots", "u1", traj.species(0));
    write_snapshots(out / "snapshots", "u2", traj.species(1));
}

int simulate_nonlocal(const GlobalOptions& g) {
    const StudyConfig cfg = load(g);
    const Trajectory traj = run_nonlocal_case(cfg, cfg.nonlocal_n);
    const fs::path out = cfg.out_dir;
    write_trajectory(out, traj);
    json rep = base_report("simulate-nonlocal", cfg);
    rep["n"] = cfg.nonlocal_n;
    rep["steps"] = traj.steps;
    return finish(rep, trajectory_checks(traj, cfg.model, cfg.solver.positivity_tol), out);
}

int simulate_local(const GlobalOptions& g) {
    const StudyConfig cfg = load(g);
    const Trajectory traj = run_local_case(cfg);
    const fs::path out = cfg.out_dir;
    write_trajectory(out, traj);
    json rep = base_report("simulate-local", cfg);
    rep["steps"] = traj.steps;
    return finish(rep, trajectory_checks(traj, cfg.model, cfg.solver.positivity_tol), out);
}

int dual_solve(const GlobalOptions& g) {
    const StudyConfig cfg = load(g);
    const Grid grid = build_grid(cfg);
    const NonlocalOperator op = build_operator(cfg.kernel, cfg.nonlocal_n, grid);
    const Trajectory traj = NonlocalSolver(op, cfg.model, build_controls(cfg)).run(build_initial(cfg, grid));
    const Field psi_field(grid, -cfg.dual.psi_amplitude);
    const TimeField psi = [&](double) { return psi_field; };
    DualOptions opts;
    opts.picard_tol = cfg.dual.picard_tol;
    opts.max_iters = cfg.dual.max_iters;
    opts.subgrid_points = cfg.dual.subgrid_points;
    const int species = cfg.dual.species - 1;
    const CorollaryResult res = corollary_test_function(traj, cfg.model, species, cfg.dual.lambda, psi, op, opts);
    const double residual = corollary_residual(res, traj, cfg.model, species, cfg.dual.lambda, psi, op);

    const fs::path out = cfg.out_dir;
    std::vector<std::pair<double, Field>> series;
    for (std::size_t k = 0; k < res.tau.size(); ++k) series.emplace_back(res.tau[k], res.phi_in[k]);
    write_snapshots(out / "phi", "phi", series);
    write_iterations_csv(out / "iterations.csv", res.dual.iterations);

    double lowest = std::numeric_limits<double>::infinity();
    for (const Field& f : res.phi_in) lowest = std::min(lowest, min_value(f));
    const SlabSchedule& s = res.dual.schedule;
    std::vector<CheckResult> checks{
        {"nonnegativity", lowest >= -1e-10, lowest, -1e-10, "min of the test function"},
        {"contraction_bound", s.contraction_bound < 1.0, s.contraction_bound, 1.0, "2 t0 |a| |rho| per slab"},
        {"observed_contraction", s.observed_contraction < 1.0, s.observed_contraction, 1.0,
         "largest ratio of successive Picard increments"},
        {"residual", residual <= 10.0 * cfg.dual.picard_tol, residual, 10.0 * cfg.dual.picard_tol,
         "discrete L2 residual of the backward equation"}};
    json rep = base_report("dual-solve", cfg);
    rep["slab_length"] = s.t0;
    rep["slab_count"] = s.count;
    rep["iterations"] = res.dual.iterations.size();
    return finish(rep, checks, out);
}

int consistency_test(const GlobalOptions& g) {
    const StudyConfig cfg = load(g);
    const auto rows = run_consistency_test(cfg);
    const fs::path out = cfg.out_dir;
    write_consistency_csv(out / "consistency.csv", rows);
    bool finite = true;
    for (const auto& r : rows) finite = finite && std::isfinite(r.max_err);
    json rep = base_report("consistency-test", cfg);
    rep["function"] = std::string(to_string(cfg.consistency_function));
    return finish(rep, {{"errors_finite", finite, finite ? 1.0 : 0.0, 1.0, ""}}, out);
}

int lemma4_audit(const GlobalOptions& g) {
    const StudyConfig cfg = load(g);
    const Lemma4Audit audit = run_lemma4_audit(cfg);
    const fs::path out = cfg.out_dir;
    write_lemma4_csv(out / "lemma4.csv", audit);
    json rep = base_report("lemma4-audit", cfg);
    rep["p"] = audit.p;
    return finish(rep, {{"ratio_spread", audit.bounded, audit.spread, 4.0, "max/min of the ratio over n_list"}}, out);
}

int convergence_study(const GlobalOptions& g) {
    const StudyConfig cfg = load(g);
    const ConvergenceReport rep = run_convergence_study(cfg, g.jobs);
    const fs::path out = cfg.out_dir;
    write_convergence_csv(out / "convergence.csv", rep);
    for (const auto& r : rep.rows)
        std::cout << "n=" << r.n << " e_total=" << format_double(r.e_total) << '\n';
    json report = base_report("convergence-study", cfg);
    report["convergence"] = convergence_json(rep);
    report["observations"] = {
        {"strictly_decreasing", rep.strictly_decreasing()},
        {"note",
         "the limit theorem guarantees convergence of a subsequence only; monotone decrease of e_n is a "
         "numerical observation on this data, not a guaranteed property"}};
    return finish(report, convergence_checks(rep), out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal and local SKT cross-diffusion lab"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config, "Key-value configuration file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory (overrides output.dir)");
    app.add_option("--jobs", g.jobs, "Concurrent runs in the convergence study")->check(CLI::PositiveNumber);

    struct Command {
        const char* name;
        const char* help;
        int (*fn)(const GlobalOptions&);
    };
    const Command commands[] = {
        {"simulate-nonlocal", "Integrate the nonlocal system at nonlocal.n", simulate_nonlocal},
        {"simulate-local", "Integrate the local system", simulate_local},
        {"dual-solve", "Build the backward test function and check its residual", dual_solve},
        {"consistency-test", "Compare the rescaled operator with the Laplacian", consistency_test},
        {"lemma4-audit", "Bounded ratio of the operator norm to the W^{2,p} norm", lemma4_audit},
        {"convergence-study", "Distance between nonlocal and local solutions over study.n_list", convergence_study},
    };
    int (*selected)(const GlobalOptions&) = nullptr;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->fallthrough();
        sub->callback([&selected, fn = c.fn] { selected = fn; });
    }
    CLI11_PARSE(app, argc, argv);

    try {
        return selected(g);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kConfigError;
    } catch (const UnderresolvedKernel& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const SolverError& e) {
        std::cerr << "solver error at t=" << format_double(e.time()) << ": " << e.what() << '\n';
        return kSolverError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
