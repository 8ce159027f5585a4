#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sktlab/config.hpp"
#include "sktlab/dual_solver.hpp"
#include "sktlab/local_solver.hpp"
#include "sktlab/nonlocal_solver.hpp"

namespace sktlab {

/// Sample count per radius used for the second-moment normalizer everywhere in the harness.
inline constexpr int kC1Resolution = 4096;

inline SpeciesPair build_initial(const StudyConfig& cfg, const Grid& grid) {
    const InitialSpec& init = cfg.init;
    auto one = [&](const SpeciesInit& s) {
        switch (init.type) {
            case InitialType::Constant: return Field(grid, s.value);
            case InitialType::Gaussian:
                return Field::sample(grid, [&](double x, double y) {
                    double v = s.base;
                    for (std::size_t k = 0; k < s.widths.size(); ++k) {
                        double d2 = 0.0;
                        const double dx = x - s.centers[k * grid.dimension()];
                        d2 += dx * dx;
                        if (grid.dimension() == 2) {
                            const double dy = y - s.centers[k * 2 + 1];
                            d2 += dy * dy;
                        }
                        v += s.amplitudes[k] * std::exp(-d2 / (2.0 * s.widths[k] * s.widths[k]));
                    }
                    return v;
                });
            case InitialType::Cosine:
                return Field::sample(grid, [&](double x, double y) {
                    double c = std::cos(s.mode * std::numbers::pi * x / grid.extent(0));
                    if (grid.dimension() == 2) c *= std::cos(s.mode * std::numbers::pi * y / grid.extent(1));
                    return std::max(0.0, s.base + s.amplitude * c);
                });
        }
        return Field(grid);
    };
    return {one(init.species[0]), one(init.species[1])};
}

inline RunControls build_controls(const StudyConfig& cfg) {
    RunControls ctl;
    ctl.dt_safety = cfg.solver.dt_safety;
    ctl.positivity_tol = cfg.solver.positivity_tol;
    ctl.diag_stride = cfg.solver.diag_stride;
    if (cfg.solver.dt_max > 0.0) ctl.dt_max = cfg.solver.dt_max;
    ctl.snapshot_times = uniform_times(cfg.model.t_final, cfg.solver.snapshots);
    return ctl;
}

inline NonlocalOperator build_operator(const KernelSpec& spec, int n, const Grid& grid,
                                       KernelKind kind = KernelKind::Rescaled) {
    const KernelProfile profile = build_profile(spec);
    const MomentNormalizer c1 = compute_c1(profile, kC1Resolution);
    return NonlocalOperator(discretize(profile, c1, n, grid, kind, {spec.min_cells_per_radius}), grid);
}

inline Trajectory run_nonlocal_case(const StudyConfig& cfg, int n) {
    const Grid grid = build_grid(cfg);
    const NonlocalOperator op = build_operator(cfg.kernel, n, grid);
    return NonlocalSolver(op, cfg.model, build_controls(cfg)).run(build_initial(cfg, grid));
}

inline Trajectory run_local_case(const StudyConfig& cfg) {
    const Grid grid = build_grid(cfg);
    return LocalSolver(grid, cfg.model, build_controls(cfg)).run(build_initial(cfg, grid));
}

/// log2(prev / cur) when n doubled and both errors are positive; NaN otherwise.
inline double doubling_rate(int n_prev, double e_prev, int n, double e) {
    if (n != 2 * n_prev || !(e_prev > 0.0) || !(e > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log2(e_prev / e);
}

// ---------------------------------------------------------------------------------------------
// Convergence of the nonlocal system to the local one

struct ConvergenceRow {
    int n = 0;
    double e1 = 0.0;
    double e2 = 0.0;
    double e_total = 0.0;
    /// Rate from the previous row; NaN on the first row or when n did not double.
    double rate = std::numeric_limits<double>::quiet_NaN();
    std::size_t steps = 0;
};

struct ConvergenceReport {
    double q = 2.0;
    double t_final = 0.0;
    int snapshots = 0;
    std::size_t local_steps = 0;
    double local_h = 0.0;
    std::vector<ConvergenceRow> rows;

    bool strictly_decreasing() const {
        for (std::size_t k = 1; k < rows.size(); ++k)
            if (!(rows[k].e_total < rows[k - 1].e_total)) return false;
        return true;
    }
};

/// Runs `count` independent jobs on up to `jobs` threads. Results are stored by index, so the
/// outcome does not depend on scheduling. The first exception (by index) is rethrown.
template <class Fn>
void run_indexed(std::size_t count, int jobs, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
    std::vector<std::exception_ptr> errors(count);
    if (workers <= 1) {
        for (std::size_t k = 0; k < count; ++k) {
            try {
                fn(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < count; k = next++) {
                    try {
                        fn(k);
                    } catch (...) {
                        errors[k] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// e_n = || u_n - v ||_{L^q(Q_T)} per species and summed, where v is the local solution on the
/// same grid and both are compared on the common snapshot schedule.
inline ConvergenceReport run_convergence_study(const StudyConfig& cfg, int jobs = 1) {
    for (int i = 0; i < 2; ++i)
        if (!(cfg.model.a[i] > 0.0))
            throw ConfigError("model.a" + std::to_string(i + 1), 0, "the convergence study needs a1, a2 > 0");

    const std::size_t count = cfg.n_list.size();
    std::vector<Trajectory> runs(count + 1);
    run_indexed(count + 1, jobs, [&](std::size_t k) {
        if (k == count) {
            runs[k] = run_local_case(cfg);
            return;
        }
        const int n = cfg.n_list[k];
        try {
            runs[k] = run_nonlocal_case(cfg, n);
        } catch (const SolverError& e) {
            throw SolverError("nonlocal run n=" + std::to_string(n) + ": " + e.what(), e.time());
        }
    });

    const Trajectory& ref = runs[count];
    ConvergenceReport rep;
    rep.q = cfg.q;
    rep.t_final = cfg.model.t_final;
    rep.snapshots = cfg.solver.snapshots;
    rep.local_steps = ref.steps;
    rep.local_h = build_grid(cfg).h();
    for (std::size_t k = 0; k < count; ++k) {
        const Trajectory& run = runs[k];
        if (run.snapshots.size() != ref.snapshots.size())
            throw std::logic_error("nonlocal and local snapshot schedules differ");
        ConvergenceRow row;
        row.n = cfg.n_list[k];
        row.steps = run.steps;
        for (int i = 0; i < 2; ++i) {
            std::vector<std::pair<double, Field>> diff;
            for (std::size_t m = 0; m < run.snapshots.size(); ++m)
                diff.emplace_back(run.snapshots[m].first, run.snapshots[m].second[i] - ref.snapshots[m].second[i]);
            (i == 0 ? row.e1 : row.e2) = lq_norm_spacetime(diff, cfg.q);
        }
        row.e_total = row.e1 + row.e2;
        if (!std::isfinite(row.e_total)) throw NonFinite("non-finite error at n=" + std::to_string(row.n));
        if (k > 0) row.rate = doubling_rate(rep.rows.back().n, rep.rows.back().e_total, row.n, row.e_total);
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Operator consistency

struct ConsistencyRow {
    int n = 0;
    double max_err = 0.0;
    double rate = std::numeric_limits<double>::quiet_NaN();
    std::size_t interior_cells = 0;
};

/// Test function and its exact Laplacian on the grid:
///   cosine     prod_a cos(2 pi k x_a / L_a)
///   quadratic  sum_a x_a^2
///   constant   1
inline std::pair<Field, Field> consistency_pair(TestFunction fn, int wavenumber, const Grid& grid) {
    const int dim = grid.dimension();
    switch (fn) {
        case TestFunction::Constant: return {Field(grid, 1.0), Field(grid, 0.0)};
        case TestFunction::Quadratic:
            return {Field::sample(grid, [&](double x, double y) { return x * x + (dim == 2 ? y * y : 0.0); }),
                    Field(grid, 2.0 * dim)};
        case TestFunction::Cosine: {
            const double kx = 2.0 * std::numbers::pi * wavenumber / grid.extent(0);
            const double ky = dim == 2 ? 2.0 * std::numbers::pi * wavenumber / grid.extent(1) : 0.0;
            Field psi = Field::sample(grid, [&](double x, double y) {
                return std::cos(kx * x) * (dim == 2 ? std::cos(ky * y) : 1.0);
            });
            Field lap = psi;
            lap *= -(kx * kx + ky * ky);
            return {psi, lap};
        }
    }
    return {Field(grid), Field(grid)};
}

/// Per n: max over cells at least r/n + 2h from the boundary of |Delta^n psi - Delta psi|.
inline std::vector<ConsistencyRow> run_consistency_test(const KernelSpec& spec, const std::vector<int>& n_list,
                                                        TestFunction fn, int wavenumber, const Grid& grid) {
    const auto [psi, exact] = consistency_pair(fn, wavenumber, grid);
    std::vector<ConsistencyRow> rows;
    for (int n : n_list) {
        const NonlocalOperator op = build_operator(spec, n, grid);
        Field err = op.apply(psi);
        err -= exact;
        const RestrictedField inner = restrict_interior(err, spec.radius / n + 2.0 * grid.h());
        ConsistencyRow row{n, inner.max_abs(), std::numeric_limits<double>::quiet_NaN(), inner.surviving()};
        if (!rows.empty()) row.rate = doubling_rate(rows.back().n, rows.back().max_err, n, row.max_err);
        rows.push_back(row);
    }
    return rows;
}

inline std::vector<ConsistencyRow> run_consistency_test(const StudyConfig& cfg) {
    return run_consistency_test(cfg.kernel, cfg.n_list, cfg.consistency_function, cfg.consistency_wavenumber,
                                build_grid(cfg));
}

// ---------------------------------------------------------------------------------------------
// Bounded ratio audit

struct Lemma4Row {
    int n = 0;
    double ratio = 0.0;
};

struct Lemma4Audit {
    double p = 3.0;
    std::vector<Lemma4Row> rows;
    double spread = 0.0;
    bool bounded = false;
};

/// prod_a (4 x_a (L_a - x_a) / L_a^2)^2: peak one at the center, C^1 zero at the boundary.
inline Field polynomial_bump(const Grid& grid) {
    return Field::sample(grid, [&](double x, double y) {
        auto b = [](double s, double l) {
            const double v = 4.0 * s * (l - s) / (l * l);
            return v * v;
        };
        return b(x, grid.extent(0)) * (grid.dimension() == 2 ? b(y, grid.extent(1)) : 1.0);
    });
}

/// Ratio per n for the polynomial bump; `bounded` when max / min over n_list is at most 4.
inline Lemma4Audit run_lemma4_audit(const KernelSpec& spec, const std::vector<int>& n_list, double p,
                                    const Grid& grid, const Field& xi) {
    Lemma4Audit audit;
    audit.p = p;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int n : n_list) {
        const double r = lemma4_ratio(build_operator(spec, n, grid), xi, p);
        audit.rows.push_back({n, r});
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    audit.spread = hi / lo;
    audit.bounded = std::isfinite(audit.spread) && audit.spread <= 4.0;
    return audit;
}

inline Lemma4Audit run_lemma4_audit(const StudyConfig& cfg) {
    const Grid grid = build_grid(cfg);
    return run_lemma4_audit(cfg.kernel, cfg.n_list, cfg.lemma4_p, grid, polynomial_bump(grid));
}

// ---------------------------------------------------------------------------------------------
// Invariant checks on a finished run

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

/// Nonnegativity, mass conservation (reaction-free only) and the entropy inequality
///   E(t) + D(t) <= E(0) + C_f t,   C_f = sum_i alpha_i sup_t mass_i(t)  (C_f = 0 when f = 0).
inline std::vector<CheckResult> trajectory_checks(const Trajectory& traj, const ModelParams& params,
                                                  double positivity_tol) {
    const DiagnosticsSeries& d = traj.diagnostics;
    std::vector<CheckResult> out;

    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d.size(); ++k) lowest = std::min({lowest, d.min1[k], d.min2[k]});
    out.push_back({"nonnegativity", lowest >= -positivity_tol, lowest, -positivity_tol, "min over species and time"});

    if (params.reaction_free()) {
        double drift = 0.0;
        for (const auto* m : {&d.mass1, &d.mass2}) {
            const double m0 = m->front();
            if (m0 > 0.0) drift = std::max(drift, std::abs(m->back() - m0) / m0);
        }
        out.push_back({"mass_conservation", drift <= 1e-9, drift, 1e-9, "relative drift of each species mass"});
    }

    double cf = 0.0;
    if (!params.reaction_free()) {
        const double sup1 = *std::max_element(d.mass1.begin(), d.mass1.end());
        const double sup2 = *std::max_element(d.mass2.begin(), d.mass2.end());
        cf = params.alpha[0] * sup1 + params.alpha[1] * sup2;
    }
    const double e0 = d.entropy.front();
    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d.size(); ++k)
        excess = std::max(excess, d.entropy[k] + d.dissipation[k] - e0 - cf * d.t[k]);
    const double tol = 1e-8 * std::max(1.0, std::abs(e0));
    out.push_back({"entropy_inequality", excess <= tol, excess, tol,
                   params.reaction_free() ? "E(t)+D(t)-E(0)" : "E(t)+D(t)-E(0)-C_f t"});
    return out;
}

inline bool all_passed(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

// ---------------------------------------------------------------------------------------------
// File output

namespace detail {

inline std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}

inline nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

inline void write_convergence_csv(const std::filesystem::path& path, const ConvergenceReport& rep) {
    auto os = detail::open_out(path);
    os << "n,e1,e2,e_total,rate\n";
    for (const auto& r : rep.rows)
        os << r.n << ',' << detail::csv_number(r.e1) << ',' << detail::csv_number(r.e2) << ','
           << detail::csv_number(r.e_total) << ',' << detail::csv_number(r.rate) << '\n';
}

inline void write_consistency_csv(const std::filesystem::path& path, const std::vector<ConsistencyRow>& rows) {
    auto os = detail::open_out(path);
    os << "n,max_err,rate\n";
    for (const auto& r : rows)
        os << r.n << ',' << detail::csv_number(r.max_err) << ',' << detail::csv_number(r.rate) << '\n';
}

inline void write_lemma4_csv(const std::filesystem::path& path, const Lemma4Audit& audit) {
    auto os = detail::open_out(path);
    os << "n,ratio\n";
    for (const auto& r : audit.rows) os << r.n << ',' << detail::csv_number(r.ratio) << '\n';
}

inline void write_diagnostics_csv(const std::filesystem::path& path, const DiagnosticsSeries& d) {
    auto os = detail::open_out(path);
    os << "t,E,D,mass1,mass2,min1,min2,dt\n";
    for (std::size_t k = 0; k < d.size(); ++k)
        os << format_double(d.t[k]) << ',' << format_double(d.entropy[k]) << ',' << format_double(d.dissipation[k])
           << ',' << format_double(d.mass1[k]) << ',' << format_double(d.mass2[k]) << ','
           << format_double(d.min1[k]) << ',' << format_double(d.min2[k]) << ',' << format_double(d.dt[k]) << '\n';
}

inline void write_iterations_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& its) {
    auto os = detail::open_out(path);
    os << "slab,iteration,increment,contraction\n";
    for (const auto& r : its)
        os << r.slab << ',' << r.iteration << ',' << detail::csv_number(r.increment) << ','
           << detail::csv_number(r.contraction) << '\n';
}

/// Writes one snapshot file per stored time, named <prefix>_<index>.txt.
inline void write_snapshots(const std::filesystem::path& dir, const std::string& prefix,
                            const std::vector<std::pair<double, Field>>& series) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < series.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%04zu.txt", prefix.c_str(), k);
        write_snapshot((dir / name).string(), series[k].first, series[k].second);
    }
}

inline nlohmann::json checks_json(const std::vector<CheckResult>& checks) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name},
                       {"passed", c.passed},
                       {"value", detail::json_number(c.value)},
                       {"threshold", detail::json_number(c.threshold)},
                       {"note", c.note}});
    return arr;
}

inline nlohmann::json convergence_json(const ConvergenceReport& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"n", r.n},
                        {"e1", detail::json_number(r.e1)},
                        {"e2", detail::json_number(r.e2)},
                        {"e_total", detail::json_number(r.e_total)},
                        {"rate", detail::json_number(r.rate)},
                        {"steps", r.steps}});
    return {{"q", rep.q},
            {"t_final", rep.t_final},
            {"snapshots", rep.snapshots},
            {"local_reference", {{"steps", rep.local_steps}, {"h", rep.local_h}, {"same_grid", true}}},
            {"rows", rows}};
}

/// Checks reported for a convergence study. Only finiteness is a hard requirement; monotone
/// decrease is reported as an observation, since the limit theorem only covers a subsequence.
inline std::vector<CheckResult> convergence_checks(const ConvergenceReport& rep) {
    bool finite = true;
    for (const auto& r : rep.rows) finite = finite && std::isfinite(r.e_total);
    std::vector<CheckResult> out;
    out.push_back({"errors_finite", finite, finite ? 1.0 : 0.0, 1.0, ""});
    return out;
}

inline void write_report(const std::filesystem::path& path, const nlohmann::json& report) {
    auto os = detail::open_out(path);
    os << report.dump(2) << '\n';
}

}  // namespace sktlab
