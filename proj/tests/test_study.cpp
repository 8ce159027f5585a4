#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sktlab/study.hpp"

using namespace sktlab;
namespace fs = std::filesystem;

namespace {

StudyConfig small_study() {
    StudyConfig c = parse_config_string(R"(
grid.cells = 128
model.c1 = 0.5
model.c2 = 0.5
model.a1 = 1
model.a2 = 1
model.alpha1 = 0
model.alpha2 = 0
model.beta11 = 0
model.beta12 = 0
model.beta21 = 0
model.beta22 = 0
model.t_final = 0.02
init.type = gaussian
init.u1.base = 0.2
init.u1.centers = 0.3
init.u1.widths = 0.08
init.u1.amplitudes = 1
init.u2.base = 0.2
init.u2.centers = 0.7
init.u2.widths = 0.1
init.u2.amplitudes = 0.8
study.n_list = 2, 4, 8, 16
solver.snapshots = 9
)");
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("initial data builders") {
    StudyConfig c = small_study();
    const Grid g = build_grid(c);
    const SpeciesPair u = build_initial(c, g);
    CHECK(min_value(u.u1) >= 0.2);
    CHECK(u.u1.max_abs() > 1.1);
    c.init.type = InitialType::Cosine;
    c.init.species[0].base = 1.0;
    c.init.species[0].amplitude = 0.5;
    c.init.species[1].base = 1.0;
    const SpeciesPair v = build_initial(c, g);
    CHECK(v.u1.max_abs() <= 1.5);
    CHECK(min_value(v.u1) >= 0.5);
}

TEST_CASE("convergence errors shrink with n and runs are reproducible") {
    const StudyConfig c = small_study();
    const ConvergenceReport a = run_convergence_study(c, 1);
    const ConvergenceReport b = run_convergence_study(c, 3);
    REQUIRE(a.rows.size() == 4);
    CHECK(a.strictly_decreasing());
    CHECK(std::isnan(a.rows[0].rate));
    for (std::size_t k = 1; k < a.rows.size(); ++k) CHECK(a.rows[k].rate > 1.0);
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].e_total == b.rows[k].e_total);
        CHECK(a.rows[k].e_total == a.rows[k].e1 + a.rows[k].e2);
    }
    const fs::path dir = fs::temp_directory_path() / "sktlab_study_test";
    write_convergence_csv(dir / "a.csv", a);
    write_convergence_csv(dir / "b.csv", b);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a.csv").rfind("n,e1,e2,e_total,rate\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("constant data give no nonlocal effect") {
    StudyConfig c = small_study();
    c.init = {};
    c.init.species[0].value = 0.7;
    c.init.species[1].value = 1.4;
    c.model.alpha = {1.0, 0.5};
    c.model.beta = {{{0.5, 0.2}, {0.3, 0.4}}};
    c.solver.dt_max = 1e-6;
    const ConvergenceReport r = run_convergence_study(c, 1);
    for (const auto& row : r.rows) CHECK(row.e_total <= 1e-6);
}

TEST_CASE("study preconditions") {
    StudyConfig c = small_study();
    c.model.a[1] = 0.0;
    CHECK_THROWS_AS(run_convergence_study(c, 1), ConfigError);
}

TEST_CASE("doubling rates") {
    CHECK(doubling_rate(4, 1.0, 8, 0.25) == 2.0);
    CHECK(std::isnan(doubling_rate(4, 1.0, 12, 0.25)));
    CHECK(std::isnan(doubling_rate(4, 0.0, 8, 0.0)));
}

TEST_CASE("invariant checks flag a broken run") {
    Trajectory t;
    auto& d = t.diagnostics;
    d.t = {0.0, 1.0};
    d.entropy = {1.0, 1.5};
    d.dissipation = {0.0, 0.1};
    d.mass1 = {1.0, 1.0};
    d.mass2 = {1.0, 1.1};
    d.min1 = {0.0, 0.0};
    d.min2 = {0.0, -1.0};
    d.dt = {0.0, 1.0};
    ModelParams m;
    const auto checks = trajectory_checks(t, m, 1e-10);
    REQUIRE(checks.size() == 3);
    for (const auto& c : checks) CHECK_FALSE(c.passed);
}

TEST_CASE("diagnostics csv layout") {
    Trajectory t;
    auto& d = t.diagnostics;
    d.t = {0.0};
    d.entropy = {1.0};
    d.dissipation = {0.0};
    d.mass1 = d.mass2 = {1.0};
    d.min1 = d.min2 = {0.5};
    d.dt = {0.0};
    const fs::path p = fs::temp_directory_path() / "sktlab_diag_test.csv";
    write_diagnostics_csv(p, d);
    CHECK(slurp(p) == "t,E,D,mass1,mass2,min1,min2,dt\n0,1,0,1,1,0.5,0.5,0\n");
    fs::remove(p);
}
