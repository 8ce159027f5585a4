#include <catch_amalgamated.hpp>

#include <cmath>

#include "sktlab/nonlocal_solver.hpp"
#include "sktlab/study.hpp"

using namespace sktlab;
using Catch::Approx;

namespace {

NonlocalOperator tent_op(const Grid& g, int n, double r = 1.0) {
    const KernelProfile p(KernelFamily::Tent, r, g.dimension());
    return NonlocalOperator(discretize(p, compute_c1(p, 4096), n, g), g);
}

SpeciesPair bumps(const Grid& g) {
    return {Field::sample(g, [](double x) { return 0.2 + std::exp(-std::pow((x - 0.3) / 0.08, 2) / 2); }),
            Field::sample(g, [](double x) { return 0.1 + 0.8 * std::exp(-std::pow((x - 0.7) / 0.1, 2) / 2); })};
}

ModelParams diffusive() {
    ModelParams m;
    m.c = {0.5, 0.3};
    m.a = {1.0, 0.5};
    m.t_final = 0.05;
    return m;
}

// Classical RK4 for the spatially homogeneous system du/dt = f(u).
std::array<double, 2> rk4(const ModelParams& m, std::array<double, 2> u, double t, int steps) {
    auto f = [&](const std::array<double, 2>& v) {
        return std::array<double, 2>{reaction_value(m, 0, v[0], v[1]), reaction_value(m, 1, v[0], v[1])};
    };
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        auto add = [](std::array<double, 2> a, std::array<double, 2> b, double k) {
            return std::array<double, 2>{a[0] + k * b[0], a[1] + k * b[1]};
        };
        const auto k1 = f(u), k2 = f(add(u, k1, h / 2)), k3 = f(add(u, k2, h / 2)), k4 = f(add(u, k3, h));
        for (int i = 0; i < 2; ++i) u[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return u;
}

}  // namespace

TEST_CASE("stable step for a pure linear diffusion") {
    const Grid g = Grid::make_1d(1.0, 256);
    const NonlocalOperator op = tent_op(g, 4);
    ModelParams m;
    m.c = {1.0, 1.0};
    RunControls ctl;
    const NonlocalSolver s(op, m, ctl);
    const double c1 = compute_c1(make_profile(KernelFamily::Tent, 1.0, 1), 4096).c1;
    CHECK(s.stable_dt(SpeciesPair{Field(g), Field(g)}) == Approx(ctl.dt_safety / (2.0 * c1 * 16)).epsilon(1e-12));
    CHECK_THROWS(s.step(SpeciesPair{Field(g), Field(g)}, 1.0));
}

TEST_CASE("needs a rescaled kernel") {
    const Grid g = Grid::make_1d(1.0, 128);
    const KernelProfile p(KernelFamily::Tent, 1.0, 1);
    const NonlocalOperator op(discretize(p, compute_c1(p, 4096), 4, g, KernelKind::DeltaApprox), g);
    CHECK_THROWS(NonlocalSolver(op, diffusive()));
}

TEST_CASE("constant state follows the reaction ODE") {
    const Grid g = Grid::make_1d(1.0, 64);
    const NonlocalOperator op = tent_op(g, 4, 0.5);
    ModelParams m = diffusive();
    m.alpha = {1.0, 0.8};
    m.beta = {{{1.0, 0.5}, {0.3, 1.0}}};
    m.t_final = 0.5;
    RunControls ctl;
    ctl.dt_max = 1e-4;
    ctl.snapshot_times = {0.0, 0.5};
    const Trajectory tr = NonlocalSolver(op, m, ctl).run({Field(g, 0.4), Field(g, 1.3)});
    const auto exact = rk4(m, {0.4, 1.3}, 0.5, 2000);
    const SpeciesPair& uT = tr.snapshots.back().second;
    for (int i = 0; i < 2; ++i) {
        CHECK(min_value(uT[i]) == uT[i].max_abs());  // stays spatially constant
        CHECK(uT[i][0] == Approx(exact[i]).epsilon(1e-4));
    }
}

TEST_CASE("single-species logistic growth") {
    const Grid g = Grid::make_1d(1.0, 64);
    const NonlocalOperator op = tent_op(g, 4, 0.5);
    ModelParams m;
    m.c = {1.0, 1.0};
    m.a = {1.0, 1.0};
    m.alpha = {2.0, 0.0};
    m.beta = {{{0.5, 0.0}, {0.0, 0.0}}};
    m.t_final = 1.0;
    RunControls ctl;
    ctl.dt_max = 1e-4;
    ctl.snapshot_times = {0.0, 1.0};
    const Trajectory tr = NonlocalSolver(op, m, ctl).run({Field(g, 0.1), Field(g, 0.0)});
    // u = K / (1 + (K/u0 - 1) e^{-alpha t}),  K = alpha / beta
    const double k = 4.0, exact = k / (1.0 + (k / 0.1 - 1.0) * std::exp(-2.0));
    CHECK(tr.snapshots.back().second.u1[10] == Approx(exact).epsilon(1e-3));
    CHECK(tr.snapshots.back().second.u2.max_abs() == 0.0);
}

TEST_CASE("mass, positivity and entropy without reactions") {
    const Grid g = Grid::make_1d(1.0, 256);
    const NonlocalOperator op = tent_op(g, 8);
    RunControls ctl;
    ctl.diag_stride = 1;
    ctl.snapshot_times = uniform_times(0.05, 5);
    const Trajectory tr = NonlocalSolver(op, diffusive(), ctl).run(bumps(g));
    const auto& d = tr.diagnostics;
    CHECK(std::abs(d.mass1.back() - d.mass1.front()) <= 1e-12 * d.mass1.front());
    CHECK(std::abs(d.mass2.back() - d.mass2.front()) <= 1e-12 * d.mass2.front());
    for (std::size_t k = 0; k < d.size(); ++k) {
        CHECK(d.min1[k] >= -1e-10);
        CHECK(d.min2[k] >= -1e-10);
        if (k > 0) CHECK(d.entropy[k] <= d.entropy[k - 1] + 1e-12);
        CHECK(d.entropy[k] + d.dissipation[k] <= d.entropy.front() + 1e-6);
    }
    CHECK(d.dissipation.back() > 0.0);
    CHECK(all_passed(trajectory_checks(tr, diffusive(), 1e-10)));
}

TEST_CASE("one step changes mass by the reaction integral") {
    const Grid g = Grid::make_1d(1.0, 128);
    const NonlocalOperator op = tent_op(g, 8, 0.5);
    ModelParams m = diffusive();
    m.alpha = {1.0, 0.5};
    m.beta = {{{0.5, 0.2}, {0.1, 0.3}}};
    const NonlocalSolver s(op, m);
    const SpeciesPair u = bumps(g);
    const double dt = s.stable_dt(u);
    const SpeciesPair next = s.step(u, dt);
    for (int i = 0; i < 2; ++i)
        CHECK(total_mass(next[i]) - total_mass(u[i]) == Approx(dt * total_mass(f_i(m, i, u))).epsilon(1e-9));
}

TEST_CASE("step validation") {
    const Grid g = Grid::make_1d(1.0, 16);
    SpeciesPair bad{Field(g, 1.0), Field(g, 1.0)};
    bad.u2[3] = -1e-6;
    CHECK_THROWS_AS(check_step_result(bad, 1e-10, 0.5), PositivityBreach);
    bad.u2[3] = std::nan("");
    CHECK_THROWS_AS(check_step_result(bad, 1e-10, 0.5), NonFinite);
    try {
        bad.u2[3] = -1.0;
        check_step_result(bad, 1e-10, 0.25);
    } catch (const SolverError& e) {
        CHECK(e.time() == 0.25);
    }
}

TEST_CASE("runs are deterministic and 2D works") {
    const Grid g = Grid::make_2d(1.0, 1.0, 32, 32);
    const NonlocalOperator op = tent_op(g, 4, 1.0);
    ModelParams m = diffusive();
    m.t_final = 0.01;
    RunControls ctl;
    ctl.snapshot_times = {0.0, 0.005, 0.01};
    const SpeciesPair u0{Field::sample(g, [](double x, double y) { return 1.0 + 0.5 * std::cos(M_PI * x) * std::cos(M_PI * y); }),
                         Field(g, 0.5)};
    const Trajectory a = NonlocalSolver(op, m, ctl).run(u0);
    const Trajectory b = NonlocalSolver(op, m, ctl).run(u0);
    REQUIRE(a.snapshots.size() == 3);
    CHECK(a.snapshots.back().second == b.snapshots.back().second);
    CHECK(total_mass(a.snapshots.back().second.u1) == Approx(total_mass(u0.u1)).epsilon(1e-12));
}
