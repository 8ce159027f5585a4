#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "sktlab/grid.hpp"

using namespace sktlab;
using Catch::Approx;

TEST_CASE("grid geometry") {
    const Grid g = Grid::make_1d(2.0, 8);
    CHECK(g.h() == 0.25);
    CHECK(g.size() == 8);
    CHECK(g.center(0, 0) == 0.125);
    CHECK(g.boundary_distance(0) == 0.125);
    CHECK(g.boundary_distance(4) == Approx(0.875));
    CHECK(g.cell_volume() == 0.25);

    const Grid g2 = Grid::make_2d(1.0, 0.5, 8, 4);
    CHECK(g2.size() == 32);
    CHECK(g2.cell_volume() == Approx(1.0 / 64));
    CHECK(g2.index(3, 2) == 19);
    CHECK(g2.boundary_distance(3, 1) == Approx(0.1875));

    CHECK_THROWS(Grid::make_1d(1.0, 3));
    CHECK_THROWS(Grid::make_2d(1.0, 1.0, 8, 16));
    CHECK_THROWS(Grid::make_1d(-1.0, 8));
}

TEST_CASE("constant field norms") {
    const Grid g = Grid::make_1d(2.0, 16);
    const Field f(g, 3.0);
    // |3|^q * |Omega| under the q-th root
    CHECK(lq_norm_space(f, 2.0) == Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(lq_norm_space(f, 1.0) == Approx(6.0).epsilon(1e-14));
    CHECK(total_mass(f) == Approx(6.0).epsilon(1e-14));

    std::vector<std::pair<double, Field>> snaps;
    for (int k = 0; k <= 4; ++k) snaps.emplace_back(0.25 * k, f);
    CHECK(lq_norm_spacetime(snaps, 2.0) == Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("space-time norm is trapezoidal in time") {
    const Grid g = Grid::make_1d(1.0, 4);
    std::vector<std::pair<double, Field>> snaps{{0.0, Field(g, 0.0)}, {1.0, Field(g, 2.0)}};
    // trapezoid of |f|^1 over t: 0.5 * (0 + 2)
    CHECK(lq_norm_spacetime(snaps, 1.0) == Approx(1.0));
    CHECK_THROWS(lq_norm_spacetime({{0.0, Field(g)}}, 2.0));
}

TEST_CASE("midpoint mass of a smooth profile") {
    const Grid g = Grid::make_1d(1.0, 400);
    const Field f = Field::sample(g, [](double x) { return std::sin(std::numbers::pi * x); });
    CHECK(total_mass(f) == Approx(2.0 / std::numbers::pi).epsilon(1e-5));
}

TEST_CASE("interior restriction") {
    const Grid g = Grid::make_1d(1.0, 10);
    Field f = Field::sample(g, [](double x) { return x; });
    const RestrictedField all = restrict_interior(f, 0.0);
    CHECK(all.surviving() == 10);
    const RestrictedField inner = restrict_interior(f, 0.2);
    // centers 0.05 .. 0.95: keep 0.25 .. 0.75
    CHECK(inner.surviving() == 6);
    CHECK(inner.max_abs() == Approx(0.75));
    CHECK_THROWS(restrict_interior(f, 0.6));
}

TEST_CASE("compensated summation keeps small terms") {
    CompensatedSum s;
    s.add(1e16);
    for (int k = 0; k < 1000; ++k) s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1000.0);
}

TEST_CASE("snapshot round trip is exact") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const Grid g = Grid::make_2d(1.0, 0.5, 8, 4);
    Field f(g);
    for (auto& v : f.values()) v = dist(rng) * 1e-3;
    std::stringstream ss;
    write_snapshot(ss, 0.125, f);
    const auto [t, back] = read_snapshot(ss);
    CHECK(t == 0.125);
    CHECK(back.grid().nx() == 8);
    CHECK(back.grid().ny() == 4);
    CHECK(back.values() == f.values());
}
