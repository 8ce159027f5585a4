#include <catch_amalgamated.hpp>

#include <cmath>

#include "sktlab/model.hpp"

using namespace sktlab;
using Catch::Approx;

namespace {
ModelParams sample_params() {
    ModelParams m;
    m.c = {1.0, 0.5};
    m.a = {2.0, 0.25};
    m.alpha = {1.5, 0.7};
    m.beta = {{{0.3, 0.2}, {0.1, 0.4}}};
    return m;
}
}  // namespace

TEST_CASE("pointwise coefficients") {
    ModelParams m;
    m.c = {1.0, 0.0};
    m.a = {2.0, 0.0};
    CHECK(diffusion_value(m, 0, 1.0, 3.0) == 6.0);

    const ModelParams p = sample_params();
    for (double u1 : {0.0, 0.3, 2.0})
        for (double u2 : {0.0, 1.1, 5.0}) {
            // expanded polynomials
            CHECK(diffusion_value(p, 0, u1, u2) == Approx(p.c[0] * u1 + p.a[0] * u1 * u1 + u1 * u2));
            CHECK(diffusion_value(p, 1, u1, u2) == Approx(p.c[1] * u2 + p.a[1] * u2 * u2 + u1 * u2));
            CHECK(reaction_value(p, 0, u1, u2) ==
                  Approx(p.alpha[0] * u1 - p.beta[0][0] * u1 * u1 - p.beta[0][1] * u1 * u2).margin(1e-14));
            CHECK(reaction_value(p, 1, u1, u2) ==
                  Approx(p.alpha[1] * u2 - p.beta[1][0] * u1 * u2 - p.beta[1][1] * u2 * u2).margin(1e-14));
            if (u1 > 0.0) CHECK(diffusion_ratio_value(p, 0, u1, u2) == Approx(diffusion_value(p, 0, u1, u2) / u1));
            if (u2 > 0.0) CHECK(diffusion_ratio_value(p, 1, u1, u2) == Approx(diffusion_value(p, 1, u1, u2) / u2));
        }
}

TEST_CASE("reaction vanishes at extinction") {
    const ModelParams p = sample_params();
    CHECK(reaction_value(p, 0, 0.0, 3.0) == 0.0);
    CHECK(reaction_value(p, 1, 3.0, 0.0) == 0.0);
}

TEST_CASE("field-level maps") {
    const Grid g = Grid::make_1d(1.0, 8);
    const SpeciesPair u{Field(g, 2.0), Field(g, 1.0)};
    const ModelParams p = sample_params();
    CHECK(p_i(p, 0, u)[3] == diffusion_value(p, 0, 2.0, 1.0));
    CHECK(f_i(p, 1, u)[0] == reaction_value(p, 1, 2.0, 1.0));
    CHECK(p_tilde_i(p, 1, u)[7] == Approx(0.5 + 0.25 + 2.0));
    CHECK_THROWS(p_i(p, 2, u));
}

TEST_CASE("entropy") {
    const Grid g = Grid::make_1d(2.0, 16);
    // density is zero at u = 1 and 1 at u = 0
    CHECK(entropy(SpeciesPair{Field(g, 1.0), Field(g, 1.0)}) == 0.0);
    CHECK(entropy(SpeciesPair{Field(g, 0.0), Field(g, 1.0)}) == Approx(2.0));
    const double e = 3.0 * (std::log(3.0) - 1.0) + 1.0;
    CHECK(entropy(SpeciesPair{Field(g, 3.0), Field(g, 0.0)}) == Approx(2.0 * (e + 1.0)));
    CHECK_THROWS(entropy(SpeciesPair{Field(g, -1e-3), Field(g, 1.0)}));
    // convex with minimum at 1
    CHECK(entropy_density(0.9) > 0.0);
    CHECK(entropy_density(1.1) > 0.0);
}

TEST_CASE("parameter validation") {
    ModelParams p = sample_params();
    CHECK_NOTHROW(p.validate());
    CHECK(p.has_self_diffusion());
    CHECK_FALSE(p.reaction_free());
    p.a[1] = -1.0;
    CHECK_THROWS(p.validate());
    p = sample_params();
    p.t_final = 0.0;
    CHECK_THROWS(p.validate());
}
