#include <catch_amalgamated.hpp>

#include <string>

#include "sktlab/config.hpp"

using namespace sktlab;

namespace {

const std::string kModel = R"(
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
model.t_final = 0.05
)";

std::string without(const std::string& text, const std::string& key) {
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t e = text.find('\n', pos);
        const std::string line = text.substr(pos, e - pos);
        if (line.rfind(key + " ", 0) != 0) out += line + "\n";
        pos = e == std::string::npos ? text.size() : e + 1;
    }
    return out;
}

template <class Fn>
ConfigError capture(Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError("", 0, "");
}

}  // namespace

TEST_CASE("defaults are filled in") {
    const StudyConfig c = parse_config_string(kModel);
    CHECK(c.kernel.family == KernelFamily::Tent);
    CHECK(c.n_list == std::vector<int>{4, 8, 16, 32});
    CHECK(c.q == 2.0);
    CHECK(c.solver.snapshots == 33);
    CHECK(c.dual.lambda == 1.0);
    CHECK(c.model.a[0] == 1.0);
}

TEST_CASE("missing required key names the key") {
    const ConfigError e = capture([] { parse_config_string(without(kModel, "model.a1")); });
    CHECK(e.key() == "model.a1");
    CHECK(std::string(e.what()).find("model.a1") != std::string::npos);
}

TEST_CASE("schema violations carry key and line") {
    const ConfigError e = capture([] { parse_config_string(kModel + "study.n_list = 4, 16, 8\n"); });
    CHECK(e.key() == "study.n_list");
    CHECK(e.line() == 13);

    CHECK(capture([] { parse_config_string(kModel + "study.bogus = 1\n"); }).key() == "study.bogus");
    CHECK(capture([] { parse_config_string(kModel + "study.q = 3\n"); }).key() == "study.q");
    CHECK(capture([] { parse_config_string(kModel + "kernel.radius = abc\n"); }).key() == "kernel.radius");
    CHECK(capture([] { parse_config_string(kModel + "study.n_list = 4, 64\n"); }).key() == "study.n_list");
    CHECK(capture([] { parse_config_string(kModel + "model.c1 = 1\n"); }).key() == "model.c1");
    CHECK(capture([] { parse_config_string(kModel + "grid.extent = 1, 1\n"); }).key() == "grid.extent");
    CHECK(capture([] { parse_config_string(kModel + "init.u1.centers = 0.5\n"); }).key() == "init.u1.centers");
    CHECK(capture([] { parse_config_string(kModel + "just text\n"); }).line() == 13);
    CHECK(capture([] { parse_config_string(kModel + "init.type = cosine\ninit.u1.base = 1\ninit.u1.amplitude = 2\n"
                                           "init.u2.base = 1\ninit.u2.amplitude = 0\n"); })
              .key() == "init.u1.amplitude");
}

TEST_CASE("comments and whitespace") {
    const StudyConfig c = parse_config_string("# header\n" + kModel + "  nonlocal.n = 4   # inline\n\n");
    CHECK(c.nonlocal_n == 4);
}

TEST_CASE("emit then parse reproduces the configuration") {
    StudyConfig c = parse_config_string(kModel + R"(
kernel.family = bump
kernel.radius = 0.7
kernel.dimension = 2
kernel.min_cells_per_radius = 6
grid.extent = 1, 0.5
grid.cells = 256, 128
init.type = gaussian
init.u1.base = 0.1
init.u1.centers = 0.3, 0.25, 0.6, 0.2
init.u1.widths = 0.05, 0.0712345678901234
init.u1.amplitudes = 1, 0.3333333333333333
init.u2.centers = 0.5, 0.25
init.u2.widths = 0.1
init.u2.amplitudes = 0.8
study.n_list = 2, 3, 4
study.q = 2.5
solver.dt_max = 1e-6
dual.lambda = 0.1
)");
    c.model.c[0] = 0.1 + 0.2;  // a value without a short decimal form
    const std::string text = emit_config(c);
    const StudyConfig back = parse_config_string(text);
    CHECK(back == c);
    CHECK(emit_config(back) == text);

    c.init.type = InitialType::Cosine;
    c.init.species[0] = {};
    c.init.species[0].base = 1.0;
    c.init.species[0].amplitude = 0.5;
    c.init.species[0].mode = 2;
    c.init.species[1] = {};
    c.init.species[1].base = 2.0;
    CHECK(parse_config_string(emit_config(c)) == c);
}
