#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sktlab/errors.hpp"
#include "sktlab/grid.hpp"
#include "sktlab/kernel.hpp"
#include "sktlab/model.hpp"

namespace sktlab {

struct KernelSpec {
    KernelFamily family = KernelFamily::Tent;
    double radius = 1.0;
    int dimension = 1;
    double min_cells_per_radius = 8.0;

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

struct GridSpec {
    std::vector<double> extent{1.0};
    std::vector<int> cells{256};

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class InitialType { Constant, Gaussian, Cosine };

inline std::string_view to_string(InitialType t) {
    switch (t) {
        case InitialType::Constant: return "constant";
        case InitialType::Gaussian: return "gaussian";
        case InitialType::Cosine: return "cosine";
    }
    return "?";
}

/// Initial profile of one species. Which members are meaningful depends on InitialType:
///   constant  value
///   gaussian  base + sum_k amplitudes[k] exp(-|x - centers[k]|^2 / (2 widths[k]^2))
///   cosine    base + amplitude prod_axes cos(mode pi x_a / L_a)
struct SpeciesInit {
    double value = 1.0;
    double base = 0.0;
    std::vector<double> centers;
    std::vector<double> widths;
    std::vector<double> amplitudes;
    double amplitude = 0.0;
    int mode = 1;

    friend bool operator==(const SpeciesInit&, const SpeciesInit&) = default;
};

struct InitialSpec {
    InitialType type = InitialType::Constant;
    std::array<SpeciesInit, 2> species{};

    friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

enum class TestFunction { Cosine, Quadratic, Constant };

inline std::string_view to_string(TestFunction f) {
    switch (f) {
        case TestFunction::Cosine: return "cosine";
        case TestFunction::Quadratic: return "quadratic";
        case TestFunction::Constant: return "constant";
    }
    return "?";
}

struct SolverSpec {
    double dt_safety = 0.4;
    double positivity_tol = 1e-10;
    int diag_stride = 10;
    /// Uniform snapshot count over [0, T].
    int snapshots = 33;
    /// 0 means no cap beyond the stability bound.
    double dt_max = 0.0;

    friend bool operator==(const SolverSpec&, const SolverSpec&) = default;
};

struct DualSpec {
    int species = 1;
    double lambda = 1.0;
    double picard_tol = 1e-10;
    int max_iters = 500;
    int subgrid_points = 32;
    /// psi = -psi_amplitude (constant, nonpositive).
    double psi_amplitude = 1.0;

    friend bool operator==(const DualSpec&, const DualSpec&) = default;
};

struct StudyConfig {
    KernelSpec kernel;
    GridSpec grid;
    ModelParams model;
    InitialSpec init;
    SolverSpec solver;
    int nonlocal_n = 8;
    std::vector<int> n_list{4, 8, 16, 32};
    double q = 2.0;
    TestFunction consistency_function = TestFunction::Cosine;
    int consistency_wavenumber = 1;
    double lemma4_p = 3.0;
    DualSpec dual;
    std::string out_dir = "out";

    friend bool operator==(const StudyConfig&, const StudyConfig&) = default;
};

namespace detail {

struct RawEntry {
    std::string value;
    int line = 0;
};

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::map<std::string, RawEntry> read_key_values(std::istream& is) {
    std::map<std::string, RawEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("", lineno, "expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string val = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError("", lineno, "empty key");
        if (val.empty()) throw ConfigError(key, lineno, "empty value");
        if (out.count(key)) throw ConfigError(key, lineno, "duplicate key (first on line " + std::to_string(out[key].line) + ")");
        out[key] = {val, lineno};
    }
    return out;
}

/// Pulls typed values out of the raw map and remembers which keys were consumed.
class KeyReader {
public:
    explicit KeyReader(std::map<std::string, RawEntry> raw) : raw_(std::move(raw)) {}

    bool has(const std::string& key) const { return raw_.count(key) > 0; }

    double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const RawEntry* e = fetch(key, fallback.has_value());
        if (!e) return *fallback;
        return parse_real(key, e->value, e->line);
    }

    int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
        const RawEntry* e = fetch(key, fallback.has_value());
        if (!e) return *fallback;
        return parse_int(key, e->value, e->line);
    }

    std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        const RawEntry* e = fetch(key, fallback.has_value());
        if (!e) return *fallback;
        return e->value;
    }

    std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
        const RawEntry* e = fetch(key, fallback.has_value());
        if (!e) return *fallback;
        std::vector<double> out;
        for (const auto& item : split(e->value)) out.push_back(parse_real(key, item, e->line));
        return out;
    }

    std::vector<int> integers(const std::string& key, std::optional<std::vector<int>> fallback = std::nullopt) {
        const RawEntry* e = fetch(key, fallback.has_value());
        if (!e) return *fallback;
        std::vector<int> out;
        for (const auto& item : split(e->value)) out.push_back(parse_int(key, item, e->line));
        return out;
    }

    int line_of(const std::string& key) const {
        auto it = raw_.find(key);
        return it == raw_.end() ? 0 : it->second.line;
    }

    /// Every key present in the file but never read is an error.
    void reject_unknown() const {
        for (const auto& [key, entry] : raw_)
            if (!used_.count(key)) throw ConfigError(key, entry.line, "unknown or inapplicable key");
    }

private:
    const RawEntry* fetch(const std::string& key, bool optional) {
        auto it = raw_.find(key);
        if (it == raw_.end()) {
            if (!optional) throw ConfigError(key, 0, "required key is missing");
            return nullptr;
        }
        used_.insert(key);
        return &it->second;
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(trim(item));
        return out;
    }

    static double parse_real(const std::string& key, const std::string& s, int line) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
            throw ConfigError(key, line, "expected a finite number, got '" + s + "'");
        return v;
    }

    static int parse_int(const std::string& key, const std::string& s, int line) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            throw ConfigError(key, line, "expected an integer, got '" + s + "'");
        return v;
    }

    std::map<std::string, RawEntry> raw_;
    std::set<std::string> used_;
};

}  // namespace detail

inline Grid build_grid(const StudyConfig& cfg) {
    if (cfg.kernel.dimension == 1) return Grid::make_1d(cfg.grid.extent.at(0), cfg.grid.cells.at(0));
    return Grid::make_2d(cfg.grid.extent.at(0), cfg.grid.extent.at(1), cfg.grid.cells.at(0), cfg.grid.cells.at(1));
}

inline KernelProfile build_profile(const KernelSpec& k) { return make_profile(k.family, k.radius, k.dimension); }

/// Fully validated configuration from key-value text. Unknown keys are rejected.
inline StudyConfig parse_config(std::istream& is) {
    detail::KeyReader rd(detail::read_key_values(is));
    StudyConfig cfg;
    const StudyConfig def;

    auto fail = [&](const std::string& key, const std::string& msg) -> ConfigError {
        return ConfigError(key, rd.line_of(key), msg);
    };

    // kernel
    try {
        cfg.kernel.family = kernel_family_from_string(rd.text("kernel.family", std::string(to_string(def.kernel.family))));
    } catch (const std::invalid_argument& e) {
        throw fail("kernel.family", e.what());
    }
    cfg.kernel.radius = rd.real("kernel.radius", def.kernel.radius);
    if (!(cfg.kernel.radius > 0.0)) throw fail("kernel.radius", "must be positive");
    cfg.kernel.dimension = rd.integer("kernel.dimension", def.kernel.dimension);
    if (cfg.kernel.dimension != 1 && cfg.kernel.dimension != 2) throw fail("kernel.dimension", "must be 1 or 2");
    cfg.kernel.min_cells_per_radius = rd.real("kernel.min_cells_per_radius", def.kernel.min_cells_per_radius);
    if (!(cfg.kernel.min_cells_per_radius > 0.0)) throw fail("kernel.min_cells_per_radius", "must be positive");
    const int dim = cfg.kernel.dimension;

    // grid
    cfg.grid.extent = rd.reals("grid.extent", std::vector<double>(dim, 1.0));
    cfg.grid.cells = rd.integers("grid.cells", std::vector<int>(dim, 256));
    if (static_cast<int>(cfg.grid.extent.size()) != dim) throw fail("grid.extent", "needs one entry per axis");
    if (static_cast<int>(cfg.grid.cells.size()) != dim) throw fail("grid.cells", "needs one entry per axis");
    Grid grid;
    try {
        grid = build_grid(cfg);
    } catch (const std::invalid_argument& e) {
        throw fail("grid.cells", e.what());
    }

    // model
    ModelParams& m = cfg.model;
    for (int i = 0; i < 2; ++i) {
        const std::string s = std::to_string(i + 1);
        m.c[i] = rd.real("model.c" + s);
        m.a[i] = rd.real("model.a" + s);
        m.alpha[i] = rd.real("model.alpha" + s);
        for (int j = 0; j < 2; ++j) m.beta[i][j] = rd.real("model.beta" + s + std::to_string(j + 1));
    }
    m.t_final = rd.real("model.t_final");
    for (int i = 0; i < 2; ++i) {
        const std::string s = std::to_string(i + 1);
        if (m.c[i] < 0.0) throw fail("model.c" + s, "must be >= 0");
        if (m.a[i] < 0.0) throw fail("model.a" + s, "must be >= 0");
        if (m.alpha[i] < 0.0) throw fail("model.alpha" + s, "must be >= 0");
        for (int j = 0; j < 2; ++j)
            if (m.beta[i][j] < 0.0) throw fail("model.beta" + s + std::to_string(j + 1), "must be >= 0");
    }
    if (!(m.t_final > 0.0)) throw fail("model.t_final", "must be positive");

    // initial data
    const std::string type = rd.text("init.type", "constant");
    if (type == "constant") cfg.init.type = InitialType::Constant;
    else if (type == "gaussian") cfg.init.type = InitialType::Gaussian;
    else if (type == "cosine") cfg.init.type = InitialType::Cosine;
    else throw fail("init.type", "expected constant, gaussian or cosine");
    for (int i = 0; i < 2; ++i) {
        const std::string p = "init.u" + std::to_string(i + 1) + ".";
        SpeciesInit& s = cfg.init.species[i];
        switch (cfg.init.type) {
            case InitialType::Constant:
                s.value = rd.real(p + "value", 1.0);
                if (s.value < 0.0) throw fail(p + "value", "initial data must be nonnegative");
                break;
            case InitialType::Gaussian: {
                s.base = rd.real(p + "base", 0.0);
                s.centers = rd.reals(p + "centers");
                s.widths = rd.reals(p + "widths");
                s.amplitudes = rd.reals(p + "amplitudes");
                if (s.base < 0.0) throw fail(p + "base", "must be >= 0");
                if (s.centers.size() != dim * s.widths.size()) throw fail(p + "centers", "needs one point per width");
                if (s.amplitudes.size() != s.widths.size()) throw fail(p + "amplitudes", "needs one amplitude per width");
                for (double w : s.widths)
                    if (!(w > 0.0)) throw fail(p + "widths", "must be positive");
                for (double a : s.amplitudes)
                    if (a < 0.0) throw fail(p + "amplitudes", "must be >= 0");
                break;
            }
            case InitialType::Cosine:
                s.base = rd.real(p + "base");
                s.amplitude = rd.real(p + "amplitude");
                s.mode = rd.integer(p + "mode", 1);
                if (std::abs(s.amplitude) > s.base) throw fail(p + "amplitude", "|amplitude| > base makes the data negative");
                if (s.mode < 0) throw fail(p + "mode", "must be >= 0");
                break;
        }
    }

    // solver
    cfg.solver.dt_safety = rd.real("solver.dt_safety", def.solver.dt_safety);
    if (!(cfg.solver.dt_safety > 0.0 && cfg.solver.dt_safety <= 1.0)) throw fail("solver.dt_safety", "must be in (0, 1]");
    cfg.solver.positivity_tol = rd.real("solver.positivity_tol", def.solver.positivity_tol);
    if (!(cfg.solver.positivity_tol >= 0.0)) throw fail("solver.positivity_tol", "must be >= 0");
    cfg.solver.diag_stride = rd.integer("solver.diag_stride", def.solver.diag_stride);
    if (cfg.solver.diag_stride < 1) throw fail("solver.diag_stride", "must be >= 1");
    cfg.solver.snapshots = rd.integer("solver.snapshots", def.solver.snapshots);
    if (cfg.solver.snapshots < 2) throw fail("solver.snapshots", "must be >= 2");
    cfg.solver.dt_max = rd.real("solver.dt_max", def.solver.dt_max);
    if (cfg.solver.dt_max < 0.0) throw fail("solver.dt_max", "must be >= 0 (0 disables the cap)");

    // kernel scales
    const KernelProfile profile = build_profile(cfg.kernel);
    auto resolved = [&](int n) { return profile.radius() / (n * grid.h()) >= cfg.kernel.min_cells_per_radius * (1.0 - 1e-12); };
    cfg.nonlocal_n = rd.integer("nonlocal.n", def.nonlocal_n);
    if (cfg.nonlocal_n < 1) throw fail("nonlocal.n", "must be a positive integer");
    if (!resolved(cfg.nonlocal_n)) throw fail("nonlocal.n", "kernel support r/n is under-resolved on this grid");
    cfg.n_list = rd.integers("study.n_list", def.n_list);
    if (cfg.n_list.empty()) throw fail("study.n_list", "must not be empty");
    for (std::size_t k = 0; k < cfg.n_list.size(); ++k) {
        if (cfg.n_list[k] < 1) throw fail("study.n_list", "entries must be positive");
        if (k > 0 && cfg.n_list[k] <= cfg.n_list[k - 1]) throw fail("study.n_list", "must be strictly increasing");
        if (!resolved(cfg.n_list[k]))
            throw fail("study.n_list", "n=" + std::to_string(cfg.n_list[k]) + " is under-resolved on this grid");
    }
    cfg.q = rd.real("study.q", def.q);
    if (!(cfg.q >= 1.0 && cfg.q < 3.0)) throw fail("study.q", "must satisfy 1 <= q < 3");

    const std::string fn = rd.text("consistency.function", std::string(to_string(def.consistency_function)));
    if (fn == "cosine") cfg.consistency_function = TestFunction::Cosine;
    else if (fn == "quadratic") cfg.consistency_function = TestFunction::Quadratic;
    else if (fn == "constant") cfg.consistency_function = TestFunction::Constant;
    else throw fail("consistency.function", "expected cosine, quadratic or constant");
    cfg.consistency_wavenumber = rd.integer("consistency.wavenumber", def.consistency_wavenumber);
    if (cfg.consistency_wavenumber < 1) throw fail("consistency.wavenumber", "must be >= 1");

    cfg.lemma4_p = rd.real("lemma4.p", def.lemma4_p);
    if (!(cfg.lemma4_p >= 1.0)) throw fail("lemma4.p", "must be >= 1");

    cfg.dual.species = rd.integer("dual.species", def.dual.species);
    if (cfg.dual.species != 1 && cfg.dual.species != 2) throw fail("dual.species", "must be 1 or 2");
    cfg.dual.lambda = rd.real("dual.lambda", def.dual.lambda);
    if (!(cfg.dual.lambda > 0.0)) throw fail("dual.lambda", "must be positive");
    cfg.dual.picard_tol = rd.real("dual.picard_tol", def.dual.picard_tol);
    if (!(cfg.dual.picard_tol > 0.0)) throw fail("dual.picard_tol", "must be positive");
    cfg.dual.max_iters = rd.integer("dual.max_iters", def.dual.max_iters);
    if (cfg.dual.max_iters < 1) throw fail("dual.max_iters", "must be >= 1");
    cfg.dual.subgrid_points = rd.integer("dual.subgrid_points", def.dual.subgrid_points);
    if (cfg.dual.subgrid_points < 2) throw fail("dual.subgrid_points", "must be >= 2");
    cfg.dual.psi_amplitude = rd.real("dual.psi", def.dual.psi_amplitude);
    if (cfg.dual.psi_amplitude < 0.0) throw fail("dual.psi", "psi = -value must be nonpositive; value must be >= 0");

    cfg.out_dir = rd.text("output.dir", def.out_dir);

    rd.reject_unknown();
    return cfg;
}

inline StudyConfig parse_config_string(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline StudyConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("", 0, "cannot open config file " + path);
    return parse_config(is);
}

/// Key-value text that parse_config maps back to the same configuration, value for value.
inline std::string emit_config(const StudyConfig& cfg) {
    std::ostringstream os;
    auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
    auto num = [](double v) { return format_double(v); };
    auto list = [](const auto& xs) {
        std::string s;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            if (k) s += ", ";
            if constexpr (std::is_floating_point_v<std::decay_t<decltype(xs[k])>>) s += format_double(xs[k]);
            else s += std::to_string(xs[k]);
        }
        return s;
    };
    kv("kernel.family", std::string(to_string(cfg.kernel.family)));
    kv("kernel.radius", num(cfg.kernel.radius));
    kv("kernel.dimension", std::to_string(cfg.kernel.dimension));
    kv("kernel.min_cells_per_radius", num(cfg.kernel.min_cells_per_radius));
    kv("grid.extent", list(cfg.grid.extent));
    kv("grid.cells", list(cfg.grid.cells));
    const ModelParams& m = cfg.model;
    for (int i = 0; i < 2; ++i) {
        const std::string s = std::to_string(i + 1);
        kv("model.c" + s, num(m.c[i]));
        kv("model.a" + s, num(m.a[i]));
        kv("model.alpha" + s, num(m.alpha[i]));
        for (int j = 0; j < 2; ++j) kv("model.beta" + s + std::to_string(j + 1), num(m.beta[i][j]));
    }
    kv("model.t_final", num(m.t_final));
    kv("init.type", std::string(to_string(cfg.init.type)));
    for (int i = 0; i < 2; ++i) {
        const std::string p = "init.u" + std::to_string(i + 1) + ".";
        const SpeciesInit& s = cfg.init.species[i];
        switch (cfg.init.type) {
            case InitialType::Constant: kv(p + "value", num(s.value)); break;
            case InitialType::Gaussian:
                kv(p + "base", num(s.base));
                kv(p + "centers", list(s.centers));
                kv(p + "widths", list(s.widths));
                kv(p + "amplitudes", list(s.amplitudes));
                break;
            case InitialType::Cosine:
                kv(p + "base", num(s.base));
                kv(p + "amplitude", num(s.amplitude));
                kv(p + "mode", std::to_string(s.mode));
                break;
        }
    }
    kv("solver.dt_safety", num(cfg.solver.dt_safety));
    kv("solver.positivity_tol", num(cfg.solver.positivity_tol));
    kv("solver.diag_stride", std::to_string(cfg.solver.diag_stride));
    kv("solver.snapshots", std::to_string(cfg.solver.snapshots));
    kv("solver.dt_max", num(cfg.solver.dt_max));
    kv("nonlocal.n", std::to_string(cfg.nonlocal_n));
    kv("study.n_list", list(cfg.n_list));
    kv("study.q", num(cfg.q));
    kv("consistency.function", std::string(to_string(cfg.consistency_function)));
    kv("consistency.wavenumber", std::to_string(cfg.consistency_wavenumber));
    kv("lemma4.p", num(cfg.lemma4_p));
    kv("dual.species", std::to_string(cfg.dual.species));
    kv("dual.lambda", num(cfg.dual.lambda));
    kv("dual.picard_tol", num(cfg.dual.picard_tol));
    kv("dual.max_iters", std::to_string(cfg.dual.max_iters));
    kv("dual.subgrid_points", std::to_string(cfg.dual.subgrid_points));
    kv("dual.psi", num(cfg.dual.psi_amplitude));
    kv("output.dir", cfg.out_dir);
    return os.str();
}

}  // namespace sktlab
