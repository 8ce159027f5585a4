#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace sktlab {

/// Neumaier-compensated running sum. Summation order is fixed by the caller, so results are
/// reproducible bit for bit.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Axis-aligned box [0, L_x] (x [0, L_y]) split into equal square cells of side h.
class Grid {
public:
    Grid() = default;

    static Grid make_1d(double extent, int cells) { return Grid(1, {extent, 0.0}, {cells, 1}); }

    static Grid make_2d(double extent_x, double extent_y, int cells_x, int cells_y) {
        return Grid(2, {extent_x, extent_y}, {cells_x, cells_y});
    }

    int dimension() const noexcept { return dim_; }
    int nx() const noexcept { return cells_[0]; }
    int ny() const noexcept { return cells_[1]; }
    int cells(int axis) const { return cells_.at(axis); }
    double extent(int axis) const { return extent_.at(axis); }
    double h() const noexcept { return h_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(cells_[0]) * cells_[1]; }

    /// Volume element h^N.
    double cell_volume() const noexcept { return dim_ == 1 ? h_ : h_ * h_; }

    std::size_t index(int i, int j = 0) const noexcept {
        return static_cast<std::size_t>(j) * cells_[0] + i;
    }

    /// Cell-center coordinate along one axis.
    double center(int /*axis*/, int i) const noexcept { return (i + 0.5) * h_; }

    /// Distance from the center of cell (i, j) to the nearest face of the box.
    double boundary_distance(int i, int j = 0) const noexcept {
        double d = std::min(center(0, i), extent_[0] - center(0, i));
        if (dim_ == 2) d = std::min({d, center(1, j), extent_[1] - center(1, j)});
        return d;
    }

    double min_extent() const noexcept {
        return dim_ == 1 ? extent_[0] : std::min(extent_[0], extent_[1]);
    }

    double volume() const noexcept { return dim_ == 1 ? extent_[0] : extent_[0] * extent_[1]; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    Grid(int dim, std::array<double, 2> extent, std::array<int, 2> cells)
        : dim_(dim), extent_(extent), cells_(cells) {
        if (dim != 1 && dim != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
        for (int a = 0; a < dim; ++a) {
            if (cells[a] < 4) throw std::invalid_argument("grid needs at least 4 cells per axis");
            if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
                throw std::invalid_argument("grid extent must be positive");
        }
        h_ = extent[0] / cells[0];
        if (dim == 2) {
            const double hy = extent[1] / cells[1];
            if (std::abs(hy - h_) > 1e-12 * h_)
                throw std::invalid_argument("grid spacing must be equal on both axes");
        }
    }

    int dim_ = 1;
    std::array<double, 2> extent_{1.0, 0.0};
    std::array<int, 2> cells_{4, 1};
    double h_ = 0.25;
};

/// Cell-centered scalar samples on a grid.
class Field {
public:
    Field() = default;
    explicit Field(const Grid& grid, double value = 0.0) : grid_(grid), values_(grid.size(), value) {}
    Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size()) throw std::invalid_argument("field size does not match grid");
    }

    /// Samples `fn(x)` (1D) or `fn(x, y)` (2D) at every cell center.
    template <class Fn>
    static Field sample(const Grid& grid, Fn&& fn) {
        Field f(grid);
        for (int j = 0; j < grid.ny(); ++j)
            for (int i = 0; i < grid.nx(); ++i) {
                if constexpr (std::is_invocable_v<Fn, double>)
                    f[grid.index(i, j)] = fn(grid.center(0, i));
                else
                    f[grid.index(i, j)] = fn(grid.center(0, i), grid.center(1, j));
            }
        return f;
    }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    double& operator[](std::size_t k) noexcept { return values_[k]; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }
    double& at(int i, int j = 0) noexcept { return values_[grid_.index(i, j)]; }
    double at(int i, int j = 0) const noexcept { return values_[grid_.index(i, j)]; }
    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    bool all_finite() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    double max_abs() const noexcept {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    Field& operator+=(const Field& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    Field& operator*=(double s) noexcept {
        for (double& v : values_) v *= s;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double s, Field a) { return a *= s; }

    friend bool operator==(const Field&, const Field&) = default;

private:
    void check_same(const Field& o) const {
        if (!(o.grid_ == grid_)) throw std::invalid_argument("fields live on different grids");
    }

    Grid grid_;
    std::vector<double> values_;
};

/// The two population densities (u1, u2) on one shared grid.
struct SpeciesPair {
    Field u1;
    Field u2;

    SpeciesPair() = default;
    SpeciesPair(Field a, Field b) : u1(std::move(a)), u2(std::move(b)) {
        if (!(u1.grid() == u2.grid())) throw std::invalid_argument("species fields must share one grid");
    }

    const Grid& grid() const noexcept { return u1.grid(); }
    Field& operator[](int i) noexcept { return i == 0 ? u1 : u2; }
    const Field& operator[](int i) const noexcept { return i == 0 ? u1 : u2; }

    friend bool operator==(const SpeciesPair&, const SpeciesPair&) = default;
};

inline double lq_norm_space(const Field& f, double q) {
    if (!(q >= 1.0)) throw std::invalid_argument("norm exponent q must be >= 1");
    CompensatedSum s;
    for (double v : f.values()) s.add(std::pow(std::abs(v), q));
    return std::pow(s.value() * f.grid().cell_volume(), 1.0 / q);
}

/// Space-time L^q norm: composite trapezoid in t over the given snapshots.
inline double lq_norm_spacetime(const std::vector<std::pair<double, Field>>& snapshots, double q) {
    if (snapshots.size() < 2) throw std::invalid_argument("space-time norm needs at least 2 snapshots");
    if (!(q >= 1.0)) throw std::invalid_argument("norm exponent q must be >= 1");
    CompensatedSum s;
    double prev = std::pow(lq_norm_space(snapshots[0].second, q), q);
    for (std::size_t k = 1; k < snapshots.size(); ++k) {
        const double dt = snapshots[k].first - snapshots[k - 1].first;
        if (dt < 0.0) throw std::invalid_argument("snapshots must be time-ordered");
        const double cur = std::pow(lq_norm_space(snapshots[k].second, q), q);
        s.add(0.5 * dt * (prev + cur));
        prev = cur;
    }
    return std::pow(s.value(), 1.0 / q);
}

inline double total_mass(const Field& f) {
    CompensatedSum s;
    for (double v : f.values()) s.add(v);
    return s.value() * f.grid().cell_volume();
}

inline double min_value(const Field& f) {
    return *std::min_element(f.values().begin(), f.values().end());
}

/// A field together with a mask of the cells that survived a boundary-layer cut.
struct RestrictedField {
    Field values;
    std::vector<char> keep;

    std::size_t surviving() const {
        return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), char{1}));
    }

    double max_abs() const {
        double m = 0.0;
        for (std::size_t k = 0; k < keep.size(); ++k)
            if (keep[k]) m = std::max(m, std::abs(values[k]));
        return m;
    }
};

/// Masks out every cell whose center lies closer than `margin` to the boundary.
inline RestrictedField restrict_interior(const Field& f, double margin) {
    if (margin < 0.0) throw std::invalid_argument("margin must be nonnegative");
    const Grid& g = f.grid();
    if (margin > 0.5 * g.min_extent()) throw std::invalid_argument("margin exceeds half the domain extent");
    RestrictedField out{f, std::vector<char>(f.size(), 0)};
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            out.keep[g.index(i, j)] = (margin == 0.0 || g.boundary_distance(i, j) >= margin) ? 1 : 0;
    return out;
}

// Snapshot text format: "# t=<time> nx=<..> [ny=<..>] h=<..>" followed by one value per line,
// row-major (x fastest), 17 significant digits.

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_snapshot(std::ostream& os, double t, const Field& f) {
    const Grid& g = f.grid();
    os << "# t=" << format_double(t) << " nx=" << g.nx();
    if (g.dimension() == 2) os << " ny=" << g.ny();
    os << " h=" << format_double(g.h()) << '\n';
    for (double v : f.values()) os << format_double(v) << '\n';
}

inline void write_snapshot(const std::string& path, double t, const Field& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_snapshot(os, t, f);
}

/// Parses a snapshot written by write_snapshot. Returns (t, field).
inline std::pair<double, Field> read_snapshot(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header.rfind("# ", 0) != 0)
        throw std::runtime_error("snapshot: missing header line");
    double t = 0.0, h = 0.0;
    int nx = 0, ny = 0;
    std::istringstream hs(header.substr(2));
    std::string tok;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::runtime_error("snapshot: bad header token " + tok);
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "t") t = std::stod(val);
        else if (key == "nx") nx = std::stoi(val);
        else if (key == "ny") ny = std::stoi(val);
        else if (key == "h") h = std::stod(val);
        else throw std::runtime_error("snapshot: unknown header key " + key);
    }
    const Grid g = ny > 0 ? Grid::make_2d(nx * h, ny * h, nx, ny) : Grid::make_1d(nx * h, nx);
    std::vector<double> vals;
    vals.reserve(g.size());
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        vals.push_back(std::stod(line));
    }
    return {t, Field(g, std::move(vals))};
}

}  // namespace sktlab
