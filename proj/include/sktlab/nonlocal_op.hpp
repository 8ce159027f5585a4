#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sktlab/grid.hpp"
#include "sktlab/kernel.hpp"

namespace sktlab {

/// Omega-restricted nonlocal diffusion operator
///
///     D f(x) = sum_k w(k) (f(x + k h) - f(x)),   only offsets with x + k h inside the box.
///
/// Pairs leaving the domain contribute nothing; this is the nonlocal zero-flux condition, so
/// the operator is exactly mass-neutral and no ghost values are needed. With a Rescaled kernel
/// this is the discrete Delta^n; with any other kernel it is the Delta^{1,rho} of the dual
/// problem.
class NonlocalOperator {
public:
    NonlocalOperator(DiscreteKernel kernel, const Grid& grid) : kernel_(std::move(kernel)), grid_(grid) {
        if (kernel_.dimension != grid.dimension()) throw std::invalid_argument("kernel/grid dimension mismatch");
        if (std::abs(kernel_.h - grid.h()) > 1e-12 * grid.h())
            throw std::invalid_argument("kernel was discretized for a different grid spacing");
        build_rows();
        build_diagonal();
    }

    const DiscreteKernel& kernel() const noexcept { return kernel_; }
    const Grid& grid() const noexcept { return grid_; }

    /// Total weight of admissible offsets at each cell (position dependent near the boundary).
    const std::vector<double>& admissible_mass() const noexcept { return diag_; }

    void apply(const Field& f, Field& out) const {
        check(f);
        if (!(out.grid() == grid_)) out = Field(grid_);
        const int nx = grid_.nx(), ny = grid_.ny();
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const double fx = f.at(i, j);
                CompensatedSum acc;
                for_each_neighbor(i, j, [&](std::size_t y, double w) { acc.add(w * (f[y] - fx)); });
                out.at(i, j) = acc.value();
            }
    }

    Field apply(const Field& f) const {
        Field out(grid_);
        apply(f, out);
        return out;
    }

    /// Discrete double integral  int_Omega int_Omega J(x - y) (f(x) - f(y))^2 dy dx.
    double dissipation(const Field& f) const {
        check(f);
        CompensatedSum total;
        for (int j = 0; j < grid_.ny(); ++j)
            for (int i = 0; i < grid_.nx(); ++i) {
                const double fx = f.at(i, j);
                CompensatedSum acc;
                for_each_neighbor(i, j, [&](std::size_t y, double w) {
                    const double d = f[y] - fx;
                    acc.add(w * d * d);
                });
                total.add(acc.value());
            }
        return total.value() * grid_.cell_volume();
    }

    /// Visits every admissible neighbor of cell (i, j) as (flat index, weight), in a fixed order.
    template <class Visit>
    void for_each_neighbor(int i, int j, Visit&& visit) const {
        const int nx = grid_.nx(), ny = grid_.ny();
        for (const Row& row : rows_) {
            const int jj = j + row.dy;
            if (jj < 0 || jj >= ny) continue;
            const int lo = std::max(-row.half, -i);
            const int hi = std::min(row.half, nx - 1 - i);
            const std::size_t base = grid_.index(0, jj);
            for (int dx = lo; dx <= hi; ++dx)
                visit(base + static_cast<std::size_t>(i + dx), kernel_.weights[row.begin + (dx + row.half)]);
        }
    }

private:
    // Offsets sharing one dy form a contiguous, symmetric run of dx values.
    struct Row {
        int dy;
        int half;
        std::size_t begin;
    };

    void check(const Field& f) const {
        if (!(f.grid() == grid_)) throw std::invalid_argument("field grid does not match operator grid");
    }

    void build_rows() {
        const auto& off = kernel_.offsets;
        std::size_t q = 0;
        while (q < off.size()) {
            const int dy = off[q][1];
            std::size_t e = q;
            while (e < off.size() && off[e][1] == dy) ++e;
            const int half = -off[q][0];
            if (off[e - 1][0] != half || static_cast<int>(e - q) != 2 * half + 1)
                throw std::invalid_argument("kernel offsets are not in row-contiguous symmetric order");
            rows_.push_back({dy, half, q});
            q = e;
        }
    }

    void build_diagonal() {
        diag_.assign(grid_.size(), 0.0);
        for (int j = 0; j < grid_.ny(); ++j)
            for (int i = 0; i < grid_.nx(); ++i) {
                CompensatedSum s;
                for_each_neighbor(i, j, [&](std::size_t, double w) { s.add(w); });
                diag_[grid_.index(i, j)] = s.value();
            }
    }

    DiscreteKernel kernel_;
    Grid grid_;
    std::vector<Row> rows_;
    std::vector<double> diag_;
};

/// W^{2,p} norm from centered difference quotients, with zero values outside the box.
inline double sobolev_w2p_norm(const Field& xi, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("Sobolev exponent p must be >= 1");
    const Grid& g = xi.grid();
    const int nx = g.nx(), ny = g.ny();
    const bool two_d = g.dimension() == 2;
    const double h = g.h();
    auto val = [&](int i, int j) {
        if (i < 0 || i >= nx || j < 0 || j >= ny) return 0.0;
        return xi.at(i, j);
    };
    CompensatedSum acc;
    auto add = [&](double v) { acc.add(std::pow(std::abs(v), p)); };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = val(i, j);
            add(c);
            add((val(i + 1, j) - val(i - 1, j)) / (2.0 * h));
            add((val(i + 1, j) - 2.0 * c + val(i - 1, j)) / (h * h));
            if (two_d) {
                add((val(i, j + 1) - val(i, j - 1)) / (2.0 * h));
                add((val(i, j + 1) - 2.0 * c + val(i, j - 1)) / (h * h));
                const double mixed =
                    (val(i + 1, j + 1) - val(i + 1, j - 1) - val(i - 1, j + 1) + val(i - 1, j - 1)) / (4.0 * h * h);
                add(mixed);
                add(mixed);
            }
        }
    return std::pow(acc.value() * g.cell_volume(), 1.0 / p);
}

/// Relative size of xi on the outermost layer of cells; zero for data vanishing at the boundary.
inline double boundary_layer_fraction(const Field& xi) {
    const Grid& g = xi.grid();
    const double peak = xi.max_abs();
    if (peak == 0.0) return 0.0;
    double edge = 0.0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const bool outer = i == 0 || i == g.nx() - 1 ||
                               (g.dimension() == 2 && (j == 0 || j == g.ny() - 1));
            if (outer) edge = std::max(edge, std::abs(xi.at(i, j)));
        }
    return edge / peak;
}

/// || D xi ||_{L^p} / || xi ||_{W^{2,p}} for xi vanishing at the boundary.
inline double lemma4_ratio(const NonlocalOperator& op, const Field& xi, double p,
                           double boundary_tolerance = 1e-3) {
    if (!(p >= 1.0)) throw std::invalid_argument("Sobolev exponent p must be >= 1");
    if (xi.max_abs() == 0.0) throw std::invalid_argument("lemma4_ratio: zero field gives 0/0");
    if (boundary_layer_fraction(xi) > boundary_tolerance)
        throw std::invalid_argument("lemma4_ratio: test function does not vanish near the boundary");
    return lq_norm_space(op.apply(xi), p) / sobolev_w2p_norm(xi, p);
}

}  // namespace sktlab
