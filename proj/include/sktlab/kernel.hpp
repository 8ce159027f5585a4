#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sktlab/errors.hpp"
#include "sktlab/grid.hpp"

namespace sktlab {

enum class KernelFamily { Uniform, Tent, PolynomialBump };
enum class KernelKind { Rescaled, DeltaApprox };

inline std::string_view to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::Uniform: return "uniform";
        case KernelFamily::Tent: return "tent";
        case KernelFamily::PolynomialBump: return "bump";
    }
    return "?";
}

inline KernelFamily kernel_family_from_string(std::string_view s) {
    if (s == "uniform") return KernelFamily::Uniform;
    if (s == "tent") return KernelFamily::Tent;
    if (s == "bump") return KernelFamily::PolynomialBump;
    throw std::invalid_argument("unknown kernel family '" + std::string(s) + "'");
}

/// Radial, compactly supported density J(x) = A * g(|x| / r) with unit mass on R^N.
///
/// Shapes g on s in [0, 1]: Uniform 1, Tent 1 - s, PolynomialBump (1 - s^2)^2. The amplitude A is
/// fixed analytically so that the integral over the ball B_r is one.
class KernelProfile {
public:
    KernelProfile(KernelFamily family, double radius, int dimension)
        : family_(family), radius_(radius), dim_(dimension) {
        if (dimension != 1 && dimension != 2) throw std::invalid_argument("kernel dimension must be 1 or 2");
        if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("kernel radius must be positive");
        // 1D mass: 2 r int_0^1 g;  2D mass: 2 pi r^2 int_0^1 g s ds.
        double shape_integral = 0.0;
        if (dim_ == 1) {
            switch (family_) {
                case KernelFamily::Uniform: shape_integral = 1.0; break;
                case KernelFamily::Tent: shape_integral = 0.5; break;
                case KernelFamily::PolynomialBump: shape_integral = 8.0 / 15.0; break;
            }
            amplitude_ = 1.0 / (2.0 * radius_ * shape_integral);
        } else {
            switch (family_) {
                case KernelFamily::Uniform: shape_integral = 0.5; break;
                case KernelFamily::Tent: shape_integral = 1.0 / 6.0; break;
                case KernelFamily::PolynomialBump: shape_integral = 1.0 / 6.0; break;
            }
            amplitude_ = 1.0 / (2.0 * std::numbers::pi * radius_ * radius_ * shape_integral);
        }
    }

    KernelFamily family() const noexcept { return family_; }
    double radius() const noexcept { return radius_; }
    int dimension() const noexcept { return dim_; }

    /// J as a function of the Euclidean norm |x|. The support is the closed ball.
    double radial_value(double dist) const noexcept {
        const double s = std::abs(dist) / radius_;
        if (s > 1.0 + 1e-12) return 0.0;
        switch (family_) {
            case KernelFamily::Uniform: return amplitude_;
            case KernelFamily::Tent: return amplitude_ * std::max(0.0, 1.0 - s);
            case KernelFamily::PolynomialBump: {
                const double w = std::max(0.0, 1.0 - s * s);
                return amplitude_ * w * w;
            }
        }
        return 0.0;
    }

    double value(double x, double y = 0.0) const noexcept { return radial_value(std::hypot(x, y)); }

private:
    KernelFamily family_;
    double radius_;
    int dim_;
    double amplitude_ = 0.0;
};

inline KernelProfile make_profile(KernelFamily family, double radius, int dimension) {
    return KernelProfile(family, radius, dimension);
}

/// C1 = [ (1/2) int J(x) x_N^2 dx ]^{-1}, the constant that turns the leading Taylor term of the
/// rescaled operator into the Laplacian.
struct MomentNormalizer {
    double c1 = 0.0;
    double quadrature_error_estimate = 0.0;
};

namespace detail {

// Per-axis second moment of a radial profile reduced to a 1D radial integral:
//   N = 1: 2 int_0^r J(s) s^2 ds      N = 2: pi int_0^r J(s) s^3 ds
// by the composite midpoint rule with `cells` subintervals.
inline double radial_second_moment(const KernelProfile& p, int cells) {
    const double ds = p.radius() / cells;
    CompensatedSum acc;
    for (int k = 0; k < cells; ++k) {
        const double s = (k + 0.5) * ds;
        const double jv = p.radial_value(s);
        acc.add(p.dimension() == 1 ? jv * s * s : jv * s * s * s);
    }
    return (p.dimension() == 1 ? 2.0 : std::numbers::pi) * acc.value() * ds;
}

}  // namespace detail

/// Second-moment normalizer by radial midpoint quadrature at `quad_resolution` and twice that,
/// combined by Richardson extrapolation. The error estimate is the distance between the
/// extrapolated and the fine-resolution values.
inline MomentNormalizer compute_c1(const KernelProfile& profile, int quad_resolution) {
    if (quad_resolution < 64) throw std::invalid_argument("compute_c1 needs at least 64 samples per radius");
    const double coarse = detail::radial_second_moment(profile, quad_resolution);
    const double fine = detail::radial_second_moment(profile, 2 * quad_resolution);
    const double extrapolated = (4.0 * fine - coarse) / 3.0;
    const double c1 = 2.0 / extrapolated;
    return {c1, std::abs(c1 - 2.0 / fine)};
}

/// Quadrature weights of the rescaled kernel on integer grid offsets.
///
/// `weights[k]` multiplies f(x + offsets[k] h) and already carries the cell volume h^N, so a
/// DeltaApprox kernel sums to one and a Rescaled kernel sums to C1 n^2.
struct DiscreteKernel {
    int scale_n = 1;
    KernelKind kind = KernelKind::DeltaApprox;
    std::vector<std::array<int, 2>> offsets;
    std::vector<double> weights;
    /// Spacing the offsets refer to.
    double h = 0.0;
    int dimension = 1;

    double total_weight() const {
        CompensatedSum s;
        for (double w : weights) s.add(w);
        return s.value();
    }

    /// Largest |offset| component, i.e. the stencil half-width in cells.
    int half_width() const {
        int m = 0;
        for (const auto& o : offsets) m = std::max({m, std::abs(o[0]), std::abs(o[1])});
        return m;
    }
};

struct DiscretizeOptions {
    double min_cells_per_radius = 8.0;
};

/// Samples J~_n(x) = n^N J(n x) at cell-center offsets with |k| h <= r / n (midpoint rule).
///
/// The off-center samples are then multiplied by a radial quadratic lambda + mu s^2 so that the
/// weights sum to one and the discrete per-axis second moment equals 2 / (C1 n^2) exactly.
/// Rescaled weights are C1 n^2 times the DeltaApprox ones.
inline DiscreteKernel discretize(const KernelProfile& profile, const MomentNormalizer& normalizer, int n,
                                 const Grid& grid, KernelKind kind = KernelKind::Rescaled,
                                 DiscretizeOptions opts = {}) {
    if (n < 1) throw std::invalid_argument("kernel scale n must be a positive integer");
    if (grid.dimension() != profile.dimension())
        throw std::invalid_argument("kernel and grid dimensions differ");
    const double h = grid.h();
    const double support = profile.radius() / n;
    const double cells_per_radius = support / h;
    if (cells_per_radius < opts.min_cells_per_radius * (1.0 - 1e-12))
        throw UnderresolvedKernel("kernel support r/n spans " + std::to_string(cells_per_radius) +
                                  " cells, below the minimum of " +
                                  std::to_string(opts.min_cells_per_radius));

    const int m = static_cast<int>(std::floor(cells_per_radius * (1.0 + 1e-12)));
    const int my = grid.dimension() == 2 ? m : 0;
    const double nd = static_cast<double>(n);
    const double scale = grid.dimension() == 1 ? nd * h : nd * nd * h * h;

    DiscreteKernel k;
    k.scale_n = n;
    k.kind = kind;
    k.h = h;
    k.dimension = grid.dimension();
    std::size_t center = 0;
    for (int dy = -my; dy <= my; ++dy)
        for (int dx = -m; dx <= m; ++dx) {
            const double dist2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            if (std::sqrt(dist2) > cells_per_radius * (1.0 + 1e-12)) continue;
            if (dx == 0 && dy == 0) center = k.offsets.size();
            k.offsets.push_back({dx, dy});
            k.weights.push_back(scale * profile.radial_value(nd * h * std::sqrt(dist2)));
        }

    // Off-center correction (lambda + mu s^2), s = |k| / cells_per_radius, fitted so that the
    // off-center mass is 1 - w(0) and the per-axis second moment is 2 / (C1 n^2).
    CompensatedSum m0, m2, z0, z2;
    for (std::size_t q = 0; q < k.offsets.size(); ++q) {
        if (q == center) continue;
        const double dx = k.offsets[q][0], dy = k.offsets[q][1];
        const double s2 = (dx * dx + dy * dy) / (cells_per_radius * cells_per_radius);
        const double z = dx * h;
        m0.add(k.weights[q]);
        m2.add(k.weights[q] * s2);
        z0.add(k.weights[q] * z * z);
        z2.add(k.weights[q] * s2 * z * z);
    }
    const double mass_target = 1.0 - k.weights[center];
    const double moment_target = 2.0 / (normalizer.c1 * nd * nd);
    const double det = m0.value() * z2.value() - m2.value() * z0.value();
    const double lambda = (mass_target * z2.value() - m2.value() * moment_target) / det;
    const double mu = (m0.value() * moment_target - z0.value() * mass_target) / det;
    CompensatedSum off;
    for (std::size_t q = 0; q < k.offsets.size(); ++q) {
        if (q == center) continue;
        const double dx = k.offsets[q][0], dy = k.offsets[q][1];
        const double s2 = (dx * dx + dy * dy) / (cells_per_radius * cells_per_radius);
        k.weights[q] *= lambda + mu * s2;
        if (!(k.weights[q] >= 0.0))
            throw UnderresolvedKernel("moment correction produced a negative weight; refine the grid");
        off.add(k.weights[q]);
    }
    k.weights[center] = 1.0 - off.value();
    if (k.weights[center] < 0.0) throw UnderresolvedKernel("moment correction produced a negative center weight");

    if (kind == KernelKind::Rescaled) {
        const double amp = normalizer.c1 * nd * nd;
        for (double& w : k.weights) w *= amp;
    }
    return k;
}

}  // namespace sktlab
