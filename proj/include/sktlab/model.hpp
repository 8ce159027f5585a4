#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sktlab/grid.hpp"

namespace sktlab {

/// Coefficients of the SKT system. Species are indexed 0 and 1 throughout the library.
struct ModelParams {
    std::array<double, 2> c{0.0, 0.0};
    std::array<double, 2> a{0.0, 0.0};
    std::array<double, 2> alpha{0.0, 0.0};
    std::array<std::array<double, 2>, 2> beta{{{0.0, 0.0}, {0.0, 0.0}}};
    double t_final = 1.0;

    void validate() const {
        auto nonneg = [](double v, const char* name) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument(std::string("model parameter ") + name + " must be finite and >= 0");
        };
        for (int i = 0; i < 2; ++i) {
            nonneg(c[i], "c");
            nonneg(a[i], "a");
            nonneg(alpha[i], "alpha");
            nonneg(beta[i][0], "beta");
            nonneg(beta[i][1], "beta");
        }
        if (!(t_final > 0.0) || !std::isfinite(t_final)) throw std::invalid_argument("t_final must be positive");
    }

    /// Strictly positive self-diffusion for both species.
    bool has_self_diffusion() const noexcept { return a[0] > 0.0 && a[1] > 0.0; }

    bool reaction_free() const noexcept {
        return alpha[0] == 0.0 && alpha[1] == 0.0 && beta[0][0] == 0.0 && beta[0][1] == 0.0 &&
               beta[1][0] == 0.0 && beta[1][1] == 0.0;
    }

    double max_beta() const noexcept {
        return std::max({beta[0][0], beta[0][1], beta[1][0], beta[1][1]});
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Pointwise forms.  For species i with partner j:
//   p_i  = u_i (c_i + a_i u_i + u_j)
//   p~_i = c_i + a_i u_i + u_j          (p_i / u_i, evaluated without division)
//   f_i  = u_i (alpha_i - beta_i1 u_1 - beta_i2 u_2)

inline double diffusion_value(const ModelParams& m, int i, double u1, double u2) noexcept {
    const double ui = i == 0 ? u1 : u2, uj = i == 0 ? u2 : u1;
    return ui * (m.c[i] + m.a[i] * ui + uj);
}

inline double diffusion_ratio_value(const ModelParams& m, int i, double u1, double u2) noexcept {
    const double ui = i == 0 ? u1 : u2, uj = i == 0 ? u2 : u1;
    return m.c[i] + m.a[i] * ui + uj;
}

inline double reaction_value(const ModelParams& m, int i, double u1, double u2) noexcept {
    const double ui = i == 0 ? u1 : u2;
    return ui * (m.alpha[i] - m.beta[i][0] * u1 - m.beta[i][1] * u2);
}

namespace detail {
template <class Fn>
Field pointwise(const SpeciesPair& u, Fn&& fn) {
    Field out(u.grid());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = fn(u.u1[k], u.u2[k]);
    return out;
}

inline void check_species(int i) {
    if (i != 0 && i != 1) throw std::invalid_argument("species index must be 0 or 1");
}
}  // namespace detail

inline Field p_i(const ModelParams& m, int i, const SpeciesPair& u) {
    detail::check_species(i);
    return detail::pointwise(u, [&](double a, double b) { return diffusion_value(m, i, a, b); });
}

inline Field f_i(const ModelParams& m, int i, const SpeciesPair& u) {
    detail::check_species(i);
    return detail::pointwise(u, [&](double a, double b) { return reaction_value(m, i, a, b); });
}

inline Field p_tilde_i(const ModelParams& m, int i, const SpeciesPair& u) {
    detail::check_species(i);
    return detail::pointwise(u, [&](double a, double b) { return diffusion_ratio_value(m, i, a, b); });
}

/// s (ln s - 1) + 1, continuously extended by 1 at s = 0.
inline double entropy_density(double s) noexcept { return s == 0.0 ? 1.0 : s * (std::log(s) - 1.0) + 1.0; }

/// E(u) = sum_i int (u_i (ln u_i - 1) + 1).
inline double entropy(const SpeciesPair& u) {
    CompensatedSum s;
    for (int i = 0; i < 2; ++i)
        for (double v : u[i].values()) {
            if (v < 0.0) throw std::invalid_argument("entropy requires nonnegative densities");
            s.add(entropy_density(v));
        }
    return s.value() * u.grid().cell_volume();
}

}  // namespace sktlab
