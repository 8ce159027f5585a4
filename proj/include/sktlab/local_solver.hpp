#pragma once

#include <algorithm>
#include <stdexcept>

#include "sktlab/model.hpp"
#include "sktlab/trajectory.hpp"

namespace sktlab {

/// 3-point (1D) / 5-point (2D) Laplacian with mirrored ghost cells, i.e. zero normal difference
/// of the argument across every boundary face. Written as a sum of face fluxes, so it sums to
/// zero over the box for any argument.
inline void neumann_laplacian(const Field& w, Field& out) {
    const Grid& g = w.grid();
    if (!(out.grid() == g)) out = Field(g);
    const int nx = g.nx(), ny = g.ny();
    const double inv_h2 = 1.0 / (g.h() * g.h());
    const bool two_d = g.dimension() == 2;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = w.at(i, j);
            double s = 0.0;
            if (i > 0) s += w.at(i - 1, j) - c;
            if (i < nx - 1) s += w.at(i + 1, j) - c;
            if (two_d) {
                if (j > 0) s += w.at(i, j - 1) - c;
                if (j < ny - 1) s += w.at(i, j + 1) - c;
            }
            out.at(i, j) = s * inv_h2;
        }
}

inline Field neumann_laplacian(const Field& w) {
    Field out(w.grid());
    neumann_laplacian(w, out);
    return out;
}

/// int |grad v|^2 from differences across interior faces.
inline double gradient_energy(const Field& v) {
    const Grid& g = v.grid();
    const double h = g.h();
    CompensatedSum s;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            if (i + 1 < g.nx()) {
                const double d = (v.at(i + 1, j) - v.at(i, j)) / h;
                s.add(d * d);
            }
            if (g.dimension() == 2 && j + 1 < g.ny()) {
                const double d = (v.at(i, j + 1) - v.at(i, j)) / h;
                s.add(d * d);
            }
        }
    return s.value() * g.cell_volume();
}

struct LocalRunConfig {
    Grid grid;
    ModelParams params;
    SpeciesPair initial;
    RunControls controls;
};

/// Explicit Euler finite-difference solver for  dv_i/dt = Lap p_i(v) + f_i(v),  grad p_i . n = 0.
class LocalSolver {
public:
    LocalSolver(const Grid& grid, const ModelParams& params, RunControls controls = {})
        : grid_(grid), params_(params), ctl_(std::move(controls)) {
        params_.validate();
        if (!(ctl_.dt_safety > 0.0 && ctl_.dt_safety <= 1.0)) throw std::invalid_argument("dt_safety must be in (0, 1]");
    }

    /// min( safety h^2 / (2 N L_p), safety / (reaction rate bound) ).
    double stable_dt(const SpeciesPair& u) const {
        constexpr double eps = 1e-12;
        const double lp = std::max(detail::sup_norm_pair_bound(params_, u), eps);
        const double h = grid_.h();
        const double diffusive = ctl_.dt_safety * h * h / (2.0 * grid_.dimension() * lp);
        const double reactive = ctl_.dt_safety / (detail::reaction_rate_bound(params_, u) + eps);
        return std::min(diffusive, reactive);
    }

    SpeciesPair step(const SpeciesPair& v, double dt) const {
        if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
        if (dt > stable_dt(v) * (1.0 + 1e-12)) throw std::invalid_argument("dt exceeds the stable step");
        SpeciesPair next = v;
        Field lap(v.grid());
        for (int i = 0; i < 2; ++i) {
            neumann_laplacian(p_i(params_, i, v), lap);
            Field& vi = next[i];
            for (std::size_t k = 0; k < vi.size(); ++k)
                vi[k] += dt * (lap[k] + reaction_value(params_, i, v.u1[k], v.u2[k]));
        }
        check_step_result(next, ctl_.positivity_tol, 0.0);
        return next;
    }

    /// sum_i a_i int |grad v_i|^2.
    double weighted_dissipation(const SpeciesPair& v) const {
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
            if (params_.a[i] != 0.0) s += params_.a[i] * gradient_energy(v[i]);
        return s;
    }

    Trajectory run(const SpeciesPair& initial) const {
        if (!(initial.grid() == grid_)) throw std::invalid_argument("initial data grid differs from solver grid");
        return integrate(*this, initial, params_.t_final, ctl_);
    }

    const Grid& grid() const noexcept { return grid_; }
    const ModelParams& params() const noexcept { return params_; }

private:
    Grid grid_;
    ModelParams params_;
    RunControls ctl_;
};

inline SpeciesPair local_step(const LocalRunConfig& cfg, const SpeciesPair& v, double dt) {
    return LocalSolver(cfg.grid, cfg.params, cfg.controls).step(v, dt);
}

inline Trajectory run_local(const LocalRunConfig& cfg) {
    return LocalSolver(cfg.grid, cfg.params, cfg.controls).run(cfg.initial);
}

}  // namespace sktlab
