#pragma once

#include <algorithm>
#include <stdexcept>

#include "sktlab/model.hpp"
#include "sktlab/nonlocal_op.hpp"
#include "sktlab/trajectory.hpp"

namespace sktlab {

/// Everything needed to integrate  du_i/dt = Delta^n p_i(u) + f_i(u)  from given initial data.
struct NonlocalRunConfig {
    NonlocalOperator op;
    ModelParams params;
    SpeciesPair initial;
    RunControls controls;
};

/// Explicit Euler for the nonlocal SKT system on a fixed operator.
class NonlocalSolver {
public:
    NonlocalSolver(const NonlocalOperator& op, const ModelParams& params, RunControls controls = {})
        : op_(op), params_(params), ctl_(std::move(controls)) {
        params_.validate();
        if (op_.kernel().kind != KernelKind::Rescaled)
            throw std::invalid_argument("the nonlocal SKT operator needs a Rescaled kernel");
        if (!(ctl_.dt_safety > 0.0 && ctl_.dt_safety <= 1.0)) throw std::invalid_argument("dt_safety must be in (0, 1]");
        rescaled_mass_ = op_.kernel().total_weight();
    }

    /// min( safety / (2 C1 n^2 L_p),  safety / (reaction rate bound) ), L_p = max_i dp_i/du_i bound.
    double stable_dt(const SpeciesPair& u) const {
        constexpr double eps = 1e-12;
        const double lp = std::max(detail::sup_norm_pair_bound(params_, u), eps);
        const double diffusive = ctl_.dt_safety / (2.0 * rescaled_mass_ * lp);
        const double reactive = ctl_.dt_safety / (detail::reaction_rate_bound(params_, u) + eps);
        return std::min(diffusive, reactive);
    }

    /// One forward-Euler step. Throws PositivityBreach / NonFinite on a bad result.
    SpeciesPair step(const SpeciesPair& u, double dt) const {
        if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
        if (dt > stable_dt(u) * (1.0 + 1e-12)) throw std::invalid_argument("dt exceeds the stable step");
        SpeciesPair next = u;
        Field lap(u.grid());
        for (int i = 0; i < 2; ++i) {
            op_.apply(p_i(params_, i, u), lap);
            Field& ui = next[i];
            for (std::size_t k = 0; k < ui.size(); ++k)
                ui[k] += dt * (lap[k] + reaction_value(params_, i, u.u1[k], u.u2[k]));
        }
        check_step_result(next, ctl_.positivity_tol, 0.0);
        return next;
    }

    /// sum_i a_i * dissipation(u_i): the rate of D(t).
    double weighted_dissipation(const SpeciesPair& u) const {
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
            if (params_.a[i] != 0.0) s += params_.a[i] * op_.dissipation(u[i]);
        return s;
    }

    Trajectory run(const SpeciesPair& initial) const {
        if (!(initial.grid() == op_.grid())) throw std::invalid_argument("initial data grid differs from operator grid");
        return integrate(*this, initial, params_.t_final, ctl_);
    }

    const NonlocalOperator& op() const noexcept { return op_; }
    const ModelParams& params() const noexcept { return params_; }
    const RunControls& controls() const noexcept { return ctl_; }

private:
    const NonlocalOperator& op_;
    ModelParams params_;
    RunControls ctl_;
    double rescaled_mass_ = 0.0;
};

inline double stable_dt(const NonlocalRunConfig& cfg, const SpeciesPair& u) {
    return NonlocalSolver(cfg.op, cfg.params, cfg.controls).stable_dt(u);
}

inline SpeciesPair step(const NonlocalRunConfig& cfg, const SpeciesPair& u, double dt) {
    return NonlocalSolver(cfg.op, cfg.params, cfg.controls).step(u, dt);
}

inline Trajectory run(const NonlocalRunConfig& cfg) {
    return NonlocalSolver(cfg.op, cfg.params, cfg.controls).run(cfg.initial);
}

}  // namespace sktlab
