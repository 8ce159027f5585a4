#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sktlab/errors.hpp"
#include "sktlab/grid.hpp"
#include "sktlab/model.hpp"

namespace sktlab {

/// Diagnostics recorded along a run; every column has one entry per recorded step.
struct DiagnosticsSeries {
    std::vector<double> t;
    std::vector<double> entropy;
    /// Cumulative dissipation D(t), left-endpoint rule in time.
    std::vector<double> dissipation;
    std::vector<double> mass1, mass2;
    std::vector<double> min1, min2;
    std::vector<double> dt;

    std::size_t size() const noexcept { return t.size(); }
};

struct Trajectory {
    std::vector<std::pair<double, SpeciesPair>> snapshots;
    DiagnosticsSeries diagnostics;
    std::size_t steps = 0;

    /// State at time t, piecewise linear between stored snapshots (clamped at the ends).
    SpeciesPair state_at(double t) const {
        if (snapshots.empty()) throw std::logic_error("trajectory has no snapshots");
        if (t <= snapshots.front().first) return snapshots.front().second;
        if (t >= snapshots.back().first) return snapshots.back().second;
        auto it = std::upper_bound(snapshots.begin(), snapshots.end(), t,
                                   [](double v, const auto& s) { return v < s.first; });
        const auto& [t1, s1] = *it;
        const auto& [t0, s0] = *(it - 1);
        const double w = (t - t0) / (t1 - t0);
        SpeciesPair out = s0;
        for (int i = 0; i < 2; ++i)
            for (std::size_t k = 0; k < out[i].size(); ++k) out[i][k] = (1.0 - w) * s0[i][k] + w * s1[i][k];
        return out;
    }

    /// Snapshot series of one species, as consumed by lq_norm_spacetime.
    std::vector<std::pair<double, Field>> species(int i) const {
        std::vector<std::pair<double, Field>> out;
        out.reserve(snapshots.size());
        for (const auto& [t, u] : snapshots) out.emplace_back(t, u[i]);
        return out;
    }
};

/// Time-loop settings shared by the nonlocal and local solvers.
struct RunControls {
    double dt_safety = 0.4;
    double positivity_tol = 1e-10;
    int diag_stride = 10;
    /// Upper cap on every step; infinity leaves the stability bound alone.
    double dt_max = std::numeric_limits<double>::infinity();
    /// Sorted times in [0, T] at which the state is stored.
    std::vector<double> snapshot_times;
};

/// `n` equally spaced times covering [0, T] including both ends.
inline std::vector<double> uniform_times(double t_final, int n) {
    if (n < 2) throw std::invalid_argument("need at least two snapshot times");
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) out[k] = t_final * k / (n - 1);
    out.back() = t_final;
    return out;
}

inline void check_admissible_initial(const SpeciesPair& u) {
    for (int i = 0; i < 2; ++i) {
        if (!u[i].all_finite()) throw std::invalid_argument("initial data must be finite");
        if (min_value(u[i]) < 0.0) throw std::invalid_argument("initial data must be nonnegative");
    }
}

/// Rejects non-finite states and cells below -tol after a step.
inline void check_step_result(const SpeciesPair& u, double tol, double t) {
    for (int i = 0; i < 2; ++i) {
        if (!u[i].all_finite())
            throw NonFinite("non-finite value in species " + std::to_string(i + 1) + " at t=" + format_double(t), t);
        const double m = min_value(u[i]);
        if (m < -tol)
            throw PositivityBreach("species " + std::to_string(i + 1) + " reached " + format_double(m) +
                                       " at t=" + format_double(t) + "; reduce dt_safety",
                                   t);
    }
}

namespace detail {

inline SpeciesPair clamp_small_negatives(SpeciesPair u) {
    for (int i = 0; i < 2; ++i)
        for (double& v : u[i].values())
            if (v < 0.0) v = 0.0;
    return u;
}

inline double sup_norm_pair_bound(const ModelParams& m, const SpeciesPair& u) {
    const double n1 = u.u1.max_abs(), n2 = u.u2.max_abs();
    return std::max(m.c[0] + 2.0 * m.a[0] * n1 + n2, m.c[1] + 2.0 * m.a[1] * n2 + n1);
}

inline double reaction_rate_bound(const ModelParams& m, const SpeciesPair& u) {
    const double un = std::max(u.u1.max_abs(), u.u2.max_abs());
    return std::max(m.alpha[0], m.alpha[1]) + 2.0 * m.max_beta() * un;
}

}  // namespace detail

/// Forward-Euler time loop with adaptive dt clipped onto the snapshot schedule.
///
/// `Stepper` provides stable_dt(u), step(u, dt) and weighted_dissipation(u).
template <class Stepper>
Trajectory integrate(const Stepper& stepper, SpeciesPair u, double t_final, const RunControls& ctl) {
    check_admissible_initial(u);
    if (ctl.diag_stride < 1) throw std::invalid_argument("diag_stride must be >= 1");
    if (!(ctl.dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");
    std::vector<double> stops = ctl.snapshot_times;
    for (std::size_t k = 0; k < stops.size(); ++k) {
        if (stops[k] < 0.0 || stops[k] > t_final) throw std::invalid_argument("snapshot time outside [0, T]");
        if (k > 0 && stops[k] <= stops[k - 1]) throw std::invalid_argument("snapshot times must be increasing");
    }

    Trajectory traj;
    auto record = [&](double t, double dt, double dissipation) {
        const SpeciesPair clamped = detail::clamp_small_negatives(u);
        auto& d = traj.diagnostics;
        d.t.push_back(t);
        d.entropy.push_back(entropy(clamped));
        d.dissipation.push_back(dissipation);
        d.mass1.push_back(total_mass(u.u1));
        d.mass2.push_back(total_mass(u.u2));
        d.min1.push_back(min_value(u.u1));
        d.min2.push_back(min_value(u.u2));
        d.dt.push_back(dt);
    };

    double t = 0.0;
    double dissipation = 0.0;
    std::size_t next_stop = 0;
    auto store_if_due = [&] {
        while (next_stop < stops.size() && stops[next_stop] <= t) {
            if (stops[next_stop] == t) traj.snapshots.emplace_back(t, u);
            ++next_stop;
        }
    };
    record(0.0, 0.0, 0.0);
    store_if_due();

    while (t < t_final) {
        const double target = next_stop < stops.size() ? stops[next_stop] : t_final;
        double dt = std::min(stepper.stable_dt(u), ctl.dt_max);
        if (!(dt > 0.0) || !std::isfinite(dt)) throw NonFinite("stable time step is not positive", t);
        bool land = false;
        if (t + dt >= target) {
            dt = target - t;
            land = true;
        }
        dissipation += dt * stepper.weighted_dissipation(u);
        try {
            u = stepper.step(u, dt);
        } catch (const PositivityBreach& e) {
            throw PositivityBreach(e.what(), t);
        } catch (const NonFinite& e) {
            throw NonFinite(e.what(), t);
        }
        check_step_result(u, ctl.positivity_tol, t + dt);
        t = land ? target : t + dt;
        ++traj.steps;
        if (traj.steps % static_cast<std::size_t>(ctl.diag_stride) == 0 || t >= t_final) record(t, dt, dissipation);
        store_if_due();
    }
    return traj;
}

}  // namespace sktlab
