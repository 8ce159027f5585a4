#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sktlab/errors.hpp"
#include "sktlab/model.hpp"
#include "sktlab/nonlocal_op.hpp"
#include "sktlab/trajectory.hpp"

namespace sktlab {

/// A field-valued function of time.
using TimeField = std::function<Field(double)>;

/// Linear nonlocal problem  d phi/dt - a(t,x) Delta^{1,rho} phi = b(t,x),  phi(0) = c.
struct DualProblem {
    NonlocalOperator op;
    TimeField a;
    TimeField b;
    Field c;
    double t_final = 1.0;
};

struct DualOptions {
    double picard_tol = 1e-10;
    int max_iters = 500;
    /// Time nodes per slab, both ends included.
    int subgrid_points = 32;
    /// Fraction of the contraction limit 1 / (2 |a| |rho|) used as slab length.
    double slab_safety = 0.5;
    /// Uniform samples of a(t) used to bound |a|_inf before the slabs are laid out.
    int a_samples = 65;
    /// Starting iterate on every slab; empty means the slab datum held constant in time.
    TimeField initial_guess;
};

struct SlabSchedule {
    double t0 = 0.0;
    int count = 0;
    /// Lipschitz bound 2 t0 |a|_inf |rho|_mass of the Picard map (max over slabs).
    double contraction_bound = 0.0;
    /// Largest observed ratio of successive Picard increments (above round-off).
    double observed_contraction = 0.0;
};

struct IterationRecord {
    int slab = 0;
    int iteration = 0;
    double increment = 0.0;
    /// increment / previous increment; NaN on the first iteration of a slab.
    double contraction = 0.0;
};

struct DualSolution {
    std::vector<double> t;
    std::vector<Field> phi;
    SlabSchedule schedule;
    std::vector<IterationRecord> iterations;

    double min_value() const {
        double m = std::numeric_limits<double>::infinity();
        for (const Field& f : phi) m = std::min(m, sktlab::min_value(f));
        return m;
    }
};

/// Fixed-point iteration  w <- c + int_0^t (a Delta w + b) ds  on successive time slabs short
/// enough for the map to be a strict contraction, each slab starting from the end value of the
/// previous one. The time integral is the cumulative trapezoid rule on the slab nodes.
///
/// Iteration stops once the sup-norm increment is at most picard_tol / max(1, |a| |rho|), which
/// keeps both the increment and the pointwise equation residual below picard_tol.
inline DualSolution solve_dual(const DualProblem& problem, const DualOptions& opts = {}) {
    if (!(opts.picard_tol > 0.0)) throw std::invalid_argument("picard_tol must be positive");
    if (opts.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (opts.subgrid_points < 2) throw std::invalid_argument("subgrid_points must be >= 2");
    if (!(problem.t_final > 0.0)) throw std::invalid_argument("t_final must be positive");
    const NonlocalOperator& op = problem.op;
    const Grid& grid = op.grid();
    if (!(problem.c.grid() == grid)) throw std::invalid_argument("initial datum grid differs from operator grid");
    if (!problem.c.all_finite()) throw std::invalid_argument("initial datum must be finite");

    double rho_mass = 0.0;
    for (double w : op.kernel().weights) rho_mass += std::abs(w);

    double a_sup = 0.0;
    for (int k = 0; k < opts.a_samples; ++k)
        a_sup = std::max(a_sup, problem.a(problem.t_final * k / std::max(1, opts.a_samples - 1)).max_abs());

    DualSolution sol;
    SlabSchedule& sched = sol.schedule;
    if (a_sup * rho_mass == 0.0) {
        sched.count = 1;
    } else {
        const double t0_max = opts.slab_safety / (2.0 * a_sup * rho_mass);
        sched.count = static_cast<int>(std::ceil(problem.t_final / t0_max));
    }
    sched.t0 = problem.t_final / sched.count;

    const int nodes = opts.subgrid_points;
    const double dt = sched.t0 / (nodes - 1);
    std::vector<Field> a_n(nodes), b_n(nodes), w(nodes), next(nodes), g(nodes, Field(grid));
    Field datum = problem.c;
    Field lap(grid);
    sol.t.push_back(0.0);
    sol.phi.push_back(datum);

    for (int s = 0; s < sched.count; ++s) {
        const double t_start = s * sched.t0;
        double a_slab = 0.0;
        for (int m = 0; m < nodes; ++m) {
            const double t = (s == sched.count - 1 && m == nodes - 1) ? problem.t_final : t_start + m * dt;
            a_n[m] = problem.a(t);
            b_n[m] = problem.b(t);
            if (!(a_n[m].grid() == grid) || !(b_n[m].grid() == grid))
                throw std::invalid_argument("coefficient grid differs from operator grid");
            if (!a_n[m].all_finite() || !b_n[m].all_finite())
                throw NonFinite("dual coefficients are not finite", t);
            a_slab = std::max(a_slab, a_n[m].max_abs());
        }
        const double lipschitz = 2.0 * sched.t0 * a_slab * rho_mass;
        sched.contraction_bound = std::max(sched.contraction_bound, lipschitz);
        if (lipschitz >= 1.0)
            throw NoContraction("slab " + std::to_string(s) + " has Picard Lipschitz bound " + format_double(lipschitz),
                                t_start);

        for (int m = 0; m < nodes; ++m) {
            w[m] = opts.initial_guess ? opts.initial_guess(t_start + m * dt) : datum;
            if (!(w[m].grid() == grid)) throw std::invalid_argument("initial guess grid differs from operator grid");
        }
        const double stop = opts.picard_tol / std::max(1.0, a_slab * rho_mass);
        double prev_inc = 0.0;
        bool converged = false;
        for (int it = 1; it <= opts.max_iters; ++it) {
            for (int m = 0; m < nodes; ++m) {
                op.apply(w[m], lap);
                for (std::size_t k = 0; k < lap.size(); ++k) g[m][k] = a_n[m][k] * lap[k] + b_n[m][k];
            }
            next[0] = datum;
            double inc = 0.0, scale = datum.max_abs();
            for (int m = 0; m + 1 < nodes; ++m) {
                next[m + 1] = next[m];
                Field& nm = next[m + 1];
                for (std::size_t k = 0; k < nm.size(); ++k) {
                    nm[k] += 0.5 * dt * (g[m][k] + g[m + 1][k]);
                    inc = std::max(inc, std::abs(nm[k] - w[m + 1][k]));
                    scale = std::max(scale, std::abs(nm[k]));
                }
            }
            if (!std::isfinite(inc)) throw NonFinite("Picard iterate is not finite", t_start);
            const double noise = 256.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
            double ratio = std::numeric_limits<double>::quiet_NaN();
            if (it > 1) {
                ratio = prev_inc > 0.0 ? inc / prev_inc : 0.0;
                if (prev_inc > noise && inc > noise) {
                    sched.observed_contraction = std::max(sched.observed_contraction, ratio);
                    if (ratio >= 1.0)
                        throw NoContraction("Picard increments stopped shrinking on slab " + std::to_string(s), t_start);
                }
            }
            sol.iterations.push_back({s, it, inc, ratio});
            std::swap(w, next);
            prev_inc = inc;
            if (inc <= std::max(stop, noise)) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw MaxIters("Picard iteration did not reach tolerance on slab " + std::to_string(s), t_start);

        for (int m = 1; m < nodes; ++m) {
            sol.t.push_back((s == sched.count - 1 && m == nodes - 1) ? problem.t_final : t_start + m * dt);
            sol.phi.push_back(w[m]);
        }
        datum = w[nodes - 1];
    }
    return sol;
}

/// Output of the time-reversed, exponentially weighted test function construction.
struct CorollaryResult {
    /// Ascending times tau in [0, T].
    std::vector<double> tau;
    std::vector<Field> phi_in;
    DualSolution dual;
};

/// phi_in(tau) = e^{-lambda (T - tau)} phi(T - tau) where phi solves the dual problem with
///   rho = J_n,  a(t) = p~_i(u(T - t)),  b(t) = -e^{lambda t} psi(T - t) sqrt(a(t)),  c = 0.
/// It then solves  d_tau phi_in + p~_i Delta^n phi_in - lambda phi_in = sqrt(p~_i) psi,  phi_in(T) = 0.
inline CorollaryResult corollary_test_function(const Trajectory& u_traj, const ModelParams& params, int species,
                                               double lambda, const TimeField& psi, const NonlocalOperator& op,
                                               const DualOptions& opts = {}) {
    if (species != 0 && species != 1) throw std::invalid_argument("species index must be 0 or 1");
    if (u_traj.snapshots.size() < 2) throw std::invalid_argument("trajectory needs at least two snapshots");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
    const double t_final = u_traj.snapshots.back().first;

    auto a = [&u_traj, &params, species, t_final](double t) {
        return p_tilde_i(params, species, u_traj.state_at(t_final - t));
    };
    auto b = [a, &psi, lambda, t_final](double t) {
        Field coeff = a(t);
        const Field ps = psi(t_final - t);
        if (ps.max_abs() > 0.0 && *std::max_element(ps.values().begin(), ps.values().end()) > 0.0)
            throw std::invalid_argument("psi must be nonpositive");
        const double e = std::exp(lambda * t);
        for (std::size_t k = 0; k < coeff.size(); ++k) coeff[k] = -e * ps[k] * std::sqrt(coeff[k]);
        return coeff;
    };
    DualProblem problem{op, a, b, Field(op.grid()), t_final};
    CorollaryResult out;
    out.dual = solve_dual(problem, opts);
    const auto& t = out.dual.t;
    for (std::size_t m = t.size(); m-- > 0;) {
        out.tau.push_back(m == 0 ? t_final : t_final - t[m]);
        Field f = out.dual.phi[m];
        f *= std::exp(-lambda * t[m]);
        out.phi_in.push_back(std::move(f));
    }
    out.tau.front() = 0.0;
    return out;
}

/// Discrete L^2(Q_T) norm of  d_tau phi_in + p~_i Delta^n phi_in - lambda phi_in - sqrt(p~_i) psi,
/// evaluated on each time interval in integrating-factor form
///   e^{lambda tau} d_tau (e^{-lambda tau} phi_in) + G,   G = p~_i Delta^n phi_in - sqrt(p~_i) psi,
/// with the difference quotient for the derivative and the two-point average for G.
inline double corollary_residual(const CorollaryResult& res, const Trajectory& u_traj, const ModelParams& params,
                                 int species, double lambda, const TimeField& psi, const NonlocalOperator& op) {
    const Grid& grid = op.grid();
    auto weighted_g = [&](std::size_t m) {
        const double tau = res.tau[m];
        const Field pt = p_tilde_i(params, species, u_traj.state_at(tau));
        const Field ps = psi(tau);
        Field g = op.apply(res.phi_in[m]);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = pt[k] * g[k] - std::sqrt(pt[k]) * ps[k];
        g *= std::exp(-lambda * tau);
        return g;
    };
    CompensatedSum acc;
    Field g_prev = weighted_g(0);
    for (std::size_t m = 0; m + 1 < res.tau.size(); ++m) {
        Field g_next = weighted_g(m + 1);
        const double t0 = res.tau[m], t1 = res.tau[m + 1], dt = t1 - t0;
        const double e0 = std::exp(-lambda * t0), e1 = std::exp(-lambda * t1), emid = std::exp(lambda * 0.5 * (t0 + t1));
        CompensatedSum slice;
        for (std::size_t k = 0; k < g_next.size(); ++k) {
            const double r = emid * ((e1 * res.phi_in[m + 1][k] - e0 * res.phi_in[m][k]) / dt +
                                     0.5 * (g_prev[k] + g_next[k]));
            slice.add(r * r);
        }
        acc.add(slice.value() * grid.cell_volume() * dt);
        g_prev = std::move(g_next);
    }
    return std::sqrt(acc.value());
}

}  // namespace sktlab
