#pragma once
// Backward semi-Lagrangian solver for the discounted value function, plus
// recursion residuals, grid Lipschitz estimates, and greedy policy
// extraction from a solved field.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hjb/integrate.hpp"
#include "hjb/problem.hpp"
#include "hjb/value_field.hpp"

namespace hjb {

class SolveError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  Box domain{{0.0}, {1.0}};
  std::vector<int> nodes{2};
  double dt = 0.0;
  // Exactly one of these fixes the horizon: either a bound on the discounted
  // tail, or an explicit end time. The end time is realized as the smallest
  // grid-aligned time at or beyond the request; dt is kept exact.
  std::optional<double> tail_eps;
  std::optional<double> horizon;
  double tau = 0.0;
  // Abort when more than this fraction of interpolation foot points fall
  // outside the grid box.
  double clamp_fail_fraction = 0.05;
};

namespace detail {

inline int steps_for_horizon(double tau, double dt, double t_end) {
  double span = t_end - tau;
  if (!(span > 0.0)) return 1;
  int k = static_cast<int>(std::ceil(span / dt - 1e-9));
  return std::max(k, 1);
}

}  // namespace detail

// Backward sweep: the terminal layer is zero, and each earlier layer is the
// pointwise minimum over control samples of one explicit Euler cost step
// plus the interpolated next layer at the foot point x + dt f.
inline ValueField solve_value(const ControlProblem& p,
                              const SolverOptions& opt) {
  if (opt.domain.dim() != p.state_dim)
    throw SolveError("solver domain dimension does not match the problem");
  if (!(opt.dt > 0.0)) throw SolveError("solver needs dt > 0");
  if (opt.tail_eps.has_value() == opt.horizon.has_value())
    throw SolveError("set exactly one of tail_eps and horizon");
  if (!p.growth_const || !p.invariant_radius)
    throw SolveError(
        "solver needs growth_const and invariant_radius for the tail bound");
  double k2 = *p.growth_const;
  double m = *p.invariant_radius;
  double delta = p.discount;

  int steps;
  if (opt.tail_eps) {
    double eps = *opt.tail_eps;
    if (!(eps > 0.0)) throw SolveError("tail_eps must be positive");
    // Smallest absolute time with tail bound <= eps; may predate tau.
    double t_req = std::log(k2 * (1.0 + m) / (delta * eps)) / delta;
    steps = detail::steps_for_horizon(opt.tau, opt.dt, t_req);
  } else {
    if (!(*opt.horizon > opt.tau))
      throw SolveError("horizon must lie beyond the start time");
    steps = detail::steps_for_horizon(opt.tau, opt.dt, *opt.horizon);
  }

  ValueField field(opt.tau, opt.dt, steps, SpaceGrid(opt.domain, opt.nodes));
  double t_end = field.horizon();
  field.terminal_bound = std::exp(-delta * t_end) * k2 * (1.0 + m) / delta;

  const auto& samples = p.controls.samples();
  if (samples.empty()) throw SolveError("control set has no samples");
  const std::size_t n_nodes = field.grid.size();
  std::vector<std::vector<double>> pts(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) pts[i] = field.grid.node_point(i);

  std::vector<double> fx(p.state_dim), foot(p.state_dim);
  std::size_t clamped = 0, total = 0;
  for (int k = steps - 1; k >= 0; --k) {
    double t = field.time_at(k);
    double disc = std::exp(-delta * t);
    const std::vector<double>& next = field.layers[k + 1];
    std::vector<double>& cur = field.layers[k];
    for (std::size_t i = 0; i < n_nodes; ++i) {
      const std::vector<double>& x = pts[i];
      double best = std::numeric_limits<double>::infinity();
      for (const auto& u : samples) {
        double cand;
        try {
          p.eval_dynamics(t, x, u, fx);
          for (int a = 0; a < p.state_dim; ++a)
            foot[a] = x[a] + opt.dt * fx[a];
          bool moved = false;
          double cont = field.grid.interpolate(next, foot, &moved);
          ++total;
          if (moved) ++clamped;
          cand = opt.dt * disc * p.eval_cost(t, x, u) + cont;
        } catch (const EvalError& err) {
          std::ostringstream os;
          os << "evaluation failed at t=" << t << ", node " << i << ": "
             << err.what();
          throw SolveError(os.str());
        }
        if (cand < best) best = cand;  // first sample wins ties
      }
      if (!std::isfinite(best)) {
        std::ostringstream os;
        os << "value update is non-finite at t=" << t << ", node " << i;
        throw SolveError(os.str());
      }
      cur[i] = best;
    }
  }
  field.clamp_fraction =
      total == 0 ? 0.0
                 : static_cast<double>(clamped) / static_cast<double>(total);
  if (field.clamp_fraction > opt.clamp_fail_fraction) {
    std::ostringstream os;
    os << "foot points left the grid box too often (fraction "
       << field.clamp_fraction << " > " << opt.clamp_fail_fraction
       << "); enlarge the domain or shrink dt";
    throw SolveError(os.str());
  }
  return field;
}

// Largest absolute one-step recursion defect over the nodes of layer k.
// Zero (up to roundoff) for a field produced by solve_value; nonzero when a
// stored field was corrupted or belongs to a different problem.
inline double dp_residual(const ControlProblem& p, const ValueField& field,
                          int k) {
  if (k < 0 || k >= field.steps)
    throw std::invalid_argument("residual layer out of range");
  const auto& samples = p.controls.samples();
  double t = field.time_at(k);
  double disc = std::exp(-p.discount * t);
  std::vector<double> fx(p.state_dim), foot(p.state_dim);
  double worst = 0.0;
  for (std::size_t i = 0; i < field.grid.size(); ++i) {
    std::vector<double> x = field.grid.node_point(i);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : samples) {
      p.eval_dynamics(t, x, u, fx);
      for (int a = 0; a < p.state_dim; ++a) foot[a] = x[a] + field.dt * fx[a];
      double cand = field.dt * disc * p.eval_cost(t, x, u) +
                    field.grid.interpolate(field.layers[k + 1], foot);
      if (cand < best) best = cand;
    }
    worst = std::max(worst, std::fabs(field.layers[k][i] - best));
  }
  return worst;
}

inline double dp_residual_max(const ControlProblem& p,
                              const ValueField& field) {
  double worst = 0.0;
  for (int k = 0; k < field.steps; ++k)
    worst = std::max(worst, dp_residual(p, field, k));
  return worst;
}

struct LipschitzEstimate {
  double space = 0.0;  // max nodal slope along any axis, any layer
  double time = 0.0;   // max nodal slope between adjacent layers
};

inline LipschitzEstimate lipschitz_estimate(const ValueField& field) {
  LipschitzEstimate est;
  const SpaceGrid& g = field.grid;
  for (int k = 0; k <= field.steps; ++k) {
    const auto& layer = field.layers[k];
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::vector<int> idx = g.multi_index(i);
      for (int a = 0; a < g.dim(); ++a) {
        if (idx[a] + 1 >= g.nodes_per_axis()[a]) continue;
        ++idx[a];
        double dv = std::fabs(layer[g.flat_index(idx)] - layer[i]);
        --idx[a];
        est.space = std::max(est.space, dv / g.spacing()[a]);
      }
      if (k < field.steps)
        est.time = std::max(
            est.time, std::fabs(field.layers[k + 1][i] - layer[i]) / field.dt);
    }
  }
  return est;
}

struct PolicyRollout {
  ControlSignal signal;
  Trajectory trajectory;
};

// Greedy policy from a solved field: at each grid time, re-run the solver's
// argmin at the current state, hold that control for one step, and advance
// the true dynamics with the integrator. The argmin uses the same sample
// order and tie-break as solve_value.
inline PolicyRollout extract_policy_rollout(const ControlProblem& p,
                                            const ValueField& field,
                                            std::span<const double> z,
                                            double h = 0.0) {
  if (static_cast<int>(z.size()) != p.state_dim)
    throw std::invalid_argument("rollout start dimension mismatch");
  if (h <= 0.0) h = field.dt;
  const auto& samples = p.controls.samples();
  std::vector<double> fx(p.state_dim), foot(p.state_dim);

  std::vector<double> bp;
  std::vector<std::vector<double>> vals;
  Trajectory traj;
  traj.times.push_back(field.tau);
  traj.states.emplace_back(z.begin(), z.end());
  traj.cost.push_back(0.0);

  std::vector<double> x(z.begin(), z.end());
  double base_cost = 0.0;
  for (int k = 0; k < field.steps; ++k) {
    double t = field.time_at(k);
    double disc = std::exp(-p.discount * t);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_u = 0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      p.eval_dynamics(t, x, samples[s], fx);
      for (int a = 0; a < p.state_dim; ++a) foot[a] = x[a] + field.dt * fx[a];
      double cand = field.dt * disc * p.eval_cost(t, x, samples[s]) +
                    field.grid.interpolate(field.layers[k + 1], foot);
      if (cand < best) {
        best = cand;
        best_u = s;
      }
    }
    bp.push_back(t);
    vals.push_back(samples[best_u]);
    ControlSignal piece = ControlSignal::constant(t, samples[best_u]);
    Trajectory leg = integrate(p, piece, t, x, field.time_at(k + 1), h);
    for (std::size_t i = 1; i < leg.size(); ++i) {
      traj.times.push_back(leg.times[i]);
      traj.states.push_back(leg.states[i]);
      traj.cost.push_back(base_cost + leg.cost[i]);
    }
    base_cost += leg.total_cost();
    x = leg.back_state();
  }
  return PolicyRollout{ControlSignal(std::move(bp), std::move(vals)),
                       std::move(traj)};
}

}  // namespace hjb
