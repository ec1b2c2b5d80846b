#pragma once
// Discrete value function: one scalar layer per time step on a fixed state
// grid, with multilinear interpolation in space and linear interpolation in
// time. Carries the certified truncation bound from which the accuracy
// budget is derived.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "hjb/grid.hpp"

namespace hjb {

struct ValueField {
  double tau = 0.0;  // first grid time
  double dt = 0.0;
  int steps = 0;  // layers are indexed 0..steps
  SpaceGrid grid;
  std::vector<std::vector<double>> layers;
  // Bound on the discounted tail beyond the horizon, valid inside the
  // invariant ball.
  double terminal_bound = 0.0;
  // Fraction of interpolation foot points that were clamped to the grid box
  // while solving.
  double clamp_fraction = 0.0;

  ValueField(double tau_, double dt_, int steps_, SpaceGrid grid_)
      : tau(tau_), dt(dt_), steps(steps_), grid(std::move(grid_)) {
    if (!(dt > 0.0) || steps < 1)
      throw std::invalid_argument("value field needs dt > 0 and steps >= 1");
    layers.assign(static_cast<std::size_t>(steps) + 1,
                  std::vector<double>(grid.size(), 0.0));
  }

  double horizon() const { return tau + dt * static_cast<double>(steps); }
  double time_at(int k) const {
    return k == steps ? horizon() : tau + dt * static_cast<double>(k);
  }

  double value(int k, std::size_t flat) const { return layers[k][flat]; }

  // Multilinear interpolation inside layer k.
  double interp_space(int k, std::span<const double> x) const {
    return grid.interpolate(layers[k], x);
  }

  // Space-time interpolation; t is clamped to [tau, horizon].
  double value_at(double t, std::span<const double> x) const {
    if (t <= tau) return interp_space(0, x);
    if (t >= horizon()) return interp_space(steps, x);
    double s = (t - tau) / dt;
    int k = std::min(static_cast<int>(std::floor(s)), steps - 1);
    double w = s - static_cast<double>(k);
    double a = interp_space(k, x);
    if (w == 0.0) return a;
    return (1.0 - w) * a + w * interp_space(k + 1, x);
  }

  // Accuracy budget combining the horizon truncation with the scheme's
  // consistency terms: time step, space step, and the coupling term
  // (space step)^2 / (time step).
  double tolerance_budget() const {
    double dx = grid.max_spacing();
    return terminal_bound + dt + dx + dx * dx / dt;
  }
};

}  // namespace hjb
