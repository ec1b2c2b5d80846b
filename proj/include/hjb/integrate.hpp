#pragma once
// Classical fourth-order Runge-Kutta integration of a controlled system
// together with its discounted running cost, plus the finite-horizon cost
// certificate that brackets the infinite-horizon cost.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjb/control_signal.hpp"
#include "hjb/problem.hpp"

namespace hjb {

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t, std::vector<double> x)
      : std::runtime_error(what), time_(t), state_(std::move(x)) {}
  double time() const { return time_; }
  const std::vector<double>& state() const { return state_; }

 private:
  double time_;
  std::vector<double> state_;
};

class CertificateError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Trajectory {
  std::vector<double> times;
  // states[i] is the state at times[i]; cost[i] the accumulated discounted
  // cost over [times[0], times[i]].
  std::vector<std::vector<double>> states;
  std::vector<double> cost;

  std::size_t size() const { return times.size(); }
  const std::vector<double>& front_state() const { return states.front(); }
  const std::vector<double>& back_state() const { return states.back(); }
  double total_cost() const { return cost.back(); }
};

namespace detail {

// One RK4 step of the (state, cost) pair over [t, t+dt] under a fixed
// control value.
inline void rk4_step(const ControlProblem& p, double t, double dt,
                     const std::vector<double>& u, std::vector<double>& x,
                     double& c) {
  const int n = p.state_dim;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), xt(n);
  double c1, c2, c3, c4;
  auto rate = [&](double ti, const std::vector<double>& xi,
                  std::vector<double>& fx, double& lc) {
    p.eval_dynamics(ti, xi, u, fx);
    lc = std::exp(-p.discount * ti) * p.eval_cost(ti, xi, u);
  };
  rate(t, x, k1, c1);
  for (int i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * dt * k1[i];
  rate(t + 0.5 * dt, xt, k2, c2);
  for (int i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * dt * k2[i];
  rate(t + 0.5 * dt, xt, k3, c3);
  for (int i = 0; i < n; ++i) xt[i] = x[i] + dt * k3[i];
  rate(t + dt, xt, k4, c4);
  for (int i = 0; i < n; ++i)
    x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  c += dt / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
}

inline bool all_finite(const std::vector<double>& v) {
  for (double a : v)
    if (!std::isfinite(a)) return false;
  return true;
}

}  // namespace detail

// Integrate from (tau, z) to horizon T with step bound h. Control
// breakpoints are never stepped across: each constant-control piece is
// subdivided into equal steps no longer than h.
inline Trajectory integrate(const ControlProblem& p, const ControlSignal& u,
                            double tau, std::span<const double> z, double T,
                            double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step bound must be positive");
  if (!(T >= tau)) throw std::invalid_argument("horizon precedes start time");
  if (u.start() > tau)
    throw std::invalid_argument("control signal starts after the trajectory");
  if (static_cast<int>(z.size()) != p.state_dim)
    throw std::invalid_argument("initial state dimension mismatch");
  if (u.dimension() != p.control_dim)
    throw std::invalid_argument("control dimension mismatch");

  std::vector<double> events{tau};
  for (double b : u.breakpoints())
    if (b > tau && b < T) events.push_back(b);
  if (T > tau) events.push_back(T);

  Trajectory traj;
  traj.times.push_back(tau);
  traj.states.emplace_back(z.begin(), z.end());
  traj.cost.push_back(0.0);

  std::vector<double> x(z.begin(), z.end());
  double c = 0.0;
  for (std::size_t e = 0; e + 1 < events.size(); ++e) {
    double a = events[e], b = events[e + 1];
    const std::vector<double>& uv = u.value_at(a);
    auto n_sub = static_cast<std::size_t>(std::ceil((b - a) / h - 1e-12));
    if (n_sub == 0) n_sub = 1;
    double dt = (b - a) / static_cast<double>(n_sub);
    for (std::size_t s = 0; s < n_sub; ++s) {
      double t0 = a + dt * static_cast<double>(s);
      std::vector<double> x_prev = x;
      try {
        detail::rk4_step(p, t0, dt, uv, x, c);
      } catch (const EvalError& err) {
        std::ostringstream os;
        os << "dynamics or cost evaluation failed near t=" << t0 << ": "
           << err.what();
        throw IntegrationError(os.str(), t0, std::move(x_prev));
      }
      if (!detail::all_finite(x) || !std::isfinite(c)) {
        std::ostringstream os;
        os << "state or cost became non-finite near t=" << t0 + dt;
        throw IntegrationError(os.str(), t0, std::move(x_prev));
      }
      traj.times.push_back(s + 1 == n_sub ? b : t0 + dt);
      traj.states.push_back(x);
      traj.cost.push_back(c);
    }
  }
  return traj;
}

// Interval certificate for the infinite-horizon discounted cost: the finite
// part is computed, the tail beyond T is bounded by the growth constant.
struct CostCertificate {
  double horizon = 0.0;
  double finite_cost = 0.0;
  double tail_bound = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
  double midpoint() const { return 0.5 * (lower + upper); }
  bool contains(double v) const { return lower <= v && v <= upper; }
};

// Certified bracket of the infinite-horizon cost from (tau, z) under u.
// Requires the growth constant and the invariant radius; refuses to certify
// if the computed path leaves the invariant ball, since the tail bound is
// only valid for trajectories that stay inside it.
inline CostCertificate cost_with_tail(const ControlProblem& p,
                                      const ControlSignal& u, double tau,
                                      std::span<const double> z, double T,
                                      double h) {
  if (!p.growth_const || !p.invariant_radius)
    throw CertificateError(
        "cost certificate needs growth_const and invariant_radius");
  double k2 = *p.growth_const;
  double m = *p.invariant_radius;
  Trajectory traj = integrate(p, u, tau, z, T, h);
  double ball = m * (1.0 + 1e-12) + 1e-12;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (detail::norm2(traj.states[i]) > ball) {
      std::ostringstream os;
      os << "trajectory leaves the invariant ball (radius " << m
         << ") at t=" << traj.times[i] << "; tail bound does not apply";
      throw CertificateError(os.str());
    }
  }
  CostCertificate cert;
  cert.horizon = T;
  cert.finite_cost = traj.total_cost();
  cert.tail_bound = std::exp(-p.discount * T) * k2 * (1.0 + m) / p.discount;
  cert.lower = cert.finite_cost - (p.cost_nonnegative ? 0.0 : cert.tail_bound);
  cert.upper = cert.finite_cost + cert.tail_bound;
  return cert;
}

struct GronwallReport {
  bool pass = false;
  // Smallest normalized slack (bound - observed) / (1 + bound) over all
  // sample times and both inequalities; negative means a violation.
  double worst_margin = 0.0;
  double worst_time = 0.0;
  std::string worst_check;
};

// Checks the two a-priori trajectory estimates on computed paths:
// separation of two starts under one control grows at most like
// exp(K1 (t - tau)), and drift from the start is bounded by
// K2 (1 + R) exp(K2 (t - tau)) (t - tau) with R = max(|z1|, |z2|).
inline GronwallReport check_gronwall(const ControlProblem& p, double tau,
                                     std::span<const double> z1,
                                     std::span<const double> z2,
                                     const ControlSignal& u, double T, double h,
                                     double rel_tol = 1e-6) {
  if (!p.lip_const || !p.growth_const)
    throw std::invalid_argument(
        "trajectory estimates need lip_const and growth_const");
  double k1 = *p.lip_const;
  double k2 = *p.growth_const;
  Trajectory a = integrate(p, u, tau, z1, T, h);
  Trajectory b = integrate(p, u, tau, z2, T, h);
  double r = std::max(detail::norm2(z1), detail::norm2(z2));
  double d0 = detail::dist2(z1, z2);

  GronwallReport rep;
  rep.pass = true;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  auto record = [&](double margin, double t, const char* which) {
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_time = t;
      rep.worst_check = which;
    }
    if (margin < 0.0) rep.pass = false;
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    double dt = a.times[i] - tau;
    double sep = detail::dist2(a.states[i], b.states[i]);
    double bound1 = std::exp(k1 * dt) * d0;
    record((bound1 * (1.0 + rel_tol) - sep) / (1.0 + bound1), a.times[i],
           "separation");
    double bound2 = k2 * (1.0 + r) * std::exp(k2 * dt) * dt;
    double dev_a = detail::dist2(a.states[i], z1);
    record((bound2 * (1.0 + rel_tol) - dev_a) / (1.0 + bound2), a.times[i],
           "drift");
    double dev_b = detail::dist2(b.states[i], z2);
    record((bound2 * (1.0 + rel_tol) - dev_b) / (1.0 + bound2), b.times[i],
           "drift");
  }
  return rep;
}

}  // namespace hjb
