#pragma once
// Numerical one-sided derivatives and generalized-gradient membership
// tests. Directional quotients are sampled on a shrinking dyadic radius
// ladder with a small probe ball around the direction, then extrapolated
// linearly in the radius from the plateau; membership tests compare the
// extrapolated limits (or quadratic support inequalities) against a
// candidate slope with a relative tolerance.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "hjb/check_report.hpp"
#include "hjb/scalar_field.hpp"

namespace hjb {

inline const std::vector<double>& default_curvatures() {
  static const std::vector<double> s{0.5, 2.0, 8.0, 32.0};
  return s;
}

// Space-time directions (alpha, w): pure time, pure space axes, and mixed
// unit diagonals.
struct Direction {
  double alpha = 0.0;
  std::vector<double> w;
};

inline std::vector<Direction> standard_directions(int n) {
  std::vector<Direction> dirs;
  std::vector<double> zero(n, 0.0);
  dirs.push_back({1.0, zero});
  dirs.push_back({-1.0, zero});
  for (int a = 0; a < n; ++a) {
    for (double s : {1.0, -1.0}) {
      Direction d{0.0, zero};
      d.w[a] = s;
      dirs.push_back(d);
    }
  }
  const double inv = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < n; ++a) {
    for (double st : {1.0, -1.0}) {
      for (double sx : {1.0, -1.0}) {
        Direction d{st * inv, zero};
        d.w[a] = sx * inv;
        dirs.push_back(d);
      }
    }
  }
  return dirs;
}

struct DiniEstimate {
  double value = 0.0;   // extrapolated limit of the quotients
  double spread = 0.0;  // raw quotient variation across the plateau
  bool stable = false;
  std::vector<double> quotients;  // one per schedule radius
};

namespace detail {

// Probe values w' near w: w itself, axis bumps, and diagonal bumps of
// size r.
inline std::vector<std::vector<double>> probe_ball(const std::vector<double>& w,
                                                   double r) {
  const int n = static_cast<int>(w.size());
  std::vector<std::vector<double>> probes{w};
  for (int a = 0; a < n; ++a) {
    for (double s : {1.0, -1.0}) {
      std::vector<double> p = w;
      p[a] += s * r;
      probes.push_back(std::move(p));
    }
  }
  double d = r / std::sqrt(static_cast<double>(n));
  for (double s : {1.0, -1.0}) {
    std::vector<double> p = w;
    for (int a = 0; a < n; ++a) p[a] += s * d;
    probes.push_back(std::move(p));
  }
  return probes;
}

// Intercept of the least-squares line through (r_i, q_i).
inline double extrapolate_to_zero(const std::vector<double>& r,
                                  const std::vector<double>& q) {
  std::size_t m = r.size();
  if (m == 1) return q[0];
  double sr = 0, sq = 0, srr = 0, srq = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sr += r[i];
    sq += q[i];
    srr += r[i] * r[i];
    srq += r[i] * q[i];
  }
  double denom = static_cast<double>(m) * srr - sr * sr;
  if (denom == 0.0) return sq / static_cast<double>(m);
  double slope = (static_cast<double>(m) * srq - sr * sq) / denom;
  return (sq - slope * sr) / static_cast<double>(m);
}

inline DiniEstimate dini_quotients(const ScalarField& phi, double t,
                                   std::span<const double> x, double alpha,
                                   std::span<const double> w, bool lower,
                                   const RadiusSchedule& sched) {
  DiniEstimate est;
  double phi0 = phi(t, x);
  std::vector<double> radii = sched.radii();
  std::vector<double> wv(w.begin(), w.end());
  std::vector<double> y(x.size());
  for (double r : radii) {
    double best = lower ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    for (const auto& wp : probe_ball(wv, r)) {
      for (std::size_t a = 0; a < y.size(); ++a) y[a] = x[a] + r * wp[a];
      double q = (phi(t + r * alpha, y) - phi0) / r;
      best = lower ? std::min(best, q) : std::max(best, q);
    }
    est.quotients.push_back(best);
  }
  std::size_t m = sched.plateau_count();
  std::vector<double> pr(radii.end() - m, radii.end());
  std::vector<double> pq(est.quotients.end() - m, est.quotients.end());
  est.value = extrapolate_to_zero(pr, pq);
  double lo = pq[0], hi = pq[0];
  for (double q : pq) {
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  est.spread = hi - lo;
  est.stable = est.spread <= 0.05 * (1.0 + std::fabs(est.value));
  return est;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Lower one-sided derivative of phi at (t, x) along (alpha, w): the limit
// inferior of forward quotients, with the spatial direction relaxed inside
// a shrinking ball.
inline DiniEstimate dini_lower_derivative(const ScalarField& phi, double t,
                                          std::span<const double> x,
                                          double alpha,
                                          std::span<const double> w,
                                          const RadiusSchedule& sched = {}) {
  return detail::dini_quotients(phi, t, x, alpha, w, /*lower=*/true, sched);
}

inline DiniEstimate dini_upper_derivative(const ScalarField& phi, double t,
                                          std::span<const double> x,
                                          double alpha,
                                          std::span<const double> w,
                                          const RadiusSchedule& sched = {}) {
  return detail::dini_quotients(phi, t, x, alpha, w, /*lower=*/false, sched);
}

// Candidate slope (q, p) passes when every lower directional derivative
// dominates the linear form q alpha + <p, w>. Margins are normalized by the
// linear form's size; pass means no direction dips below -tol.
inline CheckReport dini_subgradient_test(const ScalarField& phi, double t,
                                         std::span<const double> x, double q,
                                         std::span<const double> p,
                                         double tol = 1e-6,
                                         const RadiusSchedule& sched = {}) {
  CheckReport rep;
  rep.test = "dini_subgradient";
  rep.point.assign(1, t);
  rep.point.insert(rep.point.end(), x.begin(), x.end());
  rep.candidate.assign(1, q);
  rep.candidate.insert(rep.candidate.end(), p.begin(), p.end());
  double worst = std::numeric_limits<double>::infinity();
  bool all_stable = true;
  for (const Direction& d : standard_directions(phi.state_dim())) {
    DiniEstimate est = dini_lower_derivative(phi, t, x, d.alpha, d.w, sched);
    all_stable = all_stable && est.stable;
    double rhs = q * d.alpha + detail::dot(p, d.w);
    double margin = (est.value - rhs) / (1.0 + std::fabs(rhs));
    if (margin < worst) {
      worst = margin;
      rep.witness.assign(1, d.alpha);
      rep.witness.insert(rep.witness.end(), d.w.begin(), d.w.end());
    }
  }
  rep.worst_margin = worst;
  rep.pass = worst >= -tol;
  rep.stability = all_stable ? "stable" : "unstable";
  return rep;
}

inline CheckReport dini_supergradient_test(const ScalarField& phi, double t,
                                           std::span<const double> x, double q,
                                           std::span<const double> p,
                                           double tol = 1e-6,
                                           const RadiusSchedule& sched = {}) {
  std::vector<double> pn(p.begin(), p.end());
  for (double& v : pn) v = -v;
  CheckReport rep = dini_subgradient_test(negate(phi), t, x, -q, pn, tol, sched);
  rep.test = "dini_supergradient";
  rep.candidate.assign(1, q);
  rep.candidate.insert(rep.candidate.end(), p.begin(), p.end());
  return rep;
}

// Quadratic lower-support membership: (q, p) passes when, for some
// curvature sigma from the list, phi dominates its linear expansion minus
// sigma times the squared step at every probe within radius rho. Probes
// shrink dyadically down to rho * 2^-12; the acceptance slack of the test
// is about max(sigma) times that smallest radius.
inline CheckReport proximal_subgradient_test(
    const ScalarField& phi, double t, std::span<const double> x, double q,
    std::span<const double> p, double rho, double tol = 1e-6,
    const std::vector<double>& curvatures = default_curvatures()) {
  if (!(rho > 0.0)) throw std::invalid_argument("probe radius must be positive");
  CheckReport rep;
  rep.test = "proximal_subgradient";
  rep.point.assign(1, t);
  rep.point.insert(rep.point.end(), x.begin(), x.end());
  rep.candidate.assign(1, q);
  rep.candidate.insert(rep.candidate.end(), p.begin(), p.end());
  double phi0 = phi(t, x);
  double scale = 1.0 + std::fabs(phi0);
  const auto dirs = standard_directions(phi.state_dim());
  std::vector<double> y(x.size());

  double best_min = -std::numeric_limits<double>::infinity();
  for (double sigma : curvatures) {
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> worst_pt;
    for (int k = 0; k <= 12; ++k) {
      double r = rho * std::ldexp(1.0, -k);
      for (const Direction& d : dirs) {
        double ds = r * d.alpha;
        for (std::size_t a = 0; a < y.size(); ++a) y[a] = x[a] + r * d.w[a];
        double quad = ds * ds;
        for (std::size_t a = 0; a < y.size(); ++a) {
          double dy = y[a] - x[a];
          quad += dy * dy;
        }
        double lhs = phi(t + ds, y) - phi0 - q * ds - detail::dot(p, y) +
                     detail::dot(p, x) + sigma * quad;
        double margin = lhs / scale;
        if (margin < worst) {
          worst = margin;
          worst_pt.assign(1, t + ds);
          worst_pt.insert(worst_pt.end(), y.begin(), y.end());
        }
      }
    }
    if (worst > best_min) {
      best_min = worst;
      rep.witness = worst_pt;
      std::ostringstream os;
      os << "sigma=" << sigma;
      rep.note = os.str();
    }
    if (worst >= -tol) break;  // smallest adequate curvature wins
  }
  rep.worst_margin = best_min;
  rep.pass = best_min >= -tol;
  rep.stability = "stable";
  return rep;
}

inline CheckReport proximal_supergradient_test(
    const ScalarField& phi, double t, std::span<const double> x, double q,
    std::span<const double> p, double rho, double tol = 1e-6,
    const std::vector<double>& curvatures = default_curvatures()) {
  std::vector<double> pn(p.begin(), p.end());
  for (double& v : pn) v = -v;
  CheckReport rep =
      proximal_subgradient_test(negate(phi), t, x, -q, pn, rho, tol, curvatures);
  rep.test = "proximal_supergradient";
  rep.candidate.assign(1, q);
  rep.candidate.insert(rep.candidate.end(), p.begin(), p.end());
  return rep;
}

// Smooth-test-function membership: (q, p) passes when some quadratic with
// slope (q, p) and downward curvature sigma touches phi from below at
// (t, x) locally. The scan runs over full space-time meshes at three nested
// scales, so a candidate that only looks valid at one scale is rejected.
inline CheckReport viscosity_subgradient_test(
    const ScalarField& phi, double t, std::span<const double> x, double q,
    std::span<const double> p, double rho, double tol = 1e-6,
    const std::vector<double>& curvatures = default_curvatures()) {
  if (!(rho > 0.0)) throw std::invalid_argument("probe radius must be positive");
  CheckReport rep;
  rep.test = "viscosity_subgradient";
  rep.point.assign(1, t);
  rep.point.insert(rep.point.end(), x.begin(), x.end());
  rep.candidate.assign(1, q);
  rep.candidate.insert(rep.candidate.end(), p.begin(), p.end());
  double phi0 = phi(t, x);
  double scale = 1.0 + std::fabs(phi0);
  const int n = phi.state_dim();
  const double offsets[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};

  double best_min = -std::numeric_limits<double>::infinity();
  for (double sigma : curvatures) {
    double worst = std::numeric_limits<double>::infinity();
    std::vector<double> worst_pt;
    for (double mesh : {rho, rho / 4.0, rho / 16.0}) {
      // Tensor mesh over (t, x) with 5 points per axis.
      std::size_t total = 1;
      for (int a = 0; a <= n; ++a) total *= 5;
      for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        double ds = offsets[rem % 5] * mesh;
        rem /= 5;
        std::vector<double> y(x.begin(), x.end());
        double quad = ds * ds;
        double lin = q * ds;
        for (int a = 0; a < n; ++a) {
          double dy = offsets[rem % 5] * mesh;
          rem /= 5;
          y[a] += dy;
          quad += dy * dy;
          lin += p[a] * dy;
        }
        double margin = (phi(t + ds, y) - phi0 - lin + sigma * quad) / scale;
        if (margin < worst) {
          worst = margin;
          worst_pt.assign(1, t + ds);
          worst_pt.insert(worst_pt.end(), y.begin(), y.end());
        }
      }
    }
    if (worst > best_min) {
      best_min = worst;
      rep.witness = worst_pt;
      std::ostringstream os;
      os << "sigma=" << sigma;
      rep.note = os.str();
    }
    if (worst >= -tol) break;
  }
  rep.worst_margin = best_min;
  rep.pass = best_min >= -tol;
  rep.stability = "stable";
  return rep;
}

inline CheckReport viscosity_supergradient_test(
    const ScalarField& phi, double t, std::span<const double> x, double q,
    std::span<const double> p, double rho, double tol = 1e-6,
    const std::vector<double>& curvatures = default_curvatures()) {
  std::vector<double> pn(p.begin(), p.end());
  for (double& v : pn) v = -v;
  CheckReport rep =
      viscosity_subgradient_test(negate(phi), t, x, -q, pn, rho, tol, curvatures);
  rep.test = "viscosity_supergradient";
  rep.candidate.assign(1, q);
  rep.candidate.insert(rep.candidate.end(), p.begin(), p.end());
  return rep;
}

}  // namespace hjb
