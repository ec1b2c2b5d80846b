#pragma once
// Problem description for the discounted infinite-horizon control problem:
// minimize the integral of exp(-delta*t) * l(t, x, u) subject to
// x' = f(t, x, u), u(t) in the admissible set Omega.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjb/box.hpp"
#include "hjb/control_set.hpp"
#include "hjb/expr.hpp"
#include "hjb/rng.hpp"

namespace hjb {

struct ControlProblem {
  int state_dim = 0;
  int control_dim = 0;
  std::vector<Expr> dynamics;  // f, one expression per state component
  Expr running_cost;           // l
  ControlSet controls;         // Omega
  double discount = 0.0;       // delta > 0

  // Declared or audited constants; checks that need one refuse to run
  // without it rather than guessing.
  std::optional<double> lip_const;         // K1: max Lipschitz constant of f, l in x
  std::optional<double> growth_const;      // K2: (|l|+|f|) <= K2 (1+|x|)
  std::optional<double> invariant_radius;  // M: certified trajectory ball

  bool cost_nonnegative = false;  // declared l >= 0 (tightens certificates)

  ControlProblem(int n, int m, std::vector<Expr> f, Expr l, ControlSet omega,
                 double delta)
      : state_dim(n),
        control_dim(m),
        dynamics(std::move(f)),
        running_cost(std::move(l)),
        controls(std::move(omega)),
        discount(delta) {
    if (n < 1) throw std::invalid_argument("state_dim must be >= 1");
    if (m < 1) throw std::invalid_argument("control_dim must be >= 1");
    if (!(delta > 0)) throw std::invalid_argument("discount must be > 0");
    if (static_cast<int>(dynamics.size()) != n)
      throw std::invalid_argument("dynamics must have state_dim components");
    if (controls.dimension() != m)
      throw std::invalid_argument("control set dimension mismatch");
  }

  // f(t, x, u) written into `out` (size state_dim).
  void eval_dynamics(double t, std::span<const double> x,
                     std::span<const double> u, std::span<double> out) const {
    for (int i = 0; i < state_dim; ++i) out[i] = dynamics[i].eval(t, x, u);
  }

  double eval_cost(double t, std::span<const double> x,
                   std::span<const double> u) const {
    return running_cost.eval(t, x, u);
  }
};

// Pre-Hamiltonian <lambda, f(t,x,u)> + exp(-delta t) l(t,x,u).
inline double eval_hamiltonian(const ControlProblem& p, double t,
                               std::span<const double> x,
                               std::span<const double> lambda,
                               std::span<const double> u) {
  if (static_cast<int>(lambda.size()) != p.state_dim)
    throw std::invalid_argument("costate dimension mismatch");
  double dot = 0;
  for (int i = 0; i < p.state_dim; ++i)
    dot += lambda[i] * p.dynamics[i].eval(t, x, u);
  return dot + std::exp(-p.discount * t) * p.eval_cost(t, x, u);
}

struct HamiltonianExtremum {
  double value = 0.0;
  std::vector<double> control;  // realizing sample
  int sample_index = -1;        // index into ControlSet::samples()
};

// Minimum of the pre-Hamiltonian over the control samples. Ties keep the
// first sample in enumeration order.
inline HamiltonianExtremum min_hamiltonian(const ControlProblem& p, double t,
                                           std::span<const double> x,
                                           std::span<const double> lambda) {
  const auto& samples = p.controls.samples();
  HamiltonianExtremum best;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double h = eval_hamiltonian(p, t, x, lambda, samples[i]);
    if (best.sample_index < 0 || h < best.value) {
      best.value = h;
      best.sample_index = static_cast<int>(i);
    }
  }
  best.control = samples[best.sample_index];
  return best;
}

// Maximum over the control samples; symmetric to min_hamiltonian except that
// ties keep the last sample in enumeration order.
inline HamiltonianExtremum max_hamiltonian(const ControlProblem& p, double t,
                                           std::span<const double> x,
                                           std::span<const double> lambda) {
  const auto& samples = p.controls.samples();
  HamiltonianExtremum best;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double h = eval_hamiltonian(p, t, x, lambda, samples[i]);
    if (best.sample_index < 0 || h >= best.value) {
      best.value = h;
      best.sample_index = static_cast<int>(i);
    }
  }
  best.control = samples[best.sample_index];
  return best;
}

enum class ConvexityVerdict { kConvex, kNonconvex, kInconclusive };

inline std::string to_string(ConvexityVerdict v) {
  switch (v) {
    case ConvexityVerdict::kConvex: return "convex";
    case ConvexityVerdict::kNonconvex: return "nonconvex";
    default: return "inconclusive";
  }
}

// Sampled regularity audit over a (t, x) region. All estimates are lower
// bounds approached from below; they never replace declared constants, only
// cross-check them.
struct AuditReport {
  double k1_hat = 0.0;  // max over pairs of max(|Df|/|Dx|, |Dl|/|Dx|)
  double k2_hat = 0.0;  // max of (|l|+|f|)/(1+|x|)
  ConvexityVerdict convexity = ConvexityVerdict::kInconclusive;
  double worst_midpoint_gap = 0.0;  // convexity test: worst midpoint distance
  bool contraction_margin_ok = false;  // k1_hat < delta
  int samples_used = 0;
  std::vector<double> k1_witness;  // (t, x1..., x2...) attaining k1_hat
  std::string notes;
};

namespace detail {
inline double norm2(std::span<const double> v) {
  double s = 0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}
}  // namespace detail

// region is a box over (t, x1..xn): axis 0 is time.
inline AuditReport audit_assumptions(const ControlProblem& p, const Box& region,
                                     int sample_budget,
                                     std::uint64_t seed = kDefaultSeed) {
  if (region.dim() != p.state_dim + 1)
    throw std::invalid_argument("audit region must span (t, x)");
  if (sample_budget < 100)
    throw std::invalid_argument("sample_budget must be >= 100");

  Rng rng(seed);
  AuditReport rep;
  rep.samples_used = sample_budget;
  const auto& samples = p.controls.samples();
  const int n = p.state_dim;
  std::vector<double> x1(n), x2(n), f1(n), f2(n);

  bool degenerate_state = true;
  for (int i = 1; i <= n; ++i)
    if (region.hi[i] > region.lo[i]) degenerate_state = false;

  // K1: finite-difference ratios at shared (t, u).
  for (int it = 0; it < sample_budget && !degenerate_state; ++it) {
    double t = rng.uniform(region.lo[0], region.hi[0]);
    for (int i = 0; i < n; ++i) {
      x1[i] = rng.uniform(region.lo[i + 1], region.hi[i + 1]);
      x2[i] = rng.uniform(region.lo[i + 1], region.hi[i + 1]);
    }
    double dx = detail::dist2(x1, x2);
    if (dx < 1e-10) continue;
    const auto& u = samples[rng.index(samples.size())];
    p.eval_dynamics(t, x1, u, f1);
    p.eval_dynamics(t, x2, u, f2);
    double ratio_f = detail::dist2(f1, f2) / dx;
    double ratio_l =
        std::fabs(p.eval_cost(t, x1, u) - p.eval_cost(t, x2, u)) / dx;
    double ratio = std::max(ratio_f, ratio_l);
    if (ratio > rep.k1_hat) {
      rep.k1_hat = ratio;
      rep.k1_witness.assign(1, t);
      rep.k1_witness.insert(rep.k1_witness.end(), x1.begin(), x1.end());
      rep.k1_witness.insert(rep.k1_witness.end(), x2.begin(), x2.end());
    }
  }

  // K2: growth ratio at random (t, x, u).
  for (int it = 0; it < sample_budget; ++it) {
    double t = rng.uniform(region.lo[0], region.hi[0]);
    for (int i = 0; i < n; ++i)
      x1[i] = rng.uniform(region.lo[i + 1], region.hi[i + 1]);
    const auto& u = samples[rng.index(samples.size())];
    p.eval_dynamics(t, x1, u, f1);
    double ratio = (std::fabs(p.eval_cost(t, x1, u)) + detail::norm2(f1)) /
                   (1.0 + detail::norm2(x1));
    rep.k2_hat = std::max(rep.k2_hat, ratio);
  }

  // Extended-velocity convexity: at fixed (t, x) the set
  // {(exp(-delta t) l, f)(t, x, v) : v in Omega} should contain its own
  // midpoints. A finite explicit point list is judged exactly; a sampled box
  // is judged against the sampling resolution.
  rep.convexity = ConvexityVerdict::kConvex;
  int probe_points = std::max(4, sample_budget / 50);
  for (int pt = 0; pt < probe_points; ++pt) {
    double t = rng.uniform(region.lo[0], region.hi[0]);
    for (int i = 0; i < n; ++i)
      x1[i] = rng.uniform(region.lo[i + 1], region.hi[i + 1]);
    double disc = std::exp(-p.discount * t);

    std::vector<std::vector<double>> ext;
    ext.reserve(samples.size());
    for (const auto& u : samples) {
      std::vector<double> e(n + 1);
      e[0] = disc * p.eval_cost(t, x1, u);
      p.eval_dynamics(t, x1, u, {e.data() + 1, static_cast<std::size_t>(n)});
      ext.push_back(std::move(e));
    }

    double diam = 0;
    for (std::size_t i = 0; i < ext.size(); ++i)
      for (std::size_t j = i + 1; j < ext.size(); ++j)
        diam = std::max(diam, detail::dist2(ext[i], ext[j]));
    if (diam < 1e-12) continue;  // single extended-velocity point: convex

    if (!p.controls.is_box()) {
      rep.convexity = ConvexityVerdict::kNonconvex;
      rep.worst_midpoint_gap = std::max(rep.worst_midpoint_gap, diam / 2);
      continue;
    }

    // Covering resolution: largest nearest-neighbor gap in the sample image.
    double spacing = 0;
    for (std::size_t i = 0; i < ext.size(); ++i) {
      double nn = diam;
      for (std::size_t j = 0; j < ext.size(); ++j) {
        if (i == j) continue;
        nn = std::min(nn, detail::dist2(ext[i], ext[j]));
      }
      spacing = std::max(spacing, nn);
    }

    int pairs = std::min<std::size_t>(200, ext.size() * (ext.size() - 1) / 2);
    for (int pr = 0; pr < pairs; ++pr) {
      const auto& a = ext[rng.index(ext.size())];
      const auto& b = ext[rng.index(ext.size())];
      std::vector<double> mid(n + 1);
      for (int i = 0; i <= n; ++i) mid[i] = 0.5 * (a[i] + b[i]);
      double best = diam;
      for (const auto& e : ext) best = std::min(best, detail::dist2(mid, e));
      double tol = std::max(2.0 * spacing, 1e-9 * (1.0 + diam));
      if (best > tol) {
        rep.convexity = ConvexityVerdict::kNonconvex;
        rep.worst_midpoint_gap = std::max(rep.worst_midpoint_gap, best);
      }
    }
  }

  if (degenerate_state) {
    rep.convexity = rep.convexity == ConvexityVerdict::kNonconvex
                        ? rep.convexity
                        : ConvexityVerdict::kInconclusive;
    rep.notes = "state region is degenerate; K1 not sampled";
  }
  rep.contraction_margin_ok = rep.k1_hat < p.discount;
  return rep;
}

}  // namespace hjb
