#pragma once
// Built-in benchmark problems with oracles that do not depend on the grid
// solver: closed forms where one exists, otherwise a separately written
// brute-force dynamic program run at two resolutions.

#include <json.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hjb/check_report.hpp"
#include "hjb/problem.hpp"
#include "hjb/solver.hpp"

namespace hjb {

// Fine-grid finite-horizon backward recursion spec for brute-force oracles.
// State dimension 1 only; the registry never needs more.
struct DpRecipe {
  Box domain{{-1.0}, {1.0}};
  int nodes = 0;  // 0 marks "no recipe declared"
  double dt = 0.0;
  double horizon = 0.0;
  double tau = 0.0;
};

struct Benchmark {
  Benchmark(std::string name_in, ControlProblem problem_in)
      : name(std::move(name_in)), problem(std::move(problem_in)) {}

  std::string name;
  ControlProblem problem;
  // Grid the bench command and the acceptance runs use by default.
  SolverOptions default_solve;
  // Closed-form value V(t, x1), when one exists. No control variables.
  std::optional<Expr> closed_form;
  // Brute-force oracle pair; the two resolutions must agree within dp_tol
  // before the fine table may serve as a reference.
  DpRecipe dp_coarse, dp_fine;
  double dp_tol = 0.0;
  // Region of (t, x) where the declared constants hold, and whether the
  // contraction margin K1 < delta holds there.
  Box validity;
  bool contraction = false;
  // Error gates for summaries: absolute error must fit the field's budget,
  // scale-relative error must fit rel_tol.
  double rel_tol = 0.0;
  std::vector<std::vector<double>> probes;  // initial states, compared at tau
  std::string notes;

  bool has_closed_form() const { return closed_form.has_value(); }
  bool has_dp_oracle() const { return dp_fine.nodes > 0; }

  double closed_form_at(double t, std::span<const double> z) const {
    if (!closed_form)
      throw std::logic_error("benchmark " + name + " has no closed form");
    return closed_form->eval(t, z, {});
  }
};

// One backward sweep of the brute-force recipe, kept deliberately separate
// from solve_value: its own interpolation, its own loops, plain clamping.
struct DpTable {
  double tau = 0.0;
  double lo = 0.0, hi = 0.0, dx = 0.0;
  std::vector<double> values;

  double value_at(double z) const {
    double s = (z - lo) / dx;
    double last = static_cast<double>(values.size() - 1);
    if (s <= 0.0) return values.front();
    if (s >= last) return values.back();
    auto i = static_cast<std::size_t>(s);
    double w = s - static_cast<double>(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
  }
};

inline DpTable brute_force_value(const ControlProblem& p, const DpRecipe& r) {
  if (p.state_dim != 1 || r.domain.dim() != 1)
    throw std::invalid_argument("brute-force recipe requires state dim 1");
  if (r.nodes < 2 || !(r.dt > 0.0) || !(r.horizon > r.tau))
    throw std::invalid_argument("brute-force recipe is incomplete");

  const int n = r.nodes;
  const double lo = r.domain.lo[0], hi = r.domain.hi[0];
  const double dx = (hi - lo) / static_cast<double>(n - 1);
  const auto steps =
      static_cast<int>(std::ceil((r.horizon - r.tau) / r.dt - 1e-9));

  DpTable table;
  table.tau = r.tau;
  table.lo = lo;
  table.hi = hi;
  table.dx = dx;
  table.values.assign(static_cast<std::size_t>(n), 0.0);

  const auto& samples = p.controls.samples();
  std::vector<double> next(static_cast<std::size_t>(n), 0.0);
  std::vector<double> x(1), f(1);
  for (int k = steps - 1; k >= 0; --k) {
    double t = r.tau + r.dt * static_cast<double>(k);
    double disc = std::exp(-p.discount * t);
    std::swap(next, table.values);
    for (int i = 0; i < n; ++i) {
      x[0] = lo + dx * static_cast<double>(i);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& u : samples) {
        p.eval_dynamics(t, x, u, f);
        double foot = x[0] + r.dt * f[0];
        if (foot < lo) foot = lo;
        if (foot > hi) foot = hi;
        double s = (foot - lo) / dx;
        auto c = static_cast<std::size_t>(s);
        if (c + 1 >= static_cast<std::size_t>(n)) c = n - 2;
        double w = s - static_cast<double>(c);
        double interp = (1.0 - w) * next[c] + w * next[c + 1];
        double cand = r.dt * disc * p.eval_cost(t, x, u) + interp;
        if (cand < best) best = cand;
      }
      table.values[static_cast<std::size_t>(i)] = best;
    }
  }
  return table;
}

// Cross-resolution agreement gate for brute-force references.
inline CheckReport dp_self_consistency(
    const ControlProblem& p, const DpRecipe& coarse, const DpRecipe& fine,
    double tol, const std::vector<std::vector<double>>& probes) {
  DpTable a = brute_force_value(p, coarse);
  DpTable b = brute_force_value(p, fine);
  CheckReport rep;
  rep.test = "dp-self-consistency";
  double worst = 0.0;
  std::vector<double> worst_z;
  for (const auto& z : probes) {
    double gap = std::fabs(a.value_at(z[0]) - b.value_at(z[0]));
    if (gap > worst) {
      worst = gap;
      worst_z = z;
    }
  }
  rep.pass = worst <= tol;
  rep.worst_margin = (tol - worst) / (1.0 + tol);
  rep.point = worst_z;
  rep.note = "max gap " + detail::format_double(worst) + " tol " +
             detail::format_double(tol);
  return rep;
}

struct BenchOracle {
  std::string kind;  // "closed-form" or "brute-force-dp"
  std::function<double(double, std::span<const double>)> eval;
  std::optional<CheckReport> self_consistency;
};

inline BenchOracle make_oracle(const Benchmark& b, const DpRecipe& coarse,
                               const DpRecipe& fine, double tol) {
  BenchOracle oracle;
  oracle.kind = "brute-force-dp";
  oracle.self_consistency = dp_self_consistency(b.problem, coarse, fine, tol,
                                                b.probes);
  auto table = std::make_shared<DpTable>(brute_force_value(b.problem, fine));
  oracle.eval = [table](double, std::span<const double> z) {
    return table->value_at(z[0]);
  };
  return oracle;
}

inline BenchOracle make_oracle(const Benchmark& b) {
  if (b.has_closed_form()) {
    BenchOracle oracle;
    oracle.kind = "closed-form";
    Expr form = *b.closed_form;
    oracle.eval = [form](double t, std::span<const double> z) {
      return form.eval(t, z, {});
    };
    return oracle;
  }
  if (!b.has_dp_oracle())
    throw std::logic_error("benchmark " + b.name + " declares no oracle");
  return make_oracle(b, b.dp_coarse, b.dp_fine, b.dp_tol);
}

struct BenchProbe {
  std::vector<double> z;
  double value = 0.0;
  double oracle = 0.0;
  double abs_err = 0.0;
};

struct BenchSummary {
  std::string name;
  std::string oracle_kind;
  Box domain;
  std::vector<int> nodes;
  double dt = 0.0;
  double horizon = 0.0;
  double terminal_bound = 0.0;
  double budget = 0.0;
  double max_abs_err = 0.0;
  // Scale-relative: max absolute error over the probes divided by the
  // largest oracle magnitude among them.
  double max_rel_err = 0.0;
  bool pass = false;
  std::vector<BenchProbe> probes;
  std::optional<CheckReport> self_consistency;

  nlohmann::json to_json() const {
    nlohmann::json grid{{"lo", domain.lo},
                        {"hi", domain.hi},
                        {"nodes", nodes},
                        {"dt", dt},
                        {"horizon", horizon}};
    nlohmann::json probe_rows = nlohmann::json::array();
    for (const auto& pr : probes)
      probe_rows.push_back({{"z", pr.z},
                            {"value", pr.value},
                            {"oracle", pr.oracle},
                            {"abs_err", pr.abs_err}});
    nlohmann::json j{{"name", name},
                     {"oracle", oracle_kind},
                     {"grid", std::move(grid)},
                     {"terminal_bound", terminal_bound},
                     {"budget", budget},
                     {"max_abs_err", max_abs_err},
                     {"max_rel_err", max_rel_err},
                     {"pass", pass},
                     {"probes", std::move(probe_rows)}};
    if (self_consistency) j["self_consistency"] = self_consistency->to_json();
    return j;
  }
};

inline BenchSummary run_benchmark(const Benchmark& b, const SolverOptions& opt,
                                  const BenchOracle& oracle) {
  ValueField field = solve_value(b.problem, opt);
  BenchSummary s;
  s.name = b.name;
  s.oracle_kind = oracle.kind;
  s.domain = field.grid.domain();
  s.nodes = field.grid.nodes_per_axis();
  s.dt = field.dt;
  s.horizon = field.horizon();
  s.terminal_bound = field.terminal_bound;
  s.budget = field.tolerance_budget();
  s.self_consistency = oracle.self_consistency;

  double scale = 0.0;
  for (const auto& z : b.probes) {
    BenchProbe pr;
    pr.z = z;
    pr.value = field.value_at(opt.tau, z);
    pr.oracle = oracle.eval(opt.tau, z);
    pr.abs_err = std::fabs(pr.value - pr.oracle);
    s.max_abs_err = std::max(s.max_abs_err, pr.abs_err);
    scale = std::max(scale, std::fabs(pr.oracle));
    s.probes.push_back(std::move(pr));
  }
  s.max_rel_err = scale > 0.0 ? s.max_abs_err / scale : s.max_abs_err;
  s.pass = s.max_abs_err <= s.budget && s.max_rel_err <= b.rel_tol &&
           (!s.self_consistency || s.self_consistency->pass);
  return s;
}

inline BenchSummary run_benchmark(const Benchmark& b) {
  return run_benchmark(b, b.default_solve, make_oracle(b));
}

namespace detail {

inline std::vector<std::vector<double>> probe_line(double lo, double hi,
                                                   int count) {
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    double w = static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back({lo + (hi - lo) * w});
  }
  return out;
}

inline Benchmark make_constant_cost() {
  Benchmark b("constant-cost",
              ControlProblem(1, 1, {parse_expr("0", 1, 1)},
                             parse_expr("1", 1, 1),
                             ControlSet::points({{0.0}}), 1.0));
  b.problem.lip_const = 0.0;
  b.problem.growth_const = 1.0;
  b.problem.invariant_radius = 0.0;
  b.problem.cost_nonnegative = true;
  b.default_solve.domain = Box({-1.0}, {1.0});
  b.default_solve.nodes = {41};
  b.default_solve.dt = 0.01;
  b.default_solve.tail_eps = 1e-3;
  b.closed_form = parse_expr("exp(-t)", 1, 0);
  b.validity = Box({0.0, -1.0}, {10.0, 1.0});
  b.contraction = true;  // K1 = 0 < delta = 1
  b.rel_tol = 2e-2;
  b.probes = probe_line(-1.0, 1.0, 21);
  b.notes =
      "frozen dynamics, unit running cost; the value is the pure discount "
      "integral e^{-tau} everywhere. Certificates only cover the origin "
      "since the invariant radius is 0.";
  return b;
}

inline Benchmark make_pure_discount_control() {
  Benchmark b("pure-discount-control",
              ControlProblem(1, 1, {parse_expr("0", 1, 1)},
                             parse_expr("1 + u1^2", 1, 1),
                             ControlSet::box({-1.0}, {1.0}, 41), 1.0));
  b.problem.lip_const = 0.0;
  b.problem.growth_const = 2.0;
  b.problem.invariant_radius = 1.0;
  b.problem.cost_nonnegative = true;
  b.default_solve.domain = Box({-1.0}, {1.0});
  b.default_solve.nodes = {41};
  b.default_solve.dt = 0.01;
  b.default_solve.tail_eps = 1e-3;
  b.closed_form = parse_expr("exp(-t)", 1, 0);
  b.validity = Box({0.0, -1.0}, {10.0, 1.0});
  b.contraction = true;  // K1 = 0 < delta = 1
  b.rel_tol = 2e-2;
  b.probes = probe_line(-1.0, 1.0, 21);
  b.notes =
      "control enters only through the cost; pointwise minimization picks "
      "u = 0 and reduces to the constant-cost integral.";
  return b;
}

inline Benchmark make_bang_bang_quadratic() {
  Benchmark b("bang-bang-quadratic",
              ControlProblem(1, 1, {parse_expr("u1", 1, 1)},
                             parse_expr("x1^2", 1, 1),
                             ControlSet::box({-1.0}, {1.0}, 41), 3.0));
  b.problem.lip_const = 2.0;  // slope of x^2 on |x| <= 1
  b.problem.growth_const = 1.0;
  b.problem.invariant_radius = 1.0;
  b.problem.cost_nonnegative = true;
  b.default_solve.domain = Box({-1.0}, {1.0});
  b.default_solve.nodes = {201};
  b.default_solve.dt = 0.005;
  b.default_solve.tail_eps = 1e-4;
  // Cost of steering to the origin at full speed and parking there:
  // int_0^z e^{-3t} (z-t)^2 dt, even in z, discounted by e^{-3 tau}.
  b.closed_form = parse_expr(
      "exp(-3*t) * ((9*abs(x1)^2 - 6*abs(x1) + 2) / 27"
      " - (2/27) * exp(-3*abs(x1)))",
      1, 0);
  double t_ref = std::log(2.0 / (3.0 * 1e-4)) / 3.0;
  b.dp_coarse = DpRecipe{Box({-1.0}, {1.0}), 201, 0.005, t_ref, 0.0};
  b.dp_fine = DpRecipe{Box({-1.0}, {1.0}), 401, 0.0025, t_ref, 0.0};
  b.dp_tol = 5e-3;
  b.validity = Box({0.0, -1.0}, {10.0, 1.0});
  b.contraction = true;  // K1 = 2 < delta = 3 on |x| <= 1
  b.rel_tol = 2e-2;
  b.probes = probe_line(0.0, 1.0, 11);
  b.notes =
      "cost constants hold on the invariant ball |x| <= 1 only (x^2 is "
      "locally Lipschitz); the closed form's optimality is numerically "
      "certified, not proved.";
  return b;
}

inline Benchmark make_time_varying_drift() {
  Benchmark b("time-varying-drift",
              ControlProblem(1, 1, {parse_expr("-x1 + sin(t) * u1", 1, 1)},
                             parse_expr("x1^2", 1, 1),
                             ControlSet::box({-1.0}, {1.0}, 41), 3.0));
  b.problem.lip_const = 2.0;  // max of 1 (drift) and 2 (cost slope on ball)
  b.problem.growth_const = 1.5;
  b.problem.invariant_radius = 1.0;
  b.problem.cost_nonnegative = true;
  b.default_solve.domain = Box({-1.2}, {1.2});
  b.default_solve.nodes = {201};
  b.default_solve.dt = 0.01;
  b.default_solve.tail_eps = 1e-4;
  double t_ref = std::log(1e4) / 3.0;
  b.dp_coarse = DpRecipe{Box({-1.2}, {1.2}), 401, 0.008, t_ref, 0.0};
  b.dp_fine = DpRecipe{Box({-1.2}, {1.2}), 801, 0.004, t_ref, 0.0};
  b.dp_tol = 5e-3;
  b.validity = Box({0.0, -1.0}, {10.0, 1.0});
  b.contraction = true;  // K1 = 2 < delta = 3 on |x| <= 1
  b.rel_tol = 5e-2;
  b.probes = probe_line(-0.9, 0.9, 19);
  b.notes =
      "genuinely nonautonomous drift; no closed form, the reference is the "
      "cross-checked brute-force recursion.";
  return b;
}

}  // namespace detail

inline const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{
      "constant-cost", "pure-discount-control", "bang-bang-quadratic",
      "time-varying-drift"};
  return names;
}

inline Benchmark benchmark(const std::string& name) {
  if (name == "constant-cost") return detail::make_constant_cost();
  if (name == "pure-discount-control")
    return detail::make_pure_discount_control();
  if (name == "bang-bang-quadratic") return detail::make_bang_bang_quadratic();
  if (name == "time-varying-drift") return detail::make_time_varying_drift();
  std::string known;
  for (const auto& n : benchmark_names()) known += " " + n;
  throw std::invalid_argument("unknown benchmark " + name + "; known:" +
                              known);
}

}  // namespace hjb
