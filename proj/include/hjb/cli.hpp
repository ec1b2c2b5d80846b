#pragma once
// Command front end: one RunConfig describes a run, run() executes it and
// writes its artifacts. Kept out of main() so tests can drive commands
// in-process and assert on files and exit codes.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hjb/bench.hpp"
#include "hjb/io.hpp"
#include "hjb/scalar_field.hpp"
#include "hjb/solver.hpp"
#include "hjb/verify.hpp"

namespace hjb {

// Exit codes: 0 all checks pass, 1 configuration or execution error,
// 2 at least one check failed.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitCheckFailed = 2;

struct RunConfig {
  std::string command;       // solve|simulate|check|certify|sandwich|bench
  std::string problem_path;  // --problem
  std::vector<double> box;   // --box, flattened lo,hi per state axis
  std::vector<int> nodes;    // --nodes
  double dt = 0.0;           // --dt
  std::optional<double> eps;      // --eps: horizon from the tail formula
  std::optional<double> horizon;  // --horizon: explicit end time
  double tau = 0.0;               // --tau
  std::string out_dir = ".";      // --out
  std::uint64_t seed = kDefaultSeed;  // --seed
  std::map<std::string, double> tol;  // --tol name=v overrides
  std::string bench_name;         // --bench
  std::vector<double> z;          // --z, initial state
  std::vector<double> const_u;    // --const-u, constant control value
  double sim_step = 0.01;         // --h, integrator step bound
  std::string field_csv;          // --field, reuse a saved value field
  std::string field_meta;         // --meta, its metadata
  int points = 20;                // --points, probe count for checks
};

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double tol_or(const RunConfig& cfg, const std::string& name,
                     double fallback) {
  auto it = cfg.tol.find(name);
  return it == cfg.tol.end() ? fallback : it->second;
}

inline void check_tol_names(const RunConfig& cfg) {
  static const std::vector<std::string> known{
      "membership", "hjb", "dini", "prox", "visc", "extra"};
  for (const auto& [name, value] : cfg.tol) {
    bool ok = false;
    for (const auto& k : known) ok = ok || k == name;
    if (!ok) throw ConfigError("unknown --tol name '" + name + "'");
    (void)value;
  }
}

inline ControlProblem load_problem_checked(const RunConfig& cfg) {
  if (cfg.problem_path.empty())
    throw ConfigError("--problem is required for " + cfg.command);
  return load_problem(cfg.problem_path);
}

inline SolverOptions solver_options(const RunConfig& cfg,
                                    const ControlProblem& p) {
  if (cfg.box.size() != static_cast<std::size_t>(2 * p.state_dim))
    throw ConfigError("--box needs lo,hi per state axis (" +
                      std::to_string(2 * p.state_dim) + " numbers)");
  if (cfg.nodes.size() != static_cast<std::size_t>(p.state_dim))
    throw ConfigError("--nodes needs one count per state axis");
  if (!(cfg.dt > 0.0)) throw ConfigError("--dt must be positive");
  if (cfg.eps.has_value() == cfg.horizon.has_value())
    throw ConfigError("give exactly one of --eps and --horizon");
  SolverOptions opt;
  std::vector<double> lo(p.state_dim), hi(p.state_dim);
  for (int a = 0; a < p.state_dim; ++a) {
    lo[a] = cfg.box[2 * a];
    hi[a] = cfg.box[2 * a + 1];
  }
  opt.domain = Box(std::move(lo), std::move(hi));
  opt.nodes = cfg.nodes;
  opt.dt = cfg.dt;
  opt.tail_eps = cfg.eps;
  opt.horizon = cfg.horizon;
  opt.tau = cfg.tau;
  return opt;
}

inline std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir.empty() ? "." : cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + dir.string() +
                      "': " + ec.message());
  return dir;
}

// A value field plus the problem it solves: either solved on the spot or
// loaded from a previous solve, with the metadata hash guarding against
// mixing a field with the wrong problem.
struct FieldBundle {
  ControlProblem problem;
  ValueField field;
};

inline FieldBundle obtain_field(const RunConfig& cfg) {
  ControlProblem p = load_problem_checked(cfg);
  if (!cfg.field_csv.empty() || !cfg.field_meta.empty()) {
    if (cfg.field_csv.empty() || cfg.field_meta.empty())
      throw ConfigError("--field and --meta go together");
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(read_text_file(cfg.field_meta));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(cfg.field_meta + ": " + e.what());
    }
    if (meta.contains("problem_hash") &&
        meta["problem_hash"] != problem_hash(p))
      throw ConfigError("field metadata hash does not match --problem; "
                        "refusing to mix them");
    return {std::move(p),
            load_value_field(cfg.field_csv, cfg.field_meta)};
  }
  SolverOptions opt = solver_options(cfg, p);
  ValueField f = solve_value(p, opt);
  return {std::move(p), std::move(f)};
}

// Deterministic interior probes: cell centers strided through layers and
// through the flattened cell lattice.
inline std::vector<TimeStatePoint> interior_probes(const ValueField& f,
                                                   int count) {
  const auto& nodes = f.grid.nodes_per_axis();
  int n = static_cast<int>(nodes.size());
  std::size_t cells = 1;
  for (int a = 0; a < n; ++a) cells *= static_cast<std::size_t>(nodes[a] - 1);
  std::vector<TimeStatePoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    int k = f.steps / 4 +
            static_cast<int>((static_cast<long long>(i) * (f.steps / 2)) /
                             std::max(1, count));
    k = std::min(k, f.steps - 1);
    std::size_t cell =
        ((2 * static_cast<std::size_t>(i) + 1) * cells) /
        (2 * static_cast<std::size_t>(count));
    TimeStatePoint pt;
    pt.t = f.time_at(k) + 0.5 * f.dt;
    pt.x.resize(n);
    std::size_t rem = cell;
    for (int a = n - 1; a >= 0; --a) {
      auto width = static_cast<std::size_t>(nodes[a] - 1);
      std::size_t idx = rem % width;
      rem /= width;
      pt.x[a] = f.grid.coordinate(a, static_cast<int>(idx)) +
                0.5 * f.grid.spacing()[a];
    }
    out.push_back(std::move(pt));
  }
  return out;
}

inline std::vector<TimeStatePoint> in_ball(std::vector<TimeStatePoint> pts,
                                           double radius) {
  std::vector<TimeStatePoint> out;
  for (auto& pt : pts) {
    if (norm2(pt.x) <= radius) out.push_back(std::move(pt));
  }
  return out;
}

inline RadiusSchedule field_schedule(const ValueField& f) {
  double base = f.dt;
  for (double s : f.grid.spacing()) base = std::min(base, s);
  return {0.25 * base, 3, 12};
}

inline ClassifyOptions classify_options(const RunConfig& cfg,
                                        const ValueField& f) {
  ClassifyOptions opt;
  opt.sched = field_schedule(f);
  opt.membership_tol = tol_or(cfg, "membership", 1e-6);
  opt.hjb_tol = tol_or(cfg, "hjb", f.tolerance_budget());
  return opt;
}

inline DecaySpec decay_spec(const ValueField& f) {
  double t_end = f.horizon();
  return {{f.grid.domain()},
          {0.6 * t_end, 0.8 * t_end, t_end, t_end + 1.0},
          f.terminal_bound,
          9};
}

inline int run_solve(const RunConfig& cfg, std::ostream& out) {
  ControlProblem p = load_problem_checked(cfg);
  SolverOptions opt = solver_options(cfg, p);
  ValueField f = solve_value(p, opt);
  auto dir = prepare_out_dir(cfg);
  save_value_field((dir / "value.csv").string(),
                   (dir / "value_meta.json").string(), p, f);
  out << "solved: T=" << detail::format_double(f.horizon())
      << " steps=" << f.steps
      << " budget=" << detail::format_double(f.tolerance_budget())
      << " clamp=" << detail::format_double(f.clamp_fraction) << "\n";
  return kExitOk;
}

inline int run_simulate(const RunConfig& cfg, std::ostream& out) {
  ControlProblem p = load_problem_checked(cfg);
  if (static_cast<int>(cfg.z.size()) != p.state_dim)
    throw ConfigError("--z needs one coordinate per state axis");
  if (static_cast<int>(cfg.const_u.size()) != p.control_dim)
    throw ConfigError("--const-u needs one value per control axis");
  if (cfg.eps.has_value() == cfg.horizon.has_value())
    throw ConfigError("give exactly one of --eps and --horizon");
  double T;
  if (cfg.horizon) {
    T = *cfg.horizon;
  } else {
    if (!p.growth_const || !p.invariant_radius)
      throw ConfigError("--eps needs K2 and M declared in the problem file");
    T = std::log(*p.growth_const * (1.0 + *p.invariant_radius) /
                 (p.discount * *cfg.eps)) /
        p.discount;
  }
  if (!(T > cfg.tau)) throw ConfigError("horizon must exceed --tau");

  ControlSignal u = ControlSignal::constant(cfg.tau, cfg.const_u);
  Trajectory traj = integrate(p, u, cfg.tau, cfg.z, T, cfg.sim_step);
  CostCertificate cert =
      cost_with_tail(p, u, cfg.tau, cfg.z, T, cfg.sim_step);

  auto dir = prepare_out_dir(cfg);
  std::ostringstream tcsv, scsv;
  write_trajectory_csv(tcsv, traj);
  write_signal_csv(scsv, u);
  write_text_file((dir / "trajectory.csv").string(), tcsv.str());
  write_text_file((dir / "signal.csv").string(), scsv.str());
  write_text_file((dir / "certificate.json").string(),
                  certificate_json(cert).dump(2) + "\n");
  out << "simulated: J_T=" << detail::format_double(cert.finite_cost)
      << " cost in [" << detail::format_double(cert.lower) << ", "
      << detail::format_double(cert.upper) << "]\n";
  return kExitOk;
}

inline int run_check(const RunConfig& cfg, std::ostream& out) {
  FieldBundle bundle = obtain_field(cfg);
  const ValueField& f = bundle.field;
  ScalarField phi = ScalarField::from_value_field(f);

  ClassifyOptions copt = classify_options(cfg, f);
  copt.decay = decay_spec(f);
  std::vector<TimeStatePoint> pts = interior_probes(f, cfg.points);
  SolutionVerdict verdict = classify_dini(phi, bundle.problem, pts, copt);

  CrosscheckOptions xopt;
  xopt.sched = copt.sched;
  // Keep quadratic-support probes inside the locally linear cell of an
  // interpolated field.
  xopt.rho = std::min(xopt.rho, xopt.sched.base);
  xopt.dini_tol = tol_or(cfg, "dini", xopt.dini_tol);
  xopt.prox_tol = tol_or(cfg, "prox", xopt.prox_tol);
  xopt.visc_tol = tol_or(cfg, "visc", xopt.visc_tol);
  std::vector<TimeStatePoint> xpts(
      pts.begin(), pts.begin() + std::min<std::size_t>(pts.size(), 5));
  CheckReport cross = equivalence_crosscheck(phi, bundle.problem, xpts, xopt);

  bool pass = verdict.classification == DiniClass::kSolution && cross.pass;
  nlohmann::json j{{"classification", verdict.to_json()},
                   {"crosscheck", cross.to_json()},
                   {"pass", pass}};
  auto dir = prepare_out_dir(cfg);
  write_text_file((dir / "check_reports.json").string(), j.dump(2) + "\n");
  out << "classification: " << to_string(verdict.classification) << "\n";
  out << "decay: " << (verdict.decay.pass ? "PASS" : "FAIL") << "\n";
  out << "crosscheck: " << (cross.pass ? "PASS" : "FAIL") << "\n";
  out << "check: " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitCheckFailed;
}

inline int run_certify(const RunConfig& cfg, std::ostream& out) {
  FieldBundle bundle = obtain_field(cfg);
  const ValueField& f = bundle.field;
  const ControlProblem& p = bundle.problem;
  if (static_cast<int>(cfg.z.size()) != p.state_dim)
    throw ConfigError("--z needs one coordinate per state axis");
  ScalarField phi = ScalarField::from_value_field(f);

  ClassifyOptions copt = classify_options(cfg, f);
  SolutionVerdict verdict =
      classify_dini(phi, p, interior_probes(f, cfg.points), copt);
  if (!verdict.sub_pass) {
    out << "certify: FAIL (field is not a verified sub-solution)\n";
    return kExitCheckFailed;
  }

  PolicyRollout roll = extract_policy_rollout(p, f, cfg.z);
  CostCertificate cert =
      cost_with_tail(p, roll.signal, f.tau, cfg.z, f.horizon(), cfg.sim_step);
  double extra = tol_or(cfg, "extra", f.tolerance_budget());
  CheckReport rep =
      certify_optimal(phi, p, roll.signal, roll.trajectory, cert, verdict,
                      extra);

  auto dir = prepare_out_dir(cfg);
  std::ostringstream tcsv, scsv;
  write_trajectory_csv(tcsv, roll.trajectory);
  write_signal_csv(scsv, roll.signal);
  write_text_file((dir / "trajectory.csv").string(), tcsv.str());
  write_text_file((dir / "signal.csv").string(), scsv.str());
  write_text_file((dir / "certificate.json").string(),
                  certificate_json(cert).dump(2) + "\n");
  write_text_file((dir / "certify_report.json").string(),
                  rep.to_json().dump(2) + "\n");
  out << "certify: " << (rep.pass ? "PASS" : "FAIL") << " " << rep.note
      << "\n";
  return rep.pass ? kExitOk : kExitCheckFailed;
}

inline int run_sandwich(const RunConfig& cfg, std::ostream& out) {
  FieldBundle bundle = obtain_field(cfg);
  const ValueField& f = bundle.field;
  const ControlProblem& p = bundle.problem;
  if (!p.growth_const || !p.invariant_radius)
    throw ConfigError("sandwich needs K2 and M declared in the problem file");
  double c = *p.growth_const * (1.0 + *p.invariant_radius) / p.discount;

  ScalarField solved = ScalarField::from_value_field(f);
  ScalarField zero = ScalarField::from_expr(parse_expr("0", p.state_dim, 0));
  ScalarField envelope = ScalarField::from_expr(
      parse_expr(detail::format_double(c) + " * exp(-" +
                     detail::format_double(p.discount) + " * t)",
                 p.state_dim, 0));

  std::vector<TimeStatePoint> pts =
      in_ball(interior_probes(f, cfg.points), *p.invariant_radius);
  if (pts.empty())
    throw ConfigError("no probe points inside the invariant ball");

  ClassifyOptions copt = classify_options(cfg, f);
  SolutionVerdict v_zero = classify_dini(zero, p, pts, copt);
  SolutionVerdict v_env = classify_dini(envelope, p, pts, copt);

  std::vector<SandwichBound> bounds =
      sandwich({{"zero", zero, v_zero}}, {{"envelope", envelope, v_env}}, p,
               pts, &solved, f.tolerance_budget());

  bool pass = true;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& b : bounds) {
    pass = pass && b.coherent && b.lower_valid && b.upper_valid;
    rows.push_back(b.to_json());
  }
  nlohmann::json j{{"bounds", rows}, {"pass", pass}};
  auto dir = prepare_out_dir(cfg);
  write_text_file((dir / "sandwich.json").string(), j.dump(2) + "\n");
  out << "sandwich: " << (pass ? "PASS" : "FAIL") << " over "
      << bounds.size() << " points\n";
  return pass ? kExitOk : kExitCheckFailed;
}

inline int run_bench(const RunConfig& cfg, std::ostream& out) {
  if (cfg.bench_name.empty())
    throw ConfigError("--bench names the benchmark to run");
  Benchmark b = [&] {
    try {
      return benchmark(cfg.bench_name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  BenchSummary s = run_benchmark(b);
  auto dir = prepare_out_dir(cfg);
  write_text_file((dir / "bench_summary.json").string(),
                  s.to_json().dump(2) + "\n");
  out << "bench " << s.name << ": " << (s.pass ? "PASS" : "FAIL")
      << " max_abs_err=" << detail::format_double(s.max_abs_err)
      << " max_rel_err=" << detail::format_double(s.max_rel_err)
      << " budget=" << detail::format_double(s.budget) << "\n";
  return s.pass ? kExitOk : kExitCheckFailed;
}

}  // namespace detail

// Execute one configured command. Writes artifacts under cfg.out_dir, a
// human summary to `out`, and errors to `err`; returns the exit code.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    detail::check_tol_names(cfg);
    if (cfg.command == "solve") return detail::run_solve(cfg, out);
    if (cfg.command == "simulate") return detail::run_simulate(cfg, out);
    if (cfg.command == "check") return detail::run_check(cfg, out);
    if (cfg.command == "certify") return detail::run_certify(cfg, out);
    if (cfg.command == "sandwich") return detail::run_sandwich(cfg, out);
    if (cfg.command == "bench") return detail::run_bench(cfg, out);
    err << "error: unknown command '" << cfg.command
        << "' (expected solve|simulate|check|certify|sandwich|bench)\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace hjb
