#pragma once
// File formats: line-oriented problem files, CSV exports for trajectories,
// control signals and value fields, JSON for certificates and metadata.
// All floating-point output goes through %.17g so that save/load/save is
// byte-stable.

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hjb/control_signal.hpp"
#include "hjb/integrate.hpp"
#include "hjb/problem.hpp"
#include "hjb/value_field.hpp"

namespace hjb {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
  IoError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what) {}
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string trim(std::string_view s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(a, b - a + 1));
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw IoError("bad number for " + what + ": '" + s + "'");
  }
  if (used != s.size())
    throw IoError("trailing characters in " + what + ": '" + s + "'");
  return v;
}

inline int parse_int(const std::string& s, const std::string& what) {
  double v = parse_number(s, what);
  auto i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw IoError(what + " must be an integer, got '" + s + "'");
  return i;
}

}  // namespace detail

// Canonical description of a problem: parser-independent key order,
// canonical expression rendering, %.17g constants. The hash is FNV-1a over
// this text, so equal hashes mean equal problems up to expression identity.
inline std::string problem_canonical(const ControlProblem& p) {
  std::ostringstream out;
  out << "n=" << p.state_dim << "\n";
  out << "m=" << p.control_dim << "\n";
  out << "delta=" << detail::format_double(p.discount) << "\n";
  for (int i = 0; i < p.state_dim; ++i)
    out << "f." << (i + 1) << "=" << p.dynamics[i].str() << "\n";
  out << "l=" << p.running_cost.str() << "\n";
  if (p.controls.is_box()) {
    out << "omega=box:";
    for (int a = 0; a < p.control_dim; ++a)
      out << " " << detail::format_double(p.controls.box_lo()[a]) << " "
          << detail::format_double(p.controls.box_hi()[a]);
    out << "\nsamples_per_axis=";
    for (std::size_t a = 0; a < p.controls.samples_per_axis().size(); ++a)
      out << (a ? " " : "") << p.controls.samples_per_axis()[a];
    out << "\n";
  } else {
    out << "omega=points:[";
    const auto& pts = p.controls.samples();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out << (i ? ",[" : "[");
      for (std::size_t j = 0; j < pts[i].size(); ++j)
        out << (j ? "," : "") << detail::format_double(pts[i][j]);
      out << "]";
    }
    out << "]\n";
  }
  if (p.lip_const)
    out << "K1=" << detail::format_double(*p.lip_const) << "\n";
  if (p.growth_const)
    out << "K2=" << detail::format_double(*p.growth_const) << "\n";
  if (p.invariant_radius)
    out << "M=" << detail::format_double(*p.invariant_radius) << "\n";
  if (p.cost_nonnegative) out << "l_nonneg=true\n";
  return out.str();
}

inline std::string problem_hash(const ControlProblem& p) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(
                    detail::fnv1a(problem_canonical(p))));
  return std::string(buf);
}

// Problem files: one `key = value` per line, `#` comments, keys n, m, delta,
// f.1..f.n, l, omega (points: or box: plus samples_per_axis), optional K1,
// K2, M (alias invariant_radius) and l_nonneg.
inline ControlProblem parse_problem_text(const std::string& text) {
  std::map<std::string, std::pair<std::string, int>> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw IoError("expected 'key = value'", lineno);
    std::string key = detail::trim(t.substr(0, eq));
    std::string val = detail::trim(t.substr(eq + 1));
    if (key.empty() || val.empty())
      throw IoError("empty key or value", lineno);
    if (kv.count(key)) throw IoError("duplicate key '" + key + "'", lineno);
    kv[key] = {val, lineno};
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second.first;
    kv.erase(it);
    return v;
  };
  auto require = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw IoError("missing required key '" + key + "'");
    return *v;
  };

  int n = detail::parse_int(require("n"), "n");
  int m = detail::parse_int(require("m"), "m");
  if (n < 1 || m < 1) throw IoError("n and m must be positive");
  double delta = detail::parse_number(require("delta"), "delta");

  auto parse_expr_checked = [&](const std::string& key,
                                const std::string& src) {
    try {
      return parse_expr(src, n, m);
    } catch (const ParseError& e) {
      throw IoError(key + ": " + e.what());
    }
  };

  std::vector<Expr> f;
  for (int i = 1; i <= n; ++i) {
    std::string key = "f." + std::to_string(i);
    f.push_back(parse_expr_checked(key, require(key)));
  }
  Expr l = parse_expr_checked("l", require("l"));

  std::string omega = require("omega");
  ControlSet controls = ControlSet::points({std::vector<double>(m, 0.0)});
  if (omega.rfind("points:", 0) == 0) {
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(omega.substr(7));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(std::string("omega points: ") + e.what());
    }
    if (!arr.is_array() || arr.empty())
      throw IoError("omega points must be a non-empty array of arrays");
    std::vector<std::vector<double>> pts;
    for (const auto& row : arr) {
      if (!row.is_array() || static_cast<int>(row.size()) != m)
        throw IoError("each omega point needs " + std::to_string(m) +
                      " components");
      pts.push_back(row.get<std::vector<double>>());
    }
    controls = ControlSet::points(std::move(pts));
  } else if (omega.rfind("box:", 0) == 0) {
    std::vector<std::string> toks = detail::split_ws(omega.substr(4));
    if (static_cast<int>(toks.size()) != 2 * m)
      throw IoError("omega box needs lo hi per control axis (" +
                    std::to_string(2 * m) + " numbers)");
    std::vector<double> lo(m), hi(m);
    for (int a = 0; a < m; ++a) {
      lo[a] = detail::parse_number(toks[2 * a], "omega box lo");
      hi[a] = detail::parse_number(toks[2 * a + 1], "omega box hi");
    }
    std::vector<std::string> counts =
        detail::split_ws(require("samples_per_axis"));
    std::vector<int> per_axis;
    if (counts.size() == 1 && m > 1) {
      per_axis.assign(m, detail::parse_int(counts[0], "samples_per_axis"));
    } else {
      if (static_cast<int>(counts.size()) != m)
        throw IoError("samples_per_axis needs 1 or " + std::to_string(m) +
                      " integers");
      for (const auto& c : counts)
        per_axis.push_back(detail::parse_int(c, "samples_per_axis"));
    }
    controls = ControlSet::box(std::move(lo), std::move(hi),
                               std::move(per_axis));
  } else {
    throw IoError("omega must start with 'points:' or 'box:'");
  }

  ControlProblem p(n, m, std::move(f), std::move(l), std::move(controls),
                   delta);

  if (auto v = take("K1")) p.lip_const = detail::parse_number(*v, "K1");
  if (auto v = take("K2")) p.growth_const = detail::parse_number(*v, "K2");
  auto m_key = take("M");
  auto radius_key = take("invariant_radius");
  if (m_key && radius_key)
    throw IoError("give either M or invariant_radius, not both");
  if (m_key) p.invariant_radius = detail::parse_number(*m_key, "M");
  if (radius_key)
    p.invariant_radius = detail::parse_number(*radius_key, "invariant_radius");
  if (auto v = take("l_nonneg")) {
    if (*v == "true" || *v == "1")
      p.cost_nonnegative = true;
    else if (*v == "false" || *v == "0")
      p.cost_nonnegative = false;
    else
      throw IoError("l_nonneg must be true or false, got '" + *v + "'");
  }

  if (!kv.empty()) {
    const auto& [key, where] = *kv.begin();
    throw IoError("unknown key '" + key + "'", where.second);
  }
  return p;
}

inline ControlProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open problem file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_problem_text(buf.str());
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV / JSON exports

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  int n = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  out << ",cost\n";
  for (std::size_t r = 0; r < traj.size(); ++r) {
    out << detail::format_double(traj.times[r]);
    for (double c : traj.states[r]) out << "," << detail::format_double(c);
    out << "," << detail::format_double(traj.cost[r]) << "\n";
  }
}

inline void write_signal_csv(std::ostream& out, const ControlSignal& u) {
  out << "t_break";
  for (int i = 1; i <= u.dimension(); ++i) out << ",u" << i;
  out << "\n";
  for (std::size_t r = 0; r < u.breakpoints().size(); ++r) {
    out << detail::format_double(u.breakpoints()[r]);
    for (double c : u.values()[r]) out << "," << detail::format_double(c);
    out << "\n";
  }
}

inline nlohmann::json certificate_json(const CostCertificate& cert) {
  return nlohmann::json{{"T", cert.horizon},
                        {"J_T", cert.finite_cost},
                        {"B_tail", cert.tail_bound},
                        {"lo", cert.lower},
                        {"hi", cert.upper}};
}

namespace detail {

// The control the backward sweep would pick at layer k, node x: argmin of
// the one-step cost against the next layer, ties to the first sample. The
// terminal layer has no continuation, so its argmin reduces to the cheapest
// instantaneous cost.
inline std::size_t layer_argmin(const ControlProblem& p, const ValueField& f,
                                int k, const std::vector<double>& x) {
  const auto& samples = p.controls.samples();
  double t = f.time_at(k);
  double disc = std::exp(-p.discount * t);
  std::vector<double> drift(p.state_dim), foot(p.state_dim);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double cand;
    if (k < f.steps) {
      p.eval_dynamics(t, x, samples[i], drift);
      for (int a = 0; a < p.state_dim; ++a)
        foot[a] = x[a] + f.dt * drift[a];
      cand = f.dt * disc * p.eval_cost(t, x, samples[i]) +
             f.interp_space(k + 1, foot);
    } else {
      cand = p.eval_cost(t, x, samples[i]);
    }
    if (cand < best) {
      best = cand;
      best_i = i;
    }
  }
  return best_i;
}

}  // namespace detail

// One row per (layer, node): t, the node coordinates, the value, and the
// control the sweep would choose there.
inline void write_value_csv(std::ostream& out, const ControlProblem& p,
                            const ValueField& f) {
  out << "t";
  for (int i = 1; i <= p.state_dim; ++i) out << ",x" << i;
  out << ",v";
  for (int i = 1; i <= p.control_dim; ++i) out << ",u" << i;
  out << "\n";
  const auto& samples = p.controls.samples();
  std::size_t total = f.grid.size();
  for (int k = 0; k <= f.steps; ++k) {
    double t = f.time_at(k);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::vector<double> x = f.grid.node_point(flat);
      out << detail::format_double(t);
      for (double c : x) out << "," << detail::format_double(c);
      out << "," << detail::format_double(f.value(k, flat));
      const auto& u = samples[detail::layer_argmin(p, f, k, x)];
      for (double c : u) out << "," << detail::format_double(c);
      out << "\n";
    }
  }
}

inline nlohmann::json value_metadata(const ControlProblem& p,
                                     const ValueField& f) {
  return nlohmann::json{
      {"T", f.horizon()},
      {"delta", p.discount},
      {"tail_bound", f.terminal_bound},
      {"grid",
       {{"lo", f.grid.domain().lo},
        {"hi", f.grid.domain().hi},
        {"nodes", f.grid.nodes_per_axis()},
        {"dt", f.dt},
        {"tau", f.tau},
        {"steps", f.steps}}},
      {"clamp_fraction", f.clamp_fraction},
      {"problem_hash", problem_hash(p)}};
}

// Rebuild a field from its metadata and CSV. The CSV's policy columns are
// derived data and are skipped; the hash is the caller's to check.
inline ValueField read_value_field(const nlohmann::json& meta,
                                   std::istream& csv) {
  ValueField f(meta.at("grid").at("tau").get<double>(),
               meta.at("grid").at("dt").get<double>(),
               meta.at("grid").at("steps").get<int>(),
               SpaceGrid(Box(meta.at("grid").at("lo").get<std::vector<double>>(),
                             meta.at("grid").at("hi").get<std::vector<double>>()),
                         meta.at("grid").at("nodes").get<std::vector<int>>()));
  f.terminal_bound = meta.at("tail_bound").get<double>();
  if (meta.contains("clamp_fraction"))
    f.clamp_fraction = meta.at("clamp_fraction").get<double>();

  std::string line;
  if (!std::getline(csv, line)) throw IoError("value CSV is empty");
  int n = f.grid.domain().dim();
  std::size_t total = f.grid.size();
  for (int k = 0; k <= f.steps; ++k) {
    for (std::size_t flat = 0; flat < total; ++flat) {
      if (!std::getline(csv, line))
        throw IoError("value CSV ended early at layer " + std::to_string(k));
      std::istringstream row(line);
      std::string cell;
      for (int c = 0; c <= n; ++c) {
        if (!std::getline(row, cell, ','))
          throw IoError("short value CSV row: '" + line + "'");
      }
      if (!std::getline(row, cell, ','))
        throw IoError("value CSV row lacks a value column: '" + line + "'");
      f.layers[static_cast<std::size_t>(k)][flat] =
          detail::parse_number(cell, "v");
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// File wrappers

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void save_value_field(const std::string& csv_path,
                             const std::string& meta_path,
                             const ControlProblem& p, const ValueField& f) {
  std::ostringstream csv;
  write_value_csv(csv, p, f);
  write_text_file(csv_path, csv.str());
  write_text_file(meta_path, value_metadata(p, f).dump(2) + "\n");
}

inline ValueField load_value_field(const std::string& csv_path,
                                   const std::string& meta_path) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(meta_path + ": " + e.what());
  }
  std::istringstream csv(read_text_file(csv_path));
  try {
    return read_value_field(meta, csv);
  } catch (const IoError& e) {
    throw IoError(csv_path + ": " + e.what());
  }
}

}  // namespace hjb
