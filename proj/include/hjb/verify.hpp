#pragma once
// Executable forms of the theory's verification statements: classification
// of a scalar field as a generalized sub/super-solution of the HJB
// inequality with decay, monotonicity of the value-minus-remaining-cost
// functional along processes, optimality certificates, sandwich bounds from
// families of sub- and super-solutions, and the agreement cross-check
// between the three membership test styles.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hjb/check_report.hpp"
#include "hjb/dini.hpp"
#include "hjb/integrate.hpp"
#include "hjb/problem.hpp"
#include "hjb/scalar_field.hpp"

namespace hjb {

struct TimeStatePoint {
  double t = 0.0;
  std::vector<double> x;
};

// Uniform sup of |phi(t, .)| over each box at each listed time, sampled on
// a per-axis lattice. Passes when the final sup is below the target and the
// tail of the sequence is non-increasing.
inline CheckReport decay_check(const ScalarField& phi,
                               const std::vector<Box>& compacts,
                               const std::vector<double>& times,
                               double eps_target, int nodes_per_axis = 9) {
  if (times.empty() || compacts.empty())
    throw std::invalid_argument("decay check needs times and boxes");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("decay times must increase");

  std::vector<double> sups;
  for (double t : times) {
    double sup = 0.0;
    for (const Box& b : compacts) {
      const int n = b.dim();
      std::size_t total = 1;
      for (int a = 0; a < n; ++a) total *= static_cast<std::size_t>(nodes_per_axis);
      for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        std::vector<double> x(n);
        for (int a = 0; a < n; ++a) {
          auto i = static_cast<int>(rem % static_cast<std::size_t>(nodes_per_axis));
          rem /= static_cast<std::size_t>(nodes_per_axis);
          x[a] = nodes_per_axis == 1
                     ? 0.5 * (b.lo[a] + b.hi[a])
                     : b.lo[a] + (b.hi[a] - b.lo[a]) * i / (nodes_per_axis - 1.0);
        }
        sup = std::max(sup, std::fabs(phi(t, x)));
      }
    }
    sups.push_back(sup);
  }

  bool tail_monotone = true;
  std::size_t from = sups.size() > 3 ? sups.size() - 3 : 0;
  for (std::size_t i = from + 1; i < sups.size(); ++i)
    if (sups[i] > sups[i - 1] + 1e-12 * (1.0 + sups[i - 1])) tail_monotone = false;

  CheckReport rep;
  rep.test = "decay";
  rep.point = {times.back()};
  rep.pass = sups.back() <= eps_target && tail_monotone;
  rep.worst_margin = (eps_target - sups.back()) / (1.0 + eps_target);
  std::ostringstream os;
  os << "sups=[";
  for (std::size_t i = 0; i < sups.size(); ++i)
    os << (i ? "," : "") << sups[i];
  os << "] target=" << eps_target
     << (tail_monotone ? "" : " tail-not-monotone");
  rep.note = os.str();
  rep.stability = "stable";
  return rep;
}

enum class DiniClass { kSub, kSuper, kSolution, kNeither };

inline std::string to_string(DiniClass c) {
  switch (c) {
    case DiniClass::kSub: return "dini-sub";
    case DiniClass::kSuper: return "dini-super";
    case DiniClass::kSolution: return "dini-solution";
    default: return "neither";
  }
}

struct HjbViolation {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> candidate;  // (alpha, xi...)
  double residual = 0.0;          // alpha + min-Hamiltonian at the point
  std::string side;               // which inequality was violated
};

struct SolutionVerdict {
  DiniClass classification = DiniClass::kNeither;
  bool sub_pass = false;
  bool super_pass = false;
  bool decay_checked = false;
  CheckReport decay;
  std::vector<HjbViolation> violations;
  double worst_sub_residual = 0.0;    // most negative alpha + H seen
  double worst_super_residual = 0.0;  // most positive alpha + H seen
  int candidates_tested = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["classification"] = to_string(classification);
    j["sub_pass"] = sub_pass;
    j["super_pass"] = super_pass;
    j["decay_checked"] = decay_checked;
    if (decay_checked) j["decay"] = decay.to_json();
    j["worst_sub_residual"] = worst_sub_residual;
    j["worst_super_residual"] = worst_super_residual;
    j["candidates_tested"] = candidates_tested;
    nlohmann::json v = nlohmann::json::array();
    for (const auto& viol : violations) {
      nlohmann::json e;
      e["t"] = viol.t;
      e["x"] = viol.x;
      e["candidate"] = viol.candidate;
      e["residual"] = viol.residual;
      e["side"] = viol.side;
      v.push_back(e);
    }
    j["violations"] = v;
    return j;
  }
};

struct DecaySpec {
  std::vector<Box> compacts;
  std::vector<double> times;
  double eps = 1e-3;
  int nodes_per_axis = 9;
};

struct ClassifyOptions {
  RadiusSchedule sched{};
  double membership_tol = 1e-6;
  // Slack for the HJB inequality residuals, relative to 1 + |alpha| + |H|.
  // For a solved field this should be its tolerance budget.
  double hjb_tol = 1e-6;
  // Finite-difference scales (times sched.base) for candidate generation.
  std::vector<double> fd_scales{1.0, 0.25, 0.0625};
  // Extra (alpha, xi...) candidate rows tested at every point.
  std::vector<std::vector<double>> extra_candidates;
  std::optional<DecaySpec> decay;
  std::size_t max_violations = 16;  // recorded, not a processing limit
};

// Classifies phi against the HJB inequality pair: at every sample point,
// candidate slopes that verify as upper (super-) gradients must satisfy
// alpha + H >= 0, and candidates verifying as lower (sub-) gradients must
// satisfy alpha + H <= 0, where H is the sampled minimum Hamiltonian with
// phi's spatial slope as the adjoint. Membership does the filtering;
// candidates that are neither constrain nothing. The decay condition, when
// a spec is supplied, gates the full "solution" classification.
inline SolutionVerdict classify_dini(const ScalarField& phi,
                                     const ControlProblem& p,
                                     const std::vector<TimeStatePoint>& points,
                                     const ClassifyOptions& opt = {}) {
  if (phi.state_dim() != p.state_dim)
    throw std::invalid_argument("field and problem dimensions differ");
  SolutionVerdict verdict;
  verdict.sub_pass = true;
  verdict.super_pass = true;

  for (const TimeStatePoint& pt : points) {
    std::vector<std::vector<double>> candidates = opt.extra_candidates;
    for (double s : opt.fd_scales) {
      double eps = s * opt.sched.base * std::ldexp(1.0, -opt.sched.j_min);
      std::vector<double> cand(1 + p.state_dim);
      std::vector<double> xp(pt.x), xm(pt.x);
      cand[0] = (phi(pt.t + eps, pt.x) - phi(pt.t - eps, pt.x)) / (2.0 * eps);
      for (int a = 0; a < p.state_dim; ++a) {
        xp[a] += eps;
        xm[a] -= eps;
        cand[1 + a] = (phi(pt.t, xp) - phi(pt.t, xm)) / (2.0 * eps);
        xp[a] = pt.x[a];
        xm[a] = pt.x[a];
      }
      candidates.push_back(std::move(cand));
    }

    for (const auto& cand : candidates) {
      if (cand.size() != static_cast<std::size_t>(1 + p.state_dim))
        throw std::invalid_argument("candidate row has wrong length");
      double alpha = cand[0];
      std::span<const double> xi(cand.data() + 1,
                                 static_cast<std::size_t>(p.state_dim));
      ++verdict.candidates_tested;

      double h = min_hamiltonian(p, pt.t, pt.x, xi).value;
      double residual = alpha + h;
      double scale = 1.0 + std::fabs(alpha) + std::fabs(h);

      CheckReport upper = dini_supergradient_test(phi, pt.t, pt.x, alpha, xi,
                                                  opt.membership_tol, opt.sched);
      if (upper.pass) {
        verdict.worst_sub_residual =
            std::min(verdict.worst_sub_residual, residual);
        if (residual < -opt.hjb_tol * scale) {
          verdict.sub_pass = false;
          if (verdict.violations.size() < opt.max_violations)
            verdict.violations.push_back(
                {pt.t, pt.x, cand, residual, "sub"});
        }
      }
      CheckReport lower = dini_subgradient_test(phi, pt.t, pt.x, alpha, xi,
                                                opt.membership_tol, opt.sched);
      if (lower.pass) {
        verdict.worst_super_residual =
            std::max(verdict.worst_super_residual, residual);
        if (residual > opt.hjb_tol * scale) {
          verdict.super_pass = false;
          if (verdict.violations.size() < opt.max_violations)
            verdict.violations.push_back(
                {pt.t, pt.x, cand, residual, "super"});
        }
      }
    }
  }

  bool decay_ok = false;
  if (opt.decay) {
    verdict.decay = decay_check(phi, opt.decay->compacts, opt.decay->times,
                                opt.decay->eps, opt.decay->nodes_per_axis);
    verdict.decay_checked = true;
    decay_ok = verdict.decay.pass;
  }

  if (verdict.sub_pass && verdict.super_pass && decay_ok)
    verdict.classification = DiniClass::kSolution;
  else if (verdict.sub_pass)
    verdict.classification = DiniClass::kSub;
  else if (verdict.super_pass)
    verdict.classification = DiniClass::kSuper;
  else
    verdict.classification = DiniClass::kNeither;
  return verdict;
}

enum class Monotone { kNonDecreasing, kNonIncreasing };

// Monotonicity of g(t) = phi(t, x(t)) - (remaining cost from t) along a
// computed process. The infinite remaining cost is the certificate midpoint
// minus the accrued cost; the certificate half-width is folded into the
// tolerance together with the caller's interpolation budget.
inline CheckReport monotonicity_check(const ScalarField& phi,
                                      const ControlProblem& p,
                                      const ControlSignal& u,
                                      const Trajectory& traj,
                                      const CostCertificate& cert,
                                      Monotone mode, double extra_tol = 0.0) {
  if (phi.state_dim() != p.state_dim)
    throw std::invalid_argument("field and problem dimensions differ");
  if (u.dimension() != p.control_dim)
    throw std::invalid_argument("signal and problem dimensions differ");
  double j_mid = cert.midpoint();
  double tol = 0.5 * cert.width() + extra_tol;

  CheckReport rep;
  rep.test = mode == Monotone::kNonDecreasing ? "monotone_non_decreasing"
                                              : "monotone_non_increasing";
  double run = phi(traj.times[0], traj.states[0]) - j_mid;
  double worst = 0.0;
  double worst_time = traj.times[0];
  double g_min = run, g_max = run;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    double g = phi(traj.times[i], traj.states[i]) - (j_mid - traj.cost[i]);
    g_min = std::min(g_min, g);
    g_max = std::max(g_max, g);
    double viol = mode == Monotone::kNonDecreasing ? run - g : g - run;
    if (viol > worst) {
      worst = viol;
      worst_time = traj.times[i];
    }
    if (mode == Monotone::kNonDecreasing)
      run = std::max(run, g);
    else
      run = std::min(run, g);
  }
  rep.pass = worst <= tol;
  rep.worst_margin = tol - worst;
  rep.point = {worst_time};
  std::ostringstream os;
  os << "g range [" << g_min << ", " << g_max << "], tol=" << tol;
  rep.note = os.str();
  rep.stability = "stable";
  return rep;
}

// Optimality certificate: a verified sub-solution whose value at the start
// matches the certified cost of the process proves the process optimal up
// to the stated budget. Requires the sub-solution verdict up front.
inline CheckReport certify_optimal(const ScalarField& phi,
                                   const ControlProblem& p,
                                   const ControlSignal& u,
                                   const Trajectory& traj,
                                   const CostCertificate& cert,
                                   const SolutionVerdict& verdict,
                                   double extra_tol = 0.0) {
  if (!verdict.sub_pass)
    throw std::invalid_argument(
        "optimality certificate needs a passing sub-solution verdict");
  if (u.dimension() != p.control_dim)
    throw std::invalid_argument("signal and problem dimensions differ");
  double s = traj.times.front();
  const std::vector<double>& z = traj.front_state();
  double value = phi(s, z);
  double gap = std::fabs(value - cert.midpoint());
  double tol = 0.5 * cert.width() + extra_tol;

  CheckReport rep;
  rep.test = "optimality_certificate";
  rep.point.assign(1, s);
  rep.point.insert(rep.point.end(), z.begin(), z.end());
  rep.pass = gap <= tol;
  rep.worst_margin = (tol - gap) / (1.0 + std::fabs(cert.midpoint()));
  std::ostringstream os;
  os << "value=" << value << " cost=[" << cert.lower << ", " << cert.upper
     << "] tol=" << tol;
  rep.note = os.str();
  rep.stability = "stable";
  return rep;
}

struct ClassifiedField {
  std::string name;
  ScalarField field;
  SolutionVerdict verdict;
};

struct SandwichBound {
  double t = 0.0;
  std::vector<double> x;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool lower_valid = false;
  bool upper_valid = false;
  std::vector<std::string> excluded;  // fields that failed classification
  std::optional<double> reference;    // solved value at the point, if given
  bool coherent = true;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["t"] = t;
    j["x"] = x;
    j["lower"] = lower_valid ? nlohmann::json(lower) : nlohmann::json();
    j["upper"] = upper_valid ? nlohmann::json(upper) : nlohmann::json();
    j["excluded"] = excluded;
    if (reference) j["reference"] = *reference;
    j["coherent"] = coherent;
    return j;
  }
};

// Pointwise envelope bounds: every verified sub-solution lies below the
// value, every verified super-solution above, so the max of subs and min of
// supers bracket it. Fields whose verdicts do not support their claimed
// side are excluded by name rather than silently used.
inline std::vector<SandwichBound> sandwich(
    const std::vector<ClassifiedField>& subs,
    const std::vector<ClassifiedField>& supers, const ControlProblem&,
    const std::vector<TimeStatePoint>& points,
    const ScalarField* reference = nullptr, double tol = 1e-6) {
  std::vector<SandwichBound> out;
  for (const TimeStatePoint& pt : points) {
    SandwichBound b;
    b.t = pt.t;
    b.x = pt.x;
    for (const ClassifiedField& f : subs) {
      if (!f.verdict.sub_pass) {
        b.excluded.push_back(f.name);
        continue;
      }
      b.lower = b.lower_valid ? std::max(b.lower, f.field(pt.t, pt.x))
                              : f.field(pt.t, pt.x);
      b.lower_valid = true;
    }
    for (const ClassifiedField& f : supers) {
      if (!f.verdict.super_pass) {
        b.excluded.push_back(f.name);
        continue;
      }
      b.upper = b.upper_valid ? std::min(b.upper, f.field(pt.t, pt.x))
                              : f.field(pt.t, pt.x);
      b.upper_valid = true;
    }
    if (b.lower_valid && b.upper_valid && b.lower > b.upper + tol)
      b.coherent = false;
    if (reference) {
      double v = (*reference)(pt.t, pt.x);
      b.reference = v;
      if (b.lower_valid && b.lower - tol > v) b.coherent = false;
      if (b.upper_valid && v > b.upper + tol) b.coherent = false;
    }
    out.push_back(std::move(b));
  }
  return out;
}

struct CrosscheckOptions {
  RadiusSchedule sched{};
  double rho = 0.04;  // probe radius for the quadratic-support families
  double dini_tol = 1e-5;
  double prox_tol = 1e-6;
  double visc_tol = 1e-6;
  // Size of the slope perturbations used to generate known non-members,
  // relative to the finite-difference candidate's magnitude.
  double perturbation = 0.5;
  std::vector<std::vector<double>> extra_candidates;
};

// Runs the three membership styles (directional, quadratic-support probe,
// quadratic-test-function scan) on identical candidates and reports any
// verdict disagreement. The styles characterize the same object, so
// agreement is the expected outcome; a disagreement localizes a numerical
// artifact or an intentionally corrupted tolerance.
inline CheckReport equivalence_crosscheck(
    const ScalarField& phi, const ControlProblem&,
    const std::vector<TimeStatePoint>& points,
    const CrosscheckOptions& opt = {}) {
  CheckReport rep;
  rep.test = "equivalence_crosscheck";
  int disagreements = 0;
  int tested = 0;
  double decisiveness = std::numeric_limits<double>::infinity();
  std::ostringstream detail;

  for (const TimeStatePoint& pt : points) {
    const int n = phi.state_dim();
    double eps = 4.0 * opt.sched.base * std::ldexp(1.0, -opt.sched.j_max);
    std::vector<double> fd(1 + n);
    std::vector<double> xp(pt.x), xm(pt.x);
    fd[0] = (phi(pt.t + eps, pt.x) - phi(pt.t - eps, pt.x)) / (2.0 * eps);
    for (int a = 0; a < n; ++a) {
      xp[a] += eps;
      xm[a] -= eps;
      fd[1 + a] = (phi(pt.t, xp) - phi(pt.t, xm)) / (2.0 * eps);
      xp[a] = pt.x[a];
      xm[a] = pt.x[a];
    }
    double mag = 0.0;
    for (double c : fd) mag = std::max(mag, std::fabs(c));
    double bump = opt.perturbation * (1.0 + mag);

    std::vector<std::vector<double>> candidates{fd};
    for (double s : {1.0, -1.0}) {
      std::vector<double> c = fd;
      c[0] += s * bump;
      candidates.push_back(c);
      c = fd;
      c[1] += s * bump;
      candidates.push_back(c);
    }
    for (const auto& c : opt.extra_candidates) candidates.push_back(c);

    for (const auto& cand : candidates) {
      if (cand.size() != static_cast<std::size_t>(1 + n))
        throw std::invalid_argument("candidate row has wrong length");
      double q = cand[0];
      std::span<const double> g(cand.data() + 1, static_cast<std::size_t>(n));
      ++tested;

      CheckReport d_sub =
          dini_subgradient_test(phi, pt.t, pt.x, q, g, opt.dini_tol, opt.sched);
      CheckReport p_sub = proximal_subgradient_test(phi, pt.t, pt.x, q, g,
                                                    opt.rho, opt.prox_tol);
      CheckReport v_sub = viscosity_subgradient_test(phi, pt.t, pt.x, q, g,
                                                     opt.rho, opt.visc_tol);
      CheckReport d_sup = dini_supergradient_test(phi, pt.t, pt.x, q, g,
                                                  opt.dini_tol, opt.sched);
      CheckReport p_sup = proximal_supergradient_test(phi, pt.t, pt.x, q, g,
                                                      opt.rho, opt.prox_tol);
      CheckReport v_sup = viscosity_supergradient_test(phi, pt.t, pt.x, q, g,
                                                       opt.rho, opt.visc_tol);

      bool sub_agree = d_sub.pass == p_sub.pass && p_sub.pass == v_sub.pass;
      bool sup_agree = d_sup.pass == p_sup.pass && p_sup.pass == v_sup.pass;
      for (const CheckReport* r :
           {&d_sub, &p_sub, &v_sub, &d_sup, &p_sup, &v_sup})
        decisiveness = std::min(decisiveness, std::fabs(r->worst_margin));
      if (!sub_agree || !sup_agree) {
        ++disagreements;
        if (disagreements == 1) {
          rep.point.assign(1, pt.t);
          rep.point.insert(rep.point.end(), pt.x.begin(), pt.x.end());
          rep.candidate = cand;
          detail << (sub_agree ? "upper" : "lower") << " verdicts ["
                 << d_sub.pass << p_sub.pass << v_sub.pass << "/"
                 << d_sup.pass << p_sup.pass << v_sup.pass << "]";
        }
      }
    }
  }

  rep.pass = disagreements == 0;
  rep.worst_margin =
      rep.pass ? decisiveness : -static_cast<double>(disagreements);
  std::ostringstream os;
  os << "candidates=" << tested << " disagreements=" << disagreements;
  if (disagreements > 0) os << " first: " << detail.str();
  rep.note = os.str();
  rep.stability = "stable";
  return rep;
}

}  // namespace hjb
