#pragma once
// Piecewise-constant control signal on [start, infinity): constant on each
// [t_k, t_{k+1}), with the final value held forever.

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "hjb/control_set.hpp"

namespace hjb {

class ControlSignal {
 public:
  // breakpoints[0] is the start time; one value per breakpoint.
  ControlSignal(std::vector<double> breakpoints,
                std::vector<std::vector<double>> values)
      : times_(std::move(breakpoints)), values_(std::move(values)) {
    if (times_.empty() || times_.size() != values_.size())
      throw std::invalid_argument("signal needs one value per breakpoint");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1]))
        throw std::invalid_argument("breakpoints must strictly increase");
    std::size_t dim = values_.front().size();
    if (dim == 0) throw std::invalid_argument("zero-dimensional control value");
    for (const auto& v : values_)
      if (v.size() != dim)
        throw std::invalid_argument("inconsistent control value dimension");
  }

  static ControlSignal constant(double start, std::vector<double> u) {
    return ControlSignal({start}, {std::move(u)});
  }

  double start() const { return times_.front(); }
  int dimension() const { return static_cast<int>(values_.front().size()); }
  const std::vector<double>& breakpoints() const { return times_; }
  const std::vector<std::vector<double>>& values() const { return values_; }

  // Index of the piece active at time t (t >= start).
  std::size_t piece_at(double t) const {
    if (t < times_.front())
      throw std::out_of_range("control signal queried before its start");
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return static_cast<std::size_t>(it - times_.begin()) - 1;
  }

  const std::vector<double>& value_at(double t) const {
    return values_[piece_at(t)];
  }

  // Restriction to [s, infinity), s >= start.
  ControlSignal restrict_from(double s) const {
    std::size_t k = piece_at(s);
    std::vector<double> bp{s};
    std::vector<std::vector<double>> vals{values_[k]};
    for (std::size_t i = k + 1; i < times_.size(); ++i) {
      bp.push_back(times_[i]);
      vals.push_back(values_[i]);
    }
    return ControlSignal(std::move(bp), std::move(vals));
  }

 private:
  std::vector<double> times_;
  std::vector<std::vector<double>> values_;
};

// Switch from u1 to u2 at time s2. Requires start(u1) <= s2 and
// start(u2) <= s2, so u2 is defined at the splice point.
inline ControlSignal concatenate(const ControlSignal& u1, double s2,
                                 const ControlSignal& u2) {
  if (u1.start() > s2 || u2.start() > s2)
    throw std::invalid_argument("both signals must be defined at the splice");
  if (u1.dimension() != u2.dimension())
    throw std::invalid_argument("signal dimension mismatch");
  std::vector<double> bp;
  std::vector<std::vector<double>> vals;
  for (std::size_t i = 0;
       i < u1.breakpoints().size() && u1.breakpoints()[i] < s2; ++i) {
    bp.push_back(u1.breakpoints()[i]);
    vals.push_back(u1.values()[i]);
  }
  bp.push_back(s2);
  vals.push_back(u2.value_at(s2));
  const auto& t2 = u2.breakpoints();
  for (std::size_t i = 0; i < t2.size(); ++i) {
    if (t2[i] > s2) {
      bp.push_back(t2[i]);
      vals.push_back(u2.values()[i]);
    }
  }
  return ControlSignal(std::move(bp), std::move(vals));
}

// Admissibility against a control set: every piece value inside the set's
// bounding box.
inline bool signal_admissible(const ControlSignal& u, const ControlSet& omega,
                              double slack = 1e-12) {
  if (u.dimension() != omega.dimension()) return false;
  for (const auto& v : u.values())
    if (!omega.in_bounding_box(v, slack)) return false;
  return true;
}

}  // namespace hjb
