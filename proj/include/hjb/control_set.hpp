#pragma once
// Admissible control set: an explicit finite point list, or a box sampled on
// a uniform per-axis lattice. Sampling is deterministic; enumeration order is
// row-major with the last axis fastest, and box samples always include the
// corners.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjb {

class ControlSet {
 public:
  static ControlSet points(std::vector<std::vector<double>> pts) {
    if (pts.empty()) throw std::invalid_argument("empty control point list");
    std::size_t dim = pts.front().size();
    if (dim == 0) throw std::invalid_argument("zero-dimensional control point");
    for (const auto& p : pts)
      if (p.size() != dim)
        throw std::invalid_argument("inconsistent control point dimension");
    ControlSet s;
    s.dim_ = static_cast<int>(dim);
    s.is_box_ = false;
    s.samples_ = std::move(pts);
    s.compute_bounds();
    return s;
  }

  static ControlSet box(std::vector<double> lo, std::vector<double> hi,
                        std::vector<int> samples_per_axis) {
    if (lo.empty() || lo.size() != hi.size() ||
        lo.size() != samples_per_axis.size())
      throw std::invalid_argument("control box spec dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!(lo[i] <= hi[i]))
        throw std::invalid_argument("control box axis has lo > hi");
      int k = samples_per_axis[i];
      if (k < 1 || (k == 1 && lo[i] != hi[i]))
        throw std::invalid_argument(
            "samples_per_axis must be >= 2 on a non-degenerate axis");
    }
    ControlSet s;
    s.dim_ = static_cast<int>(lo.size());
    s.is_box_ = true;
    s.box_lo_ = std::move(lo);
    s.box_hi_ = std::move(hi);
    s.samples_axis_ = std::move(samples_per_axis);
    s.enumerate_box();
    s.compute_bounds();
    return s;
  }

  // Convenience: the same sample count on every axis.
  static ControlSet box(std::vector<double> lo, std::vector<double> hi,
                        int samples_per_axis) {
    std::vector<int> counts(lo.size(), samples_per_axis);
    return box(std::move(lo), std::move(hi), std::move(counts));
  }

  int dimension() const { return dim_; }
  bool is_box() const { return is_box_; }
  const std::vector<double>& box_lo() const { return box_lo_; }
  const std::vector<double>& box_hi() const { return box_hi_; }
  const std::vector<int>& samples_per_axis() const { return samples_axis_; }

  // Deterministic sample list; for a box this includes every corner.
  const std::vector<std::vector<double>>& samples() const { return samples_; }

  // Membership up to `slack` against the set's bounding box.
  bool in_bounding_box(std::span<const double> u, double slack = 1e-12) const {
    if (static_cast<int>(u.size()) != dim_) return false;
    for (int i = 0; i < dim_; ++i)
      if (u[i] < bound_lo_[i] - slack || u[i] > bound_hi_[i] + slack)
        return false;
    return true;
  }

 private:
  void enumerate_box() {
    std::size_t total = 1;
    for (int k : samples_axis_) total *= static_cast<std::size_t>(k);
    samples_.reserve(total);
    std::vector<int> idx(dim_, 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::vector<double> p(dim_);
      for (int a = 0; a < dim_; ++a) {
        int k = samples_axis_[a];
        // Endpoints are written exactly so corners survive in floating point.
        p[a] = idx[a] == 0 ? box_lo_[a]
               : idx[a] == k - 1
                   ? box_hi_[a]
                   : box_lo_[a] + (box_hi_[a] - box_lo_[a]) * idx[a] /
                         static_cast<double>(k - 1);
      }
      samples_.push_back(std::move(p));
      for (int a = dim_ - 1; a >= 0; --a) {  // last axis fastest
        if (++idx[a] < samples_axis_[a]) break;
        idx[a] = 0;
      }
    }
  }

  void compute_bounds() {
    bound_lo_.assign(dim_, 0.0);
    bound_hi_.assign(dim_, 0.0);
    for (int i = 0; i < dim_; ++i) {
      double lo = samples_.front()[i], hi = lo;
      for (const auto& p : samples_) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
      }
      bound_lo_[i] = lo;
      bound_hi_[i] = hi;
    }
  }

  int dim_ = 0;
  bool is_box_ = false;
  std::vector<double> box_lo_, box_hi_;
  std::vector<int> samples_axis_;
  std::vector<std::vector<double>> samples_;
  std::vector<double> bound_lo_, bound_hi_;
};

}  // namespace hjb
