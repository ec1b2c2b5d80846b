#pragma once
// Uniform rectangular state grid with multilinear interpolation. Node
// enumeration is row-major with the last axis fastest, matching the control
// sample order.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "hjb/box.hpp"

namespace hjb {

class SpaceGrid {
 public:
  SpaceGrid(Box domain, std::vector<int> nodes_per_axis)
      : domain_(std::move(domain)), nodes_(std::move(nodes_per_axis)) {
    if (static_cast<std::size_t>(domain_.dim()) != nodes_.size())
      throw std::invalid_argument("grid node spec dimension mismatch");
    if (nodes_.size() > 20)
      throw std::invalid_argument("grid dimension too large to interpolate");
    spacing_.resize(nodes_.size());
    for (std::size_t a = 0; a < nodes_.size(); ++a) {
      if (nodes_[a] < 2)
        throw std::invalid_argument("grid needs at least 2 nodes per axis");
      spacing_[a] =
          (domain_.hi[a] - domain_.lo[a]) / static_cast<double>(nodes_[a] - 1);
      if (!(spacing_[a] > 0.0))
        throw std::invalid_argument("grid axis has zero extent");
    }
  }

  int dim() const { return static_cast<int>(nodes_.size()); }
  const Box& domain() const { return domain_; }
  const std::vector<int>& nodes_per_axis() const { return nodes_; }
  const std::vector<double>& spacing() const { return spacing_; }

  double max_spacing() const {
    double m = 0.0;
    for (double s : spacing_) m = std::max(m, s);
    return m;
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (int k : nodes_) n *= static_cast<std::size_t>(k);
    return n;
  }

  // Axis coordinate with exact endpoints.
  double coordinate(int axis, int i) const {
    if (i == 0) return domain_.lo[axis];
    if (i == nodes_[axis] - 1) return domain_.hi[axis];
    return domain_.lo[axis] + spacing_[axis] * static_cast<double>(i);
  }

  std::vector<int> multi_index(std::size_t flat) const {
    std::vector<int> idx(nodes_.size());
    for (int a = dim() - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % static_cast<std::size_t>(nodes_[a]));
      flat /= static_cast<std::size_t>(nodes_[a]);
    }
    return idx;
  }

  std::size_t flat_index(const std::vector<int>& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < dim(); ++a)
      flat = flat * static_cast<std::size_t>(nodes_[a]) +
             static_cast<std::size_t>(idx[a]);
    return flat;
  }

  std::vector<double> node_point(std::size_t flat) const {
    std::vector<int> idx = multi_index(flat);
    std::vector<double> x(nodes_.size());
    for (int a = 0; a < dim(); ++a) x[a] = coordinate(a, idx[a]);
    return x;
  }

  // Multilinear interpolation of nodal data at x. Points outside the box are
  // clamped to the boundary; `clamped` reports whether any axis was moved by
  // more than a relative slack.
  double interpolate(const std::vector<double>& data,
                     std::span<const double> x, bool* clamped = nullptr) const {
    if (data.size() != size())
      throw std::invalid_argument("interpolation data size mismatch");
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("interpolation point dimension mismatch");
    const int n = dim();
    std::vector<int> base(n);
    std::vector<double> w(n);
    bool moved = false;
    for (int a = 0; a < n; ++a) {
      double lo = domain_.lo[a], hi = domain_.hi[a];
      double slack = 1e-12 * (1.0 + std::fabs(lo) + std::fabs(hi));
      double xa = x[a];
      if (xa < lo) {
        if (lo - xa > slack) moved = true;
        xa = lo;
      } else if (xa > hi) {
        if (xa - hi > slack) moved = true;
        xa = hi;
      }
      double s = (xa - lo) / spacing_[a];
      int i = static_cast<int>(std::floor(s));
      i = std::min(std::max(i, 0), nodes_[a] - 2);
      base[a] = i;
      w[a] = std::min(std::max(s - static_cast<double>(i), 0.0), 1.0);
    }
    if (clamped) *clamped = moved;

    double acc = 0.0;
    std::size_t corners = static_cast<std::size_t>(1) << n;
    std::vector<int> idx(n);
    for (std::size_t c = 0; c < corners; ++c) {
      double weight = 1.0;
      for (int a = 0; a < n; ++a) {
        bool high = (c >> a) & 1u;
        idx[a] = base[a] + (high ? 1 : 0);
        weight *= high ? w[a] : 1.0 - w[a];
      }
      if (weight != 0.0) acc += weight * data[flat_index(idx)];
    }
    return acc;
  }

 private:
  Box domain_;
  std::vector<int> nodes_;
  std::vector<double> spacing_;
};

}  // namespace hjb
