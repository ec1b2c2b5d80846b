#pragma once
// Axis-aligned box, used for state boxes, audit regions and field domains.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjb/rng.hpp"

namespace hjb {

struct Box {
  std::vector<double> lo, hi;

  Box() = default;
  Box(std::vector<double> lo_in, std::vector<double> hi_in)
      : lo(std::move(lo_in)), hi(std::move(hi_in)) {
    if (lo.size() != hi.size())
      throw std::invalid_argument("box bounds dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!(lo[i] <= hi[i]))
        throw std::invalid_argument("box axis " + std::to_string(i + 1) +
                                    " has lo > hi");
    }
  }

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(std::span<const double> p, double slack = 0.0) const {
    if (static_cast<int>(p.size()) != dim()) return false;
    for (int i = 0; i < dim(); ++i)
      if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
    return true;
  }

  std::vector<double> sample(Rng& rng) const {
    std::vector<double> p(dim());
    for (int i = 0; i < dim(); ++i) p[i] = rng.uniform(lo[i], hi[i]);
    return p;
  }

  std::vector<double> center() const {
    std::vector<double> c(dim());
    for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }

  double max_extent() const {
    double w = 0;
    for (int i = 0; i < dim(); ++i) w = std::max(w, hi[i] - lo[i]);
    return w;
  }
};

}  // namespace hjb
