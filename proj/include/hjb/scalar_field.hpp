#pragma once
// Scalar functions of (t, x) under one callable interface: closed-form
// expressions, arbitrary callables, and discrete value fields (extended by
// zero beyond their horizon so decay checks can probe past it). Also the
// dyadic radius schedule shared by the nonsmooth derivative estimators.

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hjb/expr.hpp"
#include "hjb/value_field.hpp"

namespace hjb {

class ScalarField {
 public:
  using Fn = std::function<double(double, std::span<const double>)>;

  ScalarField(int state_dim, Fn fn) : dim_(state_dim), fn_(std::move(fn)) {
    if (dim_ < 1) throw std::invalid_argument("scalar field needs state_dim >= 1");
    if (!fn_) throw std::invalid_argument("scalar field needs a callable");
  }

  // Expression in t and x only (no control variables).
  static ScalarField from_expr(const Expr& e) {
    if (e.control_dim() != 0)
      throw std::invalid_argument(
          "scalar field expression must not mention controls");
    auto shared = std::make_shared<Expr>(e);
    return ScalarField(e.state_dim(),
                       [shared](double t, std::span<const double> x) {
                         return shared->eval(t, x, {});
                       });
  }

  // Snapshot of a solved field. Beyond the horizon the field reads zero by
  // default, matching its zero terminal layer.
  static ScalarField from_value_field(ValueField f, bool extend_zero = true) {
    auto shared = std::make_shared<const ValueField>(std::move(f));
    int dim = shared->grid.dim();
    return ScalarField(
        dim, [shared, extend_zero](double t, std::span<const double> x) {
          if (extend_zero && t > shared->horizon()) return 0.0;
          return shared->value_at(t, x);
        });
  }

  double operator()(double t, std::span<const double> x) const {
    return fn_(t, x);
  }
  int state_dim() const { return dim_; }

 private:
  int dim_;
  Fn fn_;
};

inline ScalarField negate(const ScalarField& f) {
  return ScalarField(f.state_dim(),
                     [f](double t, std::span<const double> x) { return -f(t, x); });
}

// Dyadic probe radii base * 2^-j for j in [j_min, j_max]. The last third of
// the list is the plateau from which limits are extrapolated.
struct RadiusSchedule {
  double base = 1.0;
  int j_min = 3;
  int j_max = 12;

  std::vector<double> radii() const {
    if (!(base > 0.0) || j_min > j_max)
      throw std::invalid_argument("bad radius schedule");
    std::vector<double> r;
    for (int j = j_min; j <= j_max; ++j)
      r.push_back(base * std::ldexp(1.0, -j));
    return r;
  }

  std::size_t plateau_count() const {
    auto n = static_cast<std::size_t>(j_max - j_min + 1);
    return std::max<std::size_t>(1, n / 3);
  }
};

}  // namespace hjb
