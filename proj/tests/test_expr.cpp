#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "hjb/expr.hpp"
#include "hjb/rng.hpp"

using hjb::Expr;

namespace {
double ev(const Expr& e, double t, std::vector<double> x,
          std::vector<double> u) {
  return e.eval(t, x, u);
}
}  // namespace

TEST_CASE("parse and evaluate basic forms") {
  auto e = Expr::parse("-x1 + u1*u1", 1, 1);
  CHECK(ev(e, 0.0, {2.0}, {3.0}) == 7.0);

  auto growth = Expr::parse("exp(-3*t)*x1", 1, 0);
  CHECK(ev(growth, 0.0, {2.0}, {}) == 2.0);
  CHECK_THAT(ev(growth, 1.0, {2.0}, {}),
             Catch::Matchers::WithinRel(2.0 * std::exp(-3.0), 1e-15));

  auto mm = Expr::parse("min(x1, u1) + max(x1, u1)", 1, 1);
  CHECK(ev(mm, 0.0, {2.0}, {5.0}) == 7.0);

  auto sq = Expr::parse("sqrt(x1)", 1, 0);
  CHECK(ev(sq, 0.0, {4.0}, {}) == 2.0);
}

TEST_CASE("power is right-associative and binds tighter than unary minus") {
  auto e = Expr::parse("x1^2^3", 1, 0);
  CHECK(ev(e, 0.0, {2.0}, {}) == 256.0);  // 2^(2^3)

  CHECK(ev(Expr::parse("-2^2", 1, 0), 0.0, {0.0}, {}) == -4.0);
  CHECK(ev(Expr::parse("2^-3", 1, 0), 0.0, {0.0}, {}) == 0.125);
  CHECK(ev(Expr::parse("2*3^2", 1, 0), 0.0, {0.0}, {}) == 18.0);
}

TEST_CASE("left-associative chains") {
  CHECK(ev(Expr::parse("8/4/2", 1, 0), 0.0, {0.0}, {}) == 1.0);
  CHECK(ev(Expr::parse("8-4-2", 1, 0), 0.0, {0.0}, {}) == 2.0);
}

TEST_CASE("domain errors are reported, not propagated as NaN") {
  auto div = Expr::parse("x1/(x1 - 1)", 1, 0);
  CHECK_THROWS_AS(ev(div, 0.0, {1.0}, {}), hjb::EvalError);
  CHECK(ev(div, 0.0, {2.0}, {}) == 2.0);

  CHECK_THROWS_AS(ev(Expr::parse("sqrt(x1)", 1, 0), 0.0, {-1.0}, {}),
                  hjb::EvalError);
  CHECK_THROWS_AS(ev(Expr::parse("exp(x1)", 1, 0), 0.0, {1000.0}, {}),
                  hjb::EvalError);
  // Fractional power of a negative base has no real value.
  CHECK_THROWS_AS(ev(Expr::parse("x1^0.5", 1, 0), 0.0, {-2.0}, {}),
                  hjb::EvalError);
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    Expr::parse("x1 +* 2", 1, 0);
    FAIL("expected ParseError");
  } catch (const hjb::ParseError& err) {
    CHECK(err.offset() == 4);
  }

  try {
    Expr::parse("u3", 1, 1);
    FAIL("expected ParseError");
  } catch (const hjb::ParseError& err) {
    CHECK(err.offset() == 0);
    CHECK(std::string(err.what()).find("out of range") != std::string::npos);
  }

  CHECK_THROWS_AS(Expr::parse("foo(x1)", 1, 0), hjb::ParseError);
  CHECK_THROWS_AS(Expr::parse("(x1", 1, 0), hjb::ParseError);
  CHECK_THROWS_AS(Expr::parse("", 1, 0), hjb::ParseError);
  CHECK_THROWS_AS(Expr::parse("min(x1)", 1, 0), hjb::ParseError);
}

namespace {
// Random expression source for the round-trip property. Produced directly as
// text; the generator only emits grammatically valid forms.
std::string random_source(hjb::Rng& rng, int depth) {
  if (depth <= 0) {
    switch (rng.index(4)) {
      case 0: return "t";
      case 1: return "x1";
      case 2: return "u1";
      default: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", rng.uniform(0.0, 10.0));
        return buf;
      }
    }
  }
  switch (rng.index(10)) {
    case 0: return "(" + random_source(rng, depth - 1) + " + " +
                   random_source(rng, depth - 1) + ")";
    case 1: return "(" + random_source(rng, depth - 1) + " - " +
                   random_source(rng, depth - 1) + ")";
    case 2: return random_source(rng, depth - 1) + " * " +
                   random_source(rng, depth - 1);
    case 3: return random_source(rng, depth - 1) + " / " +
                   random_source(rng, depth - 1);
    case 4: return "-" + random_source(rng, depth - 1);
    case 5: return "(" + random_source(rng, depth - 1) + ")^" +
                   random_source(rng, depth - 1);
    case 6: return "exp(" + random_source(rng, depth - 1) + ")";
    case 7: return "sin(" + random_source(rng, depth - 1) + ")";
    case 8: return "min(" + random_source(rng, depth - 1) + ", " +
                   random_source(rng, depth - 1) + ")";
    default: return "abs(" + random_source(rng, depth - 1) + ")";
  }
}
}  // namespace

TEST_CASE("pretty-print then parse is a fixed point from the first rewrite") {
  hjb::Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::string src = random_source(rng, 1 + static_cast<int>(rng.index(4)));
    auto e1 = Expr::parse(src, 1, 1);
    std::string printed = e1.str();
    auto e2 = Expr::parse(printed, 1, 1);
    std::string printed2 = e2.str();
    INFO("source: " << src << "\nfirst:  " << printed
                    << "\nsecond: " << printed2);
    CHECK(printed == printed2);
  }
}

TEST_CASE("printed constants survive reparsing exactly") {
  auto e = Expr::parse("x1 * 0.1", 1, 0);
  auto r = Expr::parse(e.str(), 1, 0);
  CHECK(ev(e, 0.0, {7.0}, {}) == ev(r, 0.0, {7.0}, {}));
}
