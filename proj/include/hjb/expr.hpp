#pragma once
// Arithmetic expressions over time t, state x1..xn and control u1..um.
// Parsed once into a postorder program, then evaluated on a small value
// stack; evaluation is pure and reentrant.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hjb {

// Syntax or symbol error; offset() is the byte offset into the source text.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Domain error during evaluation (division by zero, sqrt of a negative,
// non-finite result).
class EvalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline std::string format_double(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data());
}
}  // namespace detail

// Grammar: standard infix with + - * / ^, unary minus, parentheses and the
// call forms exp, sin, cos, abs, sqrt (unary) and min, max (binary).
// ^ is right-associative and binds tighter than unary minus, so -x1^2 is
// -(x1^2) and 2^-3 is legal.
class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view src, int state_dim, int control_dim);

  // Throws EvalError on domain violations; otherwise the result is finite.
  double eval(double t, std::span<const double> x,
              std::span<const double> u) const;

  // Minimal-parenthesis rendering. parse(str()) reproduces the same program,
  // so print-parse is idempotent.
  std::string str() const;

  int state_dim() const { return n_; }
  int control_dim() const { return m_; }
  bool empty() const { return code_.empty(); }

 private:
  enum class Op : std::uint8_t {
    kConst, kT, kX, kU,
    kNeg, kAdd, kSub, kMul, kDiv, kPow,
    kExp, kSin, kCos, kAbs, kSqrt, kMin, kMax,
  };
  struct Node {
    Op op;
    std::int32_t index;  // variable index for kX/kU (0-based)
    double value;        // kConst payload
  };

  static constexpr std::size_t kMaxStack = 128;

  std::vector<Node> code_;  // postorder
  int n_ = 0, m_ = 0;

  friend class ExprParser;
};

class ExprParser {
 public:
  ExprParser(std::string_view src, int n, int m) : src_(src), n_(n), m_(m) {}

  Expr run() {
    Expr e;
    e.n_ = n_;
    e.m_ = m_;
    parse_sum(e.code_);
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("unexpected trailing input", pos_);
    if (e.code_.empty()) throw ParseError("empty expression", 0);
    check_stack_depth(e.code_);
    return e;
  }

 private:
  using Op = Expr::Op;
  using Code = std::vector<Expr::Node>;

  std::string_view src_;
  std::size_t pos_ = 0;
  int n_, m_;

  void skip_ws() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t')) {
      ++pos_;
    }
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  void parse_sum(Code& out) {
    parse_product(out);
    for (;;) {
      if (consume('+')) {
        parse_product(out);
        out.push_back({Op::kAdd, 0, 0.0});
      } else if (consume('-')) {
        parse_product(out);
        out.push_back({Op::kSub, 0, 0.0});
      } else {
        return;
      }
    }
  }

  void parse_product(Code& out) {
    parse_unary(out);
    for (;;) {
      if (consume('*')) {
        parse_unary(out);
        out.push_back({Op::kMul, 0, 0.0});
      } else if (consume('/')) {
        parse_unary(out);
        out.push_back({Op::kDiv, 0, 0.0});
      } else {
        return;
      }
    }
  }

  void parse_unary(Code& out) {
    if (consume('-')) {
      parse_unary(out);
      out.push_back({Op::kNeg, 0, 0.0});
      return;
    }
    parse_power(out);
  }

  void parse_power(Code& out) {
    parse_primary(out);
    if (consume('^')) {
      parse_unary(out);  // right-associative; exponent may carry unary minus
      out.push_back({Op::kPow, 0, 0.0});
    }
  }

  void parse_primary(Code& out) {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      parse_sum(out);
      if (!consume(')')) throw ParseError("expected ')'", pos_);
      return;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      parse_number(out);
      return;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
      parse_identifier(out);
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  void parse_number(Code& out) {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9')
        ++pos_;
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
        ++pos_;
      std::size_t exp_start = pos_;
      digits();
      if (pos_ == exp_start) pos_ = mark;  // 'e' was not an exponent
    }
    std::string text(src_.substr(start, pos_ - start));
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(v))
      throw ParseError("malformed number '" + text + "'", start);
    out.push_back({Op::kConst, 0, v});
  }

  void parse_identifier(Code& out) {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_')) {
      ++pos_;
    }
    std::string_view name = src_.substr(start, pos_ - start);

    if (name == "t") {
      out.push_back({Op::kT, 0, 0.0});
      return;
    }
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u') &&
        all_digits(name.substr(1))) {
      int idx = 0;
      for (char d : name.substr(1)) idx = idx * 10 + (d - '0');
      int limit = name[0] == 'x' ? n_ : m_;
      if (idx < 1 || idx > limit)
        throw ParseError("variable index out of range: '" + std::string(name) +
                             "' (valid: 1.." + std::to_string(limit) + ")",
                         start);
      out.push_back({name[0] == 'x' ? Op::kX : Op::kU, idx - 1, 0.0});
      return;
    }

    struct Fn {
      std::string_view name;
      Op op;
      int arity;
    };
    static constexpr Fn kFns[] = {
        {"exp", Op::kExp, 1}, {"sin", Op::kSin, 1},  {"cos", Op::kCos, 1},
        {"abs", Op::kAbs, 1}, {"sqrt", Op::kSqrt, 1}, {"min", Op::kMin, 2},
        {"max", Op::kMax, 2},
    };
    for (const Fn& fn : kFns) {
      if (name != fn.name) continue;
      if (!consume('(')) throw ParseError("expected '(' after function", pos_);
      parse_sum(out);
      for (int i = 1; i < fn.arity; ++i) {
        if (!consume(','))
          throw ParseError("expected ',' in call to '" + std::string(name) +
                               "'",
                           pos_);
        parse_sum(out);
      }
      if (!consume(')')) throw ParseError("expected ')'", pos_);
      out.push_back({fn.op, 0, 0.0});
      return;
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  static bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return true;
  }

  static void check_stack_depth(const Code& code) {
    std::size_t depth = 0, max_depth = 0;
    for (const auto& node : code) {
      switch (node.op) {
        case Op::kConst: case Op::kT: case Op::kX: case Op::kU:
          ++depth;
          break;
        case Op::kNeg: case Op::kExp: case Op::kSin: case Op::kCos:
        case Op::kAbs: case Op::kSqrt:
          break;
        default:
          --depth;
          break;
      }
      max_depth = std::max(max_depth, depth);
    }
    if (max_depth > Expr::kMaxStack)
      throw ParseError("expression too deep", 0);
  }
};

inline Expr Expr::parse(std::string_view src, int state_dim, int control_dim) {
  if (state_dim < 0 || control_dim < 0)
    throw std::invalid_argument("negative dimension");
  return ExprParser(src, state_dim, control_dim).run();
}

inline double Expr::eval(double t, std::span<const double> x,
                         std::span<const double> u) const {
  if (static_cast<int>(x.size()) < n_ || static_cast<int>(u.size()) < m_)
    throw EvalError("argument vector shorter than declared dimension");
  std::array<double, kMaxStack> stack;
  std::size_t sp = 0;
  for (const Node& node : code_) {
    switch (node.op) {
      case Op::kConst: stack[sp++] = node.value; break;
      case Op::kT: stack[sp++] = t; break;
      case Op::kX: stack[sp++] = x[node.index]; break;
      case Op::kU: stack[sp++] = u[node.index]; break;
      case Op::kNeg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::kAdd: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::kSub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::kMul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::kDiv:
        --sp;
        if (stack[sp] == 0.0) throw EvalError("division by zero");
        stack[sp - 1] /= stack[sp];
        break;
      case Op::kPow:
        --sp;
        stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]);
        break;
      case Op::kExp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case Op::kSin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case Op::kCos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case Op::kAbs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
      case Op::kSqrt:
        if (stack[sp - 1] < 0.0) throw EvalError("sqrt of negative value");
        stack[sp - 1] = std::sqrt(stack[sp - 1]);
        break;
      case Op::kMin:
        --sp;
        stack[sp - 1] = std::fmin(stack[sp - 1], stack[sp]);
        break;
      case Op::kMax:
        --sp;
        stack[sp - 1] = std::fmax(stack[sp - 1], stack[sp]);
        break;
    }
    if (!std::isfinite(stack[sp - 1]))
      throw EvalError("non-finite intermediate value");
  }
  return stack[0];
}

inline std::string Expr::str() const {
  // Renders the postorder program back to infix. Precedence levels:
  // atom 100, ^ 40, unary minus 30, * / 20, + - 10. Right operands of
  // left-associative binaries keep parentheses at equal precedence so the
  // printed string reparses to the identical program.
  struct Item {
    std::string text;
    int prec;
  };
  std::vector<Item> stack;
  auto wrap = [](const Item& it, bool need) {
    return need ? "(" + it.text + ")" : it.text;
  };
  auto binary = [&](const char* sym, int prec, bool right_assoc) {
    Item rhs = stack.back(); stack.pop_back();
    Item lhs = stack.back(); stack.pop_back();
    bool lp = right_assoc ? lhs.prec <= prec : lhs.prec < prec;
    bool rp = right_assoc ? rhs.prec < prec : rhs.prec <= prec;
    std::string text = prec == 40
        ? wrap(lhs, lp) + sym + wrap(rhs, rp)
        : wrap(lhs, lp) + " " + sym + " " + wrap(rhs, rp);
    stack.push_back({std::move(text), prec});
  };
  auto call = [&](const char* name, int arity) {
    std::string args = stack[stack.size() - arity].text;
    for (int i = arity - 1; i > 0; --i)
      args += ", " + stack[stack.size() - i].text;
    stack.resize(stack.size() - arity);
    stack.push_back({std::string(name) + "(" + args + ")", 100});
  };
  for (const Node& node : code_) {
    switch (node.op) {
      case Op::kConst: {
        double v = node.value;
        stack.push_back({detail::format_double(v), v < 0 ? 30 : 100});
        break;
      }
      case Op::kT: stack.push_back({"t", 100}); break;
      case Op::kX:
        stack.push_back({"x" + std::to_string(node.index + 1), 100});
        break;
      case Op::kU:
        stack.push_back({"u" + std::to_string(node.index + 1), 100});
        break;
      case Op::kNeg: {
        Item child = stack.back(); stack.pop_back();
        stack.push_back({"-" + wrap(child, child.prec < 30), 30});
        break;
      }
      case Op::kAdd: binary("+", 10, false); break;
      case Op::kSub: binary("-", 10, false); break;
      case Op::kMul: binary("*", 20, false); break;
      case Op::kDiv: binary("/", 20, false); break;
      case Op::kPow: binary("^", 40, true); break;
      case Op::kExp: call("exp", 1); break;
      case Op::kSin: call("sin", 1); break;
      case Op::kCos: call("cos", 1); break;
      case Op::kAbs: call("abs", 1); break;
      case Op::kSqrt: call("sqrt", 1); break;
      case Op::kMin: call("min", 2); break;
      case Op::kMax: call("max", 2); break;
    }
  }
  return stack[0].text;
}

// Convenience wrapper matching the library-wide naming.
inline Expr parse_expr(std::string_view src, int state_dim, int control_dim) {
  return Expr::parse(src, state_dim, control_dim);
}

}  // namespace hjb
