#pragma once

// A small arithmetic language for custom systems in run configurations:
// literals, t, x1..xn, pi, + - * / ^, unary minus and sin cos exp ln sqrt atan.
// ^ binds tightest and associates to the right; unary minus sits between ^
// and * /, so -2^2 = -4 and 2^-1 = 0.5.

#include "algdich/errors.hpp"
#include "algdich/types.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>

namespace algdich {

struct SourceLocation {
  std::size_t line = 1;
  std::size_t column = 1;
};

enum class ExprKind { number, time, state, add, sub, mul, div, pow, neg, call };
enum class ExprFunction { sin, cos, exp, ln, sqrt, atan };

inline const char* function_name(ExprFunction f) {
  switch (f) {
    case ExprFunction::sin: return "sin";
    case ExprFunction::cos: return "cos";
    case ExprFunction::exp: return "exp";
    case ExprFunction::ln: return "ln";
    case ExprFunction::sqrt: return "sqrt";
    case ExprFunction::atan: return "atan";
  }
  return "?";
}

struct ExprNode {
  ExprKind kind = ExprKind::number;
  double value = 0.0;      // number
  Eigen::Index index = 0;  // state: 0-based component
  ExprFunction function = ExprFunction::sin;
  std::shared_ptr<const ExprNode> lhs, rhs;  // rhs unused by neg and call
  SourceLocation where;
};

namespace detail {

inline std::string located(const std::string& msg, SourceLocation at) {
  return msg + " at line " + std::to_string(at.line) + ", column " + std::to_string(at.column);
}

inline double eval_node(const ExprNode& n, double t, const Vector& x) {
  switch (n.kind) {
    case ExprKind::number: return n.value;
    case ExprKind::time: return t;
    case ExprKind::state:
      if (n.index >= x.size()) {
        throw EvaluationError(located("x" + std::to_string(n.index + 1) +
                                          " used with a state of dimension " +
                                          std::to_string(x.size()),
                                      n.where));
      }
      return x(n.index);
    case ExprKind::neg: return -eval_node(*n.lhs, t, x);
    case ExprKind::call: {
      const double a = eval_node(*n.lhs, t, x);
      switch (n.function) {
        case ExprFunction::sin: return std::sin(a);
        case ExprFunction::cos: return std::cos(a);
        case ExprFunction::exp: return std::exp(a);
        case ExprFunction::atan: return std::atan(a);
        case ExprFunction::ln:
          if (!(a > 0.0)) throw EvaluationError(located("ln of nonpositive value", n.where));
          return std::log(a);
        case ExprFunction::sqrt:
          if (!(a >= 0.0)) throw EvaluationError(located("sqrt of negative value", n.where));
          return std::sqrt(a);
      }
      return 0.0;
    }
    default: break;
  }
  const double a = eval_node(*n.lhs, t, x);
  const double b = eval_node(*n.rhs, t, x);
  switch (n.kind) {
    case ExprKind::add: return a + b;
    case ExprKind::sub: return a - b;
    case ExprKind::mul: return a * b;
    case ExprKind::div:
      if (b == 0.0) throw EvaluationError(located("division by zero", n.where));
      return a / b;
    case ExprKind::pow: {
      const double v = std::pow(a, b);
      if (!std::isfinite(v) && std::isfinite(a) && std::isfinite(b))
        throw EvaluationError(located("power out of domain", n.where));
      return v;
    }
    default: return 0.0;
  }
}

inline void print_node(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprKind::number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case ExprKind::time: out += 't'; return;
    case ExprKind::state: out += 'x' + std::to_string(n.index + 1); return;
    case ExprKind::neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      return;
    case ExprKind::call:
      out += function_name(n.function);
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      return;
    default: break;
  }
  static constexpr char ops[] = {'+', '-', '*', '/', '^'};
  out += '(';
  print_node(*n.lhs, out);
  out += ops[static_cast<int>(n.kind) - static_cast<int>(ExprKind::add)];
  print_node(*n.rhs, out);
  out += ')';
}

inline bool same_tree(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::number: return a.value == b.value;
    case ExprKind::time: return true;
    case ExprKind::state: return a.index == b.index;
    case ExprKind::neg: return same_tree(*a.lhs, *b.lhs);
    case ExprKind::call: return a.function == b.function && same_tree(*a.lhs, *b.lhs);
    default: return same_tree(*a.lhs, *b.lhs) && same_tree(*a.rhs, *b.rhs);
  }
}

inline Eigen::Index max_index(const ExprNode& n) {
  Eigen::Index m = n.kind == ExprKind::state ? n.index + 1 : 0;
  if (n.lhs) m = std::max(m, max_index(*n.lhs));
  if (n.rhs) m = std::max(m, max_index(*n.rhs));
  return m;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::shared_ptr<const ExprNode> parse() {
    skip_space();
    if (at_end()) fail("empty expression");
    auto e = expression();
    skip_space();
    if (!at_end()) fail(std::string("unexpected '") + src_[pos_] + "'");
    return e;
  }

 private:
  using Ptr = std::shared_ptr<const ExprNode>;

  std::string_view src_;
  std::size_t pos_ = 0;
  SourceLocation loc_;

  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++loc_.line;
      loc_.column = 1;
    } else {
      ++loc_.column;
    }
    ++pos_;
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, loc_.line, loc_.column);
  }
  [[noreturn]] void fail(const std::string& msg, SourceLocation at) const {
    throw ParseError(msg, at.line, at.column);
  }

  static Ptr binary(ExprKind k, Ptr a, Ptr b, SourceLocation at) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    n->where = at;
    return n;
  }

  Ptr expression() {
    Ptr lhs = term();
    for (;;) {
      skip_space();
      const char c = peek();
      if (c != '+' && c != '-') return lhs;
      const auto at = loc_;
      advance();
      lhs = binary(c == '+' ? ExprKind::add : ExprKind::sub, lhs, term(), at);
    }
  }

  Ptr term() {
    Ptr lhs = unary();
    for (;;) {
      skip_space();
      const char c = peek();
      if (c != '*' && c != '/') return lhs;
      const auto at = loc_;
      advance();
      lhs = binary(c == '*' ? ExprKind::mul : ExprKind::div, lhs, unary(), at);
    }
  }

  Ptr unary() {
    skip_space();
    if (peek() == '-') {
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprKind::neg;
      n->where = loc_;
      advance();
      n->lhs = unary();
      return n;
    }
    return power();
  }

  Ptr power() {
    Ptr base = primary();
    skip_space();
    if (peek() != '^') return base;
    const auto at = loc_;
    advance();
    // The exponent may carry its own sign; right associativity comes from
    // unary() recursing into power().
    return binary(ExprKind::pow, base, unary(), at);
  }

  Ptr primary() {
    skip_space();
    const char c = peek();
    if (at_end()) fail("unexpected end of expression");
    if (c == '(') {
      advance();
      Ptr e = expression();
      skip_space();
      if (peek() != ')') fail("expected ')'");
      advance();
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  Ptr number() {
    const auto at = loc_;
    const std::size_t begin = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        advance();
        ++n;
      }
      return n;
    };
    std::size_t n = digits();
    if (peek() == '.') {
      advance();
      n += digits();
    }
    if (n == 0) fail("malformed number", at);
    if (peek() == 'e' || peek() == 'E') {
      advance();
      if (peek() == '+' || peek() == '-') advance();
      if (digits() == 0) fail("malformed exponent in number", at);
    }
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprKind::number;
    node->where = at;
    const auto text = src_.substr(begin, pos_ - begin);
    const auto r = std::from_chars(text.data(), text.data() + text.size(), node->value);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) fail("malformed number", at);
    return node;
  }

  Ptr identifier() {
    const auto at = loc_;
    const std::size_t begin = pos_;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance();
    const std::string name(src_.substr(begin, pos_ - begin));
    auto node = std::make_shared<ExprNode>();
    node->where = at;
    if (name == "t") {
      node->kind = ExprKind::time;
      return node;
    }
    if (name == "pi") {
      node->kind = ExprKind::number;
      node->value = std::numbers::pi;
      return node;
    }
    if (name.size() > 1 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos && name[1] != '0') {
      node->kind = ExprKind::state;
      node->index = static_cast<Eigen::Index>(std::stol(name.substr(1))) - 1;
      return node;
    }
    static constexpr ExprFunction funcs[] = {ExprFunction::sin, ExprFunction::cos,
                                             ExprFunction::exp, ExprFunction::ln,
                                             ExprFunction::sqrt, ExprFunction::atan};
    for (auto f : funcs) {
      if (name != function_name(f)) continue;
      skip_space();
      if (peek() != '(') fail("expected '(' after " + name);
      advance();
      node->kind = ExprKind::call;
      node->function = f;
      node->lhs = expression();
      skip_space();
      if (peek() != ')') fail("expected ')'");
      advance();
      return node;
    }
    fail("unknown identifier '" + name + "'", at);
  }
};

}  // namespace detail

class Expression {
 public:
  Expression() = default;

  double operator()(double t, const Vector& x) const { return detail::eval_node(*root_, t, x); }
  double operator()(double t) const { return detail::eval_node(*root_, t, Vector()); }

  /// Fully parenthesized text that parses back to the same tree.
  std::string to_string() const {
    std::string out;
    detail::print_node(*root_, out);
    return out;
  }

  const std::string& source() const noexcept { return source_; }
  const ExprNode& root() const { return *root_; }
  /// Largest n such that xn appears (0 when the expression does not use the state).
  Eigen::Index state_dimension() const { return detail::max_index(*root_); }
  bool uses_state() const { return state_dimension() > 0; }

  bool structurally_equal(const Expression& other) const {
    return detail::same_tree(*root_, *other.root_);
  }

 private:
  friend Expression parse_expression(std::string_view source);
  std::shared_ptr<const ExprNode> root_;
  std::string source_;
};

inline Expression parse_expression(std::string_view source) {
  Expression e;
  e.root_ = detail::Parser(source).parse();
  e.source_ = std::string(source);
  return e;
}

}  // namespace algdich
