#ifndef VFC_EXPR_HPP
#define VFC_EXPR_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace vfc {

using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return static_cast<double>(r); }

/// Expression trees over variables x0..x{m-1} with the node kinds
/// variable, rational constant, sum, product, nonnegative integer power,
/// sin, cos, exp, tanh.  Trees are immutable; copies share nodes.
enum class ExprKind { Var, Const, Sum, Product, IntPow, Sin, Cos, Exp, Tanh };

class Expr;

struct ExprNode {
  ExprKind kind;
  int var = -1;       // Var
  Rational value;     // Const
  int exponent = 0;   // IntPow, >= 0
  std::vector<Expr> children;
};

class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}

  const ExprNode& node() const {
    if (!node_) throw std::logic_error("empty expression");
    return *node_;
  }
  bool empty() const { return !node_; }

  static Expr var(int index) {
    if (index < 0) throw std::invalid_argument("variable index must be >= 0");
    ExprNode n;
    n.kind = ExprKind::Var;
    n.var = index;
    return make(std::move(n));
  }
  static Expr constant(Rational v) {
    ExprNode n;
    n.kind = ExprKind::Const;
    n.value = std::move(v);
    return make(std::move(n));
  }
  static Expr constant(long v) { return constant(Rational(v)); }
  static Expr sum(std::vector<Expr> terms) {
    if (terms.empty()) return constant(0);
    if (terms.size() == 1) return terms[0];
    ExprNode n;
    n.kind = ExprKind::Sum;
    n.children = std::move(terms);
    return make(std::move(n));
  }
  static Expr product(std::vector<Expr> factors) {
    if (factors.empty()) return constant(1);
    if (factors.size() == 1) return factors[0];
    ExprNode n;
    n.kind = ExprKind::Product;
    n.children = std::move(factors);
    return make(std::move(n));
  }
  static Expr pow(Expr base, int e) {
    if (e < 0) throw std::invalid_argument("integer power must be >= 0");
    ExprNode n;
    n.kind = ExprKind::IntPow;
    n.exponent = e;
    n.children = {std::move(base)};
    return make(std::move(n));
  }
  static Expr unary(ExprKind k, Expr arg) {
    ExprNode n;
    n.kind = k;
    n.children = {std::move(arg)};
    return make(std::move(n));
  }
  static Expr sin(Expr a) { return unary(ExprKind::Sin, std::move(a)); }
  static Expr cos(Expr a) { return unary(ExprKind::Cos, std::move(a)); }
  static Expr exp(Expr a) { return unary(ExprKind::Exp, std::move(a)); }
  static Expr tanh(Expr a) { return unary(ExprKind::Tanh, std::move(a)); }

  /// Largest variable index + 1 that occurs in the tree.
  int min_arity() const {
    int m = 0;
    scan_arity(*this, m);
    return m;
  }

  /// True when every node is arithmetic over rational constants, so
  /// evaluation at a rational point is exact.
  bool rational_only() const {
    const ExprNode& n = node();
    switch (n.kind) {
      case ExprKind::Var:
      case ExprKind::Const:
        return true;
      case ExprKind::Sum:
      case ExprKind::Product:
      case ExprKind::IntPow:
        for (const Expr& c : n.children)
          if (!c.rational_only()) return false;
        return true;
      default:
        return false;
    }
  }

 private:
  static Expr make(ExprNode&& n) {
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
  }
  static void scan_arity(const Expr& e, int& m) {
    const ExprNode& n = e.node();
    if (n.kind == ExprKind::Var && n.var + 1 > m) m = n.var + 1;
    for (const Expr& c : n.children) scan_arity(c, m);
  }
  std::shared_ptr<const ExprNode> node_;
};

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::sum({a, b}); }
inline Expr operator-(const Expr& a, const Expr& b) {
  return Expr::sum({a, Expr::product({Expr::constant(-1), b})});
}
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::product({a, b}); }
inline Expr operator-(const Expr& a) { return Expr::product({Expr::constant(-1), a}); }

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

template <class T>
struct ExprOps;

template <>
struct ExprOps<double> {
  static double from_rational(const Rational& r) { return to_double(r); }
  static double sin(double x) { return std::sin(x); }
  static double cos(double x) { return std::cos(x); }
  static double exp(double x) { return std::exp(x); }
  static double tanh(double x) { return std::tanh(x); }
};

}  // namespace detail

template <class T>
T eval_expr(const Expr& e, const std::vector<T>& x) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Var: {
      if (n.var >= static_cast<int>(x.size()))
        throw std::invalid_argument("variable index out of range");
      return x[static_cast<size_t>(n.var)];
    }
    case ExprKind::Const:
      return detail::ExprOps<T>::from_rational(n.value);
    case ExprKind::Sum: {
      T acc = eval_expr(n.children[0], x);
      for (size_t i = 1; i < n.children.size(); ++i) acc = acc + eval_expr(n.children[i], x);
      return acc;
    }
    case ExprKind::Product: {
      T acc = eval_expr(n.children[0], x);
      for (size_t i = 1; i < n.children.size(); ++i) acc = acc * eval_expr(n.children[i], x);
      return acc;
    }
    case ExprKind::IntPow: {
      T b = eval_expr(n.children[0], x);
      T acc = detail::ExprOps<T>::from_rational(Rational(1));
      for (int i = 0; i < n.exponent; ++i) acc = acc * b;
      return acc;
    }
    case ExprKind::Sin:
      return detail::ExprOps<T>::sin(eval_expr(n.children[0], x));
    case ExprKind::Cos:
      return detail::ExprOps<T>::cos(eval_expr(n.children[0], x));
    case ExprKind::Exp:
      return detail::ExprOps<T>::exp(eval_expr(n.children[0], x));
    case ExprKind::Tanh:
      return detail::ExprOps<T>::tanh(eval_expr(n.children[0], x));
  }
  throw std::logic_error("unreachable");
}

/// Exact rational evaluation; empty when the tree contains transcendental
/// nodes.
inline std::optional<Rational> eval_expr_exact(const Expr& e, const std::vector<Rational>& x) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Var:
      if (n.var >= static_cast<int>(x.size()))
        throw std::invalid_argument("variable index out of range");
      return x[static_cast<size_t>(n.var)];
    case ExprKind::Const:
      return n.value;
    case ExprKind::Sum: {
      Rational acc = 0;
      for (const Expr& c : n.children) {
        auto v = eval_expr_exact(c, x);
        if (!v) return std::nullopt;
        acc += *v;
      }
      return acc;
    }
    case ExprKind::Product: {
      Rational acc = 1;
      for (const Expr& c : n.children) {
        auto v = eval_expr_exact(c, x);
        if (!v) return std::nullopt;
        acc *= *v;
      }
      return acc;
    }
    case ExprKind::IntPow: {
      auto b = eval_expr_exact(n.children[0], x);
      if (!b) return std::nullopt;
      Rational acc = 1;
      for (int i = 0; i < n.exponent; ++i) acc *= *b;
      return acc;
    }
    default:
      return std::nullopt;
  }
}

/// Forward-mode dual number carrying a gradient of fixed runtime length.
struct Dual {
  double v = 0;
  std::vector<double> g;

  Dual() = default;
  Dual(double value, size_t n) : v(value), g(n, 0.0) {}

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r = a;
    r.v += b.v;
    for (size_t i = 0; i < r.g.size(); ++i) r.g[i] += b.g[i];
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v, a.g.size());
    for (size_t i = 0; i < r.g.size(); ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    return r;
  }
};

namespace detail {

inline size_t dual_width = 0;  // set by jacobian before evaluation

template <>
struct ExprOps<Dual> {
  static Dual from_rational(const Rational& r) { return Dual(to_double(r), dual_width); }
  static Dual chain(const Dual& a, double f, double df) {
    Dual r(f, a.g.size());
    for (size_t i = 0; i < r.g.size(); ++i) r.g[i] = df * a.g[i];
    return r;
  }
  static Dual sin(const Dual& a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
  static Dual cos(const Dual& a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
  static Dual exp(const Dual& a) { return chain(a, std::exp(a.v), std::exp(a.v)); }
  static Dual tanh(const Dual& a) {
    double t = std::tanh(a.v);
    return chain(a, t, 1.0 - t * t);
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Parsing: infix strings over x0..x{m-1}, decimal literals, + - * ^ (nonneg
// int), sin cos exp tanh, parentheses.  Deterministic: one token stream, one
// grammar, no ambient state.

class ExprParser {
 public:
  static Expr parse(const std::string& text) {
    ExprParser p(text);
    Expr e = p.parse_sum();
    p.skip_ws();
    if (p.pos_ != p.s_.size())
      throw std::invalid_argument("trailing input in expression: '" + text + "'");
    return e;
  }

 private:
  explicit ExprParser(const std::string& s) : s_(s) {}

  Expr parse_sum() {
    skip_ws();
    bool neg = consume('-');
    Expr acc = parse_term();
    if (neg) acc = -acc;
    for (;;) {
      skip_ws();
      if (consume('+')) {
        acc = acc + parse_term();
      } else if (consume('-')) {
        acc = acc - parse_term();
      } else {
        return acc;
      }
    }
  }

  Expr parse_term() {
    Expr acc = parse_power();
    for (;;) {
      skip_ws();
      if (consume('*')) {
        acc = acc * parse_power();
      } else {
        return acc;
      }
    }
  }

  Expr parse_power() {
    Expr base = parse_atom();
    skip_ws();
    if (consume('^')) {
      skip_ws();
      int e = parse_nonneg_int();
      return Expr::pow(base, e);
    }
    return base;
  }

  Expr parse_atom() {
    skip_ws();
    if (consume('(')) {
      Expr e = parse_sum();
      skip_ws();
      if (!consume(')')) throw std::invalid_argument("expected ')'");
      return e;
    }
    if (consume('-')) return -parse_atom();
    if (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
      return parse_number();
    std::string id = parse_ident();
    if (id.empty()) throw std::invalid_argument("expected expression atom");
    if (id[0] == 'x' && id.size() > 1) {
      for (size_t i = 1; i < id.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(id[i])))
          throw std::invalid_argument("bad variable name '" + id + "'");
      return Expr::var(std::stoi(id.substr(1)));
    }
    skip_ws();
    if (!consume('(')) throw std::invalid_argument("expected '(' after '" + id + "'");
    Expr arg = parse_sum();
    skip_ws();
    if (!consume(')')) throw std::invalid_argument("expected ')'");
    if (id == "sin") return Expr::sin(arg);
    if (id == "cos") return Expr::cos(arg);
    if (id == "exp") return Expr::exp(arg);
    if (id == "tanh") return Expr::tanh(arg);
    throw std::invalid_argument("unknown function '" + id + "'");
  }

  Expr parse_number() {
    size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    boost::multiprecision::cpp_int ipart = 0;
    for (size_t i = start; i < pos_; ++i) ipart = ipart * 10 + (s_[i] - '0');
    Rational r(ipart);
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      boost::multiprecision::cpp_int num = 0, den = 1;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        num = num * 10 + (s_[pos_] - '0');
        den *= 10;
        ++pos_;
      }
      r += Rational(num, den);
    }
    return Expr::constant(r);
  }

  int parse_nonneg_int() {
    size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == start) throw std::invalid_argument("expected nonnegative integer exponent");
    return std::stoi(s_.substr(start, pos_ - start));
  }

  std::string parse_ident() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    return s_.substr(start, pos_ - start);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool consume(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  const std::string& s_;
  size_t pos_ = 0;
};

inline Expr parse_expr(const std::string& s) { return ExprParser::parse(s); }

/// Exact decimal expansion of a rational whose reduced denominator divides
/// some 10^k (true for every constant the parser or double conversion can
/// produce).  Throws otherwise.
inline std::string decimal_string(const Rational& v) {
  using boost::multiprecision::cpp_int;
  cpp_int num = boost::multiprecision::numerator(v);
  cpp_int den = boost::multiprecision::denominator(v);
  bool neg = num < 0;
  if (neg) num = -num;
  int k = 0;
  cpp_int d = den;
  while (d % 2 == 0) {
    d /= 2;
    ++k;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++k;
  }
  if (d != 1)
    throw std::invalid_argument("constant has no finite decimal expansion: " + v.str());
  cpp_int p10 = 1;
  for (int i = 0; i < k; ++i) p10 *= 10;
  cpp_int scaled = num * p10 / den;  // exact by construction
  std::string digits = scaled.str();
  std::string out;
  if (k == 0) {
    out = digits;
  } else {
    while (digits.size() <= static_cast<size_t>(k)) digits.insert(digits.begin(), '0');
    out = digits.substr(0, digits.size() - static_cast<size_t>(k)) + "." +
          digits.substr(digits.size() - static_cast<size_t>(k));
  }
  return neg ? "(0 - " + out + ")" : out;
}

/// Canonical infix form; parse(to_string(e)) reproduces the tree values.
inline std::string to_string(const Expr& e) {
  const ExprNode& n = e.node();
  std::ostringstream os;
  switch (n.kind) {
    case ExprKind::Var:
      os << 'x' << n.var;
      break;
    case ExprKind::Const:
      os << decimal_string(n.value);
      break;
    case ExprKind::Sum: {
      os << '(';
      for (size_t i = 0; i < n.children.size(); ++i) {
        if (i) os << " + ";
        os << to_string(n.children[i]);
      }
      os << ')';
      break;
    }
    case ExprKind::Product: {
      os << '(';
      for (size_t i = 0; i < n.children.size(); ++i) {
        if (i) os << " * ";
        os << to_string(n.children[i]);
      }
      os << ')';
      break;
    }
    case ExprKind::IntPow:
      os << '(' << to_string(n.children[0]) << ")^" << n.exponent;
      break;
    case ExprKind::Sin:
      os << "sin(" << to_string(n.children[0]) << ')';
      break;
    case ExprKind::Cos:
      os << "cos(" << to_string(n.children[0]) << ')';
      break;
    case ExprKind::Exp:
      os << "exp(" << to_string(n.children[0]) << ')';
      break;
    case ExprKind::Tanh:
      os << "tanh(" << to_string(n.children[0]) << ')';
      break;
  }
  std::string s = os.str();
  return s;
}

/// Substitutes args[i] for xi throughout the tree (used by composition).
inline Expr substitute(const Expr& e, const std::vector<Expr>& args) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Var:
      if (n.var >= static_cast<int>(args.size()))
        throw std::invalid_argument("substitute: variable index out of range");
      return args[static_cast<size_t>(n.var)];
    case ExprKind::Const:
      return e;
    default: {
      std::vector<Expr> ch;
      ch.reserve(n.children.size());
      for (const Expr& c : n.children) ch.push_back(substitute(c, args));
      switch (n.kind) {
        case ExprKind::Sum:
          return Expr::sum(std::move(ch));
        case ExprKind::Product:
          return Expr::product(std::move(ch));
        case ExprKind::IntPow:
          return Expr::pow(ch[0], n.exponent);
        case ExprKind::Sin:
          return Expr::sin(ch[0]);
        case ExprKind::Cos:
          return Expr::cos(ch[0]);
        case ExprKind::Exp:
          return Expr::exp(ch[0]);
        case ExprKind::Tanh:
          return Expr::tanh(ch[0]);
        default:
          throw std::logic_error("unreachable");
      }
    }
  }
}

}  // namespace vfc

#endif  // VFC_EXPR_HPP
