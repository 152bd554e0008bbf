#ifndef VFC_SMOOTH_MAP_HPP
#define VFC_SMOOTH_MAP_HPP

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vfc/expr.hpp"

namespace vfc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A smooth map R^m -> R^n given by n expression-tree components sharing
/// arity m.  Every section, embedding and group action in the kit is one of
/// these.
class SmoothMap {
 public:
  SmoothMap() = default;
  SmoothMap(int arity, std::vector<Expr> components)
      : arity_(arity), comps_(std::move(components)) {
    if (arity_ < 0) throw std::invalid_argument("negative arity");
    for (const Expr& c : comps_)
      if (c.min_arity() > arity_)
        throw std::invalid_argument("component uses variable beyond declared arity");
  }

  static SmoothMap identity(int dim) {
    std::vector<Expr> c;
    c.reserve(static_cast<size_t>(dim));
    for (int i = 0; i < dim; ++i) c.push_back(Expr::var(i));
    return SmoothMap(dim, std::move(c));
  }

  static SmoothMap constant(int arity, const Vec& value) {
    std::vector<Expr> c;
    for (Eigen::Index i = 0; i < value.size(); ++i)
      c.push_back(Expr::constant(rational_from_double(value[i])));
    return SmoothMap(arity, std::move(c));
  }

  /// x |-> A x + b as expression trees with exact rational coefficients
  /// when the entries are (binary) exact.
  static SmoothMap affine(const Mat& A, const Vec& b) {
    std::vector<Expr> c;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      std::vector<Expr> terms;
      for (Eigen::Index j = 0; j < A.cols(); ++j) {
        if (A(i, j) == 0.0) continue;
        terms.push_back(Expr::product(
            {Expr::constant(rational_from_double(A(i, j))), Expr::var(static_cast<int>(j))}));
      }
      terms.push_back(Expr::constant(rational_from_double(b[i])));
      c.push_back(Expr::sum(std::move(terms)));
    }
    return SmoothMap(static_cast<int>(A.cols()), std::move(c));
  }

  int arity() const { return arity_; }
  int coarity() const { return static_cast<int>(comps_.size()); }
  const std::vector<Expr>& components() const { return comps_; }

  bool rational_only() const {
    for (const Expr& c : comps_)
      if (!c.rational_only()) return false;
    return true;
  }

  Vec eval(const Vec& x) const {
    check_arity(x.size());
    std::vector<double> xs(x.data(), x.data() + x.size());
    Vec y(coarity());
    for (int i = 0; i < coarity(); ++i) y[i] = eval_expr<double>(comps_[static_cast<size_t>(i)], xs);
    return y;
  }

  std::optional<std::vector<Rational>> eval_exact(const std::vector<Rational>& x) const {
    check_arity(static_cast<Eigen::Index>(x.size()));
    std::vector<Rational> y;
    y.reserve(comps_.size());
    for (const Expr& c : comps_) {
      auto v = eval_expr_exact(c, x);
      if (!v) return std::nullopt;
      y.push_back(*v);
    }
    return y;
  }

  /// Exact forward-mode derivative, rows indexed by component.
  Mat jacobian(const Vec& x) const {
    check_arity(x.size());
    detail::dual_width = static_cast<size_t>(arity_);
    std::vector<Dual> xs;
    xs.reserve(static_cast<size_t>(arity_));
    for (int i = 0; i < arity_; ++i) {
      Dual d(x[i], static_cast<size_t>(arity_));
      d.g[static_cast<size_t>(i)] = 1.0;
      xs.push_back(std::move(d));
    }
    Mat J(coarity(), arity_);
    for (int i = 0; i < coarity(); ++i) {
      Dual r = eval_expr<Dual>(comps_[static_cast<size_t>(i)], xs);
      for (int j = 0; j < arity_; ++j) J(i, j) = r.g[static_cast<size_t>(j)];
    }
    return J;
  }

  /// Exact composition: eval(compose(f,g), x) == eval(f, eval(g, x)).
  friend SmoothMap compose(const SmoothMap& f, const SmoothMap& g) {
    if (f.arity() != g.coarity())
      throw std::invalid_argument("compose: coarity(g) != arity(f)");
    std::vector<Expr> c;
    c.reserve(f.comps_.size());
    for (const Expr& fc : f.comps_) c.push_back(substitute(fc, g.comps_));
    return SmoothMap(g.arity(), std::move(c));
  }

  /// Exact double -> rational conversion (doubles are binary rationals).
  static Rational rational_from_double(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite constant");
    if (v == 0.0) return Rational(0);
    int exp = 0;
    double mant = std::frexp(v, &exp);  // v = mant * 2^exp, |mant| in [0.5,1)
    boost::multiprecision::cpp_int num = 0;
    for (int i = 0; i < 64 && mant != 0.0; ++i) {
      mant *= 2;
      double bit = std::trunc(mant);
      num = num * 2 + boost::multiprecision::cpp_int(static_cast<long>(bit));
      mant -= bit;
      --exp;
    }
    Rational r(num);
    if (exp > 0)
      r *= Rational(boost::multiprecision::cpp_int(1) << exp);
    else if (exp < 0)
      r /= Rational(boost::multiprecision::cpp_int(1) << (-exp));
    return r;
  }

 private:
  void check_arity(Eigen::Index n) const {
    if (n != arity_) throw std::invalid_argument("arity mismatch");
  }

  int arity_ = 0;
  std::vector<Expr> comps_;
};

}  // namespace vfc

#endif  // VFC_SMOOTH_MAP_HPP
