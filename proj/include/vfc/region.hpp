#ifndef VFC_REGION_HPP
#define VFC_REGION_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "vfc/smooth_map.hpp"

namespace vfc {

/// Semialgebraic region: a closed box with optional polynomial constraints
/// g(x) <= 0 (or g(x) < 0 when flagged open).  Membership is decided by
/// evaluation.  Axes may be marked periodic, in which case the box spans one
/// period and coordinates wrap.
class Region {
 public:
  struct Constraint {
    Expr expr;
    bool open = false;
  };

  Region() = default;
  Region(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size()) throw std::invalid_argument("box bound size mismatch");
    for (Eigen::Index i = 0; i < lo_.size(); ++i)
      if (lo_[i] > hi_[i]) throw std::invalid_argument("empty box bound");
  }

  static Region box1d(double lo, double hi) {
    Vec l(1), h(1);
    l[0] = lo;
    h[0] = hi;
    return Region(l, h);
  }

  int dim() const { return static_cast<int>(lo_.size()); }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<int>& periodic_axes() const { return periodic_axes_; }

  Region& add_constraint(Expr e, bool open = false) {
    if (e.min_arity() > dim()) throw std::invalid_argument("constraint arity exceeds dimension");
    constraints_.push_back({std::move(e), open});
    return *this;
  }
  Region& set_periodic(std::vector<int> axes) {
    for (int a : axes)
      if (a < 0 || a >= dim()) throw std::invalid_argument("periodic axis out of range");
    periodic_axes_ = std::move(axes);
    return *this;
  }
  bool is_periodic(int axis) const {
    for (int a : periodic_axes_)
      if (a == axis) return true;
    return false;
  }

  bool bounded() const {
    for (Eigen::Index i = 0; i < lo_.size(); ++i)
      if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i])) return false;
    return true;
  }

  double period(int axis) const { return hi_[axis] - lo_[axis]; }

  /// Wraps periodic coordinates into the fundamental box.
  Vec wrap(Vec x) const {
    for (int a : periodic_axes_) {
      double p = period(a);
      if (p <= 0) continue;
      double t = std::fmod(x[a] - lo_[a], p);
      if (t < 0) t += p;
      x[a] = lo_[a] + t;
    }
    return x;
  }

  bool contains(const Vec& x, double tol = 0.0) const {
    if (x.size() != lo_.size()) throw std::invalid_argument("point dimension mismatch");
    Vec w = wrap(x);
    for (Eigen::Index i = 0; i < lo_.size(); ++i)
      if (w[i] < lo_[i] - tol || w[i] > hi_[i] + tol) return false;
    std::vector<double> xs(w.data(), w.data() + w.size());
    for (const Constraint& c : constraints_) {
      double g = eval_expr<double>(c.expr, xs);
      if (c.open ? (g >= -tol) : (g > tol)) return false;
    }
    return true;
  }

  /// Distance-like margin: minimum over box slack and constraint slack
  /// (-g(x)); nonnegative inside, negative outside.  Constraint slack is in
  /// constraint units, not Euclidean distance.
  double margin(const Vec& x) const {
    Vec w = wrap(x);
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < lo_.size(); ++i) {
      if (is_periodic(static_cast<int>(i))) continue;
      m = std::min(m, w[i] - lo_[i]);
      m = std::min(m, hi_[i] - w[i]);
    }
    std::vector<double> xs(w.data(), w.data() + w.size());
    for (const Constraint& c : constraints_) m = std::min(m, -eval_expr<double>(c.expr, xs));
    return m;
  }

  /// Deterministic regular grid of `resolution` points per axis intersected
  /// with the constraints; identical inputs give identical point lists.
  std::vector<Vec> sample_grid(int resolution) const {
    if (resolution < 1) throw std::invalid_argument("resolution must be positive");
    if (!bounded()) throw std::invalid_argument("sample_grid requires a bounded box");
    int d = dim();
    std::vector<std::vector<double>> axes(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
      auto& ax = axes[static_cast<size_t>(i)];
      int n = resolution;
      // On a periodic axis hi is identified with lo; drop the duplicate node.
      bool periodic = is_periodic(i);
      if (n == 1) {
        ax.push_back(0.5 * (lo_[i] + hi_[i]));
      } else {
        int last = periodic ? n - 1 : n;
        for (int k = 0; k < last; ++k)
          ax.push_back(lo_[i] + (hi_[i] - lo_[i]) * static_cast<double>(k) /
                                    static_cast<double>(n - 1));
      }
    }
    std::vector<Vec> out;
    Vec x(d);
    std::vector<size_t> idx(static_cast<size_t>(d), 0);
    for (;;) {
      for (int i = 0; i < d; ++i) x[i] = axes[static_cast<size_t>(i)][idx[static_cast<size_t>(i)]];
      bool ok = true;
      std::vector<double> xs(x.data(), x.data() + x.size());
      for (const Constraint& c : constraints_) {
        double g = eval_expr<double>(c.expr, xs);
        if (c.open ? (g >= 0) : (g > 0)) {
          ok = false;
          break;
        }
      }
      if (ok) out.push_back(x);
      // lexicographic advance, last axis fastest
      int i = d - 1;
      for (; i >= 0; --i) {
        if (++idx[static_cast<size_t>(i)] < axes[static_cast<size_t>(i)].size()) break;
        idx[static_cast<size_t>(i)] = 0;
      }
      if (i < 0) break;
    }
    return out;
  }

  /// Region with every box side moved inward and every constraint
  /// g <= 0 tightened to g + m <= 0.  Periodic axes keep their span.
  Region shrink(double m) const {
    Vec lo = lo_, hi = hi_;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      if (is_periodic(static_cast<int>(i))) continue;
      lo[i] += m;
      hi[i] -= m;
      if (lo[i] > hi[i]) throw std::invalid_argument("shrink margin empties the box");
    }
    Region r(lo, hi);
    r.periodic_axes_ = periodic_axes_;
    for (const Constraint& c : constraints_)
      r.constraints_.push_back({c.expr + Expr::constant(SmoothMap::rational_from_double(m)), c.open});
    return r;
  }

  /// Intersection with the same box (or the tighter of the two boxes).
  friend Region intersect(const Region& a, const Region& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("intersect: dimension mismatch");
    Vec lo = a.lo_.cwiseMax(b.lo_), hi = a.hi_.cwiseMin(b.hi_);
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (lo[i] > hi[i]) lo[i] = hi[i];  // degenerate but well-formed slab
    Region r(lo, hi);
    r.periodic_axes_ = a.periodic_axes_;
    r.constraints_ = a.constraints_;
    for (const Constraint& c : b.constraints_) r.constraints_.push_back(c);
    return r;
  }

  /// phi^{-1}(target) as constraints over the source region: target box sides
  /// and constraints composed with phi (exact tree substitution).
  Region pullback_into(const SmoothMap& phi, const Region& target) const {
    if (phi.arity() != dim() || phi.coarity() != target.dim())
      throw std::invalid_argument("pullback: map shape mismatch");
    Region r = *this;
    for (Eigen::Index i = 0; i < target.lo_.size(); ++i) {
      const Expr& comp = phi.components()[static_cast<size_t>(i)];
      if (std::isfinite(target.lo_[i]))
        r.constraints_.push_back(
            {Expr::constant(SmoothMap::rational_from_double(target.lo_[i])) - comp, false});
      if (std::isfinite(target.hi_[i]))
        r.constraints_.push_back(
            {comp - Expr::constant(SmoothMap::rational_from_double(target.hi_[i])), false});
    }
    for (const Constraint& c : target.constraints_)
      r.constraints_.push_back({substitute(c.expr, phi.components()), c.open});
    return r;
  }

  /// Closed Euclidean ball |x - c| <= r intersected with this region.
  Region ball_intersection(const Vec& center, double radius) const {
    std::vector<Expr> terms;
    for (int i = 0; i < dim(); ++i) {
      Expr d = Expr::var(i) - Expr::constant(SmoothMap::rational_from_double(center[i]));
      terms.push_back(Expr::pow(d, 2));
    }
    Expr g = Expr::sum(std::move(terms)) -
             Expr::constant(SmoothMap::rational_from_double(radius * radius));
    Region r = *this;
    r.constraints_.push_back({g, false});
    return r;
  }

 private:
  Vec lo_, hi_;
  std::vector<Constraint> constraints_;
  std::vector<int> periodic_axes_;
};

}  // namespace vfc

#endif  // VFC_REGION_HPP
