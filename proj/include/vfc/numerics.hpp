#ifndef VFC_NUMERICS_HPP
#define VFC_NUMERICS_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "vfc/region.hpp"

namespace vfc {

inline double smallest_singular_value(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().minCoeff();
}

/// Gauss-Newton zero search for f (possibly non-square) from a seed,
/// constrained to stay inside the region.  Returns the zero or nothing.
inline std::optional<Vec> newton_zero(const std::function<Vec(const Vec&)>& f,
                                      const std::function<Mat(const Vec&)>& jac, const Region& region,
                                      Vec x, double tol = 1e-12, int max_iter = 60) {
  for (int it = 0; it < max_iter; ++it) {
    Vec r = f(x);
    if (r.norm() <= tol) {
      if (!region.contains(x, 1e-9)) return std::nullopt;
      return region.wrap(x);
    }
    Mat J = jac(x);
    Vec step = J.completeOrthogonalDecomposition().solve(r);
    if (!step.allFinite()) return std::nullopt;
    double damp = 1.0;
    // keep iterates near the region; allow a small overshoot margin
    for (int k = 0; k < 30 && !region.contains(region.wrap(x - damp * step), 0.5); ++k) damp *= 0.5;
    x = region.wrap(x - damp * step);
  }
  return std::nullopt;
}

/// All zeros of `f` in `region` found by Newton from the region's sample
/// grid, deduplicated at `dedupe` distance.  Deterministic: seeds in grid
/// order, first hit kept.
inline std::vector<Vec> find_zeros(const std::function<Vec(const Vec&)>& f,
                                   const std::function<Mat(const Vec&)>& jac, const Region& region,
                                   int grid, double tol = 1e-12, double dedupe = 1e-8) {
  std::vector<Vec> zeros;
  for (const Vec& seed : region.sample_grid(grid)) {
    auto z = newton_zero(f, jac, region, seed, tol);
    if (!z) continue;
    bool dup = false;
    for (const Vec& w : zeros)
      if ((w - *z).norm() < dedupe) {
        dup = true;
        break;
      }
    if (!dup) zeros.push_back(*z);
  }
  return zeros;
}

/// Connected components of a point cloud under the relation
/// |x - y| <= link_radius (grid-graph connectivity approximation).
inline std::vector<int> connectivity_clusters(const std::vector<Vec>& pts, double link_radius) {
  std::vector<int> parent(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int a) {
    while (parent[static_cast<size_t>(a)] != a) {
      parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
      a = parent[static_cast<size_t>(a)];
    }
    return a;
  };
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      if ((pts[i] - pts[j]).norm() <= link_radius) {
        int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) parent[static_cast<size_t>(a)] = b;
      }
  std::vector<int> label(pts.size());
  std::vector<int> roots;
  for (size_t i = 0; i < pts.size(); ++i) {
    int r = find(static_cast<int>(i));
    int id = -1;
    for (size_t k = 0; k < roots.size(); ++k)
      if (roots[k] == r) id = static_cast<int>(k);
    if (id < 0) {
      id = static_cast<int>(roots.size());
      roots.push_back(r);
    }
    label[i] = id;
  }
  return label;
}

/// Least-squares fit of y = a + b x; returns (a, b, r_squared).
struct LineFit {
  double intercept = 0, slope = 0, r2 = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  size_t n = x.size();
  if (n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double dn = static_cast<double>(n);
  double vx = sxx - sx * sx / dn;
  double vy = syy - sy * sy / dn;
  double cxy = sxy - sx * sy / dn;
  if (vx <= 0) return f;
  f.slope = cxy / vx;
  f.intercept = (sy - f.slope * sx) / dn;
  f.r2 = (vy <= 0) ? 1.0 : (cxy * cxy) / (vx * vy);
  return f;
}

}  // namespace vfc

#endif  // VFC_NUMERICS_HPP
