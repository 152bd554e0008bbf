#ifndef VFC_GROUP_ACTION_HPP
#define VFC_GROUP_ACTION_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "vfc/region.hpp"
#include "vfc/report.hpp"

namespace vfc {

/// Finite group given by a multiplication table, acting on chart coordinates
/// by orthogonal affine maps (translations only along periodic axes) and on
/// the obstruction fiber by invertible matrices.
class FiniteGroupAction {
 public:
  struct Element {
    Mat v;  // orthogonal part on V
    Vec t;  // translation, nonzero only on periodic axes
    Mat e;  // linear action on the fiber
  };

  FiniteGroupAction() = default;
  FiniteGroupAction(std::vector<std::vector<int>> table, std::vector<Element> elems)
      : table_(std::move(table)), elems_(std::move(elems)) {
    const int n = size();
    if (static_cast<int>(elems_.size()) != n)
      throw std::invalid_argument("group: element count mismatch");
    for (const auto& row : table_)
      if (static_cast<int>(row.size()) != n) throw std::invalid_argument("group: ragged table");
    identity_ = find_identity();
  }

  static FiniteGroupAction trivial(int vdim, int edim) {
    Element e;
    e.v = Mat::Identity(vdim, vdim);
    e.t = Vec::Zero(vdim);
    e.e = Mat::Identity(edim, edim);
    return FiniteGroupAction({{0}}, {e});
  }

  int size() const { return static_cast<int>(table_.size()); }
  int identity() const { return identity_; }
  int mul(int a, int b) const { return table_[static_cast<size_t>(a)][static_cast<size_t>(b)]; }
  int inverse(int a) const {
    for (int b = 0; b < size(); ++b)
      if (mul(a, b) == identity_) return b;
    throw std::logic_error("group element has no inverse");
  }
  const Element& elem(int i) const { return elems_[static_cast<size_t>(i)]; }

  /// gamma . x on chart coordinates, wrapped into the region's periodic box.
  Vec act_v(int g, const Vec& x, const Region& region) const {
    return region.wrap(elems_[static_cast<size_t>(g)].v * x + elems_[static_cast<size_t>(g)].t);
  }
  Vec act_e(int g, const Vec& w) const { return elems_[static_cast<size_t>(g)].e * w; }

  /// Table axioms, orthogonality, affine representation property, and
  /// effectiveness of the V-action sampled on a grid.
  void validate(const Region& region, int grid, ValidationReport& rep) const {
    const int n = size();
    bool group_ok = identity_ >= 0;
    for (int a = 0; a < n && group_ok; ++a) {
      bool has_inv = false;
      for (int b = 0; b < n; ++b)
        if (mul(a, b) == identity_ && mul(b, a) == identity_) has_inv = true;
      if (!has_inv) group_ok = false;
      for (int b = 0; b < n && group_ok; ++b)
        for (int c = 0; c < n; ++c)
          if (mul(mul(a, b), c) != mul(a, mul(b, c))) {
            group_ok = false;
            break;
          }
    }
    if (!group_ok) {
      rep.fail("group_table", 1.0, "multiplication table is not a group");
      return;
    }
    rep.pass("group_table");

    double orth = 0;
    for (const Element& el : elems_) {
      orth = std::max(orth, (el.v.transpose() * el.v - Mat::Identity(el.v.rows(), el.v.cols()))
                                .cwiseAbs()
                                .maxCoeff());
      for (Eigen::Index i = 0; i < el.t.size(); ++i)
        if (el.t[i] != 0.0 && !region.is_periodic(static_cast<int>(i)))
          orth = std::max(orth, std::abs(el.t[i]));
    }
    Check& oc = rep.add("v_action_orthogonal");
    oc.residual = orth;
    oc.passed = orth <= 1e-12;

    // Representation property on a grid (affine parts composed with wrap).
    auto pts = region.sample_grid(grid);
    double repres = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (const Vec& x : pts) {
          Vec lhs = act_v(a, act_v(b, x, region), region);
          Vec rhs = act_v(mul(a, b), x, region);
          repres = std::max(repres, periodic_gap(lhs, rhs, region));
          Mat ediff = elems_[static_cast<size_t>(a)].e * elems_[static_cast<size_t>(b)].e -
                      elems_[static_cast<size_t>(mul(a, b))].e;
          if (ediff.size() > 0) repres = std::max(repres, ediff.cwiseAbs().maxCoeff());
        }
    Check& rc = rep.add("representation");
    rc.residual = repres;
    rc.passed = repres <= 1e-10;

    // Effectiveness: every non-identity element moves some grid point.
    for (int a = 0; a < n; ++a) {
      if (a == identity_) continue;
      double moved = 0;
      for (const Vec& x : pts) moved = std::max(moved, periodic_gap(act_v(a, x, region), x, region));
      if (moved <= 1e-10) {
        rep.fail("v_action_effective", moved, "non-identity element acts as identity on the grid");
        return;
      }
    }
    rep.pass("v_action_effective");
  }

  /// Distance that treats periodic axes as circles.
  static double periodic_gap(const Vec& a, const Vec& b, const Region& region) {
    double m = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      double d = std::abs(a[i] - b[i]);
      if (region.is_periodic(static_cast<int>(i))) {
        double p = region.period(static_cast<int>(i));
        d = std::fmod(d, p);
        d = std::min(d, p - d);
      }
      m = std::max(m, d);
    }
    return m;
  }

 private:
  int find_identity() const {
    for (int e = 0; e < size(); ++e) {
      bool ok = true;
      for (int a = 0; a < size(); ++a)
        if (mul(e, a) != a || mul(a, e) != a) {
          ok = false;
          break;
        }
      if (ok) return e;
    }
    return -1;
  }

  std::vector<std::vector<int>> table_;
  std::vector<Element> elems_;
  int identity_ = -1;
};

}  // namespace vfc

#endif  // VFC_GROUP_ACTION_HPP
