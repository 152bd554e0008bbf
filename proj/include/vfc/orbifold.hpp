#ifndef VFC_ORBIFOLD_HPP
#define VFC_ORBIFOLD_HPP

#include <string>
#include <vector>

#include "vfc/kuranishi.hpp"

namespace vfc {

/// Orbifold presented by charts V/Gamma (a Kuranishi chart with rank-zero
/// obstruction bundle, kept as its own type for embedding checks).
struct OrbifoldChart {
  std::string name;
  Region region;
  FiniteGroupAction group;
};

struct OrbifoldPresentation {
  std::vector<OrbifoldChart> charts;

  const OrbifoldChart& chart(const std::string& name) const {
    for (const auto& c : charts)
      if (c.name == name) return c;
    throw std::invalid_argument("no orbifold chart named '" + name + "'");
  }
};

/// Local data of an embedding between orbifold presentations: for a source
/// chart, the target chart it lands in, the equivariant map, and the group
/// map.
struct OrbifoldEmbeddingData {
  std::string source_chart, target_chart;
  SmoothMap map;                // V^X -> V^Y
  std::vector<int> group_map;   // Gamma^X index -> Gamma^Y index
};

/// Checks local embedding data: equivariant smooth embedding, group map an
/// isomorphism onto isotropy (witness point reported when isotropy ranks
/// mismatch), and set-level compatibility of orbits.
inline ValidationReport validate_orbifold_embedding(const std::vector<OrbifoldEmbeddingData>& data,
                                                    const OrbifoldPresentation& source,
                                                    const OrbifoldPresentation& target,
                                                    const SampleParams& par = {}) {
  ValidationReport rep;
  rep.subject = "orbifold embedding";
  for (const auto& d : data) {
    const OrbifoldChart& q = source.chart(d.source_chart);
    const OrbifoldChart& p = target.chart(d.target_chart);
    std::string tag = d.source_chart + "->" + d.target_chart;
    auto pts = q.region.sample_grid(par.grid);

    // smooth embedding: injective differential at grid points
    {
      Check& ch = rep.add(tag + ":smooth_embedding");
      double worst = std::numeric_limits<double>::infinity();
      for (const Vec& x : pts) worst = std::min(worst, smallest_singular_value(d.map.jacobian(x)));
      if (pts.empty()) worst = 0;
      ch.residual = worst;
      ch.passed = worst > 1e-8;
    }

    // group map equivariance: F(gamma x) = h(gamma) F(x)
    {
      Check& ch = rep.add(tag + ":equivariance");
      double worst = 0;
      bool hom_ok = static_cast<int>(d.group_map.size()) == q.group.size();
      for (int a = 0; a < q.group.size() && hom_ok; ++a)
        for (int b = 0; b < q.group.size(); ++b)
          if (d.group_map[static_cast<size_t>(q.group.mul(a, b))] !=
              p.group.mul(d.group_map[static_cast<size_t>(a)], d.group_map[static_cast<size_t>(b)]))
            hom_ok = false;
      for (const Vec& x : pts)
        for (int g = 0; g < q.group.size(); ++g) {
          Vec lhs = d.map.eval(q.group.act_v(g, x, q.region));
          Vec rhs = p.group.act_v(d.group_map[static_cast<size_t>(g)], d.map.eval(x), p.region);
          worst = std::max(worst, FiniteGroupAction::periodic_gap(lhs, rhs, p.region));
        }
      ch.residual = worst;
      ch.passed = hom_ok && worst <= par.tol_equivariance;
      if (!hom_ok) ch.note = "group map is not a homomorphism";
    }

    // isomorphism onto isotropy: |Gamma^X_x| must equal |Gamma^Y_{F(x)}| and
    // the group map must carry one onto the other
    {
      Check& ch = rep.add(tag + ":isotropy_isomorphism");
      for (const Vec& x : pts) {
        Vec fx = d.map.eval(x);
        int iso_q = 0, iso_p = 0, carried = 0;
        for (int g = 0; g < q.group.size(); ++g)
          if (FiniteGroupAction::periodic_gap(q.group.act_v(g, x, q.region), x, q.region) <= 1e-9) {
            ++iso_q;
            int hg = d.group_map[static_cast<size_t>(g)];
            if (FiniteGroupAction::periodic_gap(p.group.act_v(hg, fx, p.region), fx, p.region) <= 1e-9)
              ++carried;
          }
        for (int g = 0; g < p.group.size(); ++g)
          if (FiniteGroupAction::periodic_gap(p.group.act_v(g, fx, p.region), fx, p.region) <= 1e-9)
            ++iso_p;
        if (iso_q != iso_p || carried != iso_q) {
          ch.passed = false;
          ch.witness = to_std(x);
          ch.note = "isotropy mismatch";
          break;
        }
      }
    }

    // set-level compatibility: image points stay in the target chart
    {
      Check& ch = rep.add(tag + ":image_in_chart");
      for (const Vec& x : pts)
        if (!p.region.contains(d.map.eval(x), 1e-7)) {
          ch.passed = false;
          ch.witness = to_std(x);
          break;
        }
    }
  }
  return rep;
}

}  // namespace vfc

#endif  // VFC_ORBIFOLD_HPP
