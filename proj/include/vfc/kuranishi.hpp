#ifndef VFC_KURANISHI_HPP
#define VFC_KURANISHI_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "vfc/group_action.hpp"
#include "vfc/json_io.hpp"
#include "vfc/numerics.hpp"

namespace vfc {

/// Generator data for a locally free circle action on one chart: a linear
/// one-parameter orthogonal part plus translation along declared periodic
/// angle axes, and a linear generator on the obstruction fiber.
struct CircleAction {
  Mat v_matrix;       // skew-symmetric
  Vec v_translation;  // supported on periodic axes
  Mat e_matrix;       // generator on the fiber (often zero)
  double period = 1.0;

  /// Rotation by angle theta (in units of the period).
  Vec act_v(double theta, const Vec& x, const Region& region) const {
    double t = 2.0 * M_PI * theta / period;
    Mat R = (t * v_matrix).exp();
    return region.wrap(R * x + theta * v_translation);
  }
  Mat rot_e(double theta) const {
    double t = 2.0 * M_PI * theta / period;
    return (t * e_matrix).exp();
  }
  /// Generator vector field at x (d/dtheta at theta = 0).
  Vec generator_field(const Vec& x) const {
    return (2.0 * M_PI / period) * (v_matrix * x) + v_translation;
  }
};

struct KuranishiChart {
  std::string name;
  Region region;             // V_p
  int obstruction_rank = 0;  // rank E_p
  FiniteGroupAction group;   // Gamma_p with V- and E-representations
  SmoothMap section;         // s_p : R^n -> R^k
  Vec base_point;            // o_p
  int orient_v = 1, orient_e = 1;
  std::optional<CircleAction> circle;

  int dim() const { return region.dim(); }
  int vdim() const { return dim() - obstruction_rank; }
};

/// Coordinate change from chart `from` (q) into chart `to` (p): a group
/// injection, an equivariant embedding on a domain inside V_q, and a
/// fiberwise linear bundle embedding given as a matrix of expressions.
struct CoordinateChange {
  std::string from, to;
  Region domain;  // V_{pq} subset of V_q
  SmoothMap phi;  // V_{pq} -> V_p
  std::vector<std::vector<Expr>> phi_hat;  // k_p x k_q entries over V_{pq}
  std::vector<int> group_hom;              // h : Gamma_q index -> Gamma_p index

  Mat phi_hat_at(const Vec& x) const {
    std::vector<double> xs(x.data(), x.data() + x.size());
    Mat m(static_cast<Eigen::Index>(phi_hat.size()),
          phi_hat.empty() ? 0 : static_cast<Eigen::Index>(phi_hat[0].size()));
    for (size_t r = 0; r < phi_hat.size(); ++r)
      for (size_t c = 0; c < phi_hat[r].size(); ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            eval_expr<double>(phi_hat[r][c], xs);
    return m;
  }
};

struct KuranishiStructure {
  int virtual_dimension = 0;
  std::vector<KuranishiChart> charts;
  std::vector<CoordinateChange> changes;

  const KuranishiChart& chart(const std::string& name) const {
    for (const auto& c : charts)
      if (c.name == name) return c;
    throw std::invalid_argument("no chart named '" + name + "'");
  }
  const CoordinateChange* change(const std::string& from, const std::string& to) const {
    for (const auto& cc : changes)
      if (cc.from == from && cc.to == to) return &cc;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// JSON format

inline FiniteGroupAction group_from_json(const Json& j, int vdim, int edim,
                                         const std::string& where) {
  require_keys(j, where, {"table", "v_matrices", "e_matrices"}, {"v_translations"});
  std::vector<std::vector<int>> table;
  for (const Json& row : j["table"]) {
    std::vector<int> r;
    for (const Json& v : row) r.push_back(v.get<int>());
    table.push_back(std::move(r));
  }
  std::vector<FiniteGroupAction::Element> elems;
  const Json& vm = j["v_matrices"];
  const Json& em = j["e_matrices"];
  if (vm.size() != table.size() || em.size() != table.size())
    throw ParseError(where + ": matrix list size mismatch");
  for (size_t i = 0; i < table.size(); ++i) {
    FiniteGroupAction::Element e;
    e.v = mat_from_json(vm[i], where + ".v_matrices");
    if (e.v.rows() != vdim || e.v.cols() != vdim)
      throw ParseError(where + ": v matrix has wrong shape");
    e.t = Vec::Zero(vdim);
    if (j.contains("v_translations")) e.t = vec_from_json(j["v_translations"][i], where);
    if (edim == 0) {
      e.e = Mat::Zero(0, 0);
    } else {
      e.e = mat_from_json(em[i], where + ".e_matrices");
      if (e.e.rows() != edim || e.e.cols() != edim)
        throw ParseError(where + ": e matrix has wrong shape");
    }
    elems.push_back(std::move(e));
  }
  return FiniteGroupAction(std::move(table), std::move(elems));
}

inline Json group_to_json(const FiniteGroupAction& g) {
  Json j;
  Json table = Json::array();
  for (int a = 0; a < g.size(); ++a) {
    Json row = Json::array();
    for (int b = 0; b < g.size(); ++b) row.push_back(g.mul(a, b));
    table.push_back(row);
  }
  j["table"] = table;
  Json vm = Json::array(), em = Json::array(), vt = Json::array();
  bool any_t = false;
  for (int a = 0; a < g.size(); ++a) {
    vm.push_back(mat_to_json(g.elem(a).v));
    em.push_back(mat_to_json(g.elem(a).e));
    vt.push_back(vec_to_json(g.elem(a).t));
    if (g.elem(a).t.size() > 0 && g.elem(a).t.cwiseAbs().maxCoeff() > 0) any_t = true;
  }
  j["v_matrices"] = vm;
  j["e_matrices"] = em;
  if (any_t) j["v_translations"] = vt;
  return j;
}

inline CircleAction circle_from_json(const Json& j, int vdim, int edim, const std::string& where) {
  require_keys(j, where, {"v_generator", "e_generator"}, {"period", "periodic_axes"});
  CircleAction c;
  const Json& vg = j["v_generator"];
  require_keys(vg, where + ".v_generator", {}, {"matrix", "translation"});
  c.v_matrix = Mat::Zero(vdim, vdim);
  c.v_translation = Vec::Zero(vdim);
  if (vg.contains("matrix")) c.v_matrix = mat_from_json(vg["matrix"], where);
  if (vg.contains("translation")) c.v_translation = vec_from_json(vg["translation"], where);
  c.e_matrix = Mat::Zero(edim, edim);
  if (!j["e_generator"].empty()) c.e_matrix = mat_from_json(j["e_generator"], where);
  if (j.contains("period")) c.period = j["period"].get<double>();
  return c;
}

inline KuranishiChart chart_from_json(const Json& j) {
  require_keys(j, "chart",
               {"name", "ambient_dim", "region", "group", "section", "base_point", "orientation"},
               {"circle"});
  KuranishiChart c;
  c.name = j["name"].get<std::string>();
  int n = j["ambient_dim"].get<int>();
  c.region = region_from_json(j["region"], "chart '" + c.name + "' region");
  if (c.region.dim() != n) throw ParseError("chart '" + c.name + "': region dim != ambient_dim");
  SmoothMap s = map_from_json(j["section"], n, "chart '" + c.name + "' section");
  c.section = s;
  c.obstruction_rank = s.coarity();
  c.group = group_from_json(j["group"], n, c.obstruction_rank, "chart '" + c.name + "' group");
  c.base_point = vec_from_json(j["base_point"], "chart '" + c.name + "' base_point");
  const Json& ori = j["orientation"];
  require_keys(ori, "chart '" + c.name + "' orientation", {"v_sign", "e_sign"});
  c.orient_v = ori["v_sign"].get<int>();
  c.orient_e = ori["e_sign"].get<int>();
  if (std::abs(c.orient_v) != 1 || std::abs(c.orient_e) != 1)
    throw ParseError("chart '" + c.name + "': orientation signs must be +-1");
  if (j.contains("circle")) {
    const Json& cj = j["circle"];
    c.circle = circle_from_json(cj, n, c.obstruction_rank, "chart '" + c.name + "' circle");
    if (cj.contains("periodic_axes")) {
      std::vector<int> axes;
      for (const Json& a : cj["periodic_axes"]) axes.push_back(a.get<int>());
      c.region.set_periodic(axes);
    }
  }
  return c;
}

inline Json chart_to_json(const KuranishiChart& c) {
  Json j;
  j["name"] = c.name;
  j["ambient_dim"] = c.dim();
  j["region"] = region_to_json(c.region);
  j["group"] = group_to_json(c.group);
  j["section"] = map_to_json(c.section);
  j["base_point"] = vec_to_json(c.base_point);
  j["orientation"] = Json{{"v_sign", c.orient_v}, {"e_sign", c.orient_e}};
  if (c.circle) {
    Json cj;
    cj["v_generator"] =
        Json{{"matrix", mat_to_json(c.circle->v_matrix)}, {"translation", vec_to_json(c.circle->v_translation)}};
    cj["e_generator"] = mat_to_json(c.circle->e_matrix);
    cj["period"] = c.circle->period;
    if (!c.region.periodic_axes().empty()) cj["periodic_axes"] = c.region.periodic_axes();
    j["circle"] = cj;
  }
  return j;
}

inline CoordinateChange change_from_json(const Json& j, const KuranishiStructure& s) {
  require_keys(j, "coordinate_change", {"from", "to", "domain_region", "phi", "phi_hat", "group_hom"});
  CoordinateChange cc;
  cc.from = j["from"].get<std::string>();
  cc.to = j["to"].get<std::string>();
  const KuranishiChart& q = s.chart(cc.from);
  const KuranishiChart& p = s.chart(cc.to);
  cc.domain = region_from_json(j["domain_region"], "change " + cc.from + "->" + cc.to);
  if (cc.domain.dim() != q.dim())
    throw ParseError("change " + cc.from + "->" + cc.to + ": domain dim mismatch");
  cc.phi = map_from_json(j["phi"], q.dim(), "change phi");
  if (cc.phi.coarity() != p.dim())
    throw ParseError("change " + cc.from + "->" + cc.to + ": phi coarity mismatch");
  for (const Json& row : j["phi_hat"]) {
    std::vector<Expr> r;
    for (const Json& e : row) r.push_back(parse_expr(e.get<std::string>()));
    cc.phi_hat.push_back(std::move(r));
  }
  if (static_cast<int>(cc.phi_hat.size()) != p.obstruction_rank)
    throw ParseError("change " + cc.from + "->" + cc.to + ": phi_hat row count != rank E_p");
  for (const auto& r : cc.phi_hat)
    if (static_cast<int>(r.size()) != q.obstruction_rank)
      throw ParseError("change " + cc.from + "->" + cc.to + ": phi_hat col count != rank E_q");
  for (const Json& h : j["group_hom"]) cc.group_hom.push_back(h.get<int>());
  if (static_cast<int>(cc.group_hom.size()) != q.group.size())
    throw ParseError("change " + cc.from + "->" + cc.to + ": group_hom size != |Gamma_q|");
  return cc;
}

inline Json change_to_json(const CoordinateChange& cc) {
  Json j;
  j["from"] = cc.from;
  j["to"] = cc.to;
  j["domain_region"] = region_to_json(cc.domain);
  j["phi"] = map_to_json(cc.phi);
  Json ph = Json::array();
  for (const auto& row : cc.phi_hat) {
    Json r = Json::array();
    for (const Expr& e : row) r.push_back(to_string(e));
    ph.push_back(r);
  }
  j["phi_hat"] = ph;
  j["group_hom"] = cc.group_hom;
  return j;
}

inline KuranishiStructure structure_from_json(const Json& j) {
  require_keys(j, "structure", {"virtual_dimension", "charts", "coordinate_changes"});
  KuranishiStructure s;
  s.virtual_dimension = j["virtual_dimension"].get<int>();
  for (const Json& cj : j["charts"]) s.charts.push_back(chart_from_json(cj));
  for (const Json& cj : j["coordinate_changes"]) s.changes.push_back(change_from_json(cj, s));
  return s;
}

inline Json structure_to_json(const KuranishiStructure& s) {
  Json j;
  j["virtual_dimension"] = s.virtual_dimension;
  Json charts = Json::array();
  for (const auto& c : s.charts) charts.push_back(chart_to_json(c));
  j["charts"] = charts;
  Json changes = Json::array();
  for (const auto& cc : s.changes) changes.push_back(change_to_json(cc));
  j["coordinate_changes"] = changes;
  return j;
}

inline KuranishiStructure load_structure(const std::string& path) {
  return structure_from_json(load_json_file(path));
}

// ---------------------------------------------------------------------------
// Validators

struct SampleParams {
  int grid = 7;
  double tol_equivariance = 1e-10;
  double tol_cocycle = 1e-9;
  double tol_tangent_det = 1e-8;
};

/// Zeros of the chart section inside its region, located by Newton from grid
/// seeds.
inline std::vector<Vec> chart_zeros(const KuranishiChart& c, int grid, double tol = 1e-12,
                                    double dedupe = 1e-8) {
  if (c.obstruction_rank == 0) return c.region.sample_grid(grid);
  auto f = [&](const Vec& x) { return c.section.eval(x); };
  auto jf = [&](const Vec& x) { return c.section.jacobian(x); };
  return find_zeros(f, jf, c.region, grid, tol, dedupe);
}

inline ValidationReport validate_chart(const KuranishiChart& c, const SampleParams& p = {},
                                       std::optional<int> expected_vdim = std::nullopt) {
  ValidationReport rep;
  rep.subject = "chart " + c.name;

  c.group.validate(c.region, p.grid, rep);

  if (c.section.arity() != c.dim()) {
    rep.fail("section_arity", 1.0, "section arity differs from chart dimension");
    return rep;
  }

  // s(gamma x) = gamma . s(x) sampled over the region grid
  double worst = 0;
  std::optional<Vec> witness;
  for (const Vec& x : c.region.sample_grid(p.grid)) {
    Vec sx = c.section.eval(x);
    for (int g = 0; g < c.group.size(); ++g) {
      Vec lhs = c.section.eval(c.group.act_v(g, x, c.region));
      Vec rhs = c.group.act_e(g, sx);
      double r = c.obstruction_rank == 0 ? 0.0 : (lhs - rhs).cwiseAbs().maxCoeff();
      if (r > worst) {
        worst = r;
        witness = x;
      }
    }
  }
  Check& eq = rep.add("section_equivariance");
  eq.residual = worst;
  eq.passed = worst <= p.tol_equivariance;
  if (!eq.passed && witness) eq.witness = to_std(*witness);

  Check& bp = rep.add("base_point");
  if (!c.region.contains(c.base_point, 1e-9)) {
    bp.passed = false;
    bp.note = "base point outside region";
  } else {
    double s0 = c.obstruction_rank == 0 ? 0.0 : c.section.eval(c.base_point).cwiseAbs().maxCoeff();
    bp.residual = s0;
    bp.passed = s0 <= 1e-9;
    if (!c.circle) {
      // o_p is fixed by the whole group
      for (int g = 0; g < c.group.size(); ++g) {
        double d = FiniteGroupAction::periodic_gap(c.group.act_v(g, c.base_point, c.region),
                                                   c.base_point, c.region);
        if (d > 1e-9) {
          bp.passed = false;
          bp.note = "base point not fixed by the group";
          bp.residual = std::max(bp.residual, d);
        }
      }
    }
  }

  if (expected_vdim) {
    Check& vd = rep.add("virtual_dimension");
    vd.passed = (c.vdim() == *expected_vdim);
    if (!vd.passed) vd.note = "dim V - rank E differs from the structure's virtual dimension";
  }
  return rep;
}

inline ValidationReport validate_coordinate_change(const CoordinateChange& cc,
                                                   const KuranishiStructure& s,
                                                   const SampleParams& p = {}) {
  ValidationReport rep;
  rep.subject = "change " + cc.from + " -> " + cc.to;
  const KuranishiChart& q = s.chart(cc.from);
  const KuranishiChart& pc = s.chart(cc.to);

  // domain contained in V_q
  {
    Check& ch = rep.add("domain_in_source");
    for (const Vec& x : cc.domain.sample_grid(p.grid))
      if (!q.region.contains(x, 1e-9)) {
        ch.passed = false;
        ch.witness = to_std(x);
        ch.note = "domain region not contained in V_q";
        break;
      }
    if (!ch.passed) return rep;
  }

  // (1) h injective homomorphism
  {
    Check& ch = rep.add("group_hom_injective");
    std::vector<int> seen;
    for (int a = 0; a < q.group.size(); ++a) {
      int ha = cc.group_hom[static_cast<size_t>(a)];
      if (ha < 0 || ha >= pc.group.size()) {
        ch.passed = false;
        ch.note = "h maps outside Gamma_p";
      }
      for (int b : seen)
        if (b == ha) ch.passed = false;
      seen.push_back(ha);
      for (int b = 0; b < q.group.size(); ++b)
        if (cc.group_hom[static_cast<size_t>(q.group.mul(a, b))] !=
            pc.group.mul(cc.group_hom[static_cast<size_t>(a)], cc.group_hom[static_cast<size_t>(b)]))
          ch.passed = false;
    }
    if (!ch.passed && ch.note.empty()) ch.note = "h is not an injective homomorphism";
  }

  auto grid_pts = cc.domain.sample_grid(p.grid);

  // (2) Gamma_q-invariance of the domain and h-equivariance of phi
  {
    Check& inv = rep.add("domain_invariant");
    Check& equiv = rep.add("phi_equivariant");
    double worst = 0;
    for (const Vec& x : grid_pts) {
      for (int g = 0; g < q.group.size(); ++g) {
        Vec gx = q.group.act_v(g, x, q.region);
        if (!cc.domain.contains(gx, 1e-9)) {
          inv.passed = false;
          inv.witness = to_std(x);
        }
        Vec lhs = cc.phi.eval(gx);
        Vec rhs = pc.group.act_v(cc.group_hom[static_cast<size_t>(g)], cc.phi.eval(x), pc.region);
        worst = std::max(worst, FiniteGroupAction::periodic_gap(lhs, rhs, pc.region));
      }
    }
    equiv.residual = worst;
    equiv.passed = worst <= p.tol_equivariance;
  }

  // (2') phi an immersion at grid points, image inside V_p
  {
    Check& ch = rep.add("phi_embedding");
    double worst_sv = std::numeric_limits<double>::infinity();
    for (const Vec& x : grid_pts) {
      double sv = smallest_singular_value(cc.phi.jacobian(x));
      worst_sv = std::min(worst_sv, sv);
      if (!pc.region.contains(cc.phi.eval(x), 1e-7)) {
        ch.passed = false;
        ch.witness = to_std(x);
        ch.note = "phi leaves V_p";
      }
    }
    if (grid_pts.empty()) worst_sv = 0;
    ch.residual = worst_sv;
    if (worst_sv <= 1e-8) {
      ch.passed = false;
      if (ch.note.empty()) ch.note = "jacobian not injective at a grid point";
    }
  }

  // (3) phi_hat fiberwise injective and h-equivariant
  {
    Check& ch = rep.add("phi_hat_embedding");
    double worst_sv = std::numeric_limits<double>::infinity();
    double worst_eq = 0;
    for (const Vec& x : grid_pts) {
      Mat m = cc.phi_hat_at(x);
      if (q.obstruction_rank > 0) worst_sv = std::min(worst_sv, smallest_singular_value(m));
      for (int g = 0; g < q.group.size(); ++g) {
        Mat lhs = cc.phi_hat_at(q.group.act_v(g, x, q.region)) * q.group.elem(g).e;
        Mat rhs = pc.group.elem(cc.group_hom[static_cast<size_t>(g)]).e * m;
        if (lhs.size() > 0) worst_eq = std::max(worst_eq, (lhs - rhs).cwiseAbs().maxCoeff());
      }
    }
    if (q.obstruction_rank == 0) worst_sv = std::numeric_limits<double>::infinity();
    ch.residual = worst_eq;
    ch.passed = worst_eq <= p.tol_equivariance && (grid_pts.empty() || worst_sv > 1e-8);
    if (!ch.passed) ch.note = "phi_hat fails equivariance or fiber injectivity";
  }

  // (4) phi_hat . s_q = s_p . phi on the grid
  {
    Check& ch = rep.add("section_compat");
    double worst = 0;
    std::optional<Vec> witness;
    for (const Vec& x : grid_pts) {
      Vec lhs = cc.phi_hat_at(x) * q.section.eval(x);
      Vec rhs = pc.section.eval(cc.phi.eval(x));
      double r = pc.obstruction_rank == 0 ? 0.0 : (lhs - rhs).cwiseAbs().maxCoeff();
      if (r > worst) {
        worst = r;
        witness = x;
      }
    }
    ch.residual = worst;
    ch.passed = worst <= p.tol_equivariance;
    if (!ch.passed && witness) ch.witness = to_std(*witness);
  }

  // (6) h restricts to isotropy isomorphisms at grid points
  {
    Check& ch = rep.add("isotropy_isomorphism");
    for (const Vec& x : grid_pts) {
      Vec px = cc.phi.eval(x);
      int iso_q = 0, iso_p = 0, mapped = 0;
      for (int g = 0; g < q.group.size(); ++g) {
        bool fixes = FiniteGroupAction::periodic_gap(q.group.act_v(g, x, q.region), x, q.region) <= 1e-9;
        if (fixes) {
          ++iso_q;
          int hg = cc.group_hom[static_cast<size_t>(g)];
          if (FiniteGroupAction::periodic_gap(pc.group.act_v(hg, px, pc.region), px, pc.region) <= 1e-9)
            ++mapped;
        }
      }
      for (int g = 0; g < pc.group.size(); ++g)
        if (FiniteGroupAction::periodic_gap(pc.group.act_v(g, px, pc.region), px, pc.region) <= 1e-9)
          ++iso_p;
      if (mapped != iso_q || iso_q != iso_p) {
        ch.passed = false;
        ch.witness = to_std(x);
        ch.note = "isotropy groups do not correspond under h";
        break;
      }
    }
  }
  return rep;
}

/// Cocycle data for one triple on one overlap cluster.
struct CocycleResult {
  bool ok = false;
  std::vector<int> gamma_per_cluster;  // Gamma_p indices
  double worst_residual = 0;
  std::string note;
};

/// Searches Gamma_p for the components of the triple-overlap set, checking
/// h_{pq} h_{qr} = g h_{pr} g^{-1}, phi_{pq} phi_{qr} = g phi_{pr} and
/// phi_hat_{pq} phi_hat_{qr} = g phi_hat_{pr} on every cluster grid point.
inline CocycleResult check_cocycle(const KuranishiStructure& s, const std::string& pn,
                                   const std::string& qn, const std::string& rn,
                                   const SampleParams& par = {}) {
  CocycleResult result;
  const CoordinateChange* pq = s.change(qn, pn);
  const CoordinateChange* qr = s.change(rn, qn);
  const CoordinateChange* pr = s.change(rn, pn);
  if (!pq || !qr || !pr) {
    result.note = "missing coordinate change for the triple";
    return result;
  }
  const KuranishiChart& p = s.chart(pn);
  const KuranishiChart& r = s.chart(rn);

  // triple overlap: x in V_qr with phi_qr(x) in V_pq and x in V_pr
  std::vector<Vec> overlap;
  for (const Vec& x : qr->domain.sample_grid(par.grid)) {
    if (!pr->domain.contains(x, 1e-9)) continue;
    if (!pq->domain.contains(qr->phi.eval(x), 1e-9)) continue;
    overlap.push_back(x);
  }
  if (overlap.empty()) {
    result.ok = true;
    result.note = "empty triple overlap";
    return result;
  }

  // connected components approximated by grid-graph connectivity
  double spacing = 0;
  for (int i = 0; i < r.dim(); ++i)
    spacing = std::max(spacing, (qr->domain.hi()[i] - qr->domain.lo()[i]) /
                                    std::max(1, par.grid - 1));
  auto labels = connectivity_clusters(overlap, 1.75 * spacing);
  int nclusters = 0;
  for (int l : labels) nclusters = std::max(nclusters, l + 1);

  result.ok = true;
  for (int cl = 0; cl < nclusters; ++cl) {
    int best_gamma = -1;
    double best_res = std::numeric_limits<double>::infinity();
    for (int g = 0; g < p.group.size(); ++g) {
      // group identity h_pq . h_qr = g h_pr g^{-1}, exact on indices
      bool hom_ok = true;
      for (int a = 0; a < r.group.size(); ++a) {
        int lhs = pq->group_hom[static_cast<size_t>(qr->group_hom[static_cast<size_t>(a)])];
        int rhs = p.group.mul(g, p.group.mul(pr->group_hom[static_cast<size_t>(a)], p.group.inverse(g)));
        if (lhs != rhs) {
          hom_ok = false;
          break;
        }
      }
      if (!hom_ok) continue;
      double res = 0;
      for (size_t i = 0; i < overlap.size(); ++i) {
        if (labels[i] != cl) continue;
        const Vec& x = overlap[i];
        Vec lhs = pq->phi.eval(qr->phi.eval(x));
        Vec rhs = p.group.act_v(g, pr->phi.eval(x), p.region);
        res = std::max(res, FiniteGroupAction::periodic_gap(lhs, rhs, p.region));
        Mat mlhs = pq->phi_hat_at(qr->phi.eval(x)) * qr->phi_hat_at(x);
        Mat mrhs = p.group.elem(g).e * pr->phi_hat_at(x);
        if (mlhs.size() > 0) res = std::max(res, (mlhs - mrhs).cwiseAbs().maxCoeff());
      }
      if (res < best_res) {
        best_res = res;
        best_gamma = g;
      }
    }
    result.worst_residual = std::max(result.worst_residual,
                                     best_res == std::numeric_limits<double>::infinity() ? 1.0 : best_res);
    if (best_gamma < 0 || best_res > par.tol_cocycle) {
      result.ok = false;
      result.note = "no group element satisfies the three identities on a cluster";
    }
    result.gamma_per_cluster.push_back(best_gamma);
  }
  return result;
}

/// Normal-derivative (tangent bundle) condition for one coordinate change:
/// at sampled zeros of s_q in the domain, d_fiber s_p maps the normal space
/// of the embedding isomorphically onto E_p / phi_hat(E_q).
inline ValidationReport check_tangent_condition(const KuranishiStructure& s, const std::string& pn,
                                                const std::string& qn, const SampleParams& par = {}) {
  ValidationReport rep;
  rep.subject = "tangent condition " + qn + " -> " + pn;
  const CoordinateChange* cc = s.change(qn, pn);
  if (!cc) {
    rep.fail("change_present", 1.0, "no coordinate change for the pair");
    return rep;
  }
  const KuranishiChart& p = s.chart(pn);
  const KuranishiChart& q = s.chart(qn);
  int normal_dim = p.dim() - q.dim();
  int quot_rank = p.obstruction_rank - q.obstruction_rank;
  if (normal_dim != quot_rank) {
    rep.fail("dimension_match", 1.0, "n_p - n_q != k_p - k_q");
    return rep;
  }
  if (normal_dim == 0) {
    rep.pass("normal_rank_zero");
    return rep;
  }

  // zeros of s_q inside the change domain
  KuranishiChart qd = q;
  qd.region = cc->domain;
  auto zeros = chart_zeros(qd, par.grid);
  Check& ch = rep.add("normal_derivative_isomorphism");
  double worst_det = std::numeric_limits<double>::infinity();
  for (const Vec& z : zeros) {
    Mat dphi = cc->phi.jacobian(z);  // n_p x n_q
    // orthonormal basis of the normal space = complement of im(dphi)
    Eigen::HouseholderQR<Mat> qr(dphi);
    Mat Q = qr.householderQ();
    Mat N = Q.rightCols(normal_dim);
    Vec pz = cc->phi.eval(z);
    Mat dsp = p.section.jacobian(pz);  // k_p x n_p
    Mat hat = cc->phi_hat_at(z);       // k_p x k_q
    // quotient by im(phi_hat): orthonormal complement
    Mat M = dsp * N;  // k_p x normal_dim
    if (q.obstruction_rank > 0) {
      Eigen::HouseholderQR<Mat> qe(hat);
      Mat Qe = qe.householderQ();
      Mat C = Qe.rightCols(quot_rank);  // complement of im(phi_hat)
      M = C.transpose() * M;            // quot_rank x normal_dim
    }
    double d = std::abs(M.determinant());
    if (d < worst_det) {
      worst_det = d;
      if (d <= par.tol_tangent_det) ch.witness = to_std(z);
    }
  }
  if (zeros.empty()) {
    ch.note = "no zeros sampled in the change domain";
  } else {
    ch.residual = worst_det;
    ch.passed = worst_det > par.tol_tangent_det;
    if (!ch.passed) ch.note = "normal determinant below tolerance";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Strongly continuous maps

struct StronglyContinuousMap {
  std::vector<SmoothMap> per_chart;  // indexed like structure.charts
  int target_dim = 0;
};

inline StronglyContinuousMap scmap_from_json(const Json& j, const KuranishiStructure& s) {
  require_keys(j, "map", {"target_dim", "components"});
  StronglyContinuousMap f;
  f.target_dim = j["target_dim"].get<int>();
  const Json& comp = j["components"];
  if (comp.size() != s.charts.size())
    throw ParseError("map: need one component list per chart");
  for (size_t i = 0; i < comp.size(); ++i) {
    SmoothMap m = map_from_json(comp[i], s.charts[i].dim(), "map component");
    if (m.coarity() != f.target_dim) throw ParseError("map: component target dim mismatch");
    f.per_chart.push_back(std::move(m));
  }
  return f;
}

inline ValidationReport validate_scmap(const StronglyContinuousMap& f, const KuranishiStructure& s,
                                       const SampleParams& par = {}) {
  ValidationReport rep;
  rep.subject = "strongly continuous map";
  double worst = 0;
  for (const auto& cc : s.changes) {
    size_t qi = 0, pi = 0;
    for (size_t i = 0; i < s.charts.size(); ++i) {
      if (s.charts[i].name == cc.from) qi = i;
      if (s.charts[i].name == cc.to) pi = i;
    }
    for (const Vec& x : cc.domain.sample_grid(par.grid)) {
      Vec lhs = f.per_chart[pi].eval(cc.phi.eval(x));
      Vec rhs = f.per_chart[qi].eval(x);
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  }
  // Gamma-invariance per chart
  for (size_t i = 0; i < s.charts.size(); ++i) {
    const KuranishiChart& c = s.charts[i];
    for (const Vec& x : c.region.sample_grid(par.grid))
      for (int g = 0; g < c.group.size(); ++g)
        worst = std::max(worst, (f.per_chart[i].eval(c.group.act_v(g, x, c.region)) -
                                 f.per_chart[i].eval(x))
                                    .cwiseAbs()
                                    .maxCoeff());
  }
  Check& ch = rep.add("compatibility");
  ch.residual = worst;
  ch.passed = worst <= par.tol_equivariance;
  return rep;
}

}  // namespace vfc

#endif  // VFC_KURANISHI_HPP
