#include <catch2/catch_amalgamated.hpp>

#include "vfc/kuranishi.hpp"
#include "vfc/orbifold.hpp"

using namespace vfc;

namespace {

std::string fixture(const std::string& name) { return std::string(VFC_FIXTURE_DIR) + "/" + name; }

FiniteGroupAction z2_line(double e_sign) {
  FiniteGroupAction::Element id, g;
  id.v = Mat::Identity(1, 1);
  id.t = Vec::Zero(1);
  id.e = Mat::Identity(1, 1) * 1.0;
  g.v = -Mat::Identity(1, 1);
  g.t = Vec::Zero(1);
  g.e = Mat::Identity(1, 1) * e_sign;
  return FiniteGroupAction({{0, 1}, {1, 0}}, {id, g});
}

// Three nested interval charts with inclusion changes, rank-zero bundles,
// optionally twisting the long change.
KuranishiStructure interval_triple(bool z2, const Expr& phi31_expr) {
  KuranishiStructure s;
  s.virtual_dimension = 1;
  for (int i = 0; i < 3; ++i) {
    KuranishiChart c;
    c.name = "k" + std::to_string(i + 1);
    c.region = Region::box1d(-1 - i, 1 + i);
    c.obstruction_rank = 0;
    c.group = z2 ? FiniteGroupAction({{0, 1}, {1, 0}},
                                     {{Mat::Identity(1, 1), Vec::Zero(1), Mat::Zero(0, 0)},
                                      {-Mat::Identity(1, 1), Vec::Zero(1), Mat::Zero(0, 0)}})
                 : FiniteGroupAction::trivial(1, 0);
    c.section = SmoothMap(1, {});
    c.base_point = Vec::Zero(1);
    s.charts.push_back(c);
  }
  auto mk = [&](const std::string& from, const std::string& to, Expr e) {
    CoordinateChange cc;
    cc.from = from;
    cc.to = to;
    cc.domain = Region::box1d(-1, 1);
    cc.phi = SmoothMap(1, {std::move(e)});
    cc.phi_hat = {};
    cc.group_hom = z2 ? std::vector<int>{0, 1} : std::vector<int>{0};
    return cc;
  };
  s.changes.push_back(mk("k1", "k2", Expr::var(0)));
  s.changes.push_back(mk("k2", "k3", Expr::var(0)));
  s.changes.push_back(mk("k1", "k3", phi31_expr));
  return s;
}

}  // namespace

TEST_CASE("validate_chart: equivariant identity section passes") {
  KuranishiStructure s = load_structure(fixture("z2_plane.json"));
  ValidationReport rep = validate_chart(s.charts[0], {}, s.virtual_dimension);
  INFO(rep.to_json().dump(2));
  CHECK(rep.passed());
  CHECK(rep.worst_residual() <= 1e-12);
}

TEST_CASE("validate_chart: parity mismatch fails equivariance") {
  KuranishiChart c;
  c.name = "bad";
  c.region = Region::box1d(-1, 1);
  c.obstruction_rank = 1;
  c.group = z2_line(+1.0);  // trivial action on E
  c.section = SmoothMap(1, {parse_expr("x0")});
  c.base_point = Vec::Zero(1);
  ValidationReport rep = validate_chart(c);
  CHECK_FALSE(rep.passed());
  const Check* eq = rep.find("section_equivariance");
  REQUIRE(eq);
  CHECK_FALSE(eq->passed);
  CHECK(eq->residual > 0.1);
}

TEST_CASE("validate_chart: fixture section (y,z) on the 3-space chart passes") {
  KuranishiStructure s = load_structure(fixture("threechart.json"));
  ValidationReport rep = validate_chart(s.chart("c3"), {}, s.virtual_dimension);
  INFO(rep.to_json().dump(2));
  CHECK(rep.passed());
}

TEST_CASE("validate_coordinate_change: axis into parabola-bounded plane chart") {
  KuranishiStructure s = load_structure(fixture("threechart.json"));
  ValidationReport rep = validate_coordinate_change(*s.change("c1", "c2"), s);
  INFO(rep.to_json().dump(2));
  CHECK(rep.passed());
}

TEST_CASE("validate_coordinate_change: identity change passes") {
  KuranishiStructure s = load_structure(fixture("z2_plane.json"));
  CoordinateChange cc;
  cc.from = cc.to = "c";
  cc.domain = s.charts[0].region;
  cc.phi = SmoothMap::identity(2);
  cc.phi_hat = {{parse_expr("1"), parse_expr("0")}, {parse_expr("0"), parse_expr("1")}};
  cc.group_hom = {0, 1};
  ValidationReport rep = validate_coordinate_change(cc, s);
  INFO(rep.to_json().dump(2));
  CHECK(rep.passed());
}

TEST_CASE("validate_coordinate_change: constant offset breaks section compatibility") {
  KuranishiStructure s = load_structure(fixture("threechart.json"));
  CoordinateChange cc = *s.change("c2", "c3");
  cc.phi = SmoothMap(2, {parse_expr("x0"), parse_expr("x1"), parse_expr("1")});  // s3 z-part now 1
  ValidationReport rep = validate_coordinate_change(cc, s);
  const Check* ch = rep.find("section_compat");
  REQUIRE(ch);
  CHECK_FALSE(ch->passed);
  CHECK(ch->residual == Catch::Approx(1.0));
}

TEST_CASE("check_cocycle: nested intervals give identity") {
  KuranishiStructure s = interval_triple(false, Expr::var(0));
  CocycleResult r = check_cocycle(s, "k3", "k2", "k1");
  REQUIRE(r.ok);
  REQUIRE(r.gamma_per_cluster.size() == 1);
  CHECK(r.gamma_per_cluster[0] == 0);
  CHECK(r.worst_residual <= 1e-12);
}

TEST_CASE("check_cocycle: antipodal twist is found by search") {
  KuranishiStructure s = interval_triple(true, -Expr::var(0));
  CocycleResult r = check_cocycle(s, "k3", "k2", "k1");
  REQUIRE(r.ok);
  REQUIRE(!r.gamma_per_cluster.empty());
  for (int g : r.gamma_per_cluster) CHECK(g == 1);
}

TEST_CASE("check_cocycle: translated change fails with residual") {
  KuranishiStructure s =
      interval_triple(false, Expr::var(0) + Expr::constant(Rational(3, 10)));
  CocycleResult r = check_cocycle(s, "k3", "k2", "k1");
  CHECK_FALSE(r.ok);
  CHECK(r.worst_residual >= 0.3 - 1e-12);
}

TEST_CASE("check_cocycle on the paper-style triple passes with identity") {
  KuranishiStructure s = load_structure(fixture("threechart.json"));
  CocycleResult r = check_cocycle(s, "c3", "c2", "c1");
  REQUIRE(r.ok);
  for (int g : r.gamma_per_cluster) CHECK(g == 0);
}

TEST_CASE("check_cocycle is stable under relabeling") {
  KuranishiStructure s = interval_triple(true, -Expr::var(0));
  KuranishiStructure t = s;
  for (auto& c : t.charts) c.name = "chart_" + c.name;
  for (auto& cc : t.changes) {
    cc.from = "chart_" + cc.from;
    cc.to = "chart_" + cc.to;
  }
  CocycleResult a = check_cocycle(s, "k3", "k2", "k1");
  CocycleResult b = check_cocycle(t, "chart_k3", "chart_k2", "chart_k1");
  CHECK(a.ok == b.ok);
  CHECK(a.gamma_per_cluster == b.gamma_per_cluster);
}

TEST_CASE("tangent condition holds on the fixture pairs") {
  KuranishiStructure s = load_structure(fixture("threechart.json"));
  for (auto [p, q] : {std::pair{"c2", "c1"}, {"c3", "c2"}, {"c3", "c1"}}) {
    ValidationReport rep = check_tangent_condition(s, p, q);
    INFO(rep.to_json().dump(2));
    CHECK(rep.passed());
  }
}

TEST_CASE("tangent condition: equal dimension passes vacuously") {
  KuranishiStructure s = interval_triple(false, Expr::var(0));
  ValidationReport rep = check_tangent_condition(s, "k2", "k1");
  CHECK(rep.passed());
  CHECK(rep.find("normal_rank_zero"));
}

TEST_CASE("tangent condition: vanishing normal section fails") {
  KuranishiStructure s;
  s.virtual_dimension = 1;
  KuranishiChart q;
  q.name = "q";
  q.region = Region::box1d(-1, 1);
  q.obstruction_rank = 0;
  q.group = FiniteGroupAction::trivial(1, 0);
  q.section = SmoothMap(1, {});
  q.base_point = Vec::Zero(1);
  s.charts.push_back(q);
  KuranishiChart p;
  p.name = "p";
  Vec lo(2), hi(2);
  lo << -1, -1;
  hi << 1, 1;
  p.region = Region(lo, hi);
  p.obstruction_rank = 1;
  p.group = FiniteGroupAction::trivial(2, 1);
  p.section = SmoothMap(2, {parse_expr("0")});
  p.base_point = Vec::Zero(2);
  s.charts.push_back(p);
  CoordinateChange cc;
  cc.from = "q";
  cc.to = "p";
  cc.domain = Region::box1d(-1, 1);
  cc.phi = SmoothMap(1, {parse_expr("x0"), parse_expr("0")});
  cc.phi_hat = {{}};
  cc.group_hom = {0};
  s.changes.push_back(cc);
  ValidationReport rep = check_tangent_condition(s, "p", "q");
  CHECK_FALSE(rep.passed());
}

TEST_CASE("virtual dimension is one constant across fixture charts") {
  for (const char* f : {"z2_plane.json", "threechart.json", "twochart.json", "x_squared.json"}) {
    KuranishiStructure s = load_structure(fixture(f));
    for (const auto& c : s.charts) CHECK(c.vdim() == s.virtual_dimension);
  }
}

TEST_CASE("unknown JSON keys are rejected") {
  Json j = load_json_file(fixture("z2_plane.json"));
  j["extra"] = 1;
  CHECK_THROWS_AS(structure_from_json(j), ParseError);
  Json j2 = load_json_file(fixture("z2_plane.json"));
  j2["charts"][0]["surprise"] = true;
  CHECK_THROWS_AS(structure_from_json(j2), ParseError);
}

TEST_CASE("structure JSON round trip preserves validation") {
  KuranishiStructure s = load_structure(fixture("threechart.json"));
  Json j = structure_to_json(s);
  KuranishiStructure t = structure_from_json(j);
  REQUIRE(t.charts.size() == s.charts.size());
  for (const auto& c : t.charts) {
    ValidationReport rep = validate_chart(c, {}, t.virtual_dimension);
    CHECK(rep.passed());
  }
}

TEST_CASE("strongly continuous map validation on the fixture") {
  KuranishiStructure s = load_structure(fixture("threechart.json"));
  StronglyContinuousMap f;
  f.target_dim = 1;
  f.per_chart = {SmoothMap(1, {parse_expr("x0")}), SmoothMap(2, {parse_expr("x0")}),
                 SmoothMap(3, {parse_expr("x0")})};
  CHECK(validate_scmap(f, s).passed());

  StronglyContinuousMap bad = f;
  bad.per_chart[2] = SmoothMap(3, {parse_expr("x0 + 1")});
  CHECK_FALSE(validate_scmap(bad, s).passed());
}

TEST_CASE("orbifold embedding: identity, cone point, antipodal line") {
  OrbifoldPresentation plane;
  {
    OrbifoldChart c;
    c.name = "u";
    Vec lo(2), hi(2);
    lo << -1, -1;
    hi << 1, 1;
    c.region = Region(lo, hi);
    FiniteGroupAction::Element id{Mat::Identity(2, 2), Vec::Zero(2), Mat::Zero(0, 0)};
    FiniteGroupAction::Element g{-Mat::Identity(2, 2), Vec::Zero(2), Mat::Zero(0, 0)};
    c.group = FiniteGroupAction({{0, 1}, {1, 0}}, {id, g});
    plane.charts.push_back(c);
  }
  {
    OrbifoldEmbeddingData d;
    d.source_chart = d.target_chart = "u";
    d.map = SmoothMap::identity(2);
    d.group_map = {0, 1};
    CHECK(validate_orbifold_embedding({d}, plane, plane).passed());
  }

  OrbifoldPresentation pt;
  {
    OrbifoldChart c;
    c.name = "pt";
    c.region = Region(Vec(0), Vec(0));
    c.group = FiniteGroupAction::trivial(0, 0);
    pt.charts.push_back(c);
  }
  {
    OrbifoldEmbeddingData d;
    d.source_chart = "pt";
    d.target_chart = "u";
    d.map = SmoothMap(0, {parse_expr("0"), parse_expr("0")});
    d.group_map = {0};
    ValidationReport rep = validate_orbifold_embedding({d}, pt, plane);
    CHECK_FALSE(rep.passed());
    bool iso_failed = false;
    for (const auto& c : rep.checks)
      if (c.name.find("isotropy") != std::string::npos && !c.passed && c.witness) iso_failed = true;
    CHECK(iso_failed);
  }

  OrbifoldPresentation line;
  {
    OrbifoldChart c;
    c.name = "l";
    c.region = Region::box1d(-1, 1);
    FiniteGroupAction::Element id{Mat::Identity(1, 1), Vec::Zero(1), Mat::Zero(0, 0)};
    FiniteGroupAction::Element g{-Mat::Identity(1, 1), Vec::Zero(1), Mat::Zero(0, 0)};
    c.group = FiniteGroupAction({{0, 1}, {1, 0}}, {id, g});
    line.charts.push_back(c);
  }
  {
    OrbifoldEmbeddingData d;
    d.source_chart = "l";
    d.target_chart = "u";
    d.map = SmoothMap(1, {parse_expr("x0"), parse_expr("0")});
    d.group_map = {0, 1};
    CHECK(validate_orbifold_embedding({d}, line, plane).passed());
  }
}

TEST_CASE("chart zeros by Newton seeding") {
  KuranishiStructure s = load_structure(fixture("x_squared.json"));
  // degenerate zero: locator accuracy is sqrt(tol), widen the dedupe radius
  auto zeros = chart_zeros(s.charts[0], 9, 1e-12, 1e-5);
  REQUIRE(zeros.size() == 1);
  CHECK(std::abs(zeros[0][0]) <= 1e-5);
}
