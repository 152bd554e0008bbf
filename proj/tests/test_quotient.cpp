#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vfc/quotient.hpp"

using namespace vfc;

namespace {

std::string fixture(const std::string& name) { return std::string(VFC_FIXTURE_DIR) + "/" + name; }

GluingDiagram load_diagram(const std::string& name) {
  return diagram_from_json(load_json_file(fixture(name)));
}

TaggedPoint tp1(int piece, double a) {
  TaggedPoint t;
  t.piece = piece;
  t.x = Vec(1);
  t.x[0] = a;
  return t;
}

TaggedPoint tp3(int piece, double a, double b, double c) {
  TaggedPoint t;
  t.piece = piece;
  t.x = Vec(3);
  t.x << a, b, c;
  return t;
}

}  // namespace

TEST_CASE("check_assumptions: two glued intervals pass") {
  GluingDiagram d = load_diagram("two_intervals.json");
  ValidationReport rep = check_assumptions(d);
  INFO(rep.to_json().dump(2));
  CHECK(rep.passed());
}

TEST_CASE("check_assumptions: half-open gluing domain fails compactness") {
  GluingDiagram d = load_diagram("doubled_point.json");
  ValidationReport rep = check_assumptions(d);
  CHECK_FALSE(rep.passed());
  bool compact_flagged = false;
  for (const auto& c : rep.checks)
    if (c.name.rfind("domain_compact", 0) == 0 && !c.passed) compact_flagged = true;
  CHECK(compact_flagged);
}

TEST_CASE("check_assumptions: paper three-subset diagram passes") {
  GluingDiagram d = load_diagram("threesubsets.json");
  ValidationReport rep = check_assumptions(d);
  INFO(rep.to_json().dump(2));
  CHECK(rep.passed());
}

TEST_CASE("chain_metric: zero on identical and identified points") {
  GluingDiagram d = load_diagram("two_intervals.json");
  ChainMetric metric(d);
  CHECK(metric.distance(tp1(0, 0.5), tp1(0, 0.5)) == 0.0);
  // inclusion gluing identifies equal coordinates
  CHECK(metric.distance(tp1(0, 0.5), tp1(1, 0.5)) == 0.0);
}

TEST_CASE("chain_metric: straight chain along the axis of the fixture") {
  GluingDiagram d = load_diagram("threesubsets.json");
  ChainMetric metric(d);
  TaggedPoint a = tp3(2, 2, 0, 0);  // in U3
  TaggedPoint b = tp1(0, -1);       // in U1
  CHECK(metric.distance(a, b) == Catch::Approx(3.0).margin(1e-9));
}

TEST_CASE("chain_metric pseudo-metric axioms on random tagged points") {
  GluingDiagram d = load_diagram("threesubsets.json");
  ChainMetric metric(d, {4});
  std::mt19937_64 rng(99);
  auto random_point = [&](int piece) {
    const Region& r = d.pieces[static_cast<size_t>(piece)].region;
    for (;;) {
      Vec x(r.dim());
      for (int i = 0; i < r.dim(); ++i) {
        std::uniform_real_distribution<double> u(r.lo()[i], r.hi()[i]);
        x[i] = u(rng);
      }
      if (r.contains(x)) return TaggedPoint{piece, x};
    }
  };
  for (int trial = 0; trial < 40; ++trial) {
    TaggedPoint a = random_point(static_cast<int>(rng() % 3));
    TaggedPoint b = random_point(static_cast<int>(rng() % 3));
    TaggedPoint c = random_point(static_cast<int>(rng() % 3));
    double ab = metric.distance(a, b);
    double ba = metric.distance(b, a);
    double ac = metric.distance(a, c);
    double cb = metric.distance(c, b);
    CHECK(ab == Catch::Approx(ba).margin(1e-12));
    CHECK(ab <= ac + cb + 1e-12);
    CHECK(metric.distance(a, a) == 0.0);
  }
}

TEST_CASE("inclusion diagrams: distance zero iff equivalent on samples") {
  GluingDiagram d = load_diagram("two_intervals.json");
  ChainMetric metric(d, {5});
  for (const Vec& x : d.pieces[0].region.sample_grid(5))
    for (const Vec& y : d.pieces[1].region.sample_grid(5)) {
      TaggedPoint a{0, x}, b{1, y};
      double dist = metric.distance(a, b);
      bool equiv = metric.same_class(a, b);
      if (equiv)
        CHECK(dist <= 1e-12);
      else
        CHECK(dist > 1e-12);
    }
}

TEST_CASE("removing a piece never decreases the metric") {
  GluingDiagram d = load_diagram("threesubsets.json");
  GluingDiagram d2;  // drop U2 and its gluings
  d2.pieces = {d.pieces[0], d.pieces[2]};
  d2.order = {{"U1", "U3"}};
  d2.gluings = {d.gluings[2]};
  ChainMetric full(d), reduced(d2);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_real_distribution<double> u1(-3, 3), u3(0, 3);
    TaggedPoint a = tp1(0, u1(rng));
    TaggedPoint b{1, Vec(3)};
    b.x << u3(rng), u1(rng), u1(rng);
    TaggedPoint b_full = tp3(2, b.x[0], b.x[1], b.x[2]);
    CHECK(reduced.distance(a, b) >= full.distance(a, b_full) - 1e-9);
  }
}

TEST_CASE("projection of a maximal isolated piece is isometric") {
  GluingDiagram d;
  GluingPiece p;
  p.name = "solo";
  p.ambient = "plane";
  Vec lo(2), hi(2);
  lo << -1, -1;
  hi << 1, 1;
  p.region = Region(lo, hi);
  d.pieces.push_back(p);
  ChainMetric metric(d);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 30; ++trial) {
    TaggedPoint a{0, Vec(2)}, b{0, Vec(2)};
    a.x << u(rng), u(rng);
    b.x << u(rng), u(rng);
    CHECK(metric.distance(a, b) == Catch::Approx((a.x - b.x).norm()).margin(1e-12));
  }
}

TEST_CASE("hausdorff_report certifies the paper fixture") {
  GluingDiagram d = load_diagram("threesubsets.json");
  HausdorffReport hr = hausdorff_report(d, 500);
  INFO(hr.to_json().dump(2));
  CHECK(hr.certified);
  CHECK(hr.assumptions.passed());
  CHECK(hr.min_separation > 1e-6);
}

TEST_CASE("hausdorff_report flags the doubled point") {
  GluingDiagram d = load_diagram("doubled_point.json");
  HausdorffReport hr = hausdorff_report(d, 500);
  INFO(hr.to_json().dump(2));
  CHECK_FALSE(hr.certified);
  CHECK_FALSE(hr.assumptions.passed());  // half-open domain already flagged
  REQUIRE(hr.violation);
  // the witness pair straddles the doubled origin
  CHECK(std::abs(hr.violation->first.x[0]) <= 0.3);
  CHECK(std::abs(hr.violation->second.x[0]) <= 0.3);
}

TEST_CASE("hausdorff_report certifies a single piece") {
  GluingDiagram d;
  GluingPiece p;
  p.name = "solo";
  p.ambient = "line";
  p.region = Region::box1d(0, 1);
  d.pieces.push_back(p);
  HausdorffReport hr = hausdorff_report(d, 100);
  CHECK(hr.certified);
}

TEST_CASE("neighborhood basis at the origin of the paper fixture") {
  // open variants so the frontier placement matches the Omega description
  GluingDiagram d = load_diagram("threesubsets.json");
  {
    Region u2(d.pieces[1].region.lo(), d.pieces[1].region.hi());
    u2.add_constraint(parse_expr("-x0 - x1^2"), true);
    d.pieces[1].region = u2;
    Region u3 = d.pieces[2].region;
    Vec lo3(3), hi3(3);
    lo3 << -3, -3, -3;
    hi3 << 3, 3, 3;
    Region u3o(lo3, hi3);
    u3o.add_constraint(parse_expr("-x0"), true);
    d.pieces[2].region = u3o;
    d.gluings[0].domain.add_constraint(parse_expr("-x0"), true);
    d.gluings[1].domain.add_constraint(parse_expr("-x0"), true);
    d.gluings[2].domain.add_constraint(parse_expr("-x0"), true);
  }
  double eps = 0.25;
  TaggedPoint origin = tp1(0, 0.0);
  auto basis = neighborhood_basis(origin, d, eps);
  REQUIRE(basis.size() == 3);
  CHECK(basis[0].piece == 0);
  CHECK(basis[1].piece == 1);
  CHECK(basis[2].piece == 2);
  // radii 3eps, 2eps, eps around the representatives
  CHECK(basis[0].omega.contains(tp1(0, 2.9 * eps).x));
  CHECK_FALSE(basis[0].omega.contains(tp1(0, 3.1 * eps).x));
  Vec in2(2);
  in2 << 1.9 * eps, 0;
  CHECK(basis[1].omega.contains(in2));
  in2 << 2.1 * eps, 0;
  CHECK_FALSE(basis[1].omega.contains(in2));
  Vec in3(3);
  in3 << 0.9 * eps, 0, 0;
  CHECK(basis[2].omega.contains(in3));
  in3 << 1.1 * eps, 0, 0;
  CHECK_FALSE(basis[2].omega.contains(in3));

  ValidationReport rep = check_neighborhood_basis(basis, origin, d, eps);
  INFO(rep.to_json().dump(2));
  CHECK(rep.passed());
}

TEST_CASE("neighborhood basis: interior point of a maximal piece is a single ball") {
  GluingDiagram d = load_diagram("two_intervals.json");
  TaggedPoint x = tp1(1, 1.5);
  auto basis = neighborhood_basis(x, d, 0.2);
  REQUIRE(basis.size() == 1);
  CHECK(basis[0].piece == 1);
  CHECK(check_neighborhood_basis(basis, x, d, 0.2).passed());
}

TEST_CASE("neighborhood basis: junction point of nested intervals has two terms") {
  GluingDiagram d = load_diagram("two_intervals.json");
  // interior of I1, frontier of the gluing image in I2? the junction is at
  // the end of the overlap: x = 1 sits inside I1 and on the frontier of I2's
  // overlap; representatives exist in both pieces.
  TaggedPoint x = tp1(0, 0.0);
  auto basis = neighborhood_basis(x, d, 0.1);
  CHECK(basis.size() == 2);
  CHECK(check_neighborhood_basis(basis, x, d, 0.1).passed());
}

TEST_CASE("quotient complex canonical representative is stable and maximal") {
  GluingDiagram d = load_diagram("two_intervals.json");
  QuotientComplex qc(d);
  TaggedPoint a = tp1(0, 0.25);
  TaggedPoint c1 = qc.canonical(a);
  TaggedPoint c2 = qc.canonical(a);
  CHECK(c1.piece == 1);  // maximal piece
  CHECK(c1.piece == c2.piece);
  CHECK(c1.x == c2.x);
  CHECK(qc.distance(a, c1) == 0.0);
}
