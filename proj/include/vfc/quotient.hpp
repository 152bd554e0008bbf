#ifndef VFC_QUOTIENT_HPP
#define VFC_QUOTIENT_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "vfc/group_action.hpp"
#include "vfc/json_io.hpp"
#include "vfc/numerics.hpp"

namespace vfc {

/// Poset-indexed compact pieces with embeddings from lower into higher
/// pieces; the quotient by the induced identifications realizes the glued
/// space.
struct GluingPiece {
  std::string name;
  std::string ambient;  // label only; the metric is Euclidean in the region
  Region region;
};

struct Gluing {
  std::string hi, lo;
  Region domain;  // subset of piece `lo`
  SmoothMap map;  // into piece `hi`
};

struct GluingDiagram {
  std::vector<GluingPiece> pieces;
  std::vector<std::pair<std::string, std::string>> order;  // (lo, hi) relations
  std::vector<Gluing> gluings;

  int piece_index(const std::string& name) const {
    for (size_t i = 0; i < pieces.size(); ++i)
      if (pieces[i].name == name) return static_cast<int>(i);
    throw std::invalid_argument("no piece named '" + name + "'");
  }
  bool less(const std::string& lo, const std::string& hi) const {
    std::vector<std::string> frontier{lo};
    std::vector<std::string> seen;
    while (!frontier.empty()) {
      std::string cur = frontier.back();
      frontier.pop_back();
      for (const auto& [l, h] : order)
        if (l == cur) {
          if (h == hi) return true;
          bool visited = false;
          for (const auto& s : seen) visited |= (s == h);
          if (!visited) {
            seen.push_back(h);
            frontier.push_back(h);
          }
        }
    }
    return false;
  }
};

struct TaggedPoint {
  int piece = -1;
  Vec x;
};

/// L2 distance inside one piece, treating periodic axes as circles.
inline double piece_distance(const Region& r, const Vec& a, const Vec& b) {
  double s = 0;
  Vec wa = r.wrap(a), wb = r.wrap(b);
  for (Eigen::Index i = 0; i < wa.size(); ++i) {
    double d = std::abs(wa[i] - wb[i]);
    if (r.is_periodic(static_cast<int>(i))) {
      double p = r.period(static_cast<int>(i));
      d = std::min(d, p - d);
    }
    s += d * d;
  }
  return std::sqrt(s);
}

struct MetricParams {
  int resolution = 5;
  double hop_tol = 1e-9;
  size_t max_nodes = 20000;
};

/// Shortest-path engine over a sampled relation graph: nodes are tagged
/// points, within-piece edges cost their Euclidean distance, and hops along
/// gluings (both directions) or finite-group orbits cost zero.  A graph is
/// built once per query batch; distances are Dijkstra runs on it.
class ChainMetric {
 public:
  using Params = MetricParams;

  ChainMetric(const GluingDiagram& d, MetricParams params = MetricParams(),
              std::vector<const FiniteGroupAction*> groups = {})
      : diagram_(d), par_(params), groups_(std::move(groups)) {
    if (!groups_.empty() && groups_.size() != d.pieces.size())
      throw std::invalid_argument("chain metric: one group per piece or none");
  }

  const GluingDiagram& diagram() const { return diagram_; }

  /// Batch graph over the gluing-domain anchors plus the query points.
  struct Graph {
    std::vector<TaggedPoint> nodes;
    std::vector<size_t> query_index;  // node index of each query point
    std::vector<int> zero_component;  // label of the zero-cost component
    std::vector<std::vector<std::pair<size_t, double>>> adj;
  };

  /// `exact_queries` additionally closes query nodes under Newton preimages,
  /// so identified query pairs come out at exactly zero distance.
  Graph build_graph(const std::vector<TaggedPoint>& queries, bool exact_queries = true) const {
    Graph g;
    for (const Gluing& gl : diagram_.gluings) {
      int lo = diagram_.piece_index(gl.lo);
      for (const Vec& x : gl.domain.sample_grid(par_.resolution))
        add_with_closure(g.nodes, {lo, x}, false);
    }
    for (const TaggedPoint& q : queries) {
      check_point(q);
      g.query_index.push_back(add_with_closure(g.nodes, q, exact_queries));
    }
    build_edges(g);
    return g;
  }

  double distance_in(const Graph& g, size_t qa, size_t qb) const {
    return dijkstra_all(g, g.query_index[qa])[g.query_index[qb]];
  }

  /// Single-source distances to every query point.
  std::vector<double> distances_from(const Graph& g, size_t qa) const {
    auto dist = dijkstra_all(g, g.query_index[qa]);
    std::vector<double> out;
    for (size_t qi : g.query_index) out.push_back(dist[qi]);
    return out;
  }

  bool same_class_in(const Graph& g, size_t qa, size_t qb) const {
    return g.zero_component[g.query_index[qa]] == g.zero_component[g.query_index[qb]];
  }

  // Convenience single-pair front ends.
  double distance(const TaggedPoint& a, const TaggedPoint& b) const {
    Graph g = build_graph({a, b});
    return distance_in(g, 0, 1);
  }
  bool same_class(const TaggedPoint& a, const TaggedPoint& b) const {
    Graph g = build_graph({a, b});
    return same_class_in(g, 0, 1);
  }

  /// All representatives of the class of `a` discovered by zero-hop closure,
  /// at most one per piece (first found, deterministic).
  std::vector<TaggedPoint> representatives(const TaggedPoint& a) const {
    check_point(a);
    std::vector<TaggedPoint> nodes;
    add_with_closure(nodes, a, true);
    std::vector<TaggedPoint> reps;
    for (const TaggedPoint& n : nodes) {
      bool have = false;
      for (const auto& r : reps) have |= (r.piece == n.piece);
      if (!have) reps.push_back(n);
    }
    return reps;
  }

  /// Direct one-step relation (used by equivalence and transitivity checks).
  bool directly_related(const TaggedPoint& a, const TaggedPoint& b, double tol = 1e-9) const {
    if (a.piece == b.piece)
      return piece_distance(diagram_.pieces[static_cast<size_t>(a.piece)].region, a.x, b.x) <= tol;
    for (const Gluing& g : diagram_.gluings) {
      int lo = diagram_.piece_index(g.lo), hi = diagram_.piece_index(g.hi);
      const Region& hr = diagram_.pieces[static_cast<size_t>(hi)].region;
      if (a.piece == lo && b.piece == hi && g.domain.contains(a.x, tol) &&
          piece_distance(hr, g.map.eval(a.x), b.x) <= tol)
        return true;
      if (b.piece == lo && a.piece == hi && g.domain.contains(b.x, tol) &&
          piece_distance(hr, g.map.eval(b.x), a.x) <= tol)
        return true;
    }
    return false;
  }

 private:
  void check_point(const TaggedPoint& p) const {
    if (p.piece < 0 || p.piece >= static_cast<int>(diagram_.pieces.size()))
      throw std::invalid_argument("tagged point: bad piece index");
    if (!diagram_.pieces[static_cast<size_t>(p.piece)].region.contains(p.x, 1e-7))
      throw std::invalid_argument("tagged point outside its declared piece");
  }

  // Appends the node and every zero-cost relative (gluing images, gluing
  // preimages, group orbit) not already present.  Returns the node's index.
  size_t add_with_closure(std::vector<TaggedPoint>& nodes, TaggedPoint seed, bool backward) const {
    size_t seed_index = push_unique(nodes, std::move(seed));
    for (size_t i = seed_index; i < nodes.size() && nodes.size() < par_.max_nodes; ++i) {
      TaggedPoint cur = nodes[i];
      const Region& creg = diagram_.pieces[static_cast<size_t>(cur.piece)].region;
      if (!groups_.empty() && groups_[static_cast<size_t>(cur.piece)]) {
        const FiniteGroupAction* G = groups_[static_cast<size_t>(cur.piece)];
        for (int g = 0; g < G->size(); ++g) push_unique(nodes, {cur.piece, G->act_v(g, cur.x, creg)});
      }
      for (const Gluing& g : diagram_.gluings) {
        int lo = diagram_.piece_index(g.lo), hi = diagram_.piece_index(g.hi);
        if (cur.piece == lo && g.domain.contains(cur.x, par_.hop_tol))
          push_unique(nodes, {hi, g.map.eval(cur.x)});
        if (backward && cur.piece == hi) {
          auto f = [&](const Vec& y) { return Vec(g.map.eval(y) - cur.x); };
          auto jf = [&](const Vec& y) { return g.map.jacobian(y); };
          for (const Vec& s : g.domain.sample_grid(3)) {
            auto y = newton_zero(f, jf, g.domain, s, 1e-12);
            if (y && piece_distance(diagram_.pieces[static_cast<size_t>(hi)].region, g.map.eval(*y),
                                    cur.x) <= par_.hop_tol) {
              push_unique(nodes, {lo, *y});
              break;
            }
          }
        }
      }
    }
    return seed_index;
  }

  size_t push_unique(std::vector<TaggedPoint>& nodes, TaggedPoint n) const {
    const Region& r = diagram_.pieces[static_cast<size_t>(n.piece)].region;
    n.x = r.wrap(n.x);
    for (size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].piece == n.piece && piece_distance(r, nodes[i].x, n.x) <= par_.hop_tol) return i;
    nodes.push_back(std::move(n));
    return nodes.size() - 1;
  }

  void build_edges(Graph& g) const {
    size_t n = g.nodes.size();
    g.adj.assign(n, {});
    std::vector<int> parent(n);
    for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int a) {
      while (parent[static_cast<size_t>(a)] != a) {
        parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
        a = parent[static_cast<size_t>(a)];
      }
      return a;
    };
    for (size_t i = 0; i < n; ++i)
      for (size_t k = i + 1; k < n; ++k) {
        double w;
        if (g.nodes[i].piece == g.nodes[k].piece) {
          w = piece_distance(diagram_.pieces[static_cast<size_t>(g.nodes[i].piece)].region,
                             g.nodes[i].x, g.nodes[k].x);
        } else if (directly_related(g.nodes[i], g.nodes[k], par_.hop_tol)) {
          w = 0;
        } else {
          continue;
        }
        g.adj[i].push_back({k, w});
        g.adj[k].push_back({i, w});
        if (w <= par_.hop_tol)
          parent[static_cast<size_t>(find(static_cast<int>(i)))] = find(static_cast<int>(k));
      }
    g.zero_component.resize(n);
    for (size_t i = 0; i < n; ++i) g.zero_component[i] = find(static_cast<int>(i));
  }

  std::vector<double> dijkstra_all(const Graph& g, size_t src) const {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(g.nodes.size(), inf);
    dist[src] = 0;
    using Item = std::pair<double, size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0, src});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (auto [v, w] : g.adj[u])
        if (d + w < dist[v]) {
          dist[v] = d + w;
          pq.push({d + w, v});
        }
    }
    return dist;
  }

  const GluingDiagram& diagram_;
  MetricParams par_;
  std::vector<const FiniteGroupAction*> groups_;
};

/// The glued space with canonical class representatives and cached metric
/// queries.
class QuotientComplex {
 public:
  explicit QuotientComplex(GluingDiagram diagram, MetricParams params = MetricParams(),
                           std::vector<const FiniteGroupAction*> groups = {})
      : diagram_(std::move(diagram)), metric_(diagram_, params, std::move(groups)) {}

  const GluingDiagram& diagram() const { return diagram_; }
  const ChainMetric& metric() const { return metric_; }

  double distance(const TaggedPoint& a, const TaggedPoint& b) const {
    auto key = std::make_pair(key_of(a), key_of(b));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    double d = metric_.distance(a, b);
    cache_[key] = d;
    cache_[{key.second, key.first}] = d;  // symmetry, by construction
    return d;
  }

  /// Canonical representative: the representative in the largest piece
  /// (maximal in the order; ties broken by discovery order).
  TaggedPoint canonical(const TaggedPoint& a) const {
    auto reps = metric_.representatives(a);
    TaggedPoint best = reps.front();
    for (const auto& r : reps) {
      const std::string& bn = diagram_.pieces[static_cast<size_t>(best.piece)].name;
      const std::string& rn = diagram_.pieces[static_cast<size_t>(r.piece)].name;
      if (diagram_.less(bn, rn)) best = r;
    }
    return best;
  }

 private:
  static std::string key_of(const TaggedPoint& p) {
    std::string k = std::to_string(p.piece);
    for (Eigen::Index i = 0; i < p.x.size(); ++i) {
      double v = p.x[i];
      k.append(reinterpret_cast<const char*>(&v), sizeof(double));
    }
    return k;
  }

  GluingDiagram diagram_;
  ChainMetric metric_;
  mutable std::map<std::pair<std::string, std::string>, double> cache_;
};

// ---------------------------------------------------------------------------
// JSON

inline GluingDiagram diagram_from_json(const Json& j) {
  require_keys(j, "diagram", {"pieces", "order", "gluings"});
  GluingDiagram d;
  for (const Json& pj : j["pieces"]) {
    require_keys(pj, "piece", {"name", "ambient", "region"});
    GluingPiece p;
    p.name = pj["name"].get<std::string>();
    p.ambient = pj["ambient"].get<std::string>();
    p.region = region_from_json(pj["region"], "piece " + p.name);
    d.pieces.push_back(std::move(p));
  }
  for (const Json& oj : j["order"]) {
    if (!oj.is_array() || oj.size() != 2) throw ParseError("order entry must be [lo,hi]");
    d.order.emplace_back(oj[0].get<std::string>(), oj[1].get<std::string>());
  }
  for (const Json& gj : j["gluings"]) {
    require_keys(gj, "gluing", {"hi", "lo", "domain_region", "map"});
    Gluing g;
    g.hi = gj["hi"].get<std::string>();
    g.lo = gj["lo"].get<std::string>();
    int lo_idx = d.piece_index(g.lo);
    g.domain = region_from_json(gj["domain_region"], "gluing domain");
    g.map = map_from_json(gj["map"], d.pieces[static_cast<size_t>(lo_idx)].region.dim(), "gluing map");
    d.gluings.push_back(std::move(g));
  }
  return d;
}

inline Json diagram_to_json(const GluingDiagram& d) {
  Json j;
  Json ps = Json::array();
  for (const auto& p : d.pieces)
    ps.push_back(Json{{"name", p.name}, {"ambient", p.ambient}, {"region", region_to_json(p.region)}});
  j["pieces"] = ps;
  Json os = Json::array();
  for (const auto& [lo, hi] : d.order) os.push_back(Json::array({lo, hi}));
  j["order"] = os;
  Json gs = Json::array();
  for (const auto& g : d.gluings)
    gs.push_back(Json{{"hi", g.hi},
                      {"lo", g.lo},
                      {"domain_region", region_to_json(g.domain)},
                      {"map", map_to_json(g.map)}});
  j["gluings"] = gs;
  return j;
}

// ---------------------------------------------------------------------------
// Checks

/// Compactness of pieces and gluing domains, embedding injectivity on grids,
/// and transitivity of the induced relation over sampled triples.
inline ValidationReport check_assumptions(const GluingDiagram& d, int resolution = 5) {
  ValidationReport rep;
  rep.subject = "gluing diagram";

  for (const auto& p : d.pieces) {
    Check& ch = rep.add("compact:" + p.name);
    if (!p.region.bounded()) {
      ch.passed = false;
      ch.note = "unbounded box";
      continue;
    }
    for (const auto& c : p.region.constraints())
      if (c.open) {
        ch.passed = false;
        ch.note = "open constraint: region is not closed";
      }
  }

  for (const Gluing& g : d.gluings) {
    std::string tag = g.lo + "->" + g.hi;
    Check& dom = rep.add("domain_compact:" + tag);
    if (!g.domain.bounded()) {
      dom.passed = false;
      dom.note = "unbounded domain";
    }
    for (const auto& c : g.domain.constraints())
      if (c.open) {
        dom.passed = false;
        dom.note = "open constraint: domain is not closed";
      }

    Check& ord = rep.add("order:" + tag);
    ord.passed = d.less(g.lo, g.hi);
    if (!ord.passed) ord.note = "gluing does not follow the declared order";

    int lo = d.piece_index(g.lo), hi = d.piece_index(g.hi);
    auto pts = g.domain.sample_grid(resolution);
    Check& inj = rep.add("injective:" + tag);
    Check& inside = rep.add("domain_and_image_inside:" + tag);
    double min_gap = std::numeric_limits<double>::infinity();
    std::vector<Vec> images;
    for (const Vec& x : pts) {
      if (!d.pieces[static_cast<size_t>(lo)].region.contains(x, 1e-9)) {
        inside.passed = false;
        inside.witness = to_std(x);
        inside.note = "domain leaves the lower piece";
      }
      Vec fx = g.map.eval(x);
      if (!d.pieces[static_cast<size_t>(hi)].region.contains(fx, 1e-7)) {
        inside.passed = false;
        inside.witness = to_std(x);
        inside.note = "image leaves the higher piece";
      }
      if (smallest_singular_value(g.map.jacobian(x)) <= 1e-10) {
        inj.passed = false;
        inj.witness = to_std(x);
        inj.note = "degenerate differential";
      }
      images.push_back(fx);
    }
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t k = i + 1; k < pts.size(); ++k) {
        double src = (pts[i] - pts[k]).norm();
        double dst = (images[i] - images[k]).norm();
        if (src > 1e-9) min_gap = std::min(min_gap, dst / src);
        if (src > 1e-9 && dst <= 1e-12) {
          inj.passed = false;
          inj.witness = to_std(pts[i]);
          inj.note = "two grid points share an image";
        }
      }
    inj.residual = (min_gap == std::numeric_limits<double>::infinity()) ? 0 : min_gap;
  }

  // Transitivity of the relation on sampled chains x ~ y ~ z.
  {
    Check& tr = rep.add("relation_transitive");
    ChainMetric metric(d, {resolution});
    for (const Gluing& g1 : d.gluings) {
      int lo1 = d.piece_index(g1.lo), hi1 = d.piece_index(g1.hi);
      for (const Vec& x : g1.domain.sample_grid(resolution)) {
        TaggedPoint a{lo1, x};
        TaggedPoint b{hi1, g1.map.eval(x)};
        for (const Gluing& g2 : d.gluings) {
          int lo2 = d.piece_index(g2.lo), hi2 = d.piece_index(g2.hi);
          if (lo2 == b.piece && g2.domain.contains(b.x, 1e-9)) {
            TaggedPoint c{hi2, g2.map.eval(b.x)};
            if (!metric.directly_related(a, c)) {
              tr.passed = false;
              tr.witness = to_std(x);
              tr.note = "x~y~z but x and z are not directly related (" + g1.lo + "->" + g1.hi +
                        "->" + g2.hi + ")";
            }
          }
          if (lo2 == a.piece && hi2 != b.piece && g2.domain.contains(a.x, 1e-9)) {
            TaggedPoint c{hi2, g2.map.eval(a.x)};
            if (!metric.directly_related(b, c)) {
              tr.passed = false;
              tr.witness = to_std(x);
              tr.note = "two upward images of one point are not directly related";
            }
          }
        }
      }
    }
  }
  return rep;
}

struct HausdorffReport {
  bool certified = false;
  double min_separation = std::numeric_limits<double>::infinity();
  std::optional<std::pair<TaggedPoint, TaggedPoint>> violation;
  ValidationReport assumptions;
  int resolution = 0;
  Json to_json() const {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["certified"] = certified;
    j["min_separation"] = std::isfinite(min_separation) ? min_separation : -1.0;
    j["resolution"] = resolution;
    j["assumptions_passed"] = assumptions.passed();
    if (violation) {
      j["violation"] = Json{{"piece_a", violation->first.piece},
                            {"x_a", to_std(violation->first.x)},
                            {"piece_b", violation->second.piece},
                            {"x_b", to_std(violation->second.x)}};
    }
    return j;
  }
};

/// Positivity of the chain pseudo-metric over all sampled non-equivalent
/// pairs.  A pair at zero distance, or whose distance keeps shrinking with
/// the mesh (infimum zero), is a Hausdorff violation.
inline HausdorffReport hausdorff_report(const GluingDiagram& d, int sample_budget = 2000,
                                        double separation = 1e-6) {
  HausdorffReport hr;
  hr.assumptions = check_assumptions(d);

  int res = 2;
  for (int r = 3; r <= 9; ++r) {
    size_t total = 0;
    for (const auto& p : d.pieces) {
      size_t n = 1;
      for (int i = 0; i < p.region.dim(); ++i) n *= static_cast<size_t>(r);
      total += n;
    }
    if (total > static_cast<size_t>(sample_budget)) break;
    res = r;
  }
  hr.resolution = res;

  ChainMetric metric(d, {res});
  std::vector<TaggedPoint> samples;
  for (size_t pi = 0; pi < d.pieces.size(); ++pi)
    for (const Vec& x : d.pieces[pi].region.sample_grid(res))
      samples.push_back({static_cast<int>(pi), x});
  ChainMetric::Graph g = metric.build_graph(samples, false);

  double mesh = 0;
  for (const Gluing& gl : d.gluings)
    for (int i = 0; i < gl.domain.dim(); ++i)
      mesh = std::max(mesh, (gl.domain.hi()[i] - gl.domain.lo()[i]) / std::max(1, res - 1));

  // refined graphs are built lazily and shared across all candidate pairs
  std::optional<ChainMetric> metric2, metric4;
  std::optional<ChainMetric::Graph> g2, g4;
  auto refined = [&](int factor) -> std::pair<ChainMetric&, ChainMetric::Graph&> {
    auto& m = (factor == 2) ? metric2 : metric4;
    auto& gr = (factor == 2) ? g2 : g4;
    if (!m) {
      m.emplace(d, MetricParams{res * factor});
      gr = m->build_graph(samples, false);
    }
    return {*m, *gr};
  };

  double min_sep = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < samples.size(); ++i) {
    std::vector<double> dist = metric.distances_from(g, i);
    for (size_t k = i + 1; k < samples.size(); ++k) {
      if (samples[i].piece == samples[k].piece) continue;  // within-piece pairs separate trivially
      if (metric.same_class_in(g, i, k)) continue;
      double pair_dist = dist[k];
      bool violated = pair_dist <= separation;
      if (!violated && pair_dist <= 2.5 * mesh + separation) {
        // refine: a distance shrinking in lockstep with the mesh has infimum 0
        auto [m2, gr2] = refined(2);
        double d2 = m2.distance_in(gr2, i, k);
        auto [m4, gr4] = refined(4);
        double d4 = m4.distance_in(gr4, i, k);
        if (d4 <= separation || (d4 <= 0.35 * pair_dist && d4 <= 0.7 * d2)) violated = true;
        pair_dist = std::min(pair_dist, d4);
      }
      if (pair_dist < min_sep) min_sep = pair_dist;
      if (violated) {
        hr.violation = {samples[i], samples[k]};
        hr.min_separation = pair_dist;
        hr.certified = false;
        return hr;
      }
    }
  }
  hr.min_separation = min_sep;
  hr.certified = true;
  return hr;
}

// ---------------------------------------------------------------------------
// Neighborhood basis

struct NeighborhoodBasisEntry {
  int piece = -1;
  TaggedPoint representative;
  Region omega;           // closed version
  bool frontier = false;  // representative sits on the piece frontier
};

namespace detail {

inline Region open_variant(const Region& r) {
  Region out(r.lo(), r.hi());
  out.set_periodic(r.periodic_axes());
  for (const auto& c : r.constraints()) out.add_constraint(c.expr, true);
  return out;
}

}  // namespace detail

/// Ordered chart list q_1 <= ... <= q_m with metric-ball pieces Omega_i of
/// radii scale*(m-i+1); the union is a neighborhood of the class of x.
inline std::vector<NeighborhoodBasisEntry> neighborhood_basis(const TaggedPoint& x,
                                                              const GluingDiagram& d, double scale,
                                                              int resolution = 5) {
  ChainMetric metric(d, {resolution});
  auto reps = metric.representatives(x);

  struct Cand {
    TaggedPoint rep;
    bool interior;
  };
  std::vector<Cand> cands;
  for (const auto& r : reps) {
    const Region& reg = d.pieces[static_cast<size_t>(r.piece)].region;
    bool interior = detail::open_variant(reg).contains(r.x, 0.0);
    cands.push_back({r, interior});
  }
  // q1: maximal piece whose representative is interior
  int q1 = -1;
  for (const auto& c : cands) {
    if (!c.interior) continue;
    if (q1 < 0 ||
        d.less(d.pieces[static_cast<size_t>(q1)].name, d.pieces[static_cast<size_t>(c.rep.piece)].name))
      q1 = c.rep.piece;
  }
  if (q1 < 0) throw std::invalid_argument("point has no interior representative in any piece");

  std::vector<Cand> chain;
  for (const auto& c : cands) {
    if (c.rep.piece == q1) continue;
    if (d.less(d.pieces[static_cast<size_t>(q1)].name, d.pieces[static_cast<size_t>(c.rep.piece)].name))
      chain.push_back(c);
  }
  std::sort(chain.begin(), chain.end(), [&](const Cand& a, const Cand& b) {
    return d.less(d.pieces[static_cast<size_t>(a.rep.piece)].name,
                  d.pieces[static_cast<size_t>(b.rep.piece)].name);
  });

  size_t m = 1 + chain.size();
  std::vector<NeighborhoodBasisEntry> out;
  auto push_entry = [&](const Cand& c, size_t pos) {
    double radius = scale * static_cast<double>(m - pos);
    const Region& reg = d.pieces[static_cast<size_t>(c.rep.piece)].region;
    for (int i = 0; i < reg.dim(); ++i) {
      if (reg.is_periodic(i)) continue;
      if (c.rep.x[i] - radius < reg.lo()[i] - 1e-12 || c.rep.x[i] + radius > reg.hi()[i] + 1e-12)
        throw std::invalid_argument("scale too large: Omega closure leaves piece " +
                                    d.pieces[static_cast<size_t>(c.rep.piece)].name);
    }
    NeighborhoodBasisEntry e;
    e.piece = c.rep.piece;
    e.representative = c.rep;
    e.omega = reg.ball_intersection(c.rep.x, radius);
    e.frontier = !c.interior;
    out.push_back(std::move(e));
  };
  for (const auto& c : cands)
    if (c.rep.piece == q1) push_entry(c, 0);
  for (size_t i = 0; i < chain.size(); ++i) push_entry(chain[i], i + 1);
  return out;
}

/// Membership and frontier placement of the representatives, increasing
/// dimensions, and the covering property (every sampled point within
/// scale/2 of x lies in some Omega).
inline ValidationReport check_neighborhood_basis(const std::vector<NeighborhoodBasisEntry>& basis,
                                                 const TaggedPoint& x, const GluingDiagram& d,
                                                 double scale, int resolution = 5) {
  ValidationReport rep;
  rep.subject = "neighborhood basis";
  ChainMetric metric(d, {resolution});

  Check& c1 = rep.add("first_interior");
  if (basis.empty() || basis.front().frontier) c1.passed = false;

  Check& c3 = rep.add("later_on_frontier");
  for (size_t i = 1; i < basis.size(); ++i) {
    const auto& e = basis[i];
    const Region& reg = d.pieces[static_cast<size_t>(e.piece)].region;
    bool in_closed = reg.contains(e.representative.x, 1e-9);
    bool in_open = detail::open_variant(reg).contains(e.representative.x, 0.0);
    if (!in_closed || in_open) {
      c3.passed = false;
      c3.witness = to_std(e.representative.x);
    }
  }

  Check& c6 = rep.add("dimensions_increase");
  for (size_t i = 1; i < basis.size(); ++i)
    if (d.pieces[static_cast<size_t>(basis[i].piece)].region.dim() <=
        d.pieces[static_cast<size_t>(basis.front().piece)].region.dim())
      c6.passed = false;

  Check& cover = rep.add("union_is_neighborhood");
  std::vector<TaggedPoint> queries{x};
  for (size_t pi = 0; pi < d.pieces.size(); ++pi)
    for (const Vec& y : d.pieces[pi].region.sample_grid(resolution))
      queries.push_back({static_cast<int>(pi), y});
  ChainMetric::Graph g = metric.build_graph(queries);
  std::vector<double> dist = metric.distances_from(g, 0);
  for (size_t qi = 1; qi < queries.size(); ++qi) {
    if (dist[qi] > scale / 2) continue;
    bool inside = false;
    for (const auto& rep_y : metric.representatives(queries[qi]))
      for (const auto& e : basis)
        if (rep_y.piece == e.piece && e.omega.contains(rep_y.x, 1e-9)) inside = true;
    if (!inside) {
      cover.passed = false;
      cover.witness = to_std(queries[qi].x);
      cover.note = "point near x missed by every Omega (piece " +
                   d.pieces[static_cast<size_t>(queries[qi].piece)].name + ")";
    }
  }
  return rep;
}

}  // namespace vfc

#endif  // VFC_QUOTIENT_HPP
