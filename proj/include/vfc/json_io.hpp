#ifndef VFC_JSON_IO_HPP
#define VFC_JSON_IO_HPP

#include <fstream>
#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>

#include "vfc/region.hpp"
#include "vfc/report.hpp"

namespace vfc {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rejects unknown keys so format drift is caught at load time.
inline void require_keys(const Json& j, const std::string& where,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) throw ParseError(where + ": expected object");
  std::set<std::string> allowed;
  for (const char* k : required) {
    allowed.insert(k);
    if (!j.contains(k)) throw ParseError(where + ": missing key '" + k + "'");
  }
  for (const char* k : optional) allowed.insert(k);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ParseError(where + ": unknown key '" + it.key() + "'");
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

inline void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline Vec vec_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline Mat mat_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected nonempty array of rows");
  size_t cols = j[0].size();
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw ParseError(where + ": ragged matrix");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

inline Json vec_to_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline Json mat_to_json(const Mat& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

inline Region region_from_json(const Json& j, const std::string& where) {
  require_keys(j, where, {"box"}, {"constraints", "periodic_axes"});
  const Json& box = j["box"];
  Vec lo(static_cast<Eigen::Index>(box.size())), hi(static_cast<Eigen::Index>(box.size()));
  for (size_t i = 0; i < box.size(); ++i) {
    if (!box[i].is_array() || box[i].size() != 2) throw ParseError(where + ": box entry not [lo,hi]");
    lo[static_cast<Eigen::Index>(i)] = box[i][0].get<double>();
    hi[static_cast<Eigen::Index>(i)] = box[i][1].get<double>();
  }
  Region r(lo, hi);
  if (j.contains("constraints")) {
    for (const Json& cj : j["constraints"]) {
      require_keys(cj, where + ".constraints[]", {"expr"}, {"open"});
      bool open = cj.contains("open") && cj["open"].get<bool>();
      r.add_constraint(parse_expr(cj["expr"].get<std::string>()), open);
    }
  }
  if (j.contains("periodic_axes")) {
    std::vector<int> axes;
    for (const Json& a : j["periodic_axes"]) axes.push_back(a.get<int>());
    r.set_periodic(axes);
  }
  return r;
}

inline Json region_to_json(const Region& r) {
  Json j;
  Json box = Json::array();
  for (int i = 0; i < r.dim(); ++i) box.push_back(Json::array({r.lo()[i], r.hi()[i]}));
  j["box"] = box;
  if (!r.constraints().empty()) {
    Json cs = Json::array();
    for (const auto& c : r.constraints()) {
      Json cj;
      cj["expr"] = to_string(c.expr);
      if (c.open) cj["open"] = true;
      cs.push_back(cj);
    }
    j["constraints"] = cs;
  }
  if (!r.periodic_axes().empty()) j["periodic_axes"] = r.periodic_axes();
  return j;
}

inline SmoothMap map_from_json(const Json& j, int arity, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected array of expressions");
  std::vector<Expr> comps;
  for (const Json& e : j) comps.push_back(parse_expr(e.get<std::string>()));
  return SmoothMap(arity, std::move(comps));
}

inline Json map_to_json(const SmoothMap& m) {
  Json j = Json::array();
  for (const Expr& c : m.components()) j.push_back(to_string(c));
  return j;
}

}  // namespace vfc

#endif  // VFC_JSON_IO_HPP
