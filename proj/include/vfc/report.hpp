#ifndef VFC_REPORT_HPP
#define VFC_REPORT_HPP

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vfc {

using Json = nlohmann::ordered_json;

inline const char* kReportSchemaVersion = "1.0.0";

/// One named pass/fail check with its worst sampled residual and an optional
/// witness point.
struct Check {
  std::string name;
  bool passed = true;
  double residual = 0.0;
  std::optional<std::vector<double>> witness;
  std::string note;
};

struct ValidationReport {
  std::string subject;
  std::vector<Check> checks;

  bool passed() const {
    for (const Check& c : checks)
      if (!c.passed) return false;
    return true;
  }
  double worst_residual() const {
    double w = 0;
    for (const Check& c : checks) w = std::max(w, c.residual);
    return w;
  }
  Check& add(std::string name) {
    checks.push_back(Check{std::move(name)});
    return checks.back();
  }
  void fail(std::string name, double residual, std::string note = "",
            std::optional<std::vector<double>> witness = std::nullopt) {
    Check c{std::move(name)};
    c.passed = false;
    c.residual = residual;
    c.note = std::move(note);
    c.witness = std::move(witness);
    checks.push_back(std::move(c));
  }
  void pass(std::string name, double residual = 0.0) {
    Check c{std::move(name)};
    c.passed = true;
    c.residual = residual;
    checks.push_back(std::move(c));
  }
  const Check* find(const std::string& name) const {
    for (const Check& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  Json to_json() const {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["subject"] = subject;
    j["passed"] = passed();
    Json arr = Json::array();
    for (const Check& c : checks) {
      Json cj;
      cj["name"] = c.name;
      cj["passed"] = c.passed;
      cj["residual"] = c.residual;
      if (c.witness) cj["witness"] = *c.witness;
      if (!c.note.empty()) cj["note"] = c.note;
      arr.push_back(cj);
    }
    j["checks"] = arr;
    return j;
  }
};

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace vfc

#endif  // VFC_REPORT_HPP
