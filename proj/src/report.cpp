#include "lampp/report.hpp"

#include <algorithm>

#include "lampp/error.hpp"

namespace lampp {

nlohmann::json to_json(const ExperimentReport& report) {
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"command", report.command},
          {"config", report.config},
          {"metrics", report.metrics},
          {"per_category", report.per_category},
          {"diagnostics", report.diagnostics},
          {"wall_clock_seconds", report.wall_clock_seconds}};
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.command = j.value("command", "");
  r.config = j.value("config", nlohmann::json::object());
  r.metrics = j.value("metrics", nlohmann::json::object());
  if (j.contains("per_category")) r.per_category = j.at("per_category").get<std::map<std::string, double>>();
  r.diagnostics = j.value("diagnostics", nlohmann::json::object());
  r.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  return r;
}

nlohmann::json metric_fields(const nlohmann::json& report) {
  nlohmann::json out = nlohmann::json::object();
  for (const char* key : {"command", "config", "metrics", "per_category"}) {
    if (report.contains(key)) out[key] = report.at(key);
  }
  return out;
}

DeltaTable report_delta(const ExperimentReport& run, const ExperimentReport& baseline) {
  if (run.per_category.empty()) throw Error(Errc::ReportMismatch, "run has no per-category metrics");
  DeltaTable table;
  for (const auto& [cat, value] : run.per_category) {
    auto it = baseline.per_category.find(cat);
    if (it == baseline.per_category.end()) {
      throw Error(Errc::ReportMismatch, "category '" + cat + "' missing from baseline");
    }
    table.rows.push_back({cat, value, it->second, value - it->second});
  }
  if (baseline.per_category.size() != run.per_category.size()) {
    for (const auto& [cat, value] : baseline.per_category) {
      if (!run.per_category.contains(cat)) {
        throw Error(Errc::ReportMismatch, "category '" + cat + "' missing from run");
      }
    }
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const CategoryDelta& a, const CategoryDelta& b) { return a.delta > b.delta; });
  table.best = table.rows.front();
  table.worst = table.rows.back();
  return table;
}

nlohmann::json to_json(const DeltaTable& table) {
  auto row = [](const CategoryDelta& d) {
    return nlohmann::json{{"category", d.category}, {"run", d.run}, {"baseline", d.baseline}, {"delta", d.delta}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& d : table.rows) rows.push_back(row(d));
  return {{"rows", rows}, {"best", row(table.best)}, {"worst", row(table.worst)}};
}

}  // namespace lampp
