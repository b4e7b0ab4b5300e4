#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace lampp {

inline constexpr const char* kToolName = "lampp";
inline constexpr const char* kToolVersion = "0.3.1";

// One JSON document per run. `metrics` and `per_category` are the fields
// that must reproduce exactly under a fixed seed and the mock provider.
struct ExperimentReport {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json metrics = nlohmann::json::object();
  std::map<std::string, double> per_category;
  nlohmann::json diagnostics = nlohmann::json::object();
  double wall_clock_seconds = 0.0;
};

nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);

// The reproducible part of a report: command, config, metrics, per_category.
nlohmann::json metric_fields(const nlohmann::json& report);

struct CategoryDelta {
  std::string category;
  double run = 0.0;
  double baseline = 0.0;
  double delta = 0.0;
};

struct DeltaTable {
  std::vector<CategoryDelta> rows;  // descending by delta, ties by name
  CategoryDelta best;
  CategoryDelta worst;
};

// Throws ReportMismatch unless both reports cover the same categories.
DeltaTable report_delta(const ExperimentReport& run, const ExperimentReport& baseline);

nlohmann::json to_json(const DeltaTable& table);

}  // namespace lampp
