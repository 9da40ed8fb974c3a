#pragma once

// Scenario registry reproducing the simulation experiments at desk scale.

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "salmoe/scenario.hpp"
#include "salmoe/select.hpp"

namespace salmoe {

/// Empty vectors / unset optionals fall back to the scenario's presets.
struct ScenarioOptions {
  int reps = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  int restarts = 30;
  std::vector<Eigen::Index> sizes;           ///< estimation-*; falls back to {n} when n is set
  std::vector<double> contamination_levels;  ///< robust-1
  std::vector<std::string> data_families;    ///< robust-1: "sal", "gaussian"
  std::vector<double> shapes;                ///< robust-2
  std::vector<int> k_range;                  ///< order-*
  std::optional<Eigen::Index> n;
};

struct ReplicationRow {
  int rep = 0;
  std::string setting;
  std::string method;
  std::string metric;
  double value = 0.0;
};

struct ScenarioResult {
  std::string name;
  std::vector<ReplicationRow> rows;
  nlohmann::json summary;
  nlohmann::json spec;
  int failed_fits = 0;
};

std::vector<std::string> scenario_names();

/// One data-generating spec per setting of the named scenario.
std::vector<ScenarioSpec> scenario_specs(const std::string& name, const ScenarioOptions& opt = {});

/// Throws unknown-scenario for names outside scenario_names().
ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& opt);

/// replications.csv, summary.json and spec.json under `dir`.
void write_scenario_artifacts(const ScenarioResult& result, const std::filesystem::path& dir);

/// Looks up summary["settings"][setting][key][stat].
double summary_stat(const ScenarioResult& r, const std::string& setting, const std::string& key,
                    const std::string& stat = "median");

/// Median of a copy; NaN when empty.
double median(std::vector<double> v);

}  // namespace salmoe
