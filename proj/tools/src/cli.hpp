#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "salmoe/model.hpp"

namespace salmoe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

struct CliConfig {
  std::string subcommand;
  std::filesystem::path input;
  std::filesystem::path out = ".";
  std::filesystem::path model;
  std::string y;
  std::vector<std::string> x;
  std::vector<std::string> t;  ///< empty means "same as x"
  int k = 2;
  std::vector<int> k_range{1, 2, 3, 4, 5};
  bool standardize = false;
  std::uint64_t seed = 1;
  int restarts = 30;
  double epsilon = 1e-5;
  int max_iter = 1000;
  int threads = 1;
  int panic_beta = 1;
  double panic_nu = 1000.0;
  int reps = 100;
  int B = 200;
  std::string scenario;
  std::optional<std::string> reference;
  std::optional<Eigen::Index> n;
};

/// Affine maps applied before fitting; the intercept columns are untouched.
struct Standardization {
  double y_mean = 0.0;
  double y_scale = 1.0;
  std::vector<double> x_mean, x_scale;
  std::vector<double> t_mean, t_scale;
};

/// Column names plus optional transform, stored next to the model in model.json.
struct ModelDocument {
  SalMoeModel model;
  std::string y;
  std::vector<std::string> x, t;
  std::optional<Standardization> standardization;
};

nlohmann::json to_json(const Standardization& s);
Standardization standardization_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelDocument& doc);
ModelDocument model_document_from_json(const nlohmann::json& j);

/// Column-wise mean and population standard deviation of y and the non-intercept covariates.
Standardization compute_standardization(const Dataset& d);
Dataset apply_standardization(const Dataset& d, const Standardization& s);

/// Accepts "a..b", "a-b" or a comma list.
std::vector<int> parse_k_range(const std::string& text);

int cmd_fit(const CliConfig& cfg, std::ostream& log);
int cmd_predict(const CliConfig& cfg, std::ostream& log);
int cmd_cluster(const CliConfig& cfg, std::ostream& log);
int cmd_select(const CliConfig& cfg, std::ostream& log);
int cmd_simulate(const CliConfig& cfg, std::ostream& log);
int cmd_bootstrap(const CliConfig& cfg, std::ostream& log);

/// Parses argv, dispatches, and maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace salmoe::cli
