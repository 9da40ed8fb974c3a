#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "salmoe/fit.hpp"
#include "salmoe/model.hpp"

namespace salmoe {

/// {"K", "p", "q", "family", "experts": [{"alpha", "sigma", "beta"}],
///  "gating": (q+1) rows of K-1 free coefficients}
nlohmann::json model_to_json(const SalMoeModel& m);
SalMoeModel model_from_json(const nlohmann::json& j);

/// Model document plus "loglik_trace", "iterations", "converged", "seed".
nlohmann::json report_to_json(const FitReport& r);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// "%.17g"
std::string format_double(double v);

/// Header row plus string cells; comma delimiter, optional double quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  ///< throws missing-column
  bool has_column(const std::string& name) const;
  /// Parses every cell of a column; parse-error names row and column.
  Eigen::VectorXd numeric(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Builds a dataset with intercept columns prepended to the named covariates.
Dataset dataset_from_csv(const CsvTable& table, const std::string& y,
                         const std::vector<std::string>& x, const std::vector<std::string>& t,
                         const std::optional<std::string>& labels = std::nullopt);

/// RFC-4180 output (CRLF line ends, quoting only where needed). The first
/// row is the header.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace salmoe
