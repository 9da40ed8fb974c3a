#include "salmoe/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "salmoe/error.hpp"

namespace salmoe {

nlohmann::json model_to_json(const SalMoeModel& m) {
  nlohmann::json experts = nlohmann::json::array();
  for (const auto& e : m.experts) {
    experts.push_back({{"alpha", e.alpha},
                       {"sigma", e.sigma},
                       {"beta", std::vector<double>(e.beta.data(), e.beta.data() + e.beta.size())}});
  }
  nlohmann::json gating = nlohmann::json::array();
  const auto& E = m.gating.coef();
  for (Eigen::Index r = 0; r < E.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < E.cols(); ++c) row.push_back(E(r, c));
    gating.push_back(std::move(row));
  }
  return {{"K", m.K()},
          {"p", m.p},
          {"q", m.q},
          {"family", std::string(to_string(m.family))},
          {"experts", std::move(experts)},
          {"gating", std::move(gating)}};
}

SalMoeModel model_from_json(const nlohmann::json& j) {
  try {
    SalMoeModel m;
    const int K = j.at("K").get<int>();
    m.p = j.at("p").get<int>();
    m.q = j.at("q").get<int>();
    if (j.contains("family")) m.family = expert_family_from_string(j.at("family").get<std::string>());
    for (const auto& je : j.at("experts")) {
      SalParams e;
      e.alpha = je.at("alpha").get<double>();
      e.sigma = je.at("sigma").get<double>();
      const auto beta = je.at("beta").get<std::vector<double>>();
      e.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
      m.experts.push_back(std::move(e));
    }
    Eigen::MatrixXd E(m.q + 1, K - 1);
    const auto& jg = j.at("gating");
    if (static_cast<int>(jg.size()) != m.q + 1) {
      fail(ErrorCode::dimension_mismatch, "gating must have q+1 rows");
    }
    for (int r = 0; r <= m.q; ++r) {
      const auto row = jg.at(static_cast<std::size_t>(r)).get<std::vector<double>>();
      if (static_cast<int>(row.size()) != K - 1) {
        fail(ErrorCode::dimension_mismatch, "gating rows must have K-1 entries");
      }
      for (int c = 0; c < K - 1; ++c) E(r, c) = row[static_cast<std::size_t>(c)];
    }
    m.gating = GatingParams(E);
    if (m.K() != K) fail(ErrorCode::dimension_mismatch, "expert count does not match K");
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("model JSON: ") + e.what());
  }
}

nlohmann::json report_to_json(const FitReport& r) {
  nlohmann::json j = model_to_json(r.model);
  j["loglik_trace"] = r.loglik_trace;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["seed"] = r.seed;
  j["best_restart"] = r.best_restart;
  j["failed_restarts"] = r.failed_restarts;
  return j;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::file_not_found, path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::file_not_found, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  fail(ErrorCode::missing_column, "column '" + name + "' not found in header");
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

Eigen::VectorXd CsvTable::numeric(const std::string& name) const {
  const std::size_t c = column(name);
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string& cell = rows[r][c];
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    if (first < last && *first == '+') ++first;
    double v = 0.0;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || first == last) {
      fail(ErrorCode::parse_error, "row " + std::to_string(r + 2) + ", column '" + name +
                                       "': cannot parse '" + cell + "' as a number");
    }
    out(static_cast<Eigen::Index>(r)) = v;
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  if (quoted) fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": unterminated quote");
  cells.push_back(std::move(cell));
  return cells;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line, line_no);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(table.header.size()) + " fields, found " +
                                       std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) fail(ErrorCode::parse_error, "CSV has no header row");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::file_not_found, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

Dataset dataset_from_csv(const CsvTable& table, const std::string& y,
                         const std::vector<std::string>& x, const std::vector<std::string>& t,
                         const std::optional<std::string>& labels) {
  Dataset d;
  d.y = table.numeric(y);
  const auto n = d.y.size();
  if (n == 0) fail(ErrorCode::parse_error, "CSV has no data rows");
  auto design = [&](const std::vector<std::string>& cols) {
    Eigen::MatrixXd M(n, static_cast<Eigen::Index>(cols.size()) + 1);
    M.col(0).setOnes();
    for (std::size_t j = 0; j < cols.size(); ++j) {
      M.col(static_cast<Eigen::Index>(j) + 1) = table.numeric(cols[j]);
    }
    return M;
  };
  d.X = design(x);
  d.T = design(t);
  if (labels) {
    const Eigen::VectorXd z = table.numeric(*labels);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (z(i) != std::round(z(i)) || z(i) < 1) {
        fail(ErrorCode::parse_error, "label column '" + *labels + "' must hold integers >= 1");
      }
      d.z.push_back(static_cast<int>(z(i)));
    }
  }
  d.validate();
  return d;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::vector<std::string>>& rows) {
  std::string buffer;
  for (const auto& cells : rows) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) buffer += ',';
      const std::string& cell = cells[c];
      if (cell.find_first_of(",\"\r\n") != std::string::npos) {
        buffer += '"';
        for (char ch : cell) {
          if (ch == '"') buffer += '"';
          buffer += ch;
        }
        buffer += '"';
      } else {
        buffer += cell;
      }
    }
    buffer += "\r\n";
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::file_not_found, "cannot write " + path.string());
  out << buffer;
}

}  // namespace salmoe
