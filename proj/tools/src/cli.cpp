#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <sstream>

#include "salmoe/bootstrap.hpp"
#include "salmoe/error.hpp"
#include "salmoe/fit.hpp"
#include "salmoe/io.hpp"
#include "salmoe/metrics.hpp"
#include "salmoe/parallel.hpp"
#include "salmoe/runners.hpp"
#include "salmoe/select.hpp"

namespace salmoe::cli {

namespace {

const std::vector<std::string>& gating_columns(const CliConfig& cfg) {
  return cfg.t.empty() ? cfg.x : cfg.t;
}

void require_input(const std::filesystem::path& p, const char* what) {
  if (p.empty()) fail(ErrorCode::invalid_argument, std::string(what) + " path is required");
  if (!std::filesystem::exists(p)) fail(ErrorCode::file_not_found, p.string());
}

void require_y(const CliConfig& cfg) {
  if (cfg.y.empty()) fail(ErrorCode::invalid_argument, "--y is required");
}

FitConfig fit_config(const CliConfig& cfg, int K) {
  FitConfig f;
  f.K = K;
  f.seed = cfg.seed;
  f.restarts = cfg.restarts;
  f.epsilon = cfg.epsilon;
  f.max_iter = cfg.max_iter;
  f.threads = cfg.threads;
  f.validate();
  return f;
}

Eigen::MatrixXd design(const CsvTable& table, const std::vector<std::string>& cols) {
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::MatrixXd M(n, static_cast<Eigen::Index>(cols.size()) + 1);
  M.col(0).setOnes();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    M.col(static_cast<Eigen::Index>(j) + 1) = table.numeric(cols[j]);
  }
  return M;
}

Eigen::MatrixXd standardize_design(const Eigen::MatrixXd& M, const std::vector<double>& mean,
                                   const std::vector<double>& scale) {
  Eigen::MatrixXd out = M;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const auto c = static_cast<Eigen::Index>(j) + 1;
    out.col(c) = (M.col(c).array() - mean[j]) / scale[j];
  }
  return out;
}

std::pair<double, double> column_moments(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().mean());
  return {mean, sd > 0.0 ? sd : 1.0};
}

nlohmann::json doubles(const std::vector<double>& v) { return nlohmann::json(v); }

/// Loads model.json plus the data it refers to, applying any recorded transform.
struct LoadedData {
  ModelDocument doc;
  Dataset data;
  CsvTable table;
};

LoadedData load_model_and_data(const CliConfig& cfg, bool need_y) {
  require_input(cfg.model, "--model");
  require_input(cfg.input, "--input");
  LoadedData out;
  out.doc = model_document_from_json(read_json(cfg.model));
  out.table = read_csv(cfg.input);
  const auto& doc = out.doc;
  Dataset d;
  d.X = design(out.table, doc.x);
  d.T = design(out.table, doc.t);
  if (d.X.cols() != doc.model.p + 1 || d.T.cols() != doc.model.q + 1) {
    fail(ErrorCode::dimension_mismatch, "model dimensions do not match the recorded columns");
  }
  if (need_y) {
    d.y = out.table.numeric(doc.y);
  } else {
    d.y = Eigen::VectorXd::Zero(d.X.rows());
  }
  if (doc.standardization) {
    const auto& s = *doc.standardization;
    d.X = standardize_design(d.X, s.x_mean, s.x_scale);
    d.T = standardize_design(d.T, s.t_mean, s.t_scale);
    if (need_y) d.y = (d.y.array() - s.y_mean) / s.y_scale;
  }
  out.data = std::move(d);
  return out;
}

std::vector<std::string> responsibility_header(int K) {
  std::vector<std::string> h;
  for (int k = 1; k <= K; ++k) h.push_back("gamma" + std::to_string(k));
  return h;
}

}  // namespace

nlohmann::json to_json(const Standardization& s) {
  return {{"y_mean", s.y_mean}, {"y_scale", s.y_scale}, {"x_mean", doubles(s.x_mean)},
          {"x_scale", doubles(s.x_scale)}, {"t_mean", doubles(s.t_mean)},
          {"t_scale", doubles(s.t_scale)}};
}

Standardization standardization_from_json(const nlohmann::json& j) {
  Standardization s;
  s.y_mean = j.at("y_mean").get<double>();
  s.y_scale = j.at("y_scale").get<double>();
  s.x_mean = j.at("x_mean").get<std::vector<double>>();
  s.x_scale = j.at("x_scale").get<std::vector<double>>();
  s.t_mean = j.at("t_mean").get<std::vector<double>>();
  s.t_scale = j.at("t_scale").get<std::vector<double>>();
  return s;
}

nlohmann::json to_json(const ModelDocument& doc) {
  nlohmann::json j = model_to_json(doc.model);
  j["columns"] = {{"y", doc.y}, {"x", doc.x}, {"t", doc.t}};
  j["standardization"] = doc.standardization ? to_json(*doc.standardization) : nlohmann::json();
  return j;
}

ModelDocument model_document_from_json(const nlohmann::json& j) {
  ModelDocument doc;
  doc.model = model_from_json(j);
  try {
    const auto& c = j.at("columns");
    doc.y = c.at("y").get<std::string>();
    doc.x = c.at("x").get<std::vector<std::string>>();
    doc.t = c.at("t").get<std::vector<std::string>>();
    if (j.contains("standardization") && !j.at("standardization").is_null()) {
      doc.standardization = standardization_from_json(j.at("standardization"));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("model document: ") + e.what());
  }
  if (static_cast<int>(doc.x.size()) != doc.model.p || static_cast<int>(doc.t.size()) != doc.model.q) {
    fail(ErrorCode::dimension_mismatch, "column lists do not match model dimensions");
  }
  return doc;
}

Standardization compute_standardization(const Dataset& d) {
  Standardization s;
  std::tie(s.y_mean, s.y_scale) = column_moments(d.y);
  for (Eigen::Index c = 1; c < d.X.cols(); ++c) {
    const auto [m, sd] = column_moments(d.X.col(c));
    s.x_mean.push_back(m);
    s.x_scale.push_back(sd);
  }
  for (Eigen::Index c = 1; c < d.T.cols(); ++c) {
    const auto [m, sd] = column_moments(d.T.col(c));
    s.t_mean.push_back(m);
    s.t_scale.push_back(sd);
  }
  return s;
}

Dataset apply_standardization(const Dataset& d, const Standardization& s) {
  Dataset out = d;
  out.y = (d.y.array() - s.y_mean) / s.y_scale;
  out.X = standardize_design(d.X, s.x_mean, s.x_scale);
  out.T = standardize_design(d.T, s.t_mean, s.t_scale);
  return out;
}

std::vector<int> parse_k_range(const std::string& text) {
  std::vector<int> ks;
  auto to_int = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(ErrorCode::invalid_argument, "bad K range '" + text + "'");
    }
  };
  std::size_t sep = text.find("..");
  std::size_t width = 2;
  if (sep == std::string::npos) {
    sep = text.find('-', 1);
    width = 1;
  }
  if (sep != std::string::npos) {
    const int lo = to_int(text.substr(0, sep));
    const int hi = to_int(text.substr(sep + width));
    if (hi < lo) fail(ErrorCode::invalid_argument, "empty K range '" + text + "'");
    for (int k = lo; k <= hi; ++k) ks.push_back(k);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) ks.push_back(to_int(item));
  }
  if (ks.empty()) fail(ErrorCode::invalid_argument, "empty K range");
  for (int k : ks) {
    if (k < 1) fail(ErrorCode::invalid_argument, "K must be >= 1");
  }
  return ks;
}

int cmd_fit(const CliConfig& cfg, std::ostream& log) {
  require_input(cfg.input, "--input");
  require_y(cfg);
  if (cfg.k < 1) fail(ErrorCode::invalid_argument, "K must be >= 1");
  const CsvTable table = read_csv(cfg.input);
  const Dataset raw = dataset_from_csv(table, cfg.y, cfg.x, gating_columns(cfg));
  ModelDocument doc;
  doc.y = cfg.y;
  doc.x = cfg.x;
  doc.t = gating_columns(cfg);
  Dataset d = raw;
  if (cfg.standardize) {
    doc.standardization = compute_standardization(raw);
    d = apply_standardization(raw, *doc.standardization);
  }
  const FitReport rep = fit_salmoe(d, fit_config(cfg, cfg.k));
  doc.model = rep.model;

  std::filesystem::create_directories(cfg.out);
  write_json(cfg.out / "model.json", to_json(doc));
  nlohmann::json report = report_to_json(rep);
  report["standardization"] = doc.standardization ? to_json(*doc.standardization) : nlohmann::json();
  report["n"] = d.n();
  write_json(cfg.out / "report.json", report);

  std::vector<std::vector<std::string>> resp{responsibility_header(rep.model.K())};
  for (Eigen::Index i = 0; i < rep.responsibilities.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index k = 0; k < rep.responsibilities.cols(); ++k) {
      row.push_back(format_double(rep.responsibilities(i, k)));
    }
    resp.push_back(std::move(row));
  }
  write_csv(cfg.out / "responsibilities.csv", resp);

  std::vector<std::vector<std::string>> trace{{"iteration", "loglik"}};
  for (std::size_t j = 0; j < rep.loglik_trace.size(); ++j) {
    trace.push_back({std::to_string(j), format_double(rep.loglik_trace[j])});
  }
  write_csv(cfg.out / "trace.csv", trace);

  log << "loglik " << format_double(rep.loglik()) << " after " << rep.iterations << " iterations"
      << (rep.converged ? "" : " (not converged)") << "\n";
  return rep.converged ? kExitOk : kExitNotConverged;
}

int cmd_predict(const CliConfig& cfg, std::ostream& log) {
  const LoadedData in = load_model_and_data(cfg, false);
  const auto& m = in.doc.model;
  double shift = 0.0, scale = 1.0;
  if (in.doc.standardization) {
    shift = in.doc.standardization->y_mean;
    scale = in.doc.standardization->y_scale;
  }
  std::vector<std::vector<std::string>> rows{{"mean", "variance", "lower", "upper"}};
  for (Eigen::Index i = 0; i < in.data.X.rows(); ++i) {
    const Prediction p = predict(m, in.data.X.row(i).transpose(), in.data.T.row(i).transpose());
    const double mean = shift + scale * p.mean;
    const double var = scale * scale * p.variance;
    const double half = 2.0 * std::sqrt(var);
    rows.push_back({format_double(mean), format_double(var), format_double(mean - half),
                    format_double(mean + half)});
  }
  std::filesystem::create_directories(cfg.out);
  write_csv(cfg.out / "predictions.csv", rows);
  log << "wrote " << rows.size() - 1 << " predictions\n";
  return kExitOk;
}

int cmd_cluster(const CliConfig& cfg, std::ostream& log) {
  const LoadedData in = load_model_and_data(cfg, true);
  const auto& m = in.doc.model;
  const Responsibilities gamma = responsibilities(m, in.data);
  const std::vector<int> labels = map_labels(gamma);
  std::vector<std::string> header{"label"};
  for (auto& h : responsibility_header(m.K())) header.push_back(h);
  std::vector<std::vector<std::string>> rows{header};
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    std::vector<std::string> row{std::to_string(labels[static_cast<std::size_t>(i)])};
    for (Eigen::Index k = 0; k < gamma.cols(); ++k) row.push_back(format_double(gamma(i, k)));
    rows.push_back(std::move(row));
  }
  std::filesystem::create_directories(cfg.out);
  write_csv(cfg.out / "labels.csv", rows);
  if (cfg.reference) {
    const Eigen::VectorXd ref = in.table.numeric(*cfg.reference);
    std::vector<int> z(static_cast<std::size_t>(ref.size()));
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
      if (ref(i) != std::round(ref(i))) {
        fail(ErrorCode::parse_error, "reference column '" + *cfg.reference + "' must hold integer labels");
      }
      z[static_cast<std::size_t>(i)] = static_cast<int>(ref(i));
    }
    const ClusteringScores s = clustering_metrics(z, labels);
    write_json(cfg.out / "metrics.json",
               {{"ari", s.ari}, {"class_err", s.class_err}, {"accuracy", s.accuracy}});
    log << "ari " << format_double(s.ari) << " accuracy " << format_double(s.accuracy) << "\n";
  }
  return kExitOk;
}

int cmd_select(const CliConfig& cfg, std::ostream& log) {
  require_input(cfg.input, "--input");
  require_y(cfg);
  const CsvTable table = read_csv(cfg.input);
  Dataset d = dataset_from_csv(table, cfg.y, cfg.x, gating_columns(cfg));
  std::optional<Standardization> st;
  if (cfg.standardize) {
    st = compute_standardization(d);
    d = apply_standardization(d, *st);
  }
  FitConfig f = fit_config(cfg, cfg.k_range.front());
  SelectConfig sel{{PanicCalibration{cfg.panic_beta, cfg.panic_nu}}};
  const IcTable t = sweep_k(d, cfg.k_range, f, sel);

  std::filesystem::create_directories(cfg.out);
  std::vector<std::vector<std::string>> rows{
      {"K", "ok", "loglik", "df", "bic", "icl", "panic", "converged", "error"}};
  nlohmann::json jrows = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& r : t.rows) {
    auto num = [&](double v) { return r.ok ? format_double(v) : std::string(); };
    rows.push_back({std::to_string(r.K), r.ok ? "1" : "0", num(r.loglik), std::to_string(r.df),
                    num(r.bic), num(r.icl), num(r.ok ? r.panic.front() : 0.0),
                    r.converged ? "1" : "0", r.error});
    nlohmann::json jr = {{"K", r.K}, {"ok", r.ok}, {"df", r.df}, {"converged", r.converged}};
    if (r.ok) {
      jr["loglik"] = r.loglik;
      jr["classification_loglik"] = r.classification_loglik;
      jr["bic"] = r.bic;
      jr["icl"] = r.icl;
      jr["panic"] = r.panic.front();
    } else {
      jr["error"] = r.error;
      failures.push_back({{"K", r.K}, {"error", r.error}});
    }
    jrows.push_back(std::move(jr));
  }
  write_csv(cfg.out / "ic_table.csv", rows);
  write_json(cfg.out / "ic_table.json", jrows);
  auto chosen = [](const std::optional<int>& k) { return k ? nlohmann::json(*k) : nlohmann::json(); };
  nlohmann::json summary = {
      {"k_range", cfg.k_range},
      {"chosen", {{"bic", chosen(t.chosen_bic)}, {"icl", chosen(t.chosen_icl)},
                  {"panic", chosen(t.chosen_panic.front())}}},
      {"panic", {{"beta", cfg.panic_beta}, {"nu", cfg.panic_nu}, {"alpha", sel.calibrations.front().alpha()}}},
      {"failures", failures},
      {"seed", cfg.seed},
      {"n", d.n()},
      {"standardization", st ? to_json(*st) : nlohmann::json()}};
  write_json(cfg.out / "summary.json", summary);
  if (t.chosen_bic) log << "BIC chooses K=" << *t.chosen_bic << "\n";
  if (!t.chosen_bic) fail(ErrorCode::too_many_failures, "every K in the range failed");
  return kExitOk;
}

int cmd_simulate(const CliConfig& cfg, std::ostream& log) {
  ScenarioOptions opt;
  opt.reps = cfg.reps;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  opt.restarts = cfg.restarts;
  opt.n = cfg.n;
  const ScenarioResult r = run_scenario(cfg.scenario, opt);
  write_scenario_artifacts(r, cfg.out);
  log << cfg.scenario << ": " << r.rows.size() << " rows, " << r.failed_fits << " failed fits\n";
  return kExitOk;
}

int cmd_bootstrap(const CliConfig& cfg, std::ostream& log) {
  const LoadedData in = load_model_and_data(cfg, true);
  BootstrapConfig bc;
  bc.B = cfg.B;
  bc.seed = cfg.seed;
  bc.threads = cfg.threads;
  const BootstrapResult r = bootstrap_ci(in.data, in.doc.model, fit_config(cfg, in.doc.model.K()), bc);
  std::vector<std::vector<std::string>> rows{{"parameter", "estimate", "lower", "upper"}};
  for (const auto& ci : r.intervals) {
    rows.push_back({ci.name, format_double(ci.estimate), format_double(ci.lower), format_double(ci.upper)});
  }
  std::filesystem::create_directories(cfg.out);
  write_csv(cfg.out / "ci_table.csv", rows);
  write_json(cfg.out / "bootstrap.json",
             {{"B", cfg.B}, {"successful", r.successful}, {"failed", r.failed}, {"seed", cfg.seed},
              {"scale", in.doc.standardization ? "standardized" : "original"}});
  log << r.successful << " of " << cfg.B << " replicates succeeded\n";
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  cfg.threads = default_thread_count();
  std::string k_range;

  CLI::App app{"Shifted asymmetric Laplace mixture-of-experts"};
  app.require_subcommand(1);

  auto data_flags = [&](CLI::App* sub, bool with_y) {
    sub->add_option("--input", cfg.input, "CSV file with a header row");
    if (with_y) {
      sub->add_option("--y", cfg.y, "response column");
      sub->add_option("--x", cfg.x, "expert covariate columns")->delimiter(',');
      sub->add_option("--t", cfg.t, "gating covariate columns (default: --x)")->delimiter(',');
      sub->add_flag("--standardize", cfg.standardize, "standardize y and covariates before fitting");
    }
  };
  auto fit_flags = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed);
    sub->add_option("--restarts", cfg.restarts)->check(CLI::PositiveNumber);
    sub->add_option("--epsilon", cfg.epsilon)->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", cfg.max_iter)->check(CLI::PositiveNumber);
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--threads", cfg.threads)->check(CLI::PositiveNumber);
  };

  auto* fit = app.add_subcommand("fit", "fit a SALMoE model");
  data_flags(fit, true);
  fit_flags(fit);
  common(fit);
  fit->add_option("--k", cfg.k, "number of experts");

  auto* pred = app.add_subcommand("predict", "predictive mean and interval for new rows");
  data_flags(pred, false);
  pred->add_option("--model", cfg.model, "model.json from fit");
  common(pred);

  auto* clus = app.add_subcommand("cluster", "MAP labels and responsibilities");
  data_flags(clus, false);
  clus->add_option("--model", cfg.model, "model.json from fit");
  clus->add_option("--reference", cfg.reference, "column of reference labels");
  common(clus);

  auto* sel = app.add_subcommand("select", "information criteria over a range of K");
  data_flags(sel, true);
  fit_flags(sel);
  common(sel);
  sel->add_option("--k-range", k_range, "e.g. 1..5 or 1,2,4");
  sel->add_option("--panic-beta", cfg.panic_beta)->check(CLI::Range(1, 8));
  sel->add_option("--panic-nu", cfg.panic_nu)->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "run a simulation scenario");
  sim->add_option("scenario", cfg.scenario, "scenario name")->required();
  sim->add_option("--reps", cfg.reps)->check(CLI::PositiveNumber);
  sim->add_option("--n", cfg.n, "sample size override")->check(CLI::PositiveNumber);
  sim->add_option("--seed", cfg.seed);
  sim->add_option("--restarts", cfg.restarts)->check(CLI::PositiveNumber);
  common(sim);

  auto* boot = app.add_subcommand("bootstrap", "percentile bootstrap intervals");
  data_flags(boot, false);
  boot->add_option("--model", cfg.model, "model.json from fit");
  boot->add_option("--B", cfg.B, "number of replicates");
  boot->add_option("--seed", cfg.seed);
  boot->add_option("--max-iter", cfg.max_iter)->check(CLI::PositiveNumber);
  common(boot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (!k_range.empty()) cfg.k_range = parse_k_range(k_range);
    cfg.subcommand = app.get_subcommands().front()->get_name();
    if (cfg.subcommand == "fit") return cmd_fit(cfg, out);
    if (cfg.subcommand == "predict") return cmd_predict(cfg, out);
    if (cfg.subcommand == "cluster") return cmd_cluster(cfg, out);
    if (cfg.subcommand == "select") return cmd_select(cfg, out);
    if (cfg.subcommand == "simulate") return cmd_simulate(cfg, out);
    return cmd_bootstrap(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace salmoe::cli
