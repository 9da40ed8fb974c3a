#include "salmoe/runners.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "salmoe/error.hpp"
#include "salmoe/fit.hpp"
#include "salmoe/io.hpp"
#include "salmoe/metrics.hpp"
#include "salmoe/parallel.hpp"
#include "salmoe/random.hpp"

namespace salmoe {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

namespace {

enum class Kind { estimation, robust, clustering, order };

struct Setting {
  std::string label;
  ScenarioSpec spec;
  int true_k = 0;
};

struct Plan {
  Kind kind;
  std::vector<Setting> settings;
};

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Setting make_setting(std::string label, SalMoeModel truth, Eigen::Index n,
                     CovariateDesign design = CovariateDesign::uniform1, double c = 0.0) {
  Setting s;
  s.label = std::move(label);
  s.true_k = truth.K();
  s.spec.truth = std::move(truth);
  s.spec.n = n;
  s.spec.design = design;
  s.spec.contamination = c;
  return s;
}

Plan make_plan(const std::string& name, const ScenarioOptions& opt) {
  Plan plan;
  const Eigen::Index n500 = opt.n.value_or(500);
  if (name == "estimation-1" || name == "estimation-2") {
    plan.kind = Kind::estimation;
    std::vector<Eigen::Index> sizes = opt.sizes;
    if (sizes.empty() && opt.n) sizes = {*opt.n};
    if (sizes.empty()) sizes = {100, 500, 1000, 2000};
    const bool first = name == "estimation-1";
    for (auto n : sizes) {
      plan.settings.push_back(make_setting("n=" + std::to_string(n),
                                           first ? table1_model() : scenario2_model(), n,
                                           first ? CovariateDesign::uniform1 : CovariateDesign::uniform3));
    }
  } else if (name == "robust-1") {
    plan.kind = Kind::robust;
    std::vector<double> levels = opt.contamination_levels;
    if (levels.empty()) levels = {0.01, 0.02, 0.03, 0.04, 0.05};
    std::vector<std::string> families = opt.data_families;
    if (families.empty()) families = {"sal", "gaussian"};
    for (const auto& f : families) {
      const ExpertFamily fam = expert_family_from_string(f);
      for (double c : levels) {
        plan.settings.push_back(make_setting("data=" + f + ",c=" + fmt(c), table1_model(fam), n500,
                                             CovariateDesign::uniform1, c));
      }
    }
  } else if (name == "robust-2") {
    plan.kind = Kind::robust;
    std::vector<double> shapes = opt.shapes;
    if (shapes.empty()) shapes = {-20.0, -10.0, 0.0, 10.0, 20.0};
    for (double lambda : shapes) {
      plan.settings.push_back(make_setting("lambda=" + fmt(lambda),
                                           with_shape(table1_model(ExpertFamily::skew_normal), lambda),
                                           n500));
    }
  } else if (name.rfind("cluster-", 0) == 0 && name.size() == 9 && name[8] >= 'a' && name[8] <= 'd') {
    plan.kind = Kind::clustering;
    const char v = name[8];
    const bool skew = v == 'c' || v == 'd';
    const double c = (v == 'b' || v == 'd') ? 0.05 : 0.0;
    SalMoeModel truth = skew ? with_shape(table1_model(ExpertFamily::skew_normal), 20.0)
                             : table1_model(ExpertFamily::gaussian);
    plan.settings.push_back(make_setting("default", std::move(truth), n500, CovariateDesign::uniform1, c));
  } else if (name.rfind("order-S", 0) == 0 && name.size() == 8 && name[7] >= '1' && name[7] <= '6') {
    plan.kind = Kind::order;
    const int s = name[7] - '0';
    SalMoeModel truth;
    switch (s) {
      case 1: truth = table1_model(ExpertFamily::gaussian); break;
      case 2: truth = table1_model(ExpertFamily::sal); break;
      case 3: truth = with_shape(table1_model(ExpertFamily::skew_normal), 20.0); break;
      case 4: truth = three_component_model(ExpertFamily::gaussian); break;
      case 5: truth = three_component_model(ExpertFamily::sal); break;
      default: truth = with_shape(three_component_model(ExpertFamily::skew_normal), 20.0); break;
    }
    plan.settings.push_back(make_setting("default", std::move(truth), n500));
  } else {
    std::string names;
    for (const auto& s : scenario_names()) names += " " + s;
    fail(ErrorCode::unknown_scenario, "'" + name + "'; available:" + names);
  }
  for (auto& s : plan.settings) s.spec.name = name;
  return plan;
}

std::vector<PanicCalibration> order_calibrations() {
  return {{1, 1e3}, {1, 1e4}, {2, 1e3}, {2, 1e4}};
}

FitConfig base_config(const ScenarioOptions& opt, int K, std::uint64_t seed) {
  FitConfig c;
  c.K = K;
  c.restarts = opt.restarts;
  c.seed = seed;
  c.threads = 1;
  return c;
}

using Emit = std::function<void(const std::string& method, const std::string& metric, double value)>;

void run_replication(Kind kind, const Setting& s, const Dataset& d, std::uint64_t seed,
                     const ScenarioOptions& opt, const Emit& emit) {
  const int K = s.true_k;
  auto try_fit = [&](const std::string& method, auto&& fn) -> std::optional<FitReport> {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::invalid_argument || e.code() == ErrorCode::invalid_spec) throw;
      emit(method, "failed", 1.0);
      return std::nullopt;
    }
  };
  auto sal = [&] { return fit_salmoe(d, base_config(opt, K, derive_seed(seed, 1))); };
  auto gau = [&] { return fit_gmoe(d, base_config(opt, K, derive_seed(seed, 2))); };

  switch (kind) {
    case Kind::estimation: {
      if (auto rep = try_fit("salmoe", sal)) {
        for (const auto& pe : parameter_metrics(rep->model, s.spec.truth)) {
          emit("salmoe", "mse_" + pe.name, pe.mse);
          emit("salmoe", "bias_" + pe.name, pe.bias);
        }
        emit("salmoe", "iterations", rep->iterations);
      }
      break;
    }
    case Kind::robust: {
      if (auto rep = try_fit("salmoe", sal)) emit("salmoe", "rmse", rmse_mean_function(rep->model, s.spec.truth, d));
      if (auto rep = try_fit("gmoe", gau)) emit("gmoe", "rmse", rmse_mean_function(rep->model, s.spec.truth, d));
      break;
    }
    case Kind::clustering: {
      for (auto [method, fn] : {std::pair<std::string, std::function<FitReport()>>{"salmoe", sal},
                                std::pair<std::string, std::function<FitReport()>>{"gmoe", gau}}) {
        if (auto rep = try_fit(method, fn)) {
          const auto scores = clustering_metrics(d.z, map_labels(rep->responsibilities));
          emit(method, "ari", scores.ari);
          emit(method, "class_err", scores.class_err);
        }
      }
      break;
    }
    case Kind::order: {
      std::vector<int> ks = opt.k_range;
      if (ks.empty()) ks = {1, 2, 3, 4, 5};
      FitConfig c = base_config(opt, K, derive_seed(seed, 3));
      SelectConfig sel{order_calibrations()};
      const IcTable table = sweep_k(d, ks, c, sel);
      for (const auto& row : table.rows) {
        if (!row.ok) emit("sweep", "failed_k" + std::to_string(row.K), 1.0);
      }
      auto put = [&](const std::string& crit, const std::optional<int>& k) {
        if (k) emit(crit, "chosen_k", *k);
      };
      put("bic", table.chosen_bic);
      put("icl", table.chosen_icl);
      for (std::size_t j = 0; j < sel.calibrations.size(); ++j) {
        put(sel.calibrations[j].label(), table.chosen_panic[j]);
      }
      break;
    }
  }
}

nlohmann::json summarise(const Plan& plan, const std::vector<ReplicationRow>& rows) {
  nlohmann::json settings = nlohmann::json::object();
  for (const auto& s : plan.settings) {
    std::map<std::string, std::vector<double>> groups;
    for (const auto& r : rows) {
      if (r.setting == s.label) groups[r.method + "_" + r.metric].push_back(r.value);
    }
    nlohmann::json block = nlohmann::json::object();
    for (const auto& [key, values] : groups) {
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      block[key] = {{"mean", mean}, {"median", median(values)}, {"count", values.size()}};
    }
    if (plan.kind == Kind::order) {
      nlohmann::json sel = nlohmann::json::object();
      for (const auto& r : rows) {
        if (r.setting != s.label || r.metric != "chosen_k") continue;
        auto& entry = sel[r.method];
        if (entry.is_null()) entry = {{"true_k", s.true_k}, {"hits", 0}, {"runs", 0}, {"k_sum", 0.0}};
        entry["runs"] = entry["runs"].get<int>() + 1;
        entry["k_sum"] = entry["k_sum"].get<double>() + r.value;
        if (static_cast<int>(r.value) == s.true_k) entry["hits"] = entry["hits"].get<int>() + 1;
      }
      for (auto& [crit, entry] : sel.items()) {
        entry["mean_k"] = entry["k_sum"].get<double>() / entry["runs"].get<double>();
        entry.erase("k_sum");
      }
      block["selection"] = std::move(sel);
    }
    settings[s.label] = std::move(block);
  }
  return settings;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"estimation-1", "estimation-2", "robust-1", "robust-2", "cluster-a", "cluster-b",
          "cluster-c",    "cluster-d",    "order-S1", "order-S2", "order-S3",  "order-S4",
          "order-S5",     "order-S6"};
}

std::vector<ScenarioSpec> scenario_specs(const std::string& name, const ScenarioOptions& opt) {
  std::vector<ScenarioSpec> out;
  for (auto& s : make_plan(name, opt).settings) out.push_back(std::move(s.spec));
  return out;
}

ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& opt) {
  if (opt.reps < 1) fail(ErrorCode::invalid_argument, "reps must be >= 1");
  const Plan plan = make_plan(name, opt);
  for (const auto& s : plan.settings) s.spec.validate();

  struct Job {
    std::size_t setting;
    int rep;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < plan.settings.size(); ++s) {
    for (int r = 0; r < opt.reps; ++r) jobs.push_back({s, r});
  }
  std::vector<std::vector<ReplicationRow>> out(jobs.size());
  parallel_for(jobs.size(), opt.threads, [&](std::size_t j) {
    const Setting& s = plan.settings[jobs[j].setting];
    const int rep = jobs[j].rep;
    const std::uint64_t data_seed =
        derive_seed(derive_seed(opt.seed, fnv1a(name + "|" + s.label)), static_cast<std::uint64_t>(rep));
    Rng rng(data_seed);
    const Dataset d = generate(s.spec, rng);
    run_replication(plan.kind, s, d, data_seed, opt,
                    [&](const std::string& method, const std::string& metric, double value) {
                      out[j].push_back({rep, s.label, method, metric, value});
                    });
  });

  ScenarioResult result;
  result.name = name;
  for (auto& block : out) {
    for (auto& row : block) {
      if (row.metric == "failed") ++result.failed_fits;
      result.rows.push_back(std::move(row));
    }
  }
  result.summary = {{"scenario", name},
                    {"reps", opt.reps},
                    {"seed", opt.seed},
                    {"restarts", opt.restarts},
                    {"failed_fits", result.failed_fits},
                    {"settings", summarise(plan, result.rows)}};
  nlohmann::json specs = nlohmann::json::array();
  for (const auto& s : plan.settings) {
    nlohmann::json js = to_json(s.spec);
    js["setting"] = s.label;
    specs.push_back(std::move(js));
  }
  result.spec = {{"scenario", name}, {"reps", opt.reps}, {"seed", opt.seed},
                 {"restarts", opt.restarts}, {"settings", std::move(specs)}};
  if (plan.kind == Kind::order) {
    std::vector<int> ks = opt.k_range;
    if (ks.empty()) ks = {1, 2, 3, 4, 5};
    result.spec["k_range"] = ks;
    nlohmann::json cals = nlohmann::json::array();
    for (const auto& c : order_calibrations()) cals.push_back({{"beta", c.beta}, {"nu", c.nu}});
    result.spec["panic_calibrations"] = std::move(cals);
  }
  return result;
}

void write_scenario_artifacts(const ScenarioResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::vector<std::string>> rows{{"rep", "setting", "method", "metric", "value"}};
  for (const auto& r : result.rows) {
    rows.push_back({std::to_string(r.rep), r.setting, r.method, r.metric, format_double(r.value)});
  }
  write_csv(dir / "replications.csv", rows);
  write_json(dir / "summary.json", result.summary);
  write_json(dir / "spec.json", result.spec);
}

double summary_stat(const ScenarioResult& r, const std::string& setting, const std::string& key,
                    const std::string& stat) {
  const auto& settings = r.summary.at("settings");
  if (!settings.contains(setting) || !settings.at(setting).contains(key)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return settings.at(setting).at(key).at(stat).get<double>();
}

}  // namespace salmoe
