// Acceptance runner. Usage: salmoe_acceptance [criterion ...]; no argument runs all.
// Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "salmoe/error.hpp"
#include "salmoe/fit.hpp"
#include "salmoe/gating.hpp"
#include "salmoe/io.hpp"
#include "salmoe/metrics.hpp"
#include "salmoe/parallel.hpp"
#include "salmoe/runners.hpp"
#include "salmoe/sal_kernel.hpp"
#include "salmoe/scenario.hpp"
#include "salmoe/select.hpp"

using namespace salmoe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

ScenarioOptions sim_options(int reps) {
  ScenarioOptions o;
  o.reps = reps;
  o.seed = 1;
  o.restarts = 30;
  o.threads = default_thread_count();
  return o;
}

Outcome monotone_likelihood() {
  const auto names = scenario_names();
  ScenarioOptions opt;
  opt.n = 500;
  std::map<std::string, std::vector<ScenarioSpec>> specs;
  for (const auto& name : names) specs[name] = scenario_specs(name, opt);

  constexpr int kFits = 200;
  std::vector<double> worst(kFits, 0.0);
  std::vector<int> failed(kFits, 0);
  parallel_for(kFits, default_thread_count(), [&](std::size_t f) {
    const auto& name = names[f % names.size()];
    const auto& list = specs[name];
    const ScenarioSpec& spec = list[(f / names.size()) % list.size()];
    Rng rng = make_rng(2024, f);
    const Dataset d = generate(spec, rng);
    FitConfig c;
    c.K = spec.truth.K();
    c.restarts = 3;
    c.seed = derive_seed(7, f);
    try {
      const FitReport r = fit_salmoe(d, c);
      for (std::size_t j = 1; j < r.loglik_trace.size(); ++j) {
        worst[f] = std::min(worst[f], r.loglik_trace[j] - r.loglik_trace[j - 1]);
      }
    } catch (const Error&) {
      failed[f] = 1;
    }
  });
  const double drop = *std::min_element(worst.begin(), worst.end());
  int nfail = 0;
  for (int v : failed) nfail += v;
  return {drop >= -1e-8 && nfail == 0,
          std::to_string(kFits - nfail) + " fits over " + std::to_string(names.size()) +
              " presets, largest one-step decrease " + fmt("%.3g", -drop) + ", failed fits " + std::to_string(nfail)};
}

Outcome e_step_oracle() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> la(std::log(0.05), std::log(50.0)), lb(std::log(1e-3), std::log(50.0));
  double worst_gig = 0.0;
  for (int c = 0; c < 20; ++c) {
    const double a = std::exp(la(rng)), b = std::exp(lb(rng));
    const double split = std::sqrt(b / a);
    auto inv = [&](double w) { return w > 0 ? oracle::gig_density(w, a, b, 0.5) / w : 0.0; };
    auto lin = [&](double w) { return w * oracle::gig_density(w, a, b, 0.5); };
    const GigMoments m = gig_moments({a, b, 0.5});
    worst_gig = std::max({worst_gig, rel_err(m.inv_mean, oracle::integrate_positive(inv, split)),
                          rel_err(m.mean, oracle::integrate_positive(lin, split))});
  }
  double worst_norm = 0.0;
  for (double alpha : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    for (double sigma : {0.05, 0.1, 1.0, 4.0}) {
      const double mu = 0.3;
      const double reach = 60 * std::sqrt(sigma) + 60 * std::abs(alpha);
      auto pdf = [&](double y) { return std::exp(sal_log_density(y, mu, alpha, sigma)); };
      const double mass = oracle::integrate(pdf, mu - reach, mu) + oracle::integrate(pdf, mu, mu + reach);
      worst_norm = std::max(worst_norm, std::abs(mass - 1.0));
    }
  }
  return {worst_gig <= 1e-6 && worst_norm <= 1e-6,
          "GIG moments max rel err " + fmt("%.2e", worst_gig) + " on 20 points, SAL mass max |1 - I| " +
              fmt("%.2e", worst_norm) + " on 20 configurations"};
}

Outcome m_step_oracle() {
  std::mt19937_64 rng(3);
  double worst = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < 50; ++c) {
    ScenarioSpec spec;
    spec.truth = fixture::random_model(rng, 2, 1, 1);
    spec.n = 30;
    Rng r2(derive_seed(3, static_cast<std::uint64_t>(c)));
    const Dataset d = generate(spec, r2);
    const EStepState s = e_step(fixture::random_model(rng, 2, 1, 1), d);
    const Eigen::MatrixXd gamma = oracle::random_stochastic(rng, 30, 2);
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXd g = gamma.col(k), v2 = s.v2.col(k), v3 = s.v3.col(k);
      const ExpertUpdate u = m_step_expert(d, g, v2, v3);
      const double closed =
          oracle::expert_objective(d.X, d.y, u.params.beta, u.params.alpha, u.params.sigma, g, v2, v3);
      auto negq = [&](const Eigen::VectorXd& th) {
        return -oracle::expert_objective(d.X, d.y, th.head(2), th(2), kDefaultSigmaMin + std::exp(th(3)), g, v2, v3);
      };
      const double numeric = -negq(oracle::nelder_mead(negq, Eigen::VectorXd::Zero(4)));
      worst = std::max(worst, numeric - closed);
    }
  }
  return {worst <= 1e-6, "100 expert updates on 50 instances, max (numeric - closed form) " + fmt("%.2e", worst)};
}

Outcome mm_contract() {
  std::mt19937_64 rng(4);
  auto coef = [&](Eigen::Index q, int K, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    Eigen::MatrixXd E(q + 1, K - 1);
    for (Eigen::Index i = 0; i < E.size(); ++i) E(i) = nd(rng);
    return E;
  };
  int ascent_fail = 0, minor_fail = 0, tangent_fail = 0, probes = 0;
  for (int c = 0; c < 500; ++c) {
    const int K = 2 + c % 4;
    const Eigen::Index q = c % 3;
    const Eigen::Index n = 10 + c % 40;
    const Eigen::MatrixXd T = oracle::random_design(rng, n, q);
    const Eigen::MatrixXd G = oracle::random_stochastic(rng, n, K);
    const GatingParams E(coef(q, K, 0.5 + c % 7));
    const double q0 = gating_q(E, T, G);
    const double slack = 1e-10 * std::max(1.0, std::abs(q0));
    if (gating_q(mm_update(E, T, G), T, G) < q0 - slack) ++ascent_fail;
    if (std::abs(minorizer_value(E, E, T, G) - q0) > slack) ++tangent_fail;
    for (int r = 0; r < 20; ++r, ++probes) {
      Eigen::MatrixXd D = coef(q, K, 1.0);
      D *= std::uniform_real_distribution<double>(0, 5)(rng) / D.norm();
      const GatingParams Ep(E.coef() + D);
      const double Q = gating_q(Ep, T, G);
      if (minorizer_value(Ep, E, T, G) > Q + 1e-10 * std::max(1.0, std::abs(Q))) ++minor_fail;
    }
  }
  return {ascent_fail + minor_fail + tangent_fail == 0,
          "500 cases: ascent failures " + std::to_string(ascent_fail) + ", tangency failures " +
              std::to_string(tangent_fail) + ", minorisation failures " + std::to_string(minor_fail) + " of " +
              std::to_string(probes) + " probes"};
}

Outcome estimation_consistency() {
  ScenarioOptions opt = sim_options(100);
  opt.sizes = {500, 2000};
  const ScenarioResult r = run_scenario("estimation-1", opt);
  int decreased = 0;
  const auto names = parameter_names(table1_model());
  for (const auto& p : names) {
    if (summary_stat(r, "n=2000", "salmoe_mse_" + p, "mean") <= summary_stat(r, "n=500", "salmoe_mse_" + p, "mean")) {
      ++decreased;
    }
  }
  const double beta11 = summary_stat(r, "n=2000", "salmoe_mse_beta1_1", "mean");
  return {decreased >= 8 && beta11 <= 0.05,
          std::to_string(decreased) + " of " + std::to_string(names.size()) +
              " parameters with lower mean MSE at n=2000, mean MSE(beta1_1) at n=2000 = " + fmt("%.4f", beta11) +
              ", failed fits " + std::to_string(r.failed_fits)};
}

Outcome robustness_outliers() {
  ScenarioOptions opt = sim_options(50);
  opt.n = 500;
  opt.contamination_levels = {0.05};
  opt.data_families = {"sal", "gaussian"};
  const ScenarioResult r = run_scenario("robust-1", opt);
  const double s = summary_stat(r, "data=sal,c=0.05", "salmoe_rmse");
  const double g = summary_stat(r, "data=sal,c=0.05", "gmoe_rmse");
  const double sg = summary_stat(r, "data=gaussian,c=0.05", "salmoe_rmse");
  const double gg = summary_stat(r, "data=gaussian,c=0.05", "gmoe_rmse");
  return {s < g, "SAL data: median RMSE SALMoE " + fmt("%.4f", s) + " vs GMoE " + fmt("%.4f", g) +
                     " (Gaussian data, informational: " + fmt("%.4f", sg) + " vs " + fmt("%.4f", gg) + ")"};
}

Outcome skewness_advantage() {
  ScenarioOptions opt = sim_options(50);
  opt.shapes = {20.0, 0.0};
  const ScenarioResult r = run_scenario("robust-2", opt);
  const double s20 = summary_stat(r, "lambda=20", "salmoe_rmse"), g20 = summary_stat(r, "lambda=20", "gmoe_rmse");
  const double s0 = summary_stat(r, "lambda=0", "salmoe_rmse"), g0 = summary_stat(r, "lambda=0", "gmoe_rmse");
  return {s20 < g20 && g0 <= s0, "median RMSE lambda=20: SALMoE " + fmt("%.4f", s20) + " vs GMoE " +
                                     fmt("%.4f", g20) + "; lambda=0: SALMoE " + fmt("%.4f", s0) + " vs GMoE " +
                                     fmt("%.4f", g0)};
}

Outcome clustering() {
  const ScenarioResult r = run_scenario("cluster-d", sim_options(50));
  const double s = summary_stat(r, "default", "salmoe_ari"), g = summary_stat(r, "default", "gmoe_ari");
  return {s > g, "median ARI SALMoE " + fmt("%.4f", s) + " vs GMoE " + fmt("%.4f", g)};
}

Outcome order_selection() {
  ScenarioOptions opt = sim_options(100);
  opt.n = 500;
  auto hits = [&](const std::string& name) {
    const ScenarioResult r = run_scenario(name, opt);
    return r.summary.at("settings").at("default").at("selection").at("bic").at("hits").get<int>();
  };
  const int s1 = hits("order-S1"), s2 = hits("order-S2");
  return {s1 >= 90 && s2 >= 70,
          "BIC picks K=2 in " + std::to_string(s1) + "/100 on S1 and " + std::to_string(s2) + "/100 on S2"};
}

Outcome criterion_identities() {
  double worst_cal = 0.0;
  for (int beta : {1, 2}) {
    for (double nu : {1e3, 1e4}) {
      for (double ll : {-1234.5, -10.0, 250.0}) {
        for (int K : {1, 2, 5}) {
          const double b = bic(ll, K, 2, 1, nu);
          worst_cal = std::max(worst_cal, rel_err(panic(ll, K, 2, 1, nu, panic_alpha(beta, nu), beta), b));
        }
      }
    }
  }
  double worst_gap = 0.0, min_gap = std::numeric_limits<double>::infinity();
  int fits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset d = fixture::scenario1(100 + seed, 300);
    for (int K = 1; K <= 3; ++K) {
      FitConfig c;
      c.K = K;
      c.restarts = 3;
      c.seed = seed;
      const FitReport f = fit_salmoe(d, c);
      const IcRow row = score_fit(f.model, d, SelectConfig{});
      const double gap = row.icl - row.bic, want = 2.0 * (row.loglik - row.classification_loglik);
      worst_gap = std::max(worst_gap, std::abs(gap - want) / std::max(1.0, std::abs(row.bic)));
      min_gap = std::min(min_gap, gap);
      ++fits;
    }
  }
  const bool df_ok = degrees_of_freedom(2, 1, 1) == 10 && degrees_of_freedom(2, 4, 4) == 19;
  return {worst_cal <= 1e-10 && worst_gap <= 1e-10 && min_gap >= -1e-10 && df_ok,
          "PanIC/BIC max rel diff at n=nu " + fmt("%.1e", worst_cal) + "; ICL-BIC entropy identity max err " +
              fmt("%.1e", worst_gap) + ", min gap " + fmt("%.3g", min_gap) + " over " + std::to_string(fits) +
              " fits; df(2,1,1)=" + std::to_string(degrees_of_freedom(2, 1, 1)) +
              ", df(2,4,4)=" + std::to_string(degrees_of_freedom(2, 4, 4))};
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "salmoe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome co2_pipeline() {
  const std::filesystem::path input = std::filesystem::path(SALMOE_TEST_DATA_DIR) / "co2_like.csv";
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "salmoe_acceptance_co2";
  std::filesystem::remove_all(dir);
  const std::vector<std::string> data{"--input", input.string(), "--y", "co2_pc", "--x", "gdp_pc", "--standardize"};
  auto with = [&](std::vector<std::string> head, std::initializer_list<std::string> tail) {
    head.insert(head.end(), data.begin(), data.end());
    head.insert(head.end(), tail);
    return head;
  };
  const int sel = cli(with({"select"}, {"--k-range", "1..5", "--seed", "1", "--out", (dir / "select").string()}));
  if (sel != 0) return {false, "select exited with " + std::to_string(sel)};
  const auto summary = read_json(dir / "select" / "summary.json");
  const auto chosen = summary.at("chosen").at("bic");
  const int k = chosen.is_number_integer() ? chosen.get<int>() : -1;
  const int fit = cli(with({"fit"}, {"--k", "2", "--seed", "1", "--out", (dir / "fit").string()}));
  if (fit != 0) return {false, "BIC chose K=" + std::to_string(k) + "; fit exited with " + std::to_string(fit)};
  const int boot = cli({"bootstrap", "--input", input.string(), "--model", (dir / "fit" / "model.json").string(),
                        "--B", "200", "--seed", "1", "--out", (dir / "boot").string()});
  if (boot != 0) return {false, "BIC chose K=" + std::to_string(k) + "; bootstrap exited with " + std::to_string(boot)};
  const CsvTable ci = read_csv(dir / "boot" / "ci_table.csv");
  const Eigen::VectorXd lo = ci.numeric("lower"), hi = ci.numeric("upper");
  const bool ordered = lo.allFinite() && hi.allFinite() && (lo.array() <= hi.array()).all();
  const int ok_boot = read_json(dir / "boot" / "bootstrap.json").at("successful").get<int>();
  return {k == 2 && ordered && lo.size() == 10,
          "BIC chose K=" + std::to_string(k) + "; fit and bootstrap completed, " + std::to_string(ok_boot) +
              "/200 replicates, " + std::to_string(lo.size()) + " intervals" + (ordered ? "" : " (disordered)")};
}

const std::map<int, std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::map<int, std::pair<std::string, std::function<Outcome()>>> table{
      {1, {"monotone likelihood", monotone_likelihood}},
      {2, {"E-step oracle", e_step_oracle}},
      {3, {"M-step oracle", m_step_oracle}},
      {4, {"MM-step contract", mm_contract}},
      {5, {"estimation consistency", estimation_consistency}},
      {6, {"robustness to outliers", robustness_outliers}},
      {7, {"skewness advantage", skewness_advantage}},
      {8, {"clustering", clustering}},
      {9, {"order selection", order_selection}},
      {10, {"criterion identities", criterion_identities}},
      {11, {"CO2-like pipeline", co2_pipeline}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) {
    for (const auto& [id, c] : criteria()) which.push_back(id);
  }
  bool all = true;
  for (int id : which) {
    const auto it = criteria().find(id);
    if (it == criteria().end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 1;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << id << " (" << it->second.first << "): " << (o.pass ? "PASS" : "FAIL") << " - "
              << o.detail << " [" << fmt("%.1f", secs) << " s]" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
