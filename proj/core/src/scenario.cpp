#include "salmoe/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "salmoe/error.hpp"
#include "salmoe/families.hpp"
#include "salmoe/io.hpp"
#include "salmoe/sal_kernel.hpp"

namespace salmoe {

void ScenarioSpec::validate() const {
  truth.validate();
  if (n < 1) fail(ErrorCode::invalid_spec, "scenario needs n >= 1");
  if (!(contamination >= 0.0 && contamination <= 1.0)) {
    fail(ErrorCode::invalid_spec, "contamination must lie in [0, 1]");
  }
  const int dims = design == CovariateDesign::uniform1 ? 1 : 3;
  if (truth.p != dims || truth.q != dims) {
    fail(ErrorCode::invalid_spec, "truth dimensions do not match the covariate design");
  }
}

namespace {

void draw_covariates(Dataset& d, Eigen::Index i, int dims, Rng& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  d.X(i, 0) = 1.0;
  for (int j = 1; j <= dims; ++j) d.X(i, j) = unif(rng);
  d.T.row(i) = d.X.row(i);
}

double draw_response(const SalMoeModel& m, int k, double mu, Rng& rng) {
  const auto& e = m.experts[static_cast<std::size_t>(k)];
  switch (m.family) {
    case ExpertFamily::sal: return sal_sample(rng, mu, e.alpha, e.sigma);
    case ExpertFamily::gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      return mu + std::sqrt(e.sigma) * normal(rng);
    }
    case ExpertFamily::skew_normal: return skew_normal_sample(rng, mu, e.sigma, e.alpha);
  }
  return mu;
}

}  // namespace

std::vector<Eigen::Index> contaminate(Dataset& d, double fraction, double noise_y, Rng& rng) {
  const auto n = d.n();
  const auto count = static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  std::vector<Eigen::Index> picked;
  if (count <= 0) return picked;
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index j = 0; j < count; ++j) {
    std::uniform_int_distribution<Eigen::Index> pick(j, n - 1);
    std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  picked.assign(idx.begin(), idx.begin() + count);
  const int dims = static_cast<int>(d.X.cols()) - 1;
  for (const auto i : picked) {
    draw_covariates(d, i, dims, rng);
    d.y(i) = noise_y;
  }
  return picked;
}

Dataset generate(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  const int dims = spec.truth.p;
  Dataset d;
  d.y.resize(spec.n);
  d.X.resize(spec.n, dims + 1);
  d.T.resize(spec.n, dims + 1);
  d.z.resize(static_cast<std::size_t>(spec.n));
  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    draw_covariates(d, i, dims, rng);
    const Eigen::VectorXd pi = gating_probs(spec.truth.gating, d.T.row(i).transpose());
    const double u = unif01(rng);
    int k = 0;
    double acc = pi(0);
    while (k + 1 < spec.truth.K() && u >= acc) acc += pi(++k);
    d.z[static_cast<std::size_t>(i)] = k + 1;
    const double mu = d.X.row(i).dot(spec.truth.experts[static_cast<std::size_t>(k)].beta);
    d.y(i) = draw_response(spec.truth, k, mu, rng);
  }
  if (spec.contamination > 0.0) contaminate(d, spec.contamination, spec.noise_y, rng);
  return d;
}

namespace {

SalParams expert(double alpha, double sigma, std::initializer_list<double> beta) {
  SalParams e;
  e.alpha = alpha;
  e.sigma = sigma;
  e.beta = Eigen::Map<const Eigen::VectorXd>(beta.begin(), static_cast<Eigen::Index>(beta.size()));
  return e;
}

}  // namespace

SalMoeModel table1_model(ExpertFamily family) {
  SalMoeModel m;
  m.family = family;
  m.p = 1;
  m.q = 1;
  const bool sal = family == ExpertFamily::sal;
  m.experts = {expert(sal ? 1.0 : 0.0, 0.1, {0.0, 1.0}),
               expert(sal ? 0.8 : 0.0, 0.1, {0.0, -1.0})};
  Eigen::MatrixXd E(2, 1);
  E << 0.0, 10.0;
  m.gating = GatingParams(E);
  return m;
}

SalMoeModel scenario2_model() {
  SalMoeModel m;
  m.family = ExpertFamily::sal;
  m.p = 3;
  m.q = 3;
  m.experts = {expert(1.0, 0.1, {0.0, -1.0, 0.5, 1.0}), expert(0.8, 0.1, {0.0, 1.0, 0.5, -1.0})};
  Eigen::MatrixXd E(4, 1);
  E << 0.0, 5.0, -2.0, 10.0;
  m.gating = GatingParams(E);
  return m;
}

SalMoeModel three_component_model(ExpertFamily family) {
  SalMoeModel m;
  m.family = family;
  m.p = 1;
  m.q = 1;
  const double a = family == ExpertFamily::sal ? 1.0 : 0.0;
  m.experts = {expert(a, 0.1, {0.0, 1.0}), expert(a, 0.1, {0.0, -1.0}), expert(a, 0.1, {1.0, -1.0})};
  Eigen::MatrixXd E(2, 2);
  E << 0.0, 0.0, 10.0, 10.0;
  m.gating = GatingParams(E);
  return m;
}

SalMoeModel with_shape(SalMoeModel m, double shape) {
  for (auto& e : m.experts) e.alpha = shape;
  return m;
}

nlohmann::json to_json(const ScenarioSpec& spec) {
  return {
      {"name", spec.name},
      {"expert_family", std::string(to_string(spec.truth.family))},
      {"K", spec.truth.K()},
      {"n", spec.n},
      {"design", spec.design == CovariateDesign::uniform1 ? "uniform1" : "uniform3"},
      {"contamination", spec.contamination},
      {"noise_y", spec.noise_y},
      {"truth", model_to_json(spec.truth)},
  };
}

}  // namespace salmoe
