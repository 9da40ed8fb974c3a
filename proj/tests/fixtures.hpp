#pragma once

#include <random>

#include "oracles.hpp"
#include "salmoe/model.hpp"
#include "salmoe/random.hpp"
#include "salmoe/scenario.hpp"

namespace fixture {

inline salmoe::SalMoeModel random_model(std::mt19937_64& rng, int K, int p, int q,
                                        salmoe::ExpertFamily family = salmoe::ExpertFamily::sal) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> us(0.05, 1.0);
  salmoe::SalMoeModel m;
  m.family = family;
  m.p = p;
  m.q = q;
  for (int k = 0; k < K; ++k) {
    salmoe::SalParams e;
    e.alpha = nd(rng);
    e.sigma = us(rng);
    e.beta = Eigen::VectorXd(p + 1);
    for (int j = 0; j <= p; ++j) e.beta(j) = 2 * nd(rng);
    m.experts.push_back(e);
  }
  Eigen::MatrixXd E(q + 1, K - 1);
  for (Eigen::Index i = 0; i < E.size(); ++i) E(i) = 2 * nd(rng);
  m.gating = salmoe::GatingParams(E);
  return m;
}

inline salmoe::Dataset random_data(std::mt19937_64& rng, Eigen::Index n, int p, int q) {
  salmoe::Dataset d;
  d.X = oracle::random_design(rng, n, p);
  d.T = oracle::random_design(rng, n, q);
  d.y.resize(n);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (Eigen::Index i = 0; i < n; ++i) d.y(i) = nd(rng);
  return d;
}

/// Scenario-1 draw with the given family and size.
inline salmoe::Dataset scenario1(std::uint64_t seed, Eigen::Index n,
                                 salmoe::ExpertFamily family = salmoe::ExpertFamily::sal) {
  salmoe::ScenarioSpec spec;
  spec.truth = salmoe::table1_model(family);
  spec.n = n;
  salmoe::Rng rng(seed);
  return salmoe::generate(spec, rng);
}

/// Table 1 with expert 2 shifted down by 6 so the experts barely overlap.
inline salmoe::SalMoeModel separated_model() {
  salmoe::SalMoeModel m = salmoe::table1_model();
  m.experts[1].beta(0) = -6.0;
  return m;
}

inline salmoe::Dataset draw(const salmoe::SalMoeModel& truth, std::uint64_t seed, Eigen::Index n) {
  salmoe::ScenarioSpec spec;
  spec.truth = truth;
  spec.n = n;
  salmoe::Rng rng(seed);
  return salmoe::generate(spec, rng);
}

/// Fraction of MAP labels equal to z, and its expectation mean_i max_k gamma_ik.
inline std::pair<double, double> map_agreement(const salmoe::Responsibilities& g, const std::vector<int>& z) {
  double agree = 0, expected = 0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    Eigen::Index k;
    expected += g.row(i).maxCoeff(&k);
    agree += static_cast<int>(k) + 1 == z[static_cast<std::size_t>(i)];
  }
  return {agree / static_cast<double>(g.rows()), expected / static_cast<double>(g.rows())};
}

/// Independent SAL mixture density via the Bessel form and a long-double softmax.
inline double mixture_density(const salmoe::SalMoeModel& m, double y, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& t) {
  const auto pi = oracle::softmax_row(m.gating.coef(), t);
  long double f = 0;
  for (int k = 0; k < m.K(); ++k) {
    const auto& e = m.experts[static_cast<std::size_t>(k)];
    const double mu = x.dot(e.beta);
    const double g = y == mu ? 1 / std::sqrt(2 * e.sigma + e.alpha * e.alpha)
                             : oracle::sal_density_bessel(y, mu, e.alpha, e.sigma);
    f += pi[static_cast<std::size_t>(k)] * g;
  }
  return static_cast<double>(f);
}

}  // namespace fixture
