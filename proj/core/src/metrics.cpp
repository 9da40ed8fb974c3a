#include "salmoe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "salmoe/error.hpp"

namespace salmoe {

std::vector<std::string> parameter_names(const SalMoeModel& m) {
  std::vector<std::string> names;
  for (int k = 0; k + 1 < m.K(); ++k) {
    for (int j = 0; j <= m.q; ++j) names.push_back("eta" + std::to_string(k + 1) + "_" + std::to_string(j));
  }
  for (int k = 0; k < m.K(); ++k) {
    for (int j = 0; j <= m.p; ++j) names.push_back("beta" + std::to_string(k + 1) + "_" + std::to_string(j));
  }
  for (int k = 0; k < m.K(); ++k) names.push_back("sigma" + std::to_string(k + 1));
  for (int k = 0; k < m.K(); ++k) names.push_back("alpha" + std::to_string(k + 1));
  return names;
}

std::vector<double> flatten_parameters(const SalMoeModel& m) {
  std::vector<double> v;
  const auto& E = m.gating.coef();
  for (Eigen::Index k = 0; k < E.cols(); ++k) {
    for (Eigen::Index j = 0; j < E.rows(); ++j) v.push_back(E(j, k));
  }
  for (const auto& e : m.experts) {
    for (Eigen::Index j = 0; j < e.beta.size(); ++j) v.push_back(e.beta(j));
  }
  for (const auto& e : m.experts) v.push_back(e.sigma);
  for (const auto& e : m.experts) v.push_back(e.alpha);
  return v;
}

namespace {

template <class Cost>
std::vector<int> best_permutation(int K, Cost&& cost) {
  std::vector<int> perm(static_cast<std::size_t>(K));
  std::iota(perm.begin(), perm.end(), 0);
  if (K <= 6) {
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (int k = 0; k < K; ++k) c += cost(k, perm[static_cast<std::size_t>(k)]);
      if (c < best_cost) {
        best_cost = c;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  // Greedy: repeatedly take the cheapest remaining (slot, source) pair.
  std::vector<bool> slot_used(static_cast<std::size_t>(K)), src_used(static_cast<std::size_t>(K));
  for (int step = 0; step < K; ++step) {
    double best_cost = std::numeric_limits<double>::infinity();
    int bs = 0, bt = 0;
    for (int s = 0; s < K; ++s) {
      if (slot_used[static_cast<std::size_t>(s)]) continue;
      for (int t = 0; t < K; ++t) {
        if (src_used[static_cast<std::size_t>(t)]) continue;
        const double c = cost(s, t);
        if (c < best_cost) {
          best_cost = c;
          bs = s;
          bt = t;
        }
      }
    }
    perm[static_cast<std::size_t>(bs)] = bt;
    slot_used[static_cast<std::size_t>(bs)] = true;
    src_used[static_cast<std::size_t>(bt)] = true;
  }
  return perm;
}

int max_label(const std::vector<int>& a) {
  int m = 0;
  for (int v : a) {
    if (v < 1) fail(ErrorCode::invalid_argument, "labels must be >= 1");
    m = std::max(m, v);
  }
  return m;
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

}  // namespace

SalMoeModel align_to_reference(const SalMoeModel& fitted, const SalMoeModel& reference) {
  if (fitted.K() != reference.K() || fitted.p != reference.p || fitted.q != reference.q) {
    fail(ErrorCode::dimension_mismatch, "models differ in (K, p, q)");
  }
  const auto perm = best_permutation(fitted.K(), [&](int slot, int src) {
    const auto& r = reference.experts[static_cast<std::size_t>(slot)];
    const auto& f = fitted.experts[static_cast<std::size_t>(src)];
    return (r.beta - f.beta).squaredNorm() + std::pow(r.alpha - f.alpha, 2) +
           std::pow(r.sigma - f.sigma, 2);
  });
  return permute_components(fitted, perm);
}

std::vector<ParameterError> parameter_metrics(const SalMoeModel& fitted, const SalMoeModel& truth) {
  const SalMoeModel aligned = align_to_reference(fitted, truth);
  const auto names = parameter_names(truth);
  const auto est = flatten_parameters(aligned);
  const auto tru = flatten_parameters(truth);
  std::vector<ParameterError> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double bias = est[i] - tru[i];
    out.push_back({names[i], est[i], tru[i], bias, bias * bias});
  }
  return out;
}

double rmse_mean_function(const SalMoeModel& fitted, const SalMoeModel& truth, const Dataset& d) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const Eigen::VectorXd x = d.X.row(i).transpose();
    const Eigen::VectorXd t = d.T.row(i).transpose();
    const double diff = predict(truth, x, t).mean - predict(fitted, x, t).mean;
    acc += diff * diff;
  }
  return std::sqrt(acc / static_cast<double>(d.n()));
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) fail(ErrorCode::length_mismatch, "label vectors differ in length");
  const int ka = max_label(a);
  const int kb = max_label(b);
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ka, kb);
  for (std::size_t i = 0; i < a.size(); ++i) table(a[i] - 1, b[i] - 1) += 1.0;
  double index = 0.0;
  for (Eigen::Index i = 0; i < table.size(); ++i) index += choose2(table.data()[i]);
  double sum_a = 0.0, sum_b = 0.0;
  for (Eigen::Index r = 0; r < ka; ++r) sum_a += choose2(table.row(r).sum());
  for (Eigen::Index c = 0; c < kb; ++c) sum_b += choose2(table.col(c).sum());
  const double expected = sum_a * sum_b / choose2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (index - expected) / (max_index - expected);
}

std::vector<int> best_label_map(const std::vector<int>& reference, const std::vector<int>& estimate,
                                int min_labels) {
  if (reference.size() != estimate.size()) {
    fail(ErrorCode::length_mismatch, "label vectors differ in length");
  }
  const int K = std::max({max_label(reference), max_label(estimate), min_labels});
  Eigen::MatrixXd agree = Eigen::MatrixXd::Zero(K, K);  // (reference, estimate)
  for (std::size_t i = 0; i < reference.size(); ++i) agree(reference[i] - 1, estimate[i] - 1) += 1.0;
  // perm[ref slot] = estimated label source
  const auto perm = best_permutation(K, [&](int slot, int src) { return -agree(slot, src); });
  std::vector<int> map(static_cast<std::size_t>(K));
  for (int s = 0; s < K; ++s) map[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])] = s + 1;
  return map;
}

double classification_error(const std::vector<int>& reference, const std::vector<int>& estimate) {
  const auto map = best_label_map(reference, estimate);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (map[static_cast<std::size_t>(estimate[i] - 1)] != reference[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(reference.size());
}

ClusteringScores clustering_metrics(const std::vector<int>& z_true, const std::vector<int>& z_hat) {
  if (z_true.size() != z_hat.size()) fail(ErrorCode::length_mismatch, "label vectors differ in length");
  if (z_true.empty()) fail(ErrorCode::invalid_argument, "label vectors are empty");
  ClusteringScores s;
  s.ari = adjusted_rand_index(z_true, z_hat);
  s.class_err = classification_error(z_true, z_hat);
  s.accuracy = 1.0 - s.class_err;
  return s;
}

}  // namespace salmoe
