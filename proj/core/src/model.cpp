#include "salmoe/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "salmoe/error.hpp"
#include "salmoe/families.hpp"
#include "salmoe/sal_kernel.hpp"

namespace salmoe {

std::string_view to_string(ExpertFamily f) noexcept {
  switch (f) {
    case ExpertFamily::sal: return "sal";
    case ExpertFamily::gaussian: return "gaussian";
    case ExpertFamily::skew_normal: return "skew_normal";
  }
  return "sal";
}

ExpertFamily expert_family_from_string(std::string_view s) {
  if (s == "sal") return ExpertFamily::sal;
  if (s == "gaussian") return ExpertFamily::gaussian;
  if (s == "skew_normal") return ExpertFamily::skew_normal;
  fail(ErrorCode::invalid_argument, "unknown expert family '" + std::string(s) + "'");
}

void SalMoeModel::validate() const {
  if (experts.empty()) fail(ErrorCode::invalid_parameter, "model needs K >= 1");
  if (gating.K() != K() || gating.q() != q) {
    fail(ErrorCode::dimension_mismatch, "gating shape does not match K and q");
  }
  for (const auto& e : experts) {
    if (e.beta.size() != p + 1) {
      fail(ErrorCode::dimension_mismatch, "expert beta length must be p+1");
    }
    if (!(e.sigma > 0.0) || !std::isfinite(e.sigma) || !std::isfinite(e.alpha) ||
        !e.beta.allFinite()) {
      fail(ErrorCode::invalid_parameter, "expert parameters must be finite with sigma > 0");
    }
  }
}

void Dataset::validate() const {
  const auto n = y.size();
  if (n < 1) fail(ErrorCode::invalid_parameter, "dataset is empty");
  if (X.rows() != n || T.rows() != n || X.cols() < 1 || T.cols() < 1) {
    fail(ErrorCode::dimension_mismatch, "dataset matrices do not match y");
  }
  if (!y.allFinite() || !X.allFinite() || !T.allFinite()) {
    fail(ErrorCode::invalid_parameter, "dataset contains non-finite values");
  }
  if ((X.col(0).array() != 1.0).any() || (T.col(0).array() != 1.0).any()) {
    fail(ErrorCode::invalid_parameter, "first design column must be the intercept");
  }
  if (!z.empty() && static_cast<Eigen::Index>(z.size()) != n) {
    fail(ErrorCode::length_mismatch, "label vector length does not match y");
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.y.resize(m);
  out.X.resize(m, X.cols());
  out.T.resize(m, T.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = rows[static_cast<std::size_t>(r)];
    out.y(r) = y(i);
    out.X.row(r) = X.row(i);
    out.T.row(r) = T.row(i);
    if (!z.empty()) out.z.push_back(z[static_cast<std::size_t>(i)]);
  }
  return out;
}

double expert_log_density(ExpertFamily family, const SalParams& e, double y, double mu) {
  switch (family) {
    case ExpertFamily::sal: return sal_log_density(y, mu, e.alpha, e.sigma);
    case ExpertFamily::gaussian: return normal_log_density(y, mu, e.sigma);
    case ExpertFamily::skew_normal: return skew_normal_log_density(y, mu, e.sigma, e.alpha);
  }
  return 0.0;
}

double expert_mean(ExpertFamily family, const SalParams& e, double mu) {
  switch (family) {
    case ExpertFamily::sal: return mu + e.alpha;
    case ExpertFamily::gaussian: return mu;
    case ExpertFamily::skew_normal: return mu + skew_normal_mean_offset(e.sigma, e.alpha);
  }
  return mu;
}

double expert_variance(ExpertFamily family, const SalParams& e) {
  switch (family) {
    case ExpertFamily::sal: return e.alpha * e.alpha + e.sigma;
    case ExpertFamily::gaussian: return e.sigma;
    case ExpertFamily::skew_normal: return skew_normal_variance(e.sigma, e.alpha);
  }
  return e.sigma;
}

namespace {

void check_row(const SalMoeModel& m, Eigen::Index xs, Eigen::Index ts) {
  if (xs != m.p + 1 || ts != m.q + 1) {
    fail(ErrorCode::dimension_mismatch,
         "covariate lengths (" + std::to_string(xs) + ", " + std::to_string(ts) +
             ") do not match model (p+1, q+1) = (" + std::to_string(m.p + 1) + ", " +
             std::to_string(m.q + 1) + ")");
  }
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

}  // namespace

double mixture_log_density(const SalMoeModel& m, double y,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& t) {
  check_row(m, x.size(), t.size());
  const Eigen::VectorXd pi = gating_probs(m.gating, t);
  Eigen::RowVectorXd terms(m.K());
  for (int k = 0; k < m.K(); ++k) {
    const auto& e = m.experts[static_cast<std::size_t>(k)];
    terms(k) = std::log(pi(k)) + expert_log_density(m.family, e, y, x.dot(e.beta));
  }
  return log_sum_exp(terms);
}

Eigen::MatrixXd joint_log_terms(const SalMoeModel& m, const Dataset& d) {
  check_row(m, d.X.cols(), d.T.cols());
  Eigen::MatrixXd out = gating_log_probs(m.gating, d.T);
  for (int k = 0; k < m.K(); ++k) {
    const auto& e = m.experts[static_cast<std::size_t>(k)];
    const Eigen::VectorXd mu = d.X * e.beta;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      out(i, k) += expert_log_density(m.family, e, d.y(i), mu(i));
    }
  }
  return out;
}

double log_likelihood(const SalMoeModel& m, const Dataset& d) {
  const Eigen::MatrixXd terms = joint_log_terms(m, d);
  double total = 0.0;
  for (Eigen::Index i = 0; i < terms.rows(); ++i) total += log_sum_exp(terms.row(i));
  return total;
}

Responsibilities responsibilities(const SalMoeModel& m, const Dataset& d) {
  Eigen::MatrixXd g = joint_log_terms(m, d);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double top = g.row(i).maxCoeff();
    g.row(i) = (g.row(i).array() - top).exp();
    g.row(i) /= g.row(i).sum();
  }
  return g;
}

Prediction predict(const SalMoeModel& m, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& t) {
  check_row(m, x.size(), t.size());
  const Eigen::VectorXd pi = gating_probs(m.gating, t);
  double mean = 0.0;
  double second = 0.0;
  for (int k = 0; k < m.K(); ++k) {
    const auto& e = m.experts[static_cast<std::size_t>(k)];
    const double mk = expert_mean(m.family, e, x.dot(e.beta));
    mean += pi(k) * mk;
    second += pi(k) * (mk * mk + expert_variance(m.family, e));
  }
  Prediction out;
  out.mean = mean;
  out.variance = std::max(0.0, second - mean * mean);
  const double half = 2.0 * std::sqrt(out.variance);
  out.lower = mean - half;
  out.upper = mean + half;
  return out;
}

std::vector<int> map_labels(const Responsibilities& gamma) {
  std::vector<int> z(static_cast<std::size_t>(gamma.rows()));
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < gamma.cols(); ++k) {
      if (gamma(i, k) > gamma(i, best)) best = k;
    }
    z[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return z;
}

std::vector<int> map_cluster(const SalMoeModel& m, const Dataset& d) {
  return map_labels(responsibilities(m, d));
}

SalMoeModel permute_components(const SalMoeModel& m, const std::vector<int>& perm) {
  const int K = m.K();
  if (static_cast<int>(perm.size()) != K) {
    fail(ErrorCode::dimension_mismatch, "permutation length must equal K");
  }
  SalMoeModel out = m;
  const Eigen::MatrixXd full = m.gating.unpinned();
  Eigen::MatrixXd permuted(full.rows(), K);
  for (int k = 0; k < K; ++k) {
    out.experts[static_cast<std::size_t>(k)] = m.experts[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
    permuted.col(k) = full.col(perm[static_cast<std::size_t>(k)]);
  }
  const Eigen::VectorXd baseline = permuted.col(K - 1);
  Eigen::MatrixXd free = permuted.leftCols(K - 1);
  free.colwise() -= baseline;
  out.gating = GatingParams(free);
  return out;
}

CanonicalModel canonicalize(const SalMoeModel& m, const std::optional<Responsibilities>& gamma) {
  std::vector<int> perm(static_cast<std::size_t>(m.K()));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    const auto& ea = m.experts[static_cast<std::size_t>(a)];
    const auto& eb = m.experts[static_cast<std::size_t>(b)];
    if (ea.beta(0) != eb.beta(0)) return ea.beta(0) < eb.beta(0);
    if (ea.alpha != eb.alpha) return ea.alpha < eb.alpha;
    return ea.sigma < eb.sigma;
  });
  CanonicalModel out{permute_components(m, perm), perm, std::nullopt};
  if (gamma) {
    Responsibilities g(gamma->rows(), gamma->cols());
    for (int k = 0; k < m.K(); ++k) g.col(k) = gamma->col(perm[static_cast<std::size_t>(k)]);
    out.gamma = std::move(g);
  }
  return out;
}

}  // namespace salmoe
