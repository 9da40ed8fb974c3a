#pragma once

#include <Eigen/Core>
#include <optional>
#include <string_view>
#include <vector>

#include "salmoe/gating.hpp"

namespace salmoe {

/// Expert distribution. Fitting supports `sal` and `gaussian`; `skew_normal`
/// exists so simulation ground truths can be evaluated with the same API.
///
/// Field meaning per family:
///   sal          alpha = skewness, sigma = scale (variance-type)
///   gaussian     alpha unused (0), sigma = variance
///   skew_normal  alpha = shape lambda, sigma = Azzalini scale
enum class ExpertFamily { sal, gaussian, skew_normal };

std::string_view to_string(ExpertFamily f) noexcept;
ExpertFamily expert_family_from_string(std::string_view s);

struct SalParams {
  double alpha = 0.0;
  double sigma = 1.0;
  Eigen::VectorXd beta;  ///< length p+1, intercept first
};

struct SalMoeModel {
  ExpertFamily family = ExpertFamily::sal;
  std::vector<SalParams> experts;
  GatingParams gating;
  int p = 0;
  int q = 0;

  int K() const noexcept { return static_cast<int>(experts.size()); }

  /// Throws dimension-mismatch / invalid-parameter on a malformed model.
  void validate() const;
};

struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;  ///< n x (p+1), first column ones
  Eigen::MatrixXd T;  ///< n x (q+1), first column ones
  std::vector<int> z; ///< optional 1-based reference labels

  Eigen::Index n() const noexcept { return y.size(); }
  int p() const noexcept { return static_cast<int>(X.cols()) - 1; }
  int q() const noexcept { return static_cast<int>(T.cols()) - 1; }

  void validate() const;

  /// Rows in the given order (repeats allowed); labels follow.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

double expert_log_density(ExpertFamily family, const SalParams& e, double y, double mu);
double expert_mean(ExpertFamily family, const SalParams& e, double mu);
double expert_variance(ExpertFamily family, const SalParams& e);

double mixture_log_density(const SalMoeModel& m, double y,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& t);

/// log{pi_k(t_i) g_k(y_i)}, n x K.
Eigen::MatrixXd joint_log_terms(const SalMoeModel& m, const Dataset& d);

double log_likelihood(const SalMoeModel& m, const Dataset& d);

Responsibilities responsibilities(const SalMoeModel& m, const Dataset& d);

Prediction predict(const SalMoeModel& m, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& t);

/// 1-based MAP labels; the smallest index wins ties.
std::vector<int> map_labels(const Responsibilities& gamma);
std::vector<int> map_cluster(const SalMoeModel& m, const Dataset& d);

/// perm[new_k] = old_k. Gating is re-baselined so the new last component has
/// eta = 0; probabilities are unchanged.
SalMoeModel permute_components(const SalMoeModel& m, const std::vector<int>& perm);

struct CanonicalModel {
  SalMoeModel model;
  std::vector<int> permutation;  ///< perm[new_k] = old_k
  std::optional<Responsibilities> gamma;
};

/// Orders experts ascending by (intercept, alpha, sigma).
CanonicalModel canonicalize(const SalMoeModel& m,
                            const std::optional<Responsibilities>& gamma = std::nullopt);

}  // namespace salmoe
