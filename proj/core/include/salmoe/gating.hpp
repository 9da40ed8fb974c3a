#pragma once

// Multinomial-logit gating network with baseline column pinned at zero, and
// the one-step Bohning-bound MM update for its coefficients.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <optional>

namespace salmoe {

/// Posterior weights, n x K. Rows sum to one.
using Responsibilities = Eigen::MatrixXd;

/// Free gating coefficients E = [eta_1 ... eta_{K-1}], shape (q+1) x (K-1).
/// The baseline eta_K = 0 is implied and never stored.
class GatingParams {
 public:
  GatingParams() = default;
  /// All-zero gates (uniform probabilities).
  GatingParams(int K, int q);
  explicit GatingParams(Eigen::MatrixXd coef);

  int K() const noexcept { return static_cast<int>(coef_.cols()) + 1; }
  int q() const noexcept { return static_cast<int>(coef_.rows()) - 1; }
  const Eigen::MatrixXd& coef() const noexcept { return coef_; }
  Eigen::MatrixXd& coef() noexcept { return coef_; }

  /// (q+1) x K matrix with the baseline column appended.
  Eigen::MatrixXd unpinned() const;

 private:
  Eigen::MatrixXd coef_{1, 0};
};

/// pi_k(t) for one covariate row; t(0) is the intercept.
Eigen::VectorXd gating_probs(const GatingParams& E, const Eigen::Ref<const Eigen::VectorXd>& t);

/// log pi_k(t_i) for every row, n x K.
Eigen::MatrixXd gating_log_probs(const GatingParams& E, const Eigen::MatrixXd& T);

/// sum_i sum_k gamma_ik log pi_k(t_i).
double gating_q(const GatingParams& E, const Eigen::MatrixXd& T, const Responsibilities& gamma);

/// G = T^T (Gamma - Pi) restricted to the K-1 free columns.
Eigen::MatrixXd gating_score(const GatingParams& E, const Eigen::MatrixXd& T,
                             const Responsibilities& gamma);

/// C^{-1} = I + 1 1^T for C = I - (1/K) 1 1^T, both (K-1) x (K-1).
Eigen::MatrixXd bohning_c(int K);
Eigen::MatrixXd bohning_c_inverse(int K);

/// Factorisation of T^T T, computed once per design and reused by every MM
/// step. Throws singular-design when the reciprocal condition number is
/// below 1e-12 (collinear or constant gating covariates).
class GatingDesign {
 public:
  explicit GatingDesign(const Eigen::MatrixXd& T);

  const Eigen::MatrixXd& T() const noexcept { return T_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  double rcond() const noexcept { return rcond_; }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }

 private:
  Eigen::MatrixXd T_;
  Eigen::MatrixXd gram_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double rcond_ = 0.0;
};

inline constexpr double kGatingRcondMin = 1e-12;
inline constexpr double kDefaultGatingNormCap = 1e3;

/// E_new = E_old + 2 (T^T T)^{-1} G (I + 1 1^T). When `norm_cap` is set each
/// column is projected onto the ball ||eta_k|| <= cap afterwards.
GatingParams mm_update(const GatingParams& E_old, const GatingDesign& design,
                       const Responsibilities& gamma,
                       std::optional<double> norm_cap = std::nullopt);
GatingParams mm_update(const GatingParams& E_old, const Eigen::MatrixXd& T,
                       const Responsibilities& gamma);

/// Quadratic minoriser M(E | E_old) of gating_q built from the global
/// Hessian bound B = -1/2 C (x) T^T T. Tangent to gating_q at E_old.
double minorizer_value(const GatingParams& E, const GatingParams& E_old,
                       const Eigen::MatrixXd& T, const Responsibilities& gamma);

}  // namespace salmoe
