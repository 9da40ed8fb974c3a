#pragma once

// Hybrid EM-MM estimation for SAL mixture-of-experts models and the
// Gaussian-expert (GMoE) baseline that shares its outer loop.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "salmoe/model.hpp"
#include "salmoe/sal_kernel.hpp"

namespace salmoe {

struct FitConfig {
  int K = 2;
  int max_iter = 1000;
  double epsilon = 1e-5;  ///< relative log-likelihood increment
  int restarts = 30;
  std::uint64_t seed = 0;
  double sigma_min = kDefaultSigmaMin;
  double b_floor = kDefaultBFloor;
  int screen_iters = 100;    ///< EM-MM iterations used to rank restarts (0 ranks the starts)
  int gmoe_init_iters = 50;  ///< GMoE warm-up per restart
  int partition_retries = 10;
  std::optional<double> gating_norm_cap;  ///< disabled unless set
  int threads = 1;

  void validate() const;
};

struct EStepState {
  Responsibilities gamma;
  Eigen::MatrixXd v2;  ///< E[1/V | y, z = k]
  Eigen::MatrixXd v3;  ///< E[V | y, z = k]
};

EStepState e_step(const SalMoeModel& m, const Dataset& d, double b_floor = kDefaultBFloor);

struct ExpertUpdate {
  SalParams params;
  double raw_sigma = 0.0;  ///< sigma before the sigma_min floor
};

inline constexpr double kEmptyComponentMass = 1e-8;
inline constexpr double kExpertRcondMin = 1e-12;
/// A scale within this factor of sigma_min marks a collapsed component.
inline constexpr double kDegenerateSigmaFactor = 10.0;

/// Closed-form maximiser of the expert part of Q for one component:
/// beta from the weighted normal equations, then alpha, then sigma.
ExpertUpdate m_step_expert(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& gamma, const Eigen::VectorXd& v2,
                           const Eigen::VectorXd& v3, double sigma_min = kDefaultSigmaMin);
ExpertUpdate m_step_expert(const Dataset& d, const Eigen::VectorXd& gamma,
                           const Eigen::VectorXd& v2, const Eigen::VectorXd& v3,
                           double sigma_min = kDefaultSigmaMin);

/// Weighted least squares and weighted residual variance.
SalParams m_step_gaussian(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& gamma, double sigma_min = kDefaultSigmaMin);

/// Expert contribution to Q for one component, dropping terms that do not
/// depend on (beta, alpha, sigma).
double expert_q(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SalParams& e,
                const Eigen::VectorXd& gamma, const Eigen::VectorXd& v2,
                const Eigen::VectorXd& v3);

struct FitReport {
  SalMoeModel model;  ///< canonicalised
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  int best_restart = -1;
  int failed_restarts = 0;
  std::uint64_t seed = 0;
  Responsibilities responsibilities;

  double loglik() const { return loglik_trace.back(); }
};

/// Runs E-step, M-step for every expert and one MM gating step per iteration
/// until the relative increment drops below epsilon or max_iter is hit.
/// Throws empty-component or singular-system when a run degenerates.
FitReport em_mm_fit(const Dataset& d, const FitConfig& cfg, const SalMoeModel& init);

/// Same loop with Gaussian experts. `init.family` must be gaussian.
FitReport gmoe_fit(const Dataset& d, const FitConfig& cfg, const SalMoeModel& init);

struct InitResult {
  SalMoeModel model;
  int best_restart = -1;
  int failed_restarts = 0;
  double screened_loglik = 0.0;
  /// Remaining successful candidates in rank order, with their restart index.
  std::vector<std::pair<int, SalMoeModel>> runners_up;
};

/// Random K-partition -> short GMoE fit -> SAL starting values, repeated
/// cfg.restarts times on independent seeded streams. Returns the candidate
/// with the largest log-likelihood after cfg.screen_iters EM-MM iterations.
InitResult initialize(const Dataset& d, const FitConfig& cfg);

/// True when some expert scale has collapsed onto the sigma_min floor, the
/// signature of a spurious likelihood spike on tied or interpolated rows.
bool is_degenerate(const SalMoeModel& m, const FitConfig& cfg);

/// Gaussian counterpart: best of cfg.restarts short GMoE fits.
InitResult initialize_gmoe(const Dataset& d, const FitConfig& cfg);

/// initialize + em_mm_fit.
FitReport fit_salmoe(const Dataset& d, const FitConfig& cfg);
/// initialize_gmoe + gmoe_fit.
FitReport fit_gmoe(const Dataset& d, const FitConfig& cfg);

/// Standardised third moment of residuals under weights w.
double weighted_skewness(const Eigen::VectorXd& r, const Eigen::VectorXd& w);

}  // namespace salmoe
