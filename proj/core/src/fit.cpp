#include "salmoe/fit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "salmoe/error.hpp"
#include "salmoe/parallel.hpp"
#include "salmoe/random.hpp"

namespace salmoe {

void FitConfig::validate() const {
  if (K < 1) fail(ErrorCode::invalid_argument, "K must be >= 1");
  if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "epsilon must be > 0");
  if (restarts < 1) fail(ErrorCode::invalid_argument, "restarts must be >= 1");
  if (max_iter < 1) fail(ErrorCode::invalid_argument, "max_iter must be >= 1");
  if (screen_iters < 0) fail(ErrorCode::invalid_argument, "screen_iters must be >= 0");
  if (!(sigma_min > 0.0) || !(b_floor > 0.0)) {
    fail(ErrorCode::invalid_argument, "sigma_min and b_floor must be > 0");
  }
}

namespace {

struct Posterior {
  Responsibilities gamma;
  double loglik = 0.0;
};

Posterior posterior(const SalMoeModel& m, const Dataset& d) {
  Posterior out{joint_log_terms(m, d), 0.0};
  for (Eigen::Index i = 0; i < out.gamma.rows(); ++i) {
    const double top = out.gamma.row(i).maxCoeff();
    auto row = out.gamma.row(i);
    row = (row.array() - top).exp();
    const double s = row.sum();
    out.loglik += top + std::log(s);
    row /= s;
  }
  return out;
}

void check_mass(const Eigen::VectorXd& gamma) {
  const double mass = gamma.sum();
  if (!(mass >= kEmptyComponentMass)) {
    fail(ErrorCode::empty_component,
         "component responsibility mass " + std::to_string(mass) + " below 1e-8");
  }
}

Eigen::VectorXd solve_checked(const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs) {
  // LDLT::rcond() ignores exactly zero pivots, so condition via the spectrum.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double rcond = top > 0.0 ? eig.eigenvalues().minCoeff() / top : 0.0;
  if (eig.info() != Eigen::Success || !(rcond >= kExpertRcondMin)) {
    fail(ErrorCode::singular_system,
         "expert regression system is ill-conditioned (rcond " + std::to_string(rcond) + ")");
  }
  return A.ldlt().solve(rhs);
}

void check_init(const SalMoeModel& init, const Dataset& d, ExpertFamily expected) {
  d.validate();
  init.validate();
  if (init.family != expected) {
    fail(ErrorCode::invalid_parameter, "initial model has the wrong expert family");
  }
  if (init.p != d.p() || init.q != d.q()) {
    fail(ErrorCode::dimension_mismatch, "initial model dimensions do not match the dataset");
  }
}

template <class ExpertStep>
FitReport run_outer_loop(const Dataset& d, const FitConfig& cfg, const SalMoeModel& init,
                         ExpertStep&& expert_step) {
  SalMoeModel m = init;
  for (auto& e : m.experts) e.sigma = std::max(e.sigma, cfg.sigma_min);
  const int K = m.K();
  std::optional<GatingDesign> design;
  if (K > 1) design.emplace(d.T);

  FitReport report;
  report.seed = cfg.seed;
  Posterior post = posterior(m, d);
  report.loglik_trace.push_back(post.loglik);

  for (int it = 0; it < cfg.max_iter; ++it) {
    expert_step(m, post.gamma);
    if (K > 1) m.gating = mm_update(m.gating, *design, post.gamma, cfg.gating_norm_cap);
    const double previous = post.loglik;
    post = posterior(m, d);
    report.loglik_trace.push_back(post.loglik);
    report.iterations = it + 1;
    if (!std::isfinite(post.loglik)) {
      fail(ErrorCode::singular_system, "log-likelihood became non-finite");
    }
    if ((post.loglik - previous) / std::abs(previous) < cfg.epsilon) {
      report.converged = true;
      break;
    }
  }
  CanonicalModel canon = canonicalize(m, post.gamma);
  report.model = std::move(canon.model);
  report.responsibilities = std::move(*canon.gamma);
  return report;
}

}  // namespace

EStepState e_step(const SalMoeModel& m, const Dataset& d, double b_floor) {
  EStepState s;
  s.gamma = responsibilities(m, d);
  const auto n = d.n();
  s.v2.resize(n, m.K());
  s.v3.resize(n, m.K());
  for (int k = 0; k < m.K(); ++k) {
    const auto& e = m.experts[static_cast<std::size_t>(k)];
    const double a = 2.0 + e.alpha * e.alpha / e.sigma;
    const Eigen::VectorXd r = d.y - d.X * e.beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      const GigMoments mom = gig_moments({a, r(i) * r(i) / e.sigma, 0.5}, b_floor);
      s.v2(i, k) = mom.inv_mean;
      s.v3(i, k) = mom.mean;
    }
  }
  return s;
}

ExpertUpdate m_step_expert(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& gamma, const Eigen::VectorXd& v2,
                           const Eigen::VectorXd& v3, double sigma_min) {
  if (X.rows() != y.size() || gamma.size() != y.size() || v2.size() != y.size() ||
      v3.size() != y.size()) {
    fail(ErrorCode::dimension_mismatch, "M-step inputs differ in length");
  }
  check_mass(gamma);
  const double mass = gamma.sum();
  const Eigen::VectorXd gv2 = gamma.cwiseProduct(v2);
  const double mass_v3 = gamma.dot(v3);
  const Eigen::VectorXd gx = X.transpose() * gamma;

  const Eigen::MatrixXd A =
      X.transpose() * gv2.asDiagonal() * X - gx * gx.transpose() / mass_v3;
  const Eigen::VectorXd rhs = X.transpose() * gv2.cwiseProduct(y) - gx * (gamma.dot(y) / mass_v3);

  ExpertUpdate out;
  out.params.beta = solve_checked(A, rhs);
  const Eigen::VectorXd r = y - X * out.params.beta;
  const double gr = gamma.dot(r);
  out.params.alpha = gr / mass_v3;
  const double alpha = out.params.alpha;
  out.raw_sigma =
      (gv2.dot(r.cwiseProduct(r)) - 2.0 * alpha * gr + alpha * alpha * mass_v3) / mass;
  out.params.sigma = std::max(out.raw_sigma, sigma_min);
  return out;
}

ExpertUpdate m_step_expert(const Dataset& d, const Eigen::VectorXd& gamma,
                           const Eigen::VectorXd& v2, const Eigen::VectorXd& v3,
                           double sigma_min) {
  return m_step_expert(d.X, d.y, gamma, v2, v3, sigma_min);
}

SalParams m_step_gaussian(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& gamma, double sigma_min) {
  if (X.rows() != y.size() || gamma.size() != y.size()) {
    fail(ErrorCode::dimension_mismatch, "M-step inputs differ in length");
  }
  check_mass(gamma);
  SalParams out;
  const Eigen::MatrixXd A = X.transpose() * gamma.asDiagonal() * X;
  out.beta = solve_checked(A, X.transpose() * gamma.cwiseProduct(y));
  const Eigen::VectorXd r = y - X * out.beta;
  out.alpha = 0.0;
  out.sigma = std::max(gamma.dot(r.cwiseProduct(r)) / gamma.sum(), sigma_min);
  return out;
}

double expert_q(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const SalParams& e,
                const Eigen::VectorXd& gamma, const Eigen::VectorXd& v2,
                const Eigen::VectorXd& v3) {
  const Eigen::VectorXd r = y - X * e.beta;
  double q = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    q += gamma(i) * (-0.5 * std::log(2.0 * std::numbers::pi * e.sigma) -
                     v2(i) * r(i) * r(i) / (2.0 * e.sigma) + e.alpha * r(i) / e.sigma -
                     e.alpha * e.alpha * v3(i) / (2.0 * e.sigma) - v3(i));
  }
  return q;
}

FitReport em_mm_fit(const Dataset& d, const FitConfig& cfg, const SalMoeModel& init) {
  cfg.validate();
  check_init(init, d, ExpertFamily::sal);
  return run_outer_loop(d, cfg, init, [&](SalMoeModel& m, const Responsibilities& gamma) {
    // E-step weights come from the current (pre-update) parameters.
    for (int k = 0; k < m.K(); ++k) {
      auto& e = m.experts[static_cast<std::size_t>(k)];
      const double a = 2.0 + e.alpha * e.alpha / e.sigma;
      const Eigen::VectorXd r = d.y - d.X * e.beta;
      Eigen::VectorXd v2(d.n()), v3(d.n());
      for (Eigen::Index i = 0; i < d.n(); ++i) {
        const GigMoments mom = gig_moments({a, r(i) * r(i) / e.sigma, 0.5}, cfg.b_floor);
        v2(i) = mom.inv_mean;
        v3(i) = mom.mean;
      }
      e = m_step_expert(d.X, d.y, gamma.col(k), v2, v3, cfg.sigma_min).params;
    }
  });
}

FitReport gmoe_fit(const Dataset& d, const FitConfig& cfg, const SalMoeModel& init) {
  cfg.validate();
  check_init(init, d, ExpertFamily::gaussian);
  return run_outer_loop(d, cfg, init, [&](SalMoeModel& m, const Responsibilities& gamma) {
    for (int k = 0; k < m.K(); ++k) {
      m.experts[static_cast<std::size_t>(k)] =
          m_step_gaussian(d.X, d.y, gamma.col(k), cfg.sigma_min);
    }
  });
}

double weighted_skewness(const Eigen::VectorXd& r, const Eigen::VectorXd& w) {
  const double mass = w.sum();
  if (!(mass > 0.0)) return 0.0;
  const double mean = w.dot(r) / mass;
  const Eigen::ArrayXd c = r.array() - mean;
  const double m2 = (w.array() * c.square()).sum() / mass;
  const double m3 = (w.array() * c.cube()).sum() / mass;
  if (!(m2 > 0.0)) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

namespace {

struct Candidate {
  bool ok = false;
  double loglik = -std::numeric_limits<double>::infinity();
  SalMoeModel model;
};

inline constexpr int kPartitionGatingSteps = 10;

/// Random Voronoi partition: each row joins the nearest of K distinct rows
/// drawn at random.
std::vector<int> random_partition(const Eigen::MatrixXd& features, int K, Rng& rng) {
  const auto n = features.rows();
  std::vector<Eigen::Index> centers;
  std::uniform_int_distribution<Eigen::Index> row(0, n - 1);
  while (static_cast<int>(centers.size()) < K) {
    const Eigen::Index c = row(rng);
    if (std::find(centers.begin(), centers.end(), c) == centers.end()) centers.push_back(c);
  }
  std::vector<int> label(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      const double dist = (features.row(i) - features.row(centers[static_cast<std::size_t>(k)])).squaredNorm();
      if (dist < best) {
        best = dist;
        label[static_cast<std::size_t>(i)] = k;
      }
    }
  }
  return label;
}

/// Standardised gating covariates, optionally with the response appended.
Eigen::MatrixXd partition_features(const Dataset& d, bool with_y) {
  const Eigen::Index q = d.T.cols() - 1;
  if (q == 0 && !with_y) return Eigen::MatrixXd::Zero(d.n(), 1);
  Eigen::MatrixXd f(d.n(), q + (with_y ? 1 : 0));
  f.leftCols(q) = d.T.rightCols(q);
  if (with_y) f.col(q) = d.y;
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    const double mean = f.col(c).mean();
    const double sd = std::sqrt((f.col(c).array() - mean).square().mean());
    f.col(c) = (f.col(c).array() - mean) / (sd > 0.0 ? sd : 1.0);
  }
  return f;
}

/// Random partition -> hard-assignment GMoE M-step and a few gating MM
/// steps on the partition labels -> short GMoE EM. One fair coin picks the
/// partition space (gating covariates alone, or together with y); another,
/// when allowed, skips the GMoE EM and returns the partition fit itself.
FitReport gmoe_warm_start(const Dataset& d, const FitConfig& cfg, Rng& rng, bool allow_direct) {
  const int K = cfg.K;
  const auto n = d.n();
  const bool with_y = std::bernoulli_distribution(0.5)(rng) || d.q() == 0;
  const bool skip_em = std::bernoulli_distribution(0.5)(rng) && allow_direct;
  const Eigen::MatrixXd features = partition_features(d, with_y);
  for (int attempt = 0; attempt < cfg.partition_retries; ++attempt) {
    const std::vector<int> label = random_partition(features, K, rng);
    Eigen::MatrixXd hard = Eigen::MatrixXd::Zero(n, K);
    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int k = label[static_cast<std::size_t>(i)];
      hard(i, k) = 1.0;
      ++counts[static_cast<std::size_t>(k)];
    }
    if (*std::min_element(counts.begin(), counts.end()) < d.p() + 2) continue;
    try {
      SalMoeModel g;
      g.family = ExpertFamily::gaussian;
      g.p = d.p();
      g.q = d.q();
      g.gating = GatingParams(K, d.q());
      if (K > 1) {
        const GatingDesign design(d.T);
        for (int s = 0; s < kPartitionGatingSteps; ++s) g.gating = mm_update(g.gating, design, hard);
      }
      for (int k = 0; k < K; ++k) {
        g.experts.push_back(m_step_gaussian(d.X, d.y, hard.col(k), cfg.sigma_min));
      }
      if (skip_em) {
        FitReport partition_fit;
        partition_fit.model = std::move(g);
        partition_fit.responsibilities = std::move(hard);
        return partition_fit;
      }
      FitConfig warm = cfg;
      warm.max_iter = cfg.gmoe_init_iters;
      return gmoe_fit(d, warm, g);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::singular_design) throw;
    }
  }
  fail(ErrorCode::degenerate_partition,
       "no usable random partition after " + std::to_string(cfg.partition_retries) + " tries");
}

/// Keeps sigma away from zero when the residual skewness sits at the
/// Laplace bound.
inline constexpr double kMaxShapeRatio = 0.95;

/// Starting location sits this many scale units into the light tail.
inline constexpr double kLocationOffset = 2.0;

/// Root in [-1, 1] of 3a - a^3 = g, the standardised skewness of a SAL
/// law with alpha = a * sd. Requires |g| <= 2.
double skew_to_shape(double g) {
  double lo = -1.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (3.0 * mid - mid * mid * mid < g ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Moment matching per component: mean mu + alpha, variance alpha^2 + sigma,
/// then the location is moved below the matched value.
SalMoeModel sal_from_gmoe(const Dataset& d, const FitReport& g, double sigma_min) {
  SalMoeModel m;
  m.family = ExpertFamily::sal;
  m.p = g.model.p;
  m.q = g.model.q;
  m.gating = g.model.gating;
  for (int k = 0; k < g.model.K(); ++k) {
    const auto& ge = g.model.experts[static_cast<std::size_t>(k)];
    SalParams e;
    const Eigen::VectorXd r = d.y - d.X * ge.beta;
    const double skew = std::clamp(weighted_skewness(r, g.responsibilities.col(k)), -2.0, 2.0);
    const double a = std::clamp(skew_to_shape(skew), -kMaxShapeRatio, kMaxShapeRatio);
    const double v = ge.sigma;
    e.alpha = a * std::sqrt(v);
    e.sigma = std::max(v - e.alpha * e.alpha, sigma_min);
    e.beta = ge.beta;
    e.beta(0) -= e.alpha + kLocationOffset * std::copysign(std::sqrt(e.sigma), e.alpha);
    m.experts.push_back(std::move(e));
  }
  return m;
}

template <class Evaluate>
InitResult best_of_restarts(const FitConfig& cfg, Evaluate&& evaluate) {
  std::vector<Candidate> candidates(static_cast<std::size_t>(cfg.restarts));
  std::vector<std::exception_ptr> design_errors(candidates.size());
  parallel_for(candidates.size(), cfg.threads, [&](std::size_t r) {
    Rng rng = make_rng(cfg.seed, r);
    try {
      candidates[r] = evaluate(rng);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::singular_design) design_errors[r] = std::current_exception();
    }
  });
  for (const auto& err : design_errors) {
    if (err) std::rethrow_exception(err);
  }
  InitResult out;
  std::vector<std::size_t> order;
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    if (candidates[r].ok) order.push_back(r);
    else ++out.failed_restarts;
  }
  if (order.empty()) {
    fail(ErrorCode::degenerate_partition,
         "all " + std::to_string(cfg.restarts) + " initialisation restarts failed");
  }
  // Non-degenerate candidates first, then by screened log-likelihood.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool da = is_degenerate(candidates[a].model, cfg), db = is_degenerate(candidates[b].model, cfg);
    if (da != db) return db;
    return candidates[a].loglik > candidates[b].loglik;
  });
  out.best_restart = static_cast<int>(order.front());
  out.screened_loglik = candidates[order.front()].loglik;
  out.model = std::move(candidates[order.front()].model);
  for (std::size_t i = 1; i < order.size(); ++i) {
    out.runners_up.push_back({static_cast<int>(order[i]), std::move(candidates[order[i]].model)});
  }
  return out;
}

/// Continues the ranked candidates until a fit keeps every scale off the
/// floor; falls back to the first fit when all of them collapse.
template <class Continue>
FitReport fit_ranked(const InitResult& init, const FitConfig& cfg, Continue&& run) {
  FitReport first = run(init.model);
  first.best_restart = init.best_restart;
  first.failed_restarts = init.failed_restarts;
  if (!is_degenerate(first.model, cfg)) return first;
  for (const auto& [restart, model] : init.runners_up) {
    if (is_degenerate(model, cfg)) break;
    FitReport next = run(model);
    if (!is_degenerate(next.model, cfg)) {
      next.best_restart = restart;
      next.failed_restarts = init.failed_restarts;
      return next;
    }
  }
  return first;
}

void check_sample_size(const Dataset& d, const FitConfig& cfg) {
  d.validate();
  cfg.validate();
  if (d.n() < static_cast<Eigen::Index>(cfg.K) * (d.p() + 2)) {
    fail(ErrorCode::invalid_argument, "need n >= K (p + 2) observations to initialise");
  }
  if (cfg.K > 1) GatingDesign check(d.T);
}

}  // namespace

InitResult initialize(const Dataset& d, const FitConfig& cfg) {
  check_sample_size(d, cfg);
  return best_of_restarts(cfg, [&](Rng& rng) {
    const FitReport warm = gmoe_warm_start(d, cfg, rng, true);
    SalMoeModel start = sal_from_gmoe(d, warm, cfg.sigma_min);
    if (cfg.screen_iters == 0) return Candidate{true, log_likelihood(start, d), std::move(start)};
    FitConfig screen = cfg;
    screen.max_iter = cfg.screen_iters;
    FitReport screened = em_mm_fit(d, screen, start);
    return Candidate{true, screened.loglik(), std::move(screened.model)};
  });
}

InitResult initialize_gmoe(const Dataset& d, const FitConfig& cfg) {
  check_sample_size(d, cfg);
  return best_of_restarts(cfg, [&](Rng& rng) {
    FitReport warm = gmoe_warm_start(d, cfg, rng, false);
    return Candidate{true, warm.loglik(), std::move(warm.model)};
  });
}

FitReport fit_salmoe(const Dataset& d, const FitConfig& cfg) {
  return fit_ranked(initialize(d, cfg), cfg, [&](const SalMoeModel& m) { return em_mm_fit(d, cfg, m); });
}

FitReport fit_gmoe(const Dataset& d, const FitConfig& cfg) {
  return fit_ranked(initialize_gmoe(d, cfg), cfg, [&](const SalMoeModel& m) { return gmoe_fit(d, cfg, m); });
}

bool is_degenerate(const SalMoeModel& m, const FitConfig& cfg) {
  return std::any_of(m.experts.begin(), m.experts.end(),
                     [&](const SalParams& e) { return e.sigma <= kDegenerateSigmaFactor * cfg.sigma_min; });
}

}  // namespace salmoe
