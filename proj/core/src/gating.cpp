#include "salmoe/gating.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "salmoe/error.hpp"

namespace salmoe {
namespace {

void check_dims(const GatingParams& E, const Eigen::MatrixXd& T,
                const Responsibilities& gamma) {
  if (T.cols() != E.q() + 1) {
    fail(ErrorCode::dimension_mismatch,
         "gating design has " + std::to_string(T.cols()) + " columns, expected " +
             std::to_string(E.q() + 1));
  }
  if (gamma.rows() != T.rows() || gamma.cols() != E.K()) {
    fail(ErrorCode::dimension_mismatch, "responsibility matrix shape does not match design");
  }
}

}  // namespace

GatingParams::GatingParams(int K, int q) : coef_(Eigen::MatrixXd::Zero(q + 1, K - 1)) {
  if (K < 1 || q < 0) fail(ErrorCode::invalid_parameter, "gating needs K >= 1 and q >= 0");
}

GatingParams::GatingParams(Eigen::MatrixXd coef) : coef_(std::move(coef)) {
  if (coef_.rows() < 1) fail(ErrorCode::invalid_parameter, "gating needs an intercept row");
  if (!coef_.allFinite()) fail(ErrorCode::invalid_parameter, "gating coefficients must be finite");
}

Eigen::MatrixXd GatingParams::unpinned() const {
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(coef_.rows(), coef_.cols() + 1);
  full.leftCols(coef_.cols()) = coef_;
  return full;
}

Eigen::VectorXd gating_probs(const GatingParams& E, const Eigen::Ref<const Eigen::VectorXd>& t) {
  if (t.size() != E.q() + 1) {
    fail(ErrorCode::dimension_mismatch, "gating covariate length " + std::to_string(t.size()) +
                                            " != q+1 = " + std::to_string(E.q() + 1));
  }
  const int K = E.K();
  Eigen::VectorXd score(K);
  score.head(K - 1) = E.coef().transpose() * t;
  score(K - 1) = 0.0;
  const double top = score.maxCoeff();
  Eigen::VectorXd p = (score.array() - top).exp();
  return p / p.sum();
}

Eigen::MatrixXd gating_log_probs(const GatingParams& E, const Eigen::MatrixXd& T) {
  if (T.cols() != E.q() + 1) {
    fail(ErrorCode::dimension_mismatch, "gating design column count mismatch");
  }
  const int K = E.K();
  Eigen::MatrixXd out(T.rows(), K);
  out.leftCols(K - 1) = T * E.coef();
  out.col(K - 1).setZero();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double top = out.row(i).maxCoeff();
    const double lse = top + std::log((out.row(i).array() - top).exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

double gating_q(const GatingParams& E, const Eigen::MatrixXd& T, const Responsibilities& gamma) {
  check_dims(E, T, gamma);
  const Eigen::MatrixXd logp = gating_log_probs(E, T);
  // 0 * log(0) terms cannot occur: log-probabilities are finite.
  return (gamma.array() * logp.array()).sum();
}

Eigen::MatrixXd gating_score(const GatingParams& E, const Eigen::MatrixXd& T,
                             const Responsibilities& gamma) {
  check_dims(E, T, gamma);
  const int K = E.K();
  const Eigen::MatrixXd pi = gating_log_probs(E, T).array().exp().matrix();
  return T.transpose() * (gamma.leftCols(K - 1) - pi.leftCols(K - 1));
}

Eigen::MatrixXd bohning_c(int K) {
  const int m = K - 1;
  return Eigen::MatrixXd::Identity(m, m) -
         Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(K));
}

Eigen::MatrixXd bohning_c_inverse(int K) {
  const int m = K - 1;
  return Eigen::MatrixXd::Identity(m, m) + Eigen::MatrixXd::Ones(m, m);
}

GatingDesign::GatingDesign(const Eigen::MatrixXd& T) : T_(T), gram_(T.transpose() * T) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  rcond_ = hi > 0.0 ? lo / hi : 0.0;
  if (!(rcond_ >= kGatingRcondMin)) {
    fail(ErrorCode::singular_design,
         "T^T T is singular (rcond " + std::to_string(rcond_) +
             "); gating covariates are collinear or constant");
  }
  llt_.compute(gram_);
}

GatingParams mm_update(const GatingParams& E_old, const GatingDesign& design,
                       const Responsibilities& gamma, std::optional<double> norm_cap) {
  const int K = E_old.K();
  if (K == 1) return E_old;
  const Eigen::MatrixXd G = gating_score(E_old, design.T(), gamma);
  Eigen::MatrixXd step = 2.0 * design.solve(G) * bohning_c_inverse(K);
  GatingParams out(E_old.coef() + step);
  if (norm_cap) {
    for (Eigen::Index k = 0; k < out.coef().cols(); ++k) {
      const double norm = out.coef().col(k).norm();
      if (norm > *norm_cap) out.coef().col(k) *= *norm_cap / norm;
    }
  }
  return out;
}

GatingParams mm_update(const GatingParams& E_old, const Eigen::MatrixXd& T,
                       const Responsibilities& gamma) {
  return mm_update(E_old, GatingDesign(T), gamma);
}

double minorizer_value(const GatingParams& E, const GatingParams& E_old,
                       const Eigen::MatrixXd& T, const Responsibilities& gamma) {
  if (E.coef().rows() != E_old.coef().rows() || E.coef().cols() != E_old.coef().cols()) {
    fail(ErrorCode::dimension_mismatch, "minoriser arguments differ in shape");
  }
  const double q_old = gating_q(E_old, T, gamma);
  if (E.K() == 1) return q_old;
  const Eigen::MatrixXd G = gating_score(E_old, T, gamma);
  const Eigen::MatrixXd delta = E.coef() - E_old.coef();
  // vec(D)^T (C (x) S) vec(D) = tr(D^T S D C) for column-stacked vec.
  const Eigen::MatrixXd S = T.transpose() * T;
  const double quad = (delta.transpose() * S * delta * bohning_c(E.K())).trace();
  return q_old + (delta.array() * G.array()).sum() - 0.25 * quad;
}

}  // namespace salmoe
