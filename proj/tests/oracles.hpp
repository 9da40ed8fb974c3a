#pragma once

// Reference computations used only by the tests. Nothing here calls into the
// library's density or update code.

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gsl/gsl_multimin.h>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <numbers>
#include <vector>

namespace oracle {

/// Adaptive Gauss-Kronrod over [a, b].
template <class F>
double integrate(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13);
}

/// Integral over (0, inf) split at `split`.
template <class F>
double integrate_positive(F f, double split) {
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  return ts.integrate(f, 0.0, split, 1e-14) + es.integrate(f, split, std::numeric_limits<double>::infinity(), 1e-14);
}

/// N(y; m, v) with v the variance.
inline double normal_pdf(double y, double m, double v) {
  return std::exp(-0.5 * (y - m) * (y - m) / v) / std::sqrt(2.0 * std::numbers::pi * v);
}

/// SAL density as the normal variance-mean mixture over V ~ Exp(1).
inline double sal_density_mixture(double y, double mu, double alpha, double sigma) {
  auto f = [&](double w) { return w > 0 ? normal_pdf(y, mu + alpha * w, sigma * w) * std::exp(-w) : 0.0; };
  return integrate_positive(f, 1.0);
}

/// SAL density through the general Bessel-K form with nu = 1/2.
inline double sal_density_bessel(double y, double mu, double alpha, double sigma) {
  const double r = y - mu;
  const double nu = 0.5;
  const double a = 2.0 + alpha * alpha / sigma;
  const double b = r * r / sigma;
  const double z = std::sqrt(a * b);
  return 2.0 * std::exp(r * alpha / sigma) / std::sqrt(2.0 * std::numbers::pi * sigma) *
         std::pow(b / a, nu / 2.0) * std::cyl_bessel_k(nu, z);
}

/// GIG(a, b, nu) density with the general Bessel normaliser.
inline double gig_density(double w, double a, double b, double nu) {
  if (w <= 0) return 0.0;
  const double z = std::sqrt(a * b);
  return std::pow(a / b, nu / 2.0) / (2.0 * std::cyl_bessel_k(nu, z)) * std::pow(w, nu - 1.0) *
         std::exp(-0.5 * (a * w + b / w));
}

/// Brute-force softmax with a pinned zero baseline, long double accumulation.
inline std::vector<long double> softmax_row(const Eigen::MatrixXd& E, const Eigen::VectorXd& t) {
  const auto K = E.cols() + 1;
  std::vector<long double> s(static_cast<std::size_t>(K), 0.0L);
  for (Eigen::Index k = 0; k < K - 1; ++k) {
    long double acc = 0;
    for (Eigen::Index j = 0; j < t.size(); ++j) acc += static_cast<long double>(E(j, k)) * t(j);
    s[static_cast<std::size_t>(k)] = acc;
  }
  long double mx = s[0];
  for (auto v : s) mx = std::max(mx, v);
  long double tot = 0;
  for (auto& v : s) tot += (v = std::exp(v - mx));
  for (auto& v : s) v /= tot;
  return s;
}

inline double gating_q(const Eigen::MatrixXd& E, const Eigen::MatrixXd& T, const Eigen::MatrixXd& G) {
  long double q = 0;
  for (Eigen::Index i = 0; i < T.rows(); ++i) {
    const auto p = softmax_row(E, T.row(i).transpose());
    for (Eigen::Index k = 0; k < G.cols(); ++k) q += G(i, k) * std::log(p[static_cast<std::size_t>(k)]);
  }
  return static_cast<double>(q);
}

/// Random row-stochastic matrix.
template <class Rng>
Eigen::MatrixXd random_stochastic(Rng& rng, Eigen::Index n, Eigen::Index K) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Eigen::MatrixXd G(n, K);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < K; ++k) G(i, k) = u(rng);
    G.row(i) /= G.row(i).sum();
  }
  return G;
}

/// Design with an intercept and uniform(-1, 1) covariates.
template <class Rng>
Eigen::MatrixXd random_design(Rng& rng, Eigen::Index n, Eigen::Index q) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd T(n, q + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    T(i, 0) = 1.0;
    for (Eigen::Index j = 1; j <= q; ++j) T(i, j) = u(rng);
  }
  return T;
}

/// Complete-data expert objective with frozen weights: sum_i gamma_i [-log(sigma)/2
/// - (v2 r^2 - 2 alpha r + alpha^2 v3) / (2 sigma)], r = y - x'beta.
inline double expert_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                               double alpha, double sigma, const Eigen::VectorXd& g, const Eigen::VectorXd& v2,
                               const Eigen::VectorXd& v3) {
  long double q = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const long double r = y(i) - X.row(i).dot(beta);
    q += g(i) * (-0.5L * std::log(static_cast<long double>(sigma)) -
                 (v2(i) * r * r - 2 * alpha * r + static_cast<long double>(alpha) * alpha * v3(i)) / (2 * sigma));
  }
  return static_cast<double>(q);
}

/// Nelder-Mead (GSL nmsimplex2) minimisation of f from x0, restarted until
/// the value stops improving.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                                   double step = 0.5) {
  struct Ctx {
    const std::function<double(const Eigen::VectorXd&)>* f;
    Eigen::Index n;
  } ctx{&f, x0.size()};
  gsl_multimin_function fn;
  fn.n = static_cast<std::size_t>(x0.size());
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* p) {
    auto* c = static_cast<Ctx*>(p);
    Eigen::VectorXd x(c->n);
    for (Eigen::Index i = 0; i < c->n; ++i) x(i) = gsl_vector_get(v, static_cast<std::size_t>(i));
    return (*c->f)(x);
  };
  double best = f(x0);
  for (int round = 0; round < 20; ++round) {
    gsl_vector* x = gsl_vector_alloc(fn.n);
    gsl_vector* ss = gsl_vector_alloc(fn.n);
    for (std::size_t i = 0; i < fn.n; ++i) gsl_vector_set(x, i, x0(static_cast<Eigen::Index>(i)));
    gsl_vector_set_all(ss, step);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, fn.n);
    gsl_multimin_fminimizer_set(s, &fn, x, ss);
    for (int it = 0; it < 20000; ++it) {
      if (gsl_multimin_fminimizer_iterate(s)) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-12) == GSL_SUCCESS) break;
    }
    for (std::size_t i = 0; i < fn.n; ++i) x0(static_cast<Eigen::Index>(i)) = gsl_vector_get(s->x, i);
    const double val = s->fval;
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(x);
    gsl_vector_free(ss);
    const bool done = best - val < 1e-13 * std::max(1.0, std::abs(val));
    best = std::min(best, val);
    step *= 0.3;
    if (done && round > 1) break;
  }
  return x0;
}

}  // namespace oracle
