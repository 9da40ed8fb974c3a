#include "salmoe/sal_kernel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "salmoe/error.hpp"

namespace salmoe {
namespace {

void require_scale(double alpha, double sigma) {
  if (!std::isfinite(alpha) || !std::isfinite(sigma) || !(sigma > 0.0)) {
    fail(ErrorCode::invalid_parameter,
         "SAL parameters need finite alpha and sigma > 0 (alpha=" +
             std::to_string(alpha) + ", sigma=" + std::to_string(sigma) + ")");
  }
}

}  // namespace

double sal_log_density(double y, double mu, double alpha, double sigma) {
  require_scale(alpha, sigma);
  if (!std::isfinite(y) || !std::isfinite(mu)) {
    fail(ErrorCode::invalid_parameter, "SAL density needs finite y and mu");
  }
  const double r = y - mu;
  const double log_norm = -0.5 * std::log(2.0 * sigma + alpha * alpha);
  if (r == 0.0) return log_norm;

  // exponent = alpha r / sigma - |r| sqrt(a / sigma). On the side where alpha
  // and r share a sign the two terms nearly cancel; use the rationalised form.
  const double abs_r = std::abs(r);
  const double skew = std::abs(alpha) / sigma;
  const double root = std::sqrt(skew * skew + 2.0 / sigma);
  double rate;
  if (alpha * r >= 0.0) {
    rate = (2.0 / sigma) / (skew + root);
  } else {
    rate = skew + root;
  }
  return log_norm - abs_r * rate;
}

double sal_sample(Rng& rng, double mu, double alpha, double sigma) {
  require_scale(alpha, sigma);
  std::exponential_distribution<double> exp1(1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double v = exp1(rng);
  const double z = normal(rng) * std::sqrt(sigma);
  return mu + alpha * v + z * std::sqrt(v);
}

double gig_log_density(double w, const GigArgs& g) {
  if (!(w > 0.0) || !(g.a > 0.0) || !(g.b > 0.0) || !std::isfinite(w) ||
      !std::isfinite(g.a) || !std::isfinite(g.b)) {
    fail(ErrorCode::invalid_parameter, "GIG density needs w, a, b > 0");
  }
  if (g.nu != 0.5) {
    fail(ErrorCode::invalid_parameter, "only nu = 1/2 is supported");
  }
  // log[(a/b)^{1/4} / (2 K_{1/2}(z))] with K_{1/2}(z) = sqrt(pi/(2z)) e^{-z}.
  const double z = std::sqrt(g.a * g.b);
  const double log_bessel = 0.5 * std::log(std::numbers::pi / (2.0 * z)) - z;
  return 0.25 * std::log(g.a / g.b) - std::log(2.0) - log_bessel -
         0.5 * std::log(w) - 0.5 * (g.b / w + g.a * w);
}

GigMoments gig_moments(const GigArgs& g, double b_floor) {
  if (!(g.a > 0.0) || !std::isfinite(g.a)) {
    fail(ErrorCode::invalid_parameter, "GIG moments need a > 0");
  }
  if (g.nu != 0.5) {
    fail(ErrorCode::invalid_parameter, "only nu = 1/2 is supported");
  }
  const double b = (g.b < b_floor) ? b_floor : g.b;
  return {std::sqrt(g.a / b), std::sqrt(b / g.a) + 1.0 / g.a};
}

}  // namespace salmoe
