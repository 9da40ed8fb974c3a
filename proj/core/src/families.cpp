#include "salmoe/families.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "salmoe/error.hpp"

namespace salmoe {

double normal_log_density(double y, double mu, double variance) {
  if (!(variance > 0.0)) {
    fail(ErrorCode::invalid_parameter, "normal density needs variance > 0");
  }
  const double r = y - mu;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

double log_normal_cdf(double z) {
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Mills-ratio asymptotic series.
  const double z2 = z * z;
  return -0.5 * z2 - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-z) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

double skew_normal_log_density(double y, double mu, double scale, double shape) {
  if (!(scale > 0.0)) {
    fail(ErrorCode::invalid_parameter, "skew-normal density needs scale > 0");
  }
  const double z = (y - mu) / scale;
  return std::log(2.0) - std::log(scale) - 0.5 * z * z -
         0.5 * std::log(2.0 * std::numbers::pi) + log_normal_cdf(shape * z);
}

double skew_normal_sample(Rng& rng, double mu, double scale, double shape) {
  if (!(scale > 0.0)) {
    fail(ErrorCode::invalid_parameter, "skew-normal sampler needs scale > 0");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const double delta = shape / std::sqrt(1.0 + shape * shape);
  const double u0 = normal(rng);
  const double u1 = normal(rng);
  return mu + scale * (delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1);
}

double skew_normal_mean_offset(double scale, double shape) {
  const double delta = shape / std::sqrt(1.0 + shape * shape);
  return scale * delta * std::sqrt(2.0 / std::numbers::pi);
}

double skew_normal_variance(double scale, double shape) {
  const double delta = shape / std::sqrt(1.0 + shape * shape);
  return scale * scale * (1.0 - 2.0 * delta * delta / std::numbers::pi);
}

}  // namespace salmoe
