#pragma once

#include "salmoe/random.hpp"

namespace salmoe {

/// Normal log density; `variance` is sigma^2.
double normal_log_density(double y, double mu, double variance);

/// log Phi(z), accurate far into the lower tail.
double log_normal_cdf(double z);

/// Azzalini skew-normal SN(mu, scale, shape): 2/scale phi(z) Phi(shape z).
double skew_normal_log_density(double y, double mu, double scale, double shape);

/// delta-representation draw: mu + scale (delta |U0| + sqrt(1 - delta^2) U1).
double skew_normal_sample(Rng& rng, double mu, double scale, double shape);

double skew_normal_mean_offset(double scale, double shape);
double skew_normal_variance(double scale, double shape);

}  // namespace salmoe
