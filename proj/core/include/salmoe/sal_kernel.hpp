#pragma once

// Shifted asymmetric Laplace (SAL) kernel with nu = 1/2, and the
// generalised inverse Gaussian (GIG) moments that drive the E-step.
//
// With nu = 1/2 the Bessel function has the closed form
// K_{1/2}(u) = sqrt(pi / (2u)) exp(-u), so the SAL density reduces to
//
//   g(y | alpha, sigma, mu) = exp(alpha r / sigma - sqrt(a b)) / sqrt(2 sigma + alpha^2)
//
// with r = y - mu, a = 2 + alpha^2 / sigma and b = r^2 / sigma. No general
// Bessel implementation is needed anywhere in the library.

#include "salmoe/random.hpp"

namespace salmoe {

inline constexpr double kDefaultBFloor = 1e-10;
inline constexpr double kDefaultSigmaMin = 1e-6;

/// Log density of SAL(alpha, sigma) shifted to mu. sigma is a variance-type
/// scale. At y == mu the analytic limit -0.5 * log(2 sigma + alpha^2) is
/// returned exactly.
double sal_log_density(double y, double mu, double alpha, double sigma);

/// Y = mu + alpha V + Z sqrt(V), V ~ Exp(1), Z ~ N(0, sigma).
double sal_sample(Rng& rng, double mu, double alpha, double sigma);

struct GigArgs {
  double a = 2.0;
  double b = 1.0;
  double nu = 0.5;
};

/// Log density of GIG(a, b, nu = 1/2) at w.
double gig_log_density(double w, const GigArgs& g);

/// Conditional moments of the latent mixing variable.
struct GigMoments {
  double inv_mean;  ///< E[1/V | y]
  double mean;      ///< E[V | y]
};

/// b below b_floor is replaced by b_floor before evaluation. With nu = 1/2,
/// R(z) = 1 + 1/z and the moments simplify to sqrt(a/b) and sqrt(b/a) + 1/a.
GigMoments gig_moments(const GigArgs& g, double b_floor = kDefaultBFloor);

}  // namespace salmoe
