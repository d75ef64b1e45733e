#pragma once

#include <span>

namespace unibeta {

// Beta law in the mean-precision form: shape a = mu*phi, b = (1-mu)*phi.
struct BetaMeanPrecision {
  double mu;
  double phi;

  // Throws DomainError unless 0 < mu < 1 and phi > 0 (and both shapes > 0).
  void validate() const;
  double shape_a() const noexcept { return mu * phi; }
  double shape_b() const noexcept { return (1.0 - mu) * phi; }
  double variance() const noexcept { return mu * (1.0 - mu) / (1.0 + phi); }
};

// Gaussian law of a q-dimensional random effect with covariance sigma_u2 * I.
struct RandomEffectLaw {
  double sigma_u2;
  int q = 1;
};

// Log-density of y under dist, built from log-gamma differences.
double beta_logpdf(double y, const BetaMeanPrecision& dist);

// Unchecked variant used on hot paths where the caller guarantees the domain.
double beta_logpdf_unchecked(double y, double mu, double phi) noexcept;

double normal_logpdf(std::span<const double> u, const RandomEffectLaw& law);

double logit(double mu);
double inv_logit(double eta) noexcept;

}  // namespace unibeta
