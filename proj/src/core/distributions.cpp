#include "distributions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "error.hpp"

namespace unibeta {

void BetaMeanPrecision::validate() const {
  if (!(mu > 0.0 && mu < 1.0)) {
    throw DomainError("beta mean must lie in (0,1), got " + std::to_string(mu));
  }
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw DomainError("beta precision must be positive, got " + std::to_string(phi));
  }
  if (!(shape_a() > 0.0) || !(shape_b() > 0.0)) {
    throw DomainError("beta shape parameters underflow to zero");
  }
}

double beta_logpdf_unchecked(double y, double mu, double phi) noexcept {
  const double a = mu * phi;
  const double b = (1.0 - mu) * phi;
  return std::lgamma(phi) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(y) +
         (b - 1.0) * std::log1p(-y);
}

double beta_logpdf(double y, const BetaMeanPrecision& dist) {
  dist.validate();
  if (!(y > 0.0 && y < 1.0)) {
    throw DomainError("beta response must lie in (0,1), got " + std::to_string(y));
  }
  return beta_logpdf_unchecked(y, dist.mu, dist.phi);
}

double normal_logpdf(std::span<const double> u, const RandomEffectLaw& law) {
  if (!(law.sigma_u2 > 0.0)) {
    throw DomainError("random-effect variance must be positive");
  }
  if (law.q < 1 || static_cast<std::size_t>(law.q) != u.size()) {
    throw DomainError("random-effect vector length does not match q");
  }
  double ss = 0.0;
  for (double v : u) ss += v * v;
  return -0.5 * law.q * std::log(2.0 * std::numbers::pi * law.sigma_u2) - ss / (2.0 * law.sigma_u2);
}

double logit(double mu) {
  if (!(mu > 0.0 && mu < 1.0)) {
    throw DomainError("logit argument must lie in (0,1), got " + std::to_string(mu));
  }
  return std::log(mu) - std::log1p(-mu);
}

double inv_logit(double eta) noexcept {
  if (eta < 0.0) {
    const double e = std::exp(eta);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(-eta));
}

}  // namespace unibeta
