#include "transform.hpp"

#include <string>

#include "error.hpp"

namespace unibeta {

void CompressionConfig::validate() const {
  if (c < 2) throw DomainError("scale must have at least 2 points, got " + std::to_string(c));
  if (n < 2) throw DomainError("compression count n must be at least 2, got " + std::to_string(n));
}

double compress(double y0, long n) {
  if (!(y0 >= 0.0 && y0 <= 1.0)) {
    throw DomainError("value to compress must lie in [0,1], got " + std::to_string(y0));
  }
  if (n < 2) throw DomainError("compression count n must be at least 2");
  const double nd = static_cast<double>(n);
  return (y0 * (nd - 1.0) + 0.5) / nd;
}

double rating_to_unit(int rating, const CompressionConfig& cfg) {
  cfg.validate();
  if (rating < 1 || rating > cfg.c) {
    throw DomainError("rating " + std::to_string(rating) + " outside 1.." + std::to_string(cfg.c));
  }
  const double y0 = static_cast<double>(rating - 1) / static_cast<double>(cfg.c - 1);
  return compress(y0, cfg.n);
}

std::vector<double> compress_vector(std::span<const double> y0, long n) {
  std::vector<double> out;
  out.reserve(y0.size());
  for (double v : y0) out.push_back(compress(v, n));
  return out;
}

}  // namespace unibeta
