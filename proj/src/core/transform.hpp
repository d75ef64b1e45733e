#pragma once

#include <span>
#include <vector>

namespace unibeta {

// c-point scale plus the observation count n used by the boundary compression.
struct CompressionConfig {
  int c = 5;
  long n = 2;

  void validate() const;
};

// Maps rating r in 1..c onto y0 = (r-1)/(c-1) and compresses it into
// (y0*(n-1) + 0.5)/n, which lies strictly inside (0,1).
double rating_to_unit(int rating, const CompressionConfig& cfg);

// Elementwise (y*(n-1) + 0.5)/n on values already in [0,1].
double compress(double y0, long n);
std::vector<double> compress_vector(std::span<const double> y0, long n);

}  // namespace unibeta
