#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "design.hpp"
#include "records.hpp"

namespace unibeta {

// Synthetic juice-tasting panel: 8 formulations, 98 panelists in blocks of 4
// (a cyclic (8, 14, 4, 7, 3) design repeated 7 times), 5 attributes rated on
// a 5-point scale. Responses are beta draws around fixed reference effects,
// cut into c equal bins.
struct ExampleSpec {
  std::uint64_t seed = 2025;
  double phi = 1.77;
  double sigma_u2 = 0.5;
  int scale_points = 5;
};

BibDesign example_design();
const std::vector<std::string>& example_formulations();
const std::vector<std::string>& example_attributes();

// Effects in the order: intercept, formulations[1..7], attributes other than
// the reference (A2_acidity).
const std::vector<double>& example_theta();

std::vector<RatingRecord> make_example(const ExampleSpec& spec = {});

}  // namespace unibeta
