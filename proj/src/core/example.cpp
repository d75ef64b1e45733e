#include "example.hpp"

#include <algorithm>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <cmath>

#include "distributions.hpp"
#include "error.hpp"

namespace unibeta {

BibDesign example_design() {
  BibDesign base = develop_cyclic(7, {{7, 0, 1, 3}, {2, 4, 5, 6}}, true);
  base.r = 7;
  base.lambda = 3;
  return replicate_design(base, 7);
}

const std::vector<std::string>& example_formulations() {
  static const std::vector<std::string> names{"F179", "F318", "F419", "F571", "F661", "F715", "F732", "F873"};
  return names;
}

const std::vector<std::string>& example_attributes() {
  static const std::vector<std::string> names{"A1_color", "A2_acidity", "A3_sweetness", "A4_flavor", "A5_aroma"};
  return names;
}

const std::vector<double>& example_theta() {
  // F318 F419 F571 F661 F715 F732 F873 | color sweetness flavor aroma
  static const std::vector<double> theta{1.36, -0.32, 0.06, -0.23, -0.26, -0.72, -0.62, -0.23, 0.47, 0.01, 0.02, -0.02};
  return theta;
}

std::vector<RatingRecord> make_example(const ExampleSpec& spec) {
  if (!(spec.phi > 0.0) || !(spec.sigma_u2 >= 0.0) || spec.scale_points < 2)
    throw DomainError("example needs phi > 0, sigma_u2 >= 0 and at least 2 scale points");
  const BibDesign design = example_design();
  const auto& forms = example_formulations();
  const auto& attrs = example_attributes();
  const auto& theta = example_theta();

  auto attribute_effect = [&](std::size_t a) -> double {
    if (a == 1) return 0.0;
    return theta[8 + (a == 0 ? 0 : a - 1)];
  };

  boost::random::mt19937_64 rng(spec.seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(spec.sigma_u2);
  const int c = spec.scale_points;

  std::vector<RatingRecord> out;
  for (std::size_t blk = 0; blk < design.layout.size(); ++blk) {
    const double u = sd * normal(rng);
    const std::string panelist = std::to_string(blk + 1);
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      for (int f : design.layout[blk]) {
        const double eta = theta[0] + (f == 0 ? 0.0 : theta[static_cast<std::size_t>(f)]) + attribute_effect(a) + u;
        const double mu = inv_logit(eta);
        boost::random::beta_distribution<double> draw(mu * spec.phi, inv_logit(-eta) * spec.phi);
        const double y = draw(rng);
        const int rating = std::clamp(static_cast<int>(std::floor(y * c)) + 1, 1, c);
        out.push_back({panelist, forms[static_cast<std::size_t>(f)], attrs[a], rating, 0});
      }
    }
  }
  return out;
}

}  // namespace unibeta
