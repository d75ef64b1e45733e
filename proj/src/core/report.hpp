#pragma once

#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "design.hpp"
#include "fit.hpp"
#include "records.hpp"
#include "simulate.hpp"

namespace unibeta {

inline constexpr const char* kFitSchema = "unibeta.fit/1";
inline constexpr const char* kConcordanceSchema = "unibeta.concordance/1";
inline constexpr const char* kDesignSchema = "unibeta.design/1";

// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);
std::string csv_field(const std::string& s);

nlohmann::json fit_to_json(const FitResult& fit, const FitOptions& options, std::optional<std::uint64_t> seed = {});

// A fit together with its dataset and a model label ("unified" or an attribute).
struct LabeledFit {
  std::string model;
  const FitResult* fit = nullptr;
  const StackedDataset* data = nullptr;
};

// structure,parameter,estimate,std_error,z,p_value
std::string coefficients_csv(const std::vector<const FitResult*>& fits);
// model,structure,n_params,phi_hat,sigma_u2_hat,loglik,aic,converged
std::string comparison_csv(const std::vector<LabeledFit>& fits);
// model,structure,formulation,attribute,mean
std::string predicted_means_csv(const std::vector<LabeledFit>& fits);
// model,structure,panelist,formulation,attribute,rating,y_observed,mu_fitted
std::string observed_fitted_csv(const std::vector<LabeledFit>& fits);
// attribute,formulation,n,mean,min,q1,median,q3,max,n_outliers
std::string summary_csv(const std::vector<LevelSummary>& rows);

nlohmann::json design_to_json(const BibDesign& design, const BibReport& report);
std::string design_report_text(const BibReport& report);

// Layout CSV: header with columns block,variety; one row per cell. Blocks and
// varieties are indexed in sorted level order; v is the number of distinct varieties.
BibDesign read_layout_csv(std::istream& in);

struct SimulationConfig {
  std::vector<Scenario> scenarios;
  std::vector<int> panelists{90};
  RunOptions run;
};

// {"scenarios": [name | {"name", "cutpoints", "beta", "delta", "sigma_u2"}],
//  "n": [90], "reps": 200, "seed": 1, "alpha": 0.05, "workers": 1, "rule": "pairwise"}
// Object entries named after a preset override only the fields they give.
SimulationConfig parse_simulation_config(const nlohmann::json& config);
Scenario find_scenario(const std::string& name);

// scenario,truth,model,metric,n,replications,valid,failures,concordant,rate,alpha,seed
std::string concordance_csv(const ConcordanceReport& report);
nlohmann::json concordance_json(const ConcordanceReport& report, bool with_details);

struct TransformSummary {
  std::size_t rows = 0;
  double min = 0.0;
  double max = 0.0;
};

// Copies a ratings CSV, appending a y_unit column. n defaults to the row count
// of each attribute. Rejects input that already has y_unit.
TransformSummary transform_ratings_csv(std::istream& in, std::ostream& out, int scale_points,
                                       std::optional<long> n_override);

}  // namespace unibeta
