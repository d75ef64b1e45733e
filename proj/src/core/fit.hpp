#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "design.hpp"
#include "likelihood.hpp"

namespace unibeta {

// Nested model structures: intercept only; + formulation effects;
// + attribute effects; + panelist random intercept.
enum class Structure { kNull, kM1, kM2, kM3 };

std::string structure_name(Structure s);
Structure parse_structure(const std::string& name);

struct ModelSpec {
  Structure structure = Structure::kM3;
  bool includes_random() const { return structure == Structure::kM3; }
};

// Dataset columns used by a structure. Attribute columns exist only for L >= 2.
std::vector<int> structure_columns(const StackedDataset& ds, Structure s);

enum class StartMode { kDefault, kZero };

struct FitOptions {
  int workers = 1;
  int max_iterations = 1000;
  double gradient_tolerance = 1e-6;
  double relative_tolerance = 1e-9;
  StartMode start = StartMode::kDefault;
  bool compute_standard_errors = true;
};

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  std::optional<double> std_error;
  std::optional<double> z;
  std::optional<double> p_value;
};

struct FitResult {
  ModelSpec spec;
  std::vector<int> columns;
  std::vector<Coefficient> coefficients;
  double sigma_u2_hat = 0.0;
  std::optional<double> sigma_u2_se;
  double phi_hat = 0.0;
  std::optional<double> phi_se;
  double loglik = 0.0;
  double aic = 0.0;
  int n_params = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_max_norm = 0.0;
  double last_relative_change = 0.0;
  std::vector<std::string> warnings;
  std::string dataset_fingerprint;
  ParameterVector params;
  // Covariance of the fixed-effect estimates (p x p); empty when unavailable.
  Eigen::MatrixXd theta_covariance;
  // Conditional modes of the random intercepts at the optimum (M3 only).
  std::vector<double> modes;
  Coding coding;
  std::vector<std::string> column_names;  // full dataset column names
  int n_formulation_cols = 0;
  int n_attribute_cols = 0;

  // Estimate of a named coefficient, or 0 for an absent (reference) level.
  double coefficient_or_zero(const std::string& name) const;
};

// Starting values: OLS on logit(y) for theta, moment-based precision, and
// sigma_u2 = 0.25. Falls back to zeros and phi = 1 when OLS is unusable.
ParameterVector initialize(const StackedDataset& ds, const ModelSpec& spec);
ParameterVector initialize_columns(const StackedDataset& ds, std::span<const int> columns);

// Largest precision the moment-based start may return.
inline constexpr double kMaxStartPrecision = 1e4;

FitResult fit(const StackedDataset& ds, const ModelSpec& spec, const FitOptions& options = {});

// Fit with an explicit column subset of ds.x.
FitResult fit_columns(const StackedDataset& ds, std::vector<int> columns, const ModelSpec& spec,
                      const FitOptions& options = {});

// Free parameters of a structure on v formulations and L attributes:
// intercept, contrasts, phi and, for M3, sigma_u2.
int parameter_count(Structure s, int formulations, int attributes);
double aic(double loglik, int n_params);

struct LrtResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  // 50:50 chi2_0 / chi2_1 mixture for a variance component on its boundary.
  std::optional<double> mixture_p_value;
};

LrtResult lrt(const FitResult& nested, const FitResult& full);

double wald_p_value(double z);
double chi_square_upper_tail(double statistic, int df);

struct PredictedMean {
  std::string formulation;
  std::string attribute;
  double mean = 0.0;
};

// inv_logit(alpha0 + beta_formulation + delta_attribute + u).
double predict_mean(const FitResult& fit, const std::string& formulation, const std::string& attribute,
                    double conditional_u = 0.0);

// Full formulation x attribute grid in level order.
std::vector<PredictedMean> predict_means(const FitResult& fit, double conditional_u = 0.0);

// Conditional fitted means per dataset row, using each panelist's mode.
std::vector<double> fitted_values(const FitResult& fit, const StackedDataset& ds);

}  // namespace unibeta
