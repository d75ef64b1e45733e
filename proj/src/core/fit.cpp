#include "fit.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>

#include "distributions.hpp"
#include "error.hpp"

namespace unibeta {
namespace {

// Objective on the unconstrained vector z = (theta, [log_sigma_u2], log_phi).
class Objective {
 public:
  Objective(std::vector<BlockSlice> blocks, bool random, int workers)
      : blocks_(std::move(blocks)), random_(random), workers_(workers) {
    modes_.assign(blocks_.size(), 0.0);
  }

  int dim(int p) const { return p + (random_ ? 2 : 1); }

  ParameterVector unpack(const Eigen::VectorXd& z) const {
    const auto p = z.size() - (random_ ? 2 : 1);
    ParameterVector params;
    params.theta = z.head(p);
    params.log_sigma_u2 = random_ ? z[p] : 0.0;
    params.log_phi = z[z.size() - 1];
    return params;
  }

  Eigen::VectorXd pack(const ParameterVector& params) const {
    const auto p = params.theta.size();
    Eigen::VectorXd z(p + (random_ ? 2 : 1));
    z.head(p) = params.theta;
    if (random_) z[p] = params.log_sigma_u2;
    z[z.size() - 1] = params.log_phi;
    return z;
  }

  // Log-likelihood and its gradient in z. Warm-start modes are updated.
  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
    const ParameterVector params = unpack(z);
    if (random_) {
      EvalOptions opts{workers_, &modes_};
      return marginal_loglik_gradient(blocks_, params, grad, opts);
    }
    return fixed_loglik(blocks_, params, &grad);
  }

  double evaluate_value(const Eigen::VectorXd& z) {
    const ParameterVector params = unpack(z);
    if (random_) {
      EvalOptions opts{workers_, &modes_};
      return marginal_loglik(blocks_, params, opts);
    }
    return fixed_loglik(blocks_, params, nullptr);
  }

  std::vector<double>& modes() { return modes_; }
  bool random() const { return random_; }

 private:
  std::vector<BlockSlice> blocks_;
  bool random_;
  int workers_;
  std::vector<double> modes_;
};

class CeresAdapter final : public ceres::FirstOrderFunction {
 public:
  CeresAdapter(Objective& objective, int n) : objective_(objective), n_(n) {}

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(parameters, n_);
    try {
      Eigen::VectorXd g;
      const double ll = objective_.evaluate(z, g);
      if (!std::isfinite(ll) || !g.allFinite()) return false;
      *cost = -ll;
      if (gradient != nullptr) Eigen::Map<Eigen::VectorXd>(gradient, n_) = -g;
      return true;
    } catch (const ConvergenceError&) {
      return false;
    } catch (const DomainError&) {
      return false;
    }
  }

  int NumParameters() const override { return n_; }

 private:
  Objective& objective_;
  int n_;
};

// Central differences of the analytic gradient, symmetrised. Modes are reset
// to the optimum before each probe so the result is reproducible.
Eigen::MatrixXd numerical_hessian(Objective& objective, const Eigen::VectorXd& z, bool& ok) {
  const auto n = z.size();
  const std::vector<double> base_modes = objective.modes();
  Eigen::MatrixXd hess(n, n);
  ok = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = 1e-4 * std::max(1.0, std::abs(z[i]));
    Eigen::VectorXd zp = z, zm = z, gp, gm;
    zp[i] += h;
    zm[i] -= h;
    try {
      objective.modes() = base_modes;
      objective.evaluate(zp, gp);
      objective.modes() = base_modes;
      objective.evaluate(zm, gm);
    } catch (const ConvergenceError&) {
      ok = false;
      objective.modes() = base_modes;
      return Eigen::MatrixXd::Zero(n, n);
    }
    hess.col(i) = (gp - gm) / (2.0 * h);
  }
  objective.modes() = base_modes;
  return 0.5 * (hess + hess.transpose());
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

std::string structure_name(Structure s) {
  switch (s) {
    case Structure::kNull: return "null";
    case Structure::kM1: return "m1";
    case Structure::kM2: return "m2";
    case Structure::kM3: return "m3";
  }
  return "unknown";
}

Structure parse_structure(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (n == "null") return Structure::kNull;
  if (n == "m1") return Structure::kM1;
  if (n == "m2") return Structure::kM2;
  if (n == "m3") return Structure::kM3;
  throw DomainError("unknown model structure '" + name + "' (expected null, m1, m2 or m3)");
}

std::vector<int> structure_columns(const StackedDataset& ds, Structure s) {
  std::vector<int> cols{0};
  if (s == Structure::kNull) return cols;
  if (ds.n_formulation_cols < 1) throw DataError("formulation effects need at least two formulations");
  for (int j = 0; j < ds.n_formulation_cols; ++j) cols.push_back(1 + j);
  if (s == Structure::kM1) return cols;
  for (int j = 0; j < ds.n_attribute_cols; ++j) cols.push_back(1 + ds.n_formulation_cols + j);
  return cols;
}

double FitResult::coefficient_or_zero(const std::string& name) const {
  for (const auto& c : coefficients) {
    if (c.name == name) return c.estimate;
  }
  return 0.0;
}

ParameterVector initialize_columns(const StackedDataset& ds, std::span<const int> columns) {
  const auto n = static_cast<Eigen::Index>(ds.rows());
  const auto p = static_cast<Eigen::Index>(columns.size());
  ParameterVector start;
  start.theta = Eigen::VectorXd::Zero(p);
  start.log_phi = 0.0;
  start.log_sigma_u2 = std::log(0.25);
  if (n == 0 || p == 0) return start;

  Eigen::MatrixXd x(n, p);
  for (Eigen::Index c = 0; c < p; ++c) x.col(c) = ds.x.col(columns[static_cast<std::size_t>(c)]);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = std::log(ds.y[i]) - std::log1p(-ds.y[i]);
  const Eigen::VectorXd theta = x.colPivHouseholderQr().solve(z);
  if (!theta.allFinite()) return start;

  const Eigen::VectorXd eta = x * theta;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = ds.y[i] - inv_logit(eta[i]);
    ss += r * r;
  }
  const double dof = static_cast<double>(n > p ? n - p : n);
  const double s2 = ss / dof;
  const double ybar = ds.y.mean();
  double phi0 = kMaxStartPrecision;
  if (s2 > 0.0) phi0 = std::clamp(ybar * (1.0 - ybar) / s2 - 1.0, 0.1, kMaxStartPrecision);
  start.theta = theta;
  start.log_phi = std::log(phi0);
  return start;
}

ParameterVector initialize(const StackedDataset& ds, const ModelSpec& spec) {
  const auto cols = structure_columns(ds, spec.structure);
  return initialize_columns(ds, cols);
}

FitResult fit(const StackedDataset& ds, const ModelSpec& spec, const FitOptions& options) {
  return fit_columns(ds, structure_columns(ds, spec.structure), spec, options);
}

FitResult fit_columns(const StackedDataset& ds, std::vector<int> columns, const ModelSpec& spec,
                      const FitOptions& options) {
  const int p = static_cast<int>(columns.size());
  const bool random = spec.includes_random();
  const int n_params = p + 1 + (random ? 1 : 0);
  if (static_cast<int>(ds.rows()) < n_params + 2) {
    throw DataError("dataset has " + std::to_string(ds.rows()) + " rows; at least " + std::to_string(n_params + 2) +
                    " are needed for " + std::to_string(n_params) + " parameters");
  }

  Objective objective(make_blocks(ds, columns), random, options.workers);
  ParameterVector start;
  if (options.start == StartMode::kZero) {
    start.theta = Eigen::VectorXd::Zero(p);
    start.log_phi = 0.0;
    start.log_sigma_u2 = std::log(0.25);
  } else {
    start = initialize_columns(ds, columns);
  }
  Eigen::VectorXd z = objective.pack(start);
  const int n = static_cast<int>(z.size());

  FitResult res;
  res.spec = spec;
  res.columns = columns;
  res.dataset_fingerprint = ds.fingerprint();
  res.coding = ds.coding;
  res.column_names = ds.column_names;
  res.n_formulation_cols = ds.n_formulation_cols;
  res.n_attribute_cols = ds.n_attribute_cols;
  res.n_params = n_params;

  {
    ceres::GradientProblem problem(new CeresAdapter(objective, n));
    ceres::GradientProblemSolver::Options opts;
    opts.line_search_direction_type = ceres::LBFGS;
    opts.max_num_iterations = options.max_iterations;
    opts.function_tolerance = options.relative_tolerance;
    opts.gradient_tolerance = options.gradient_tolerance;
    opts.parameter_tolerance = 1e-14;
    opts.logging_type = ceres::SILENT;
    opts.minimizer_progress_to_stdout = false;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(opts, problem, z.data(), &summary);
    res.iterations = static_cast<int>(summary.iterations.size());
    if (summary.termination_type == ceres::FAILURE) {
      res.warnings.push_back("quasi-Newton stage failed: " + summary.message);
    }
  }

  // Newton refinement with the numerical Hessian; also yields the
  // observed information used for standard errors.
  Eigen::VectorXd grad;
  double ll = 0.0;
  Eigen::MatrixXd hess;
  bool hess_ok = false;
  try {
    ll = objective.evaluate(z, grad);
  } catch (const ConvergenceError& e) {
    res.warnings.push_back(std::string("final evaluation failed: ") + e.what());
    res.converged = false;
    res.loglik = std::nan("");
    res.aic = std::nan("");
    return res;
  }
  double last_change = std::numeric_limits<double>::infinity();
  bool hess_current = false;
  for (int it = 0; it < 20; ++it) {
    if (max_abs(grad) < options.gradient_tolerance && last_change < options.relative_tolerance) break;
    hess = numerical_hessian(objective, z, hess_ok);
    hess_current = true;
    if (!hess_ok) break;
    const Eigen::MatrixXd neg = -hess;
    const double scale = 1.0 + neg.diagonal().cwiseAbs().maxCoeff();
    Eigen::VectorXd step;
    for (double damping = 0.0; damping < 1e8 * scale; damping = damping == 0.0 ? 1e-8 * scale : damping * 10.0) {
      Eigen::LLT<Eigen::MatrixXd> llt(neg + damping * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(grad);
        break;
      }
    }
    if (step.size() == 0) break;
    bool accepted = false;
    for (int h = 0; h < 30 && !accepted; ++h, step *= 0.5) {
      const Eigen::VectorXd trial = z + step;
      const std::vector<double> saved = objective.modes();
      try {
        Eigen::VectorXd g_trial;
        const double ll_trial = objective.evaluate(trial, g_trial);
        if (std::isfinite(ll_trial) && g_trial.allFinite() &&
            (ll_trial > ll || (ll_trial >= ll - 1e-12 * std::abs(ll) && max_abs(g_trial) < max_abs(grad)))) {
          last_change = std::abs(ll_trial - ll) / std::max(1.0, std::abs(ll));
          z = trial;
          ll = ll_trial;
          grad = g_trial;
          accepted = true;
          hess_current = false;
        } else {
          objective.modes() = saved;
        }
      } catch (const ConvergenceError&) {
        objective.modes() = saved;
      }
    }
    ++res.iterations;
    if (!accepted) {
      // Already at the numerical optimum along the Newton direction.
      last_change = 0.0;
      break;
    }
  }
  if (!hess_current) hess = numerical_hessian(objective, z, hess_ok);

  res.params = objective.unpack(z);
  res.loglik = ll;
  res.aic = aic(ll, n_params);
  res.phi_hat = res.params.phi();
  res.sigma_u2_hat = random ? res.params.sigma_u2() : 0.0;
  res.gradient_max_norm = max_abs(grad);
  res.last_relative_change = last_change;
  res.converged = res.gradient_max_norm < options.gradient_tolerance && last_change < options.relative_tolerance;
  if (random) res.modes = objective.modes();
  if (!res.converged) {
    res.warnings.push_back("did not converge: gradient max-norm " + std::to_string(res.gradient_max_norm));
  }

  for (int j = 0; j < p; ++j) {
    Coefficient c;
    c.name = ds.column_names[static_cast<std::size_t>(columns[static_cast<std::size_t>(j)])];
    c.estimate = res.params.theta[j];
    res.coefficients.push_back(std::move(c));
  }

  if (options.compute_standard_errors && hess_ok) {
    const Eigen::MatrixXd info = -hess;
    // A random-intercept variance driven to zero leaves a flat direction in
    // log_sigma_u2; drop it and report the remaining standard errors.
    std::vector<Eigen::Index> keep(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) keep[static_cast<std::size_t>(i)] = i;
    const Eigen::Index tau = p;
    bool boundary = false;
    if (random && info(tau, tau) < 1e-6 * std::max(1.0, info.diagonal().cwiseAbs().maxCoeff())) {
      boundary = true;
      keep.erase(keep.begin() + tau);
      res.warnings.push_back("random-intercept variance is at its boundary (sigma_u2 ~ 0); its standard error is not reported");
    }
    const auto m = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = info(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub);
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 1e-10 * std::max(1.0, top)) {
      std::string names;
      for (Eigen::Index e = 0; e < m; ++e) {
        if (eig.eigenvalues()[e] > 1e-10 * std::max(1.0, top)) continue;
        for (Eigen::Index a = 0; a < m; ++a) {
          if (std::abs(eig.eigenvectors()(a, e)) < 0.1) continue;
          const auto idx = keep[static_cast<std::size_t>(a)];
          std::string nm = idx < p ? res.coefficients[static_cast<std::size_t>(idx)].name
                                   : (random && idx == tau ? "log_sigma_u2" : "log_phi");
          if (names.find(nm) == std::string::npos) names += (names.empty() ? "" : ", ") + nm;
        }
      }
      res.warnings.push_back("observed information is singular; standard errors omitted (collinear: " + names + ")");
    } else {
      const Eigen::MatrixXd cov_sub = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                                      eig.eigenvectors().transpose();
      Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(n, n, std::nan(""));
      for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) cov(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]) = cov_sub(a, b);
      }
      res.theta_covariance = cov.topLeftCorner(p, p);
      for (int j = 0; j < p; ++j) {
        auto& c = res.coefficients[static_cast<std::size_t>(j)];
        c.std_error = std::sqrt(cov(j, j));
        c.z = c.estimate / *c.std_error;
        c.p_value = wald_p_value(*c.z);
      }
      res.phi_se = res.phi_hat * std::sqrt(cov(n - 1, n - 1));
      if (random && !boundary) res.sigma_u2_se = res.sigma_u2_hat * std::sqrt(cov(tau, tau));
    }
  } else if (options.compute_standard_errors) {
    res.warnings.push_back("Hessian evaluation failed; standard errors omitted");
  }
  return res;
}

double wald_p_value(double z) {
  if (!std::isfinite(z)) return 0.0;
  return std::clamp(std::erfc(std::abs(z) / std::numbers::sqrt2), 0.0, 1.0);
}

double chi_square_upper_tail(double statistic, int df) {
  if (df <= 0 || statistic <= 0.0) return 1.0;
  boost::math::chi_squared_distribution<double> dist(df);
  return std::clamp(boost::math::cdf(boost::math::complement(dist, statistic)), 0.0, 1.0);
}

int parameter_count(Structure s, int formulations, int attributes) {
  if (formulations < 1 || attributes < 1) throw DomainError("need at least one formulation and one attribute");
  int n = 2;
  if (s != Structure::kNull) n += formulations - 1;
  if (s == Structure::kM2 || s == Structure::kM3) n += attributes - 1;
  if (s == Structure::kM3) n += 1;
  return n;
}

double aic(double loglik, int n_params) { return -2.0 * loglik + 2.0 * n_params; }

LrtResult lrt(const FitResult& nested, const FitResult& full) {
  if (nested.dataset_fingerprint != full.dataset_fingerprint) {
    throw DataError("likelihood-ratio test needs both fits on the same dataset (fingerprints differ)");
  }
  if (nested.n_params > full.n_params) {
    throw DomainError("nested model has more parameters than the full model");
  }
  LrtResult r;
  r.df = full.n_params - nested.n_params;
  r.statistic = std::max(0.0, 2.0 * (full.loglik - nested.loglik));
  r.p_value = chi_square_upper_tail(r.statistic, r.df);
  if (full.spec.includes_random() && !nested.spec.includes_random()) {
    // 0.5 * chi2_{df-1} + 0.5 * chi2_{df}; chi2_0 is a point mass at zero.
    const double lower = r.df - 1 == 0 ? (r.statistic > 0.0 ? 0.0 : 1.0) : chi_square_upper_tail(r.statistic, r.df - 1);
    r.mixture_p_value = 0.5 * lower + 0.5 * r.p_value;
  }
  return r;
}

namespace {

int level_index(const std::vector<std::string>& levels, const std::string& name, const char* what) {
  auto it = std::find(levels.begin(), levels.end(), name);
  if (it == levels.end()) {
    std::string valid;
    for (const auto& l : levels) valid += (valid.empty() ? "" : ", ") + l;
    throw DataError(std::string("unknown ") + what + " '" + name + "'; valid levels: " + valid);
  }
  return static_cast<int>(it - levels.begin());
}

}  // namespace

double predict_mean(const FitResult& fit, const std::string& formulation, const std::string& attribute,
                    double conditional_u) {
  const int f = level_index(fit.coding.formulations, formulation, "formulation");
  const int a = level_index(fit.coding.attributes, attribute, "attribute");
  double eta = fit.coefficient_or_zero("(Intercept)") + conditional_u;
  if (f != fit.coding.reference_formulation) eta += fit.coefficient_or_zero("formulation[" + formulation + "]");
  if (a != fit.coding.reference_attribute) eta += fit.coefficient_or_zero("attribute[" + attribute + "]");
  return inv_logit(eta);
}

std::vector<PredictedMean> predict_means(const FitResult& fit, double conditional_u) {
  std::vector<PredictedMean> out;
  for (const auto& a : fit.coding.attributes) {
    for (const auto& f : fit.coding.formulations) out.push_back({f, a, predict_mean(fit, f, a, conditional_u)});
  }
  return out;
}

std::vector<double> fitted_values(const FitResult& fit, const StackedDataset& ds) {
  if (ds.fingerprint() != fit.dataset_fingerprint) throw DataError("dataset does not match the fitted model");
  std::vector<double> out(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < fit.columns.size(); ++j) {
      eta += ds.x(static_cast<Eigen::Index>(i), fit.columns[j]) * fit.params.theta[static_cast<Eigen::Index>(j)];
    }
    if (!fit.modes.empty()) eta += fit.modes[static_cast<std::size_t>(ds.block_index[i])];
    out[i] = inv_logit(eta);
  }
  return out;
}

}  // namespace unibeta
