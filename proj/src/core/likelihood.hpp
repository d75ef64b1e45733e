#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "design.hpp"
#include "error.hpp"

namespace unibeta {

// Model parameters on the unconstrained scale.
struct ParameterVector {
  Eigen::VectorXd theta;
  double log_sigma_u2 = 0.0;
  double log_phi = 0.0;

  double sigma_u2() const { return std::exp(log_sigma_u2); }
  double phi() const { return std::exp(log_phi); }
  void validate() const;
};

// Rows of one panelist, with log-transformed responses cached.
struct BlockSlice {
  int id = 0;
  std::vector<double> y;
  std::vector<double> log_y;
  std::vector<double> log1m_y;
  Eigen::MatrixXd x;  // n_i x p

  BlockSlice() = default;
  BlockSlice(int block_id, std::vector<double> responses, Eigen::MatrixXd design_rows);
  std::size_t size() const { return y.size(); }
};

// Splits a dataset into per-panelist slices, keeping the given columns of X.
std::vector<BlockSlice> make_blocks(const StackedDataset& ds, std::span<const int> columns);

struct ModeResult {
  double u_hat = 0.0;
  double q_value = 0.0;
  double q_second_deriv = 0.0;  // negative at a proper mode
  int iterations = 0;
};

// Mode finding failure for one block, carrying the last iterate.
class ModeError : public ConvergenceError {
 public:
  ModeError(int block_id, double last_u, const std::string& what)
      : ConvergenceError(what), block_id_(block_id), last_u_(last_u) {}
  int block_id() const noexcept { return block_id_; }
  double last_u() const noexcept { return last_u_; }

 private:
  int block_id_;
  double last_u_;
};

// One or more blocks failed during a whole-dataset evaluation.
class BlockFailureError : public ConvergenceError {
 public:
  BlockFailureError(std::vector<int> blocks, const std::string& what)
      : ConvergenceError(what), blocks_(std::move(blocks)) {}
  const std::vector<int>& blocks() const noexcept { return blocks_; }

 private:
  std::vector<int> blocks_;
};

// Q(u) = sum_j log f(y_j | mu_j, phi) - u^2 / (2 sigma_u2), mu_j = inv_logit(x_j'theta + u).
double q_function(double u, const BlockSlice& block, const ParameterVector& params);

// Newton ascent in u with step halving; |Q'(u_hat)| < 1e-8 on success.
ModeResult find_mode(const BlockSlice& block, const ParameterVector& params, double u_start = 0.0);

// Laplace approximation of log of integral prod_j f(y_j|u) N(u; 0, sigma_u2) du:
// Q(u_hat) - 0.5*log(-Q''(u_hat)) - 0.5*log(sigma_u2).
double laplace_block_loglik(const BlockSlice& block, const ParameterVector& params, double u_start = 0.0,
                            ModeResult* mode = nullptr);

// Per-block evaluation options for the map-reduce over blocks.
struct EvalOptions {
  int workers = 1;
  // Warm-start modes, read on entry and updated on exit when non-null.
  std::vector<double>* modes = nullptr;
};

// Sum over blocks of the Laplace log-likelihood, reduced in canonical block
// order so the total does not depend on the worker count.
double marginal_loglik(std::span<const BlockSlice> blocks, const ParameterVector& params,
                       const EvalOptions& options = {});

// Same value plus the analytic gradient with respect to
// (theta, log_sigma_u2, log_phi), ordered in that way.
double marginal_loglik_gradient(std::span<const BlockSlice> blocks, const ParameterVector& params,
                                Eigen::VectorXd& gradient, const EvalOptions& options = {});

// Fixed-effects beta regression log-likelihood (no random intercept), with
// gradient over (theta, log_phi) when requested.
double fixed_loglik(std::span<const BlockSlice> blocks, const ParameterVector& params,
                    Eigen::VectorXd* gradient = nullptr);

// Gauss-Hermite nodes and log-weights for the weight function exp(-z^2).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> log_weights;
};
GaussHermiteRule gauss_hermite(int n);

// Adaptive Gauss-Hermite evaluation of one block's integral, centred at the
// mode and scaled by |Q''(u_hat)|^(-1/2). Independent check on the Laplace value.
double quadrature_block_loglik(const BlockSlice& block, const ParameterVector& params, const GaussHermiteRule& rule);
double quadrature_oracle_loglik(std::span<const BlockSlice> blocks, const ParameterVector& params, int nodes);

}  // namespace unibeta
