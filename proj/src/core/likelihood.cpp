#include "likelihood.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <numbers>

#include "distributions.hpp"
#include "parallel.hpp"

namespace unibeta {
namespace {

using FastPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

double digamma(double x) { return boost::math::digamma(x, FastPolicy()); }
double trigamma(double x) { return boost::math::trigamma(x, FastPolicy()); }
double tetragamma(double x) { return boost::math::polygamma(2, x, FastPolicy()); }

constexpr double kScoreTolerance = 1e-8;
constexpr int kMaxModeIterations = 50;
constexpr int kMaxHalvings = 40;

// Derivatives of log f(y | inv_logit(eta), phi) with respect to eta.
struct RowDerivs {
  double value = 0.0;  // log density
  double d1 = 0.0;     // score in eta
  double d2 = 0.0;     // second derivative in eta
};

RowDerivs row_derivs(double eta, double phi, double lgamma_phi, double log_y, double log1m_y) {
  const double mu = inv_logit(eta);
  const double muc = inv_logit(-eta);
  const double a = mu * phi;
  const double b = muc * phi;
  const double m = mu * muc;
  const double ystar = log_y - log1m_y;
  const double g = phi * (ystar - (digamma(a) - digamma(b)));
  const double t = trigamma(a) + trigamma(b);
  RowDerivs r;
  r.value = lgamma_phi - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * log_y + (b - 1.0) * log1m_y;
  r.d1 = g * m;
  r.d2 = -phi * phi * t * m * m + g * m * (muc - mu);
  return r;
}

double row_value(double eta, double phi, double lgamma_phi, double log_y, double log1m_y) {
  const double a = inv_logit(eta) * phi;
  const double b = inv_logit(-eta) * phi;
  return lgamma_phi - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * log_y + (b - 1.0) * log1m_y;
}

// Full set of partials needed for the gradient of the Laplace block value.
struct RowPartials {
  double value = 0.0;
  double s = 0.0;        // dl/deta
  double w = 0.0;        // d2l/deta2
  double s3 = 0.0;       // d3l/deta3
  double l_phi = 0.0;    // dl/dphi
  double s_phi = 0.0;    // d2l/deta dphi
  double w_phi = 0.0;    // d3l/deta2 dphi
};

RowPartials row_partials(double eta, double phi, double lgamma_phi, double digamma_phi, double log_y,
                         double log1m_y) {
  const double mu = inv_logit(eta);
  const double muc = inv_logit(-eta);
  const double a = mu * phi;
  const double b = muc * phi;
  const double m = mu * muc;
  const double ystar = log_y - log1m_y;
  const double psi_a = digamma(a), psi_b = digamma(b);
  const double psi1_a = trigamma(a), psi1_b = trigamma(b);
  const double psi2_a = tetragamma(a), psi2_b = tetragamma(b);

  const double resid = ystar - (psi_a - psi_b);
  const double g = phi * resid;
  const double t = psi1_a + psi1_b;
  const double dm = m * (muc - mu);
  const double dg = -phi * phi * t * m;
  const double dt = phi * (psi2_a - psi2_b) * m;
  const double d2g = -phi * phi * (dt * m + t * dm);
  const double d2m = dm * (muc - mu) - 2.0 * m * m;

  RowPartials r;
  r.value = lgamma_phi - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * log_y + (b - 1.0) * log1m_y;
  r.s = g * m;
  r.w = dg * m + g * dm;
  r.s3 = d2g * m + 2.0 * dg * dm + g * d2m;

  const double g_phi = resid - phi * (mu * psi1_a - muc * psi1_b);
  const double t_phi = mu * psi2_a + muc * psi2_b;
  const double dg_phi = -2.0 * phi * t * m - phi * phi * m * t_phi;
  r.l_phi = digamma_phi - mu * psi_a - muc * psi_b + mu * log_y + muc * log1m_y;
  r.s_phi = m * g_phi;
  r.w_phi = dg_phi * m + g_phi * dm;
  return r;
}

struct QEval {
  double q = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

QEval q_eval(double u, const BlockSlice& block, const Eigen::VectorXd& eta_fixed, double phi, double lgamma_phi,
             double sigma_u2) {
  QEval e;
  for (std::size_t j = 0; j < block.size(); ++j) {
    const auto r = row_derivs(eta_fixed[static_cast<Eigen::Index>(j)] + u, phi, lgamma_phi, block.log_y[j],
                              block.log1m_y[j]);
    e.q += r.value;
    e.d1 += r.d1;
    e.d2 += r.d2;
  }
  e.q -= u * u / (2.0 * sigma_u2);
  e.d1 -= u / sigma_u2;
  e.d2 -= 1.0 / sigma_u2;
  return e;
}

double q_value_only(double u, const BlockSlice& block, const Eigen::VectorXd& eta_fixed, double phi,
                    double lgamma_phi, double sigma_u2) {
  double q = 0.0;
  for (std::size_t j = 0; j < block.size(); ++j) {
    q += row_value(eta_fixed[static_cast<Eigen::Index>(j)] + u, phi, lgamma_phi, block.log_y[j], block.log1m_y[j]);
  }
  return q - u * u / (2.0 * sigma_u2);
}

Eigen::VectorXd fixed_predictor(const BlockSlice& block, const ParameterVector& params) {
  if (block.x.rows() == 0) return Eigen::VectorXd();
  return block.x * params.theta;
}

ModeResult find_mode_impl(const BlockSlice& block, const Eigen::VectorXd& eta_fixed, const ParameterVector& params,
                          double u_start) {
  const double phi = params.phi();
  const double sigma_u2 = params.sigma_u2();
  const double lgamma_phi = std::lgamma(phi);
  double u = std::isfinite(u_start) ? u_start : 0.0;
  QEval e = q_eval(u, block, eta_fixed, phi, lgamma_phi, sigma_u2);
  for (int it = 0; it <= kMaxModeIterations; ++it) {
    if (std::abs(e.d1) < kScoreTolerance && e.d2 < 0.0) {
      // One more Newton step so the score sits at rounding level; otherwise a
      // warm start left within tolerance biases the gradient.
      const double u2 = u - e.d1 / e.d2;
      const QEval e2 = q_eval(u2, block, eta_fixed, phi, lgamma_phi, sigma_u2);
      if (std::isfinite(e2.q) && e2.d2 < 0.0 && std::abs(e2.d1) <= std::abs(e.d1)) return {u2, e2.q, e2.d2, it + 1};
      return {u, e.q, e.d2, it};
    }
    if (it == kMaxModeIterations) break;
    double curvature = -e.d2;
    if (!(curvature > 0.0)) curvature = 1.0 / sigma_u2 + std::abs(e.d2);
    double step = e.d1 / curvature;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h) {
      const double trial = u + step;
      const double q_trial = q_value_only(trial, block, eta_fixed, phi, lgamma_phi, sigma_u2);
      if (std::isfinite(q_trial) && q_trial >= e.q - 1e-12 * std::max(1.0, std::abs(e.q))) {
        u = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No ascent direction left at machine precision; accept a near-stationary point.
      if (std::abs(e.d1) < 1e-6 && e.d2 < 0.0) return {u, e.q, e.d2, it};
      throw ModeError(block.id, u, "mode search stalled for block " + std::to_string(block.id));
    }
    e = q_eval(u, block, eta_fixed, phi, lgamma_phi, sigma_u2);
  }
  throw ModeError(block.id, u,
                  "mode search did not converge in " + std::to_string(kMaxModeIterations) + " iterations for block " +
                      std::to_string(block.id) + " (last u = " + std::to_string(u) + ")");
}

// Laplace value of one block plus, when grad is non-null, its gradient
// (theta..., log_sigma_u2, log_phi) accumulated into grad.
double laplace_block(const BlockSlice& block, const ParameterVector& params, double& u_warm, double* grad) {
  const Eigen::VectorXd eta_fixed = fixed_predictor(block, params);
  const ModeResult mode = find_mode_impl(block, eta_fixed, params, u_warm);
  u_warm = mode.u_hat;
  const double sigma_u2 = params.sigma_u2();
  const double h = -mode.q_second_deriv;
  const double value = mode.q_value - 0.5 * std::log(h * sigma_u2);
  if (grad == nullptr) return value;

  const double phi = params.phi();
  const double lgamma_phi = std::lgamma(phi);
  const double digamma_phi = digamma(phi);
  const auto p = static_cast<Eigen::Index>(params.theta.size());
  Eigen::VectorXd q_theta = Eigen::VectorXd::Zero(p);   // dQ/dtheta
  Eigen::VectorXd qp_theta = Eigen::VectorXd::Zero(p);  // dQ'/dtheta
  Eigen::VectorXd h_theta = Eigen::VectorXd::Zero(p);   // dH/dtheta at fixed u
  double s3_sum = 0.0, l_phi = 0.0, s_phi = 0.0, w_phi = 0.0;
  for (std::size_t j = 0; j < block.size(); ++j) {
    const auto r = row_partials(eta_fixed[static_cast<Eigen::Index>(j)] + mode.u_hat, phi, lgamma_phi, digamma_phi,
                                block.log_y[j], block.log1m_y[j]);
    const auto xj = block.x.row(static_cast<Eigen::Index>(j));
    q_theta += r.s * xj.transpose();
    qp_theta += r.w * xj.transpose();
    h_theta -= r.s3 * xj.transpose();
    s3_sum += r.s3;
    l_phi += r.l_phi;
    s_phi += r.s_phi;
    w_phi += r.w_phi;
  }
  const double h_u = -s3_sum;  // dH/du
  const double u = mode.u_hat;

  // dLL/dp = dQ/dp - (dH/dp + dH/du * du/dp) / (2H), du/dp = (dQ'/dp) / H.
  for (Eigen::Index k = 0; k < p; ++k) {
    grad[k] += q_theta[k] - (h_theta[k] + h_u * qp_theta[k] / h) / (2.0 * h);
  }
  const double d_tau = u * u / (2.0 * sigma_u2) - (-1.0 / sigma_u2 + h_u * (u / sigma_u2) / h) / (2.0 * h) - 0.5;
  grad[p] += d_tau;
  const double d_phi = l_phi - (-w_phi + h_u * s_phi / h) / (2.0 * h);
  grad[p + 1] += phi * d_phi;
  return value;
}

double reduce_blocks(std::span<const BlockSlice> blocks, const ParameterVector& params, const EvalOptions& options,
                     Eigen::VectorXd* gradient) {
  params.validate();
  const std::size_t nb = blocks.size();
  const auto dim = params.theta.size() + 2;
  std::vector<double> modes(nb, 0.0);
  if (options.modes != nullptr && options.modes->size() == nb) modes = *options.modes;
  std::vector<double> values(nb, 0.0);
  std::vector<Eigen::VectorXd> grads(gradient ? nb : 0);
  std::vector<std::string> failures(nb);

  parallel_for(nb, options.workers, [&](std::size_t i) {
    try {
      if (gradient) {
        grads[i] = Eigen::VectorXd::Zero(dim);
        values[i] = laplace_block(blocks[i], params, modes[i], grads[i].data());
      } else {
        values[i] = laplace_block(blocks[i], params, modes[i], nullptr);
      }
    } catch (const ModeError& e) {
      failures[i] = e.what();
    }
  });

  std::vector<int> failed;
  for (std::size_t i = 0; i < nb; ++i) {
    if (!failures[i].empty()) failed.push_back(blocks[i].id);
  }
  if (!failed.empty()) {
    std::string list;
    for (std::size_t i = 0; i < failed.size() && i < 10; ++i) list += (i ? "," : "") + std::to_string(failed[i]);
    throw BlockFailureError(failed, "mode search failed in " + std::to_string(failed.size()) + " block(s): " + list);
  }

  double total = 0.0;
  for (double v : values) total += v;
  if (gradient) {
    *gradient = Eigen::VectorXd::Zero(dim);
    for (const auto& g : grads) *gradient += g;
  }
  if (options.modes != nullptr) *options.modes = std::move(modes);
  return total;
}

}  // namespace

void ParameterVector::validate() const {
  if (!theta.allFinite() || !std::isfinite(log_sigma_u2) || !std::isfinite(log_phi)) {
    throw DomainError("parameter vector has non-finite entries");
  }
  if (!(phi() > 0.0) || !std::isfinite(phi()) || !(sigma_u2() > 0.0) || !std::isfinite(sigma_u2())) {
    throw DomainError("precision or random-effect variance out of range");
  }
}

BlockSlice::BlockSlice(int block_id, std::vector<double> responses, Eigen::MatrixXd design_rows)
    : id(block_id), y(std::move(responses)), x(std::move(design_rows)) {
  if (static_cast<Eigen::Index>(y.size()) != x.rows() && x.rows() != 0) {
    throw DomainError("block responses and design rows differ in length");
  }
  log_y.reserve(y.size());
  log1m_y.reserve(y.size());
  for (double v : y) {
    if (!(v > 0.0 && v < 1.0)) throw DomainError("responses must lie strictly inside (0,1)");
    log_y.push_back(std::log(v));
    log1m_y.push_back(std::log1p(-v));
  }
}

std::vector<BlockSlice> make_blocks(const StackedDataset& ds, std::span<const int> columns) {
  std::vector<BlockSlice> out;
  out.reserve(ds.blocks.size());
  for (std::size_t b = 0; b < ds.blocks.size(); ++b) {
    const auto& rows = ds.blocks[b];
    std::vector<double> y;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      y.push_back(ds.y[rows[i]]);
      for (std::size_t c = 0; c < columns.size(); ++c) {
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = ds.x(rows[i], columns[c]);
      }
    }
    out.emplace_back(static_cast<int>(b), std::move(y), std::move(x));
  }
  return out;
}

double q_function(double u, const BlockSlice& block, const ParameterVector& params) {
  params.validate();
  const Eigen::VectorXd eta_fixed = fixed_predictor(block, params);
  const double phi = params.phi();
  return q_value_only(u, block, eta_fixed, phi, std::lgamma(phi), params.sigma_u2());
}

ModeResult find_mode(const BlockSlice& block, const ParameterVector& params, double u_start) {
  params.validate();
  return find_mode_impl(block, fixed_predictor(block, params), params, u_start);
}

double laplace_block_loglik(const BlockSlice& block, const ParameterVector& params, double u_start,
                            ModeResult* mode) {
  params.validate();
  const Eigen::VectorXd eta_fixed = fixed_predictor(block, params);
  const ModeResult m = find_mode_impl(block, eta_fixed, params, u_start);
  if (mode) *mode = m;
  return m.q_value - 0.5 * std::log(-m.q_second_deriv * params.sigma_u2());
}

double marginal_loglik(std::span<const BlockSlice> blocks, const ParameterVector& params,
                       const EvalOptions& options) {
  return reduce_blocks(blocks, params, options, nullptr);
}

double marginal_loglik_gradient(std::span<const BlockSlice> blocks, const ParameterVector& params,
                                Eigen::VectorXd& gradient, const EvalOptions& options) {
  return reduce_blocks(blocks, params, options, &gradient);
}

double fixed_loglik(std::span<const BlockSlice> blocks, const ParameterVector& params, Eigen::VectorXd* gradient) {
  params.validate();
  const double phi = params.phi();
  const double lgamma_phi = std::lgamma(phi);
  const double digamma_phi = gradient ? digamma(phi) : 0.0;
  const auto p = params.theta.size();
  if (gradient) *gradient = Eigen::VectorXd::Zero(p + 1);
  double total = 0.0;
  for (const auto& block : blocks) {
    const Eigen::VectorXd eta = fixed_predictor(block, params);
    for (std::size_t j = 0; j < block.size(); ++j) {
      const double e = eta[static_cast<Eigen::Index>(j)];
      if (!gradient) {
        total += row_value(e, phi, lgamma_phi, block.log_y[j], block.log1m_y[j]);
        continue;
      }
      const double mu = inv_logit(e);
      const double muc = inv_logit(-e);
      const double a = mu * phi, b = muc * phi;
      const double psi_a = digamma(a), psi_b = digamma(b);
      total += lgamma_phi - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * block.log_y[j] + (b - 1.0) * block.log1m_y[j];
      const double s = phi * (block.log_y[j] - block.log1m_y[j] - (psi_a - psi_b)) * mu * muc;
      gradient->head(p) += s * block.x.row(static_cast<Eigen::Index>(j)).transpose();
      (*gradient)[p] +=
          phi * (digamma_phi - mu * psi_a - muc * psi_b + mu * block.log_y[j] + muc * block.log1m_y[j]);
    }
  }
  return total;
}

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw DomainError("Gauss-Hermite rule needs at least one node");
  // Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(static_cast<double>(i) / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  // Eigenvector weights lose relative accuracy in the tails, where the adaptive
  // rule multiplies them by exp(z^2). Polish each node with Newton on the
  // orthonormal Hermite polynomial and take the weight from the Christoffel sum.
  auto orthonormal = [n](double x, double& sum_sq, double& pn, double& pn1) {
    double prev = 0.0, cur = std::pow(std::numbers::pi, -0.25);
    sum_sq = cur * cur;
    for (int k = 0; k < n; ++k) {
      const double next = (x * cur - std::sqrt(k / 2.0) * prev) / std::sqrt((k + 1) / 2.0);
      prev = cur;
      cur = next;
      if (k + 1 < n) sum_sq += cur * cur;
    }
    pn = cur;
    pn1 = prev;
  };
  GaussHermiteRule rule;
  for (int i = 0; i < n; ++i) {
    double x = eig.eigenvalues()[i];
    double sum_sq = 0.0, pn = 0.0, pn1 = 0.0;
    for (int it = 0; it < 3; ++it) {
      orthonormal(x, sum_sq, pn, pn1);
      x -= pn / (std::sqrt(2.0 * n) * pn1);
    }
    orthonormal(x, sum_sq, pn, pn1);
    rule.nodes.push_back(x);
    rule.log_weights.push_back(-std::log(sum_sq));
  }
  return rule;
}

double quadrature_block_loglik(const BlockSlice& block, const ParameterVector& params,
                               const GaussHermiteRule& rule) {
  params.validate();
  const Eigen::VectorXd eta_fixed = fixed_predictor(block, params);
  const ModeResult mode = find_mode_impl(block, eta_fixed, params, 0.0);
  const double phi = params.phi();
  const double lgamma_phi = std::lgamma(phi);
  const double sigma_u2 = params.sigma_u2();
  const double scale = std::sqrt(2.0) / std::sqrt(-mode.q_second_deriv);

  std::vector<double> terms;
  terms.reserve(rule.nodes.size());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double z = rule.nodes[k];
    const double q = q_value_only(mode.u_hat + scale * z, block, eta_fixed, phi, lgamma_phi, sigma_u2);
    terms.push_back(rule.log_weights[k] + z * z + q);
  }
  const double peak = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  const double log_integral = std::log(scale) + peak + std::log(acc);
  return log_integral - 0.5 * std::log(2.0 * std::numbers::pi * sigma_u2);
}

double quadrature_oracle_loglik(std::span<const BlockSlice> blocks, const ParameterVector& params, int nodes) {
  if (nodes < 16) throw DomainError("quadrature oracle needs at least 16 nodes");
  const GaussHermiteRule rule = gauss_hermite(nodes);
  double total = 0.0;
  for (const auto& block : blocks) total += quadrature_block_loglik(block, params, rule);
  return total;
}

}  // namespace unibeta
