#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "design.hpp"
#include "fit.hpp"
#include "records.hpp"

namespace unibeta {

// Mixed cumulative-logit proportional-odds generator. With eta = beta_f +
// delta_a + u, P(Y <= j) = inv_logit(cutpoint_j - eta), so larger
// coefficients shift ratings towards the top of the scale.
struct OrdinalGenerator {
  std::vector<double> cutpoints;  // c - 1 strictly increasing values
  std::vector<double> beta;       // one per formulation
  std::vector<double> delta;      // one per attribute
  double sigma_u2 = 1.0;

  int categories() const { return static_cast<int>(cutpoints.size()) + 1; }
  void validate() const;
  std::vector<double> category_probabilities(int formulation, int attribute, double u) const;
};

// Complete-block panel: every panelist rates every formulation on every
// attribute. Panelists are named "1".."N". Deterministic given seed.
std::vector<RatingRecord> gen_panel(const OrdinalGenerator& gen, int panelists,
                                    const std::vector<std::string>& formulations,
                                    const std::vector<std::string>& attributes, std::uint64_t seed);

// Total preorder over formulations as a rank per formulation (0 = lowest,
// equal ranks tie), e.g. "F1<F3<F2" -> {0, 2, 1}.
struct Preorder {
  std::vector<int> rank;

  friend bool operator==(const Preorder&, const Preorder&) = default;
};

Preorder parse_preorder(const std::string& text, const std::vector<std::string>& formulations);
// Canonical rendering: groups ascending, members in level order.
std::string format_preorder(const Preorder& order, const std::vector<std::string>& formulations);

struct Scenario {
  std::string name;
  Preorder truth;
  OrdinalGenerator generator;
  std::string notes;
};

// The thirteen presets over F1, F2, F3 with attributes A and B.
std::vector<Scenario> scenario_catalog();
const std::vector<std::string>& scenario_formulations();
const std::vector<std::string>& scenario_attributes();

// Raw pairwise outcome: -1 if i < j, +1 if i > j, 0 if equal.
using PairwiseOutcomes = std::vector<std::vector<int>>;

struct OrderingDecision {
  Preorder order;
  bool intransitive = false;  // closure had to merge beyond the raw equalities
};

// Merges raw equalities, then any classes joined by mixed or cyclic strict
// outcomes, and ranks the remaining classes.
OrderingDecision close_pairwise(const PairwiseOutcomes& outcomes);

// Pairwise Wald outcomes at alpha on formulation contrasts
// (effects include a zero for the reference level).
PairwiseOutcomes pairwise_wald(const std::vector<double>& effects, const Eigen::MatrixXd& covariance, double alpha);

// Strategy that turns a fit into an ordering decision.
using DecisionRule = std::function<OrderingDecision(const FitResult&, double alpha)>;

// Default rule: pairwise Wald tests with transitive closure.
OrderingDecision decide_ordering(const FitResult& fit, double alpha);

// Alternate rule: a global Wald test of equal formulation effects first;
// pairwise tests only when it rejects.
OrderingDecision decide_ordering_global_first(const FitResult& fit, double alpha);

// Named rules: "pairwise" (default) and "global-first".
DecisionRule decision_rule(const std::string& name);

struct ReplicationOutcome {
  std::uint64_t seed = 0;
  // unified, attribute A, attribute B; empty string on fit failure.
  std::vector<std::string> decisions;
  std::vector<bool> failed;
  std::vector<bool> intransitive;
};

struct ModelRate {
  std::string model;
  int valid = 0;
  int failures = 0;
  int concordant = 0;
  double rate() const { return valid > 0 ? static_cast<double>(concordant) / valid : 0.0; }
};

struct ScenarioResult {
  std::string scenario;
  std::string truth;
  int panelists = 0;
  int replications = 0;
  double alpha = 0.05;
  std::uint64_t master_seed = 0;
  std::vector<ModelRate> truth_agreement;     // unified, A, B
  std::vector<ModelRate> unified_vs_separate;  // unified~A, unified~B
  std::vector<ReplicationOutcome> details;
};

struct ConcordanceReport {
  std::vector<ScenarioResult> rows;
};

struct RunOptions {
  int panelists = 90;
  int replications = 200;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string rule = "pairwise";
};

// Seed of replication `rep`, derived from the master seed, scenario name and
// panel size so that replications can run in any order.
std::uint64_t replication_seed(std::uint64_t master, const std::string& scenario, int panelists, int rep);

ScenarioResult run_scenario(const Scenario& scenario, const RunOptions& options);

// Draws responses from the mixed beta model on the layout of `shape`:
// y ~ Beta(inv_logit(x'theta + u_block), phi), u_block ~ N(0, sigma_u2).
// Draws are clamped to [1e-10, 1 - 1e-10].
StackedDataset simulate_beta_responses(const StackedDataset& shape, const std::vector<int>& columns,
                                       const ParameterVector& truth, std::uint64_t seed);

}  // namespace unibeta
