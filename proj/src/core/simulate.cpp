#include "simulate.hpp"

#include <algorithm>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "distributions.hpp"
#include "error.hpp"
#include "parallel.hpp"

namespace unibeta {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    return true;
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

void OrdinalGenerator::validate() const {
  if (cutpoints.empty()) throw DomainError("generator needs at least one cutpoint");
  for (std::size_t j = 0; j < cutpoints.size(); ++j) {
    if (!std::isfinite(cutpoints[j])) throw DomainError("cutpoints must be finite");
    if (j > 0 && !(cutpoints[j] > cutpoints[j - 1])) throw DomainError("cutpoints must be strictly increasing");
  }
  if (beta.empty()) throw DomainError("generator needs at least one formulation coefficient");
  if (delta.empty()) throw DomainError("generator needs at least one attribute coefficient");
  for (double b : beta)
    if (!std::isfinite(b)) throw DomainError("formulation coefficients must be finite");
  for (double d : delta)
    if (!std::isfinite(d)) throw DomainError("attribute coefficients must be finite");
  if (!std::isfinite(sigma_u2) || sigma_u2 < 0.0) throw DomainError("sigma_u2 must be finite and >= 0");
}

std::vector<double> OrdinalGenerator::category_probabilities(int formulation, int attribute, double u) const {
  const double eta = beta.at(static_cast<std::size_t>(formulation)) + delta.at(static_cast<std::size_t>(attribute)) + u;
  std::vector<double> p(static_cast<std::size_t>(categories()));
  double prev = 0.0;
  for (std::size_t j = 0; j < cutpoints.size(); ++j) {
    const double g = inv_logit(cutpoints[j] - eta);
    if (g < prev) throw DomainError("cumulative probabilities are not monotone");
    p[j] = g - prev;
    prev = g;
  }
  p.back() = 1.0 - prev;
  return p;
}

std::vector<RatingRecord> gen_panel(const OrdinalGenerator& gen, int panelists,
                                    const std::vector<std::string>& formulations,
                                    const std::vector<std::string>& attributes, std::uint64_t seed) {
  gen.validate();
  if (panelists < 1) throw DomainError("panelists must be >= 1");
  if (formulations.size() != gen.beta.size())
    throw DomainError("formulation names do not match the generator's coefficients");
  if (attributes.size() != gen.delta.size())
    throw DomainError("attribute names do not match the generator's coefficients");

  boost::random::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  boost::random::uniform_01<double> unif;
  const double sd = std::sqrt(gen.sigma_u2);

  std::vector<RatingRecord> out;
  out.reserve(static_cast<std::size_t>(panelists) * formulations.size() * attributes.size());
  for (int i = 0; i < panelists; ++i) {
    const double u = sd * normal(rng);
    const std::string id = std::to_string(i + 1);
    for (std::size_t a = 0; a < attributes.size(); ++a) {
      for (std::size_t f = 0; f < formulations.size(); ++f) {
        const auto p = gen.category_probabilities(static_cast<int>(f), static_cast<int>(a), u);
        const double draw = unif(rng);
        int rating = gen.categories();
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < p.size(); ++j) {
          acc += p[j];
          if (draw < acc) {
            rating = static_cast<int>(j) + 1;
            break;
          }
        }
        out.push_back({id, formulations[f], attributes[a], rating, 0});
      }
    }
  }
  return out;
}

Preorder parse_preorder(const std::string& text, const std::vector<std::string>& formulations) {
  Preorder order;
  order.rank.assign(formulations.size(), -1);
  int rank = 0;
  std::string token;
  auto assign = [&](const std::string& raw) {
    const std::string name = trim(raw);
    const auto it = std::find(formulations.begin(), formulations.end(), name);
    if (it == formulations.end()) throw DomainError("unknown formulation '" + name + "' in ordering '" + text + "'");
    auto& slot = order.rank[static_cast<std::size_t>(it - formulations.begin())];
    if (slot >= 0) throw DomainError("formulation '" + name + "' repeated in ordering '" + text + "'");
    slot = rank;
  };
  for (char ch : text) {
    if (ch == '<' || ch == '=') {
      assign(token);
      token.clear();
      if (ch == '<') ++rank;
    } else {
      token += ch;
    }
  }
  assign(token);
  for (std::size_t i = 0; i < order.rank.size(); ++i)
    if (order.rank[i] < 0) throw DomainError("ordering '" + text + "' omits " + formulations[i]);
  return order;
}

std::string format_preorder(const Preorder& order, const std::vector<std::string>& formulations) {
  if (order.rank.size() != formulations.size()) throw DomainError("preorder size mismatch");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < order.rank.size(); ++i) groups[order.rank[i]].push_back(i);
  std::string out;
  bool first_group = true;
  for (const auto& [rank, members] : groups) {
    if (!first_group) out += '<';
    first_group = false;
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (m > 0) out += '=';
      out += formulations[members[m]];
    }
  }
  return out;
}

const std::vector<std::string>& scenario_formulations() {
  static const std::vector<std::string> names{"F1", "F2", "F3"};
  return names;
}

const std::vector<std::string>& scenario_attributes() {
  static const std::vector<std::string> names{"A", "B"};
  return names;
}

std::vector<Scenario> scenario_catalog() {
  static const char* kNames[] = {"F3<F1<F2", "F1<F3<F2", "F2=F3<F1", "F2<F3<F1", "F3<F2<F1", "F1=F2=F3", "F1=F2<F3",
                                 "F1<F2=F3", "F1<F2<F3", "F2<F1=F3", "F2<F1<F3", "F3=F1<F2", "F3<F1=F2"};
  const auto& forms = scenario_formulations();
  std::vector<Scenario> out;
  for (const char* name : kNames) {
    Scenario s;
    s.name = name;
    s.truth = parse_preorder(name, forms);
    auto& g = s.generator;
    g.beta.resize(forms.size());
    if (s.name == "F1<F3<F2") {
      g.beta = {0.0, 7.0, 6.0};
      s.notes = "reference preset: beta_F3 = 6, beta_F2 = 7, delta_A = 0.5";
    } else {
      for (std::size_t f = 0; f < forms.size(); ++f) g.beta[f] = 3.0 * s.truth.rank[f];
      s.notes = "beta = 3 x rank, delta_A = 0.5";
    }
    g.delta = {0.5, 0.0};
    g.sigma_u2 = 1.0;
    if (s.name == "F1<F3<F2") {
      // alpha_2 = 5; the upper cutpoints straddle the F3..F2 band so the
      // one-unit gap shows up on the rating scale.
      g.cutpoints = {2.0, 5.0, 6.5, 8.0};
    } else {
      const auto [lo, hi] = std::minmax_element(g.beta.begin(), g.beta.end());
      const double centre = 0.5 * (*lo + *hi);
      g.cutpoints = {centre - 3.0, centre - 1.0, centre + 1.0, centre + 3.0};
    }
    out.push_back(std::move(s));
  }
  return out;
}

OrderingDecision close_pairwise(const PairwiseOutcomes& outcomes) {
  const int n = static_cast<int>(outcomes.size());
  for (const auto& row : outcomes)
    if (static_cast<int>(row.size()) != n) throw DomainError("pairwise outcomes must be square");
  auto rel = [&](int i, int j) { return outcomes[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rel(i, j) != -rel(j, i)) throw DomainError("pairwise outcomes must be antisymmetric");

  UnionFind raw(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rel(i, j) == 0) raw.unite(i, j);

  UnionFind uf = raw;
  bool changed = true;
  while (changed) {
    changed = false;
    // less[a][b]: some member of class a is strictly below some member of class b.
    std::vector<std::vector<bool>> less(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && rel(i, j) < 0) less[static_cast<std::size_t>(uf.find(i))][static_cast<std::size_t>(uf.find(j))] = true;
    // reachability over classes; anything on a cycle collapses
    auto reach = less;
    for (int k = 0; k < n; ++k)
      for (int a = 0; a < n; ++a)
        if (reach[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)])
          for (int b = 0; b < n; ++b)
            if (reach[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)])
              reach[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = true;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a != b && uf.find(a) == a && uf.find(b) == b && reach[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] &&
            reach[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)])
          changed |= uf.unite(a, b);
  }

  OrderingDecision d;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (uf.find(i) == uf.find(j) && (raw.find(i) != raw.find(j) || rel(i, j) != 0)) d.intransitive = true;

  // Rank classes by the number of classes strictly below them.
  std::vector<int> below(static_cast<std::size_t>(n), 0);
  for (int a = 0; a < n; ++a) {
    if (uf.find(a) != a) continue;
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (uf.find(j) == a && uf.find(i) != a && rel(i, j) < 0) seen[static_cast<std::size_t>(uf.find(i))] = true;
    below[static_cast<std::size_t>(a)] = static_cast<int>(std::count(seen.begin(), seen.end(), true));
  }
  // Dense ranks.
  std::vector<int> distinct;
  for (int a = 0; a < n; ++a)
    if (uf.find(a) == a) distinct.push_back(below[static_cast<std::size_t>(a)]);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  d.order.rank.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int b = below[static_cast<std::size_t>(uf.find(i))];
    d.order.rank[static_cast<std::size_t>(i)] =
        static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), b) - distinct.begin());
  }
  return d;
}

PairwiseOutcomes pairwise_wald(const std::vector<double>& effects, const Eigen::MatrixXd& covariance, double alpha) {
  const std::size_t n = effects.size();
  if (covariance.rows() != static_cast<Eigen::Index>(n) || covariance.cols() != static_cast<Eigen::Index>(n))
    throw DomainError("covariance does not match the number of effects");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  PairwiseOutcomes out(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      const double var = covariance(ii, ii) + covariance(jj, jj) - 2.0 * covariance(ii, jj);
      const double diff = effects[i] - effects[j];
      int r = 0;
      if (var > 0.0 && std::isfinite(var)) {
        const double z = diff / std::sqrt(var);
        if (wald_p_value(z) < alpha) r = diff < 0.0 ? -1 : 1;
      }
      out[i][j] = r;
      out[j][i] = -r;
    }
  }
  return out;
}

namespace {

// Formulation effects (reference = 0) and their covariance, from a fit.
void formulation_contrasts(const FitResult& fit, std::vector<double>& effects, Eigen::MatrixXd& cov) {
  const auto& forms = fit.coding.formulations;
  const std::size_t v = forms.size();
  if (fit.theta_covariance.size() == 0) throw ConvergenceError("fit has no covariance matrix");
  effects.assign(v, 0.0);
  std::vector<int> coef_index(v, -1);
  for (std::size_t f = 0; f < v; ++f) {
    const std::string name = "formulation[" + forms[f] + "]";
    for (std::size_t c = 0; c < fit.coefficients.size(); ++c) {
      if (fit.coefficients[c].name == name) {
        coef_index[f] = static_cast<int>(c);
        effects[f] = fit.coefficients[c].estimate;
      }
    }
  }
  cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v));
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = 0; b < v; ++b)
      if (coef_index[a] >= 0 && coef_index[b] >= 0)
        cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = fit.theta_covariance(coef_index[a], coef_index[b]);
}

}  // namespace

OrderingDecision decide_ordering(const FitResult& fit, double alpha) {
  std::vector<double> effects;
  Eigen::MatrixXd cov;
  formulation_contrasts(fit, effects, cov);
  return close_pairwise(pairwise_wald(effects, cov, alpha));
}

OrderingDecision decide_ordering_global_first(const FitResult& fit, double alpha) {
  std::vector<double> effects;
  Eigen::MatrixXd cov;
  formulation_contrasts(fit, effects, cov);
  const std::size_t v = effects.size();
  std::vector<Eigen::Index> idx;
  for (std::size_t f = 0; f < v; ++f)
    if (static_cast<int>(f) != fit.coding.reference_formulation) idx.push_back(static_cast<Eigen::Index>(f));
  if (!idx.empty()) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(idx.size()));
    Eigen::MatrixXd s(b.size(), b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      b(i) = effects[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      for (Eigen::Index j = 0; j < b.size(); ++j) s(i, j) = cov(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    const double w = b.dot(ldlt.solve(b));
    if (!(chi_square_upper_tail(w, static_cast<int>(b.size())) < alpha)) {
      OrderingDecision d;
      d.order.rank.assign(v, 0);
      return d;
    }
  }
  return close_pairwise(pairwise_wald(effects, cov, alpha));
}

DecisionRule decision_rule(const std::string& name) {
  if (name == "pairwise") return decide_ordering;
  if (name == "global-first") return decide_ordering_global_first;
  throw DomainError("unknown decision rule '" + name + "' (expected pairwise or global-first)");
}

std::uint64_t replication_seed(std::uint64_t master, const std::string& scenario, int panelists, int rep) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ fnv1a(scenario));
  h = splitmix64(h ^ static_cast<std::uint64_t>(panelists));
  return splitmix64(h ^ static_cast<std::uint64_t>(rep));
}

ScenarioResult run_scenario(const Scenario& scenario, const RunOptions& options) {
  if (options.replications < 1) throw DomainError("replications must be >= 1");
  if (options.panelists < 2) throw DomainError("panelists must be >= 2");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const DecisionRule rule = decision_rule(options.rule);
  const auto& forms = scenario_formulations();
  const auto& attrs = scenario_attributes();

  ScenarioResult res;
  res.scenario = scenario.name;
  res.truth = format_preorder(scenario.truth, forms);
  res.panelists = options.panelists;
  res.replications = options.replications;
  res.alpha = options.alpha;
  res.master_seed = options.seed;
  res.details.resize(static_cast<std::size_t>(options.replications));

  FitOptions fopts;
  fopts.workers = 1;
  const ModelSpec m3{Structure::kM3};

  parallel_for(res.details.size(), options.workers, [&](std::size_t r) {
    auto& out = res.details[r];
    out.seed = replication_seed(options.seed, scenario.name, options.panelists, static_cast<int>(r));
    const auto records = gen_panel(scenario.generator, options.panelists, forms, attrs, out.seed);
    CodingOptions copts;
    copts.reference_formulation = forms.front();
    copts.scale_points = scenario.generator.categories();
    out.decisions.assign(3, "");
    out.failed.assign(3, true);
    out.intransitive.assign(3, false);
    for (std::size_t m = 0; m < 3; ++m) {
      try {
        const StackedDataset ds = m == 0 ? build_stacked(records, copts) : build_separate(records, attrs[m - 1], copts);
        const FitResult f = fit(ds, m3, fopts);
        if (!f.converged || f.theta_covariance.size() == 0) continue;
        const auto d = rule(f, options.alpha);
        out.decisions[m] = format_preorder(d.order, forms);
        out.failed[m] = false;
        out.intransitive[m] = d.intransitive;
      } catch (const Error&) {
      }
    }
  });

  static const char* kModels[] = {"unified", "A", "B"};
  for (std::size_t m = 0; m < 3; ++m) {
    ModelRate rate{kModels[m], 0, 0, 0};
    for (const auto& d : res.details) {
      if (d.failed[m]) {
        ++rate.failures;
        continue;
      }
      ++rate.valid;
      if (d.decisions[m] == res.truth) ++rate.concordant;
    }
    res.truth_agreement.push_back(rate);
  }
  for (std::size_t m = 1; m < 3; ++m) {
    ModelRate rate{std::string("unified~") + kModels[m], 0, 0, 0};
    for (const auto& d : res.details) {
      if (d.failed[0] || d.failed[m]) {
        ++rate.failures;
        continue;
      }
      ++rate.valid;
      if (d.decisions[0] == d.decisions[m]) ++rate.concordant;
    }
    res.unified_vs_separate.push_back(rate);
  }
  return res;
}

StackedDataset simulate_beta_responses(const StackedDataset& shape, const std::vector<int>& columns,
                                       const ParameterVector& truth, std::uint64_t seed) {
  truth.validate();
  if (truth.theta.size() != static_cast<Eigen::Index>(columns.size()))
    throw DomainError("theta length does not match the column subset");
  for (int c : columns)
    if (c < 0 || c >= shape.x.cols()) throw DomainError("column index out of range");

  boost::random::mt19937_64 rng(seed);
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(truth.sigma_u2());
  const double phi = truth.phi();

  StackedDataset out = shape;
  std::vector<double> u(shape.n_blocks());
  for (auto& v : u) v = sd * normal(rng);
  for (std::size_t b = 0; b < shape.blocks.size(); ++b) {
    for (int row : shape.blocks[b]) {
      double eta = u[b];
      for (std::size_t j = 0; j < columns.size(); ++j) eta += shape.x(row, columns[j]) * truth.theta(static_cast<Eigen::Index>(j));
      const double mu = inv_logit(eta);
      const double one_minus_mu = inv_logit(-eta);
      boost::random::beta_distribution<double> beta(mu * phi, one_minus_mu * phi);
      out.y(row) = std::clamp(beta(rng), 1e-10, 1.0 - 1e-10);
    }
  }
  return out;
}

}  // namespace unibeta
