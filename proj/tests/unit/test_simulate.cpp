#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "error.hpp"
#include "report.hpp"
#include "simulate.hpp"

using namespace unibeta;

namespace {

const std::vector<std::string> kForms{"F1", "F2", "F3"};

// All 13 total preorders on three items as dense rank vectors.
std::vector<std::vector<int>> all_preorders() {
  std::set<std::vector<int>> out;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        std::vector<int> r{a, b, c};
        std::set<int> used(r.begin(), r.end());
        bool dense = true;
        for (int k = 0; k < static_cast<int>(used.size()); ++k) dense &= used.count(k) == 1;
        if (dense) out.insert(r);
      }
  return {out.begin(), out.end()};
}

int classes(const std::vector<int>& r) { return static_cast<int>(std::set<int>(r.begin(), r.end()).size()); }

// Count ratings per category for one cell over many panelists.
std::vector<double> cell_frequencies(const OrdinalGenerator& g, int panelists, const std::string& form,
                                     const std::string& attr, std::uint64_t seed) {
  const auto recs = gen_panel(g, panelists, kForms, {"A", "B"}, seed);
  std::vector<double> freq(static_cast<std::size_t>(g.categories()), 0.0);
  int n = 0;
  for (const auto& r : recs)
    if (r.formulation == form && r.attribute == attr) ++freq[static_cast<std::size_t>(r.rating - 1)], ++n;
  for (auto& f : freq) f /= n;
  return freq;
}

}  // namespace

TEST_CASE("generator probabilities by differencing") {
  OrdinalGenerator g{{-2, -1, 1, 2}, {0, 0.5, -1}, {0.3, 0}, 1.0};
  for (int f = 0; f < 3; ++f) {
    const auto p = g.category_probabilities(f, 0, 0.2);
    const double eta = g.beta[static_cast<std::size_t>(f)] + 0.3 + 0.2;
    double prev = 0.0, sum = 0.0;
    for (int j = 0; j < 5; ++j) {
      const double cum = j < 4 ? inv_logit(g.cutpoints[static_cast<std::size_t>(j)] - eta) : 1.0;
      CHECK(p[static_cast<std::size_t>(j)] == doctest::Approx(cum - prev).epsilon(1e-14));
      sum += p[static_cast<std::size_t>(j)];
      prev = cum;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
  OrdinalGenerator bad{{1, 0.5}, {0, 0, 0}, {0}, 1.0};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("null generator is symmetric about the middle category") {
  OrdinalGenerator g{{-2, -1, 1, 2}, {0, 0, 0}, {0, 0}, 0.0};
  const int n = 100000;
  const auto f = cell_frequencies(g, n, "F2", "A", 3);
  for (int j = 0; j < 2; ++j) {
    // Difference of two multinomial cell proportions.
    const double pj = f[static_cast<std::size_t>(j)], pk = f[static_cast<std::size_t>(4 - j)];
    const double se = std::sqrt((pj + pk - (pj - pk) * (pj - pk)) / n);
    CHECK(std::abs(pj - pk) <= 3.0 * se);
  }
}

TEST_CASE("per-cell frequencies match the analytic probabilities") {
  OrdinalGenerator g{{-1.5, 0.0, 1.0, 2.5}, {0.0, 1.0, -0.5}, {0.4, 0.0}, 0.0};
  const int n = 100000;
  for (const std::string form : {"F1", "F2", "F3"}) {
    const int fi = form == "F1" ? 0 : (form == "F2" ? 1 : 2);
    const auto f = cell_frequencies(g, n, form, "A", 11 + static_cast<std::uint64_t>(fi));
    const auto p = g.category_probabilities(fi, 0, 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
      CAPTURE(form);
      CAPTURE(j);
      CHECK(std::abs(f[j] - p[j]) <= 3.0 * std::sqrt(p[j] * (1 - p[j]) / n));
    }
  }
}

TEST_CASE("panel generation is deterministic and complete") {
  const auto sc = scenario_catalog()[1];
  const auto a = gen_panel(sc.generator, 30, kForms, {"A", "B"}, 42);
  const auto b = gen_panel(sc.generator, 30, kForms, {"A", "B"}, 42);
  const auto c = gen_panel(sc.generator, 30, kForms, {"A", "B"}, 43);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.size() == 30u * 3u * 2u);
  for (const auto& r : a) {
    CHECK(r.rating >= 1);
    CHECK(r.rating <= 5);
  }
}

TEST_CASE("preorder parsing and canonical form") {
  CHECK(parse_preorder("F1<F3<F2", kForms).rank == std::vector<int>{0, 2, 1});
  CHECK(parse_preorder("F3=F1<F2", kForms).rank == std::vector<int>{0, 1, 0});
  CHECK(format_preorder(parse_preorder("F3=F1<F2", kForms), kForms) == "F1=F3<F2");
  CHECK(format_preorder(parse_preorder("F1=F2=F3", kForms), kForms) == "F1=F2=F3");
  CHECK_THROWS_AS(parse_preorder("F1<F2", kForms), DomainError);
  CHECK_THROWS_AS(parse_preorder("F1<F2<F9", kForms), DomainError);
  CHECK_THROWS_AS(parse_preorder("F1<F2<F2", kForms), DomainError);
}

TEST_CASE("scenario catalog") {
  const auto cat = scenario_catalog();
  CHECK(cat.size() == 13u);
  std::set<std::vector<int>> truths;
  for (const auto& s : cat) {
    truths.insert(s.truth.rank);
    CHECK_NOTHROW(s.generator.validate());
    CHECK(s.generator.categories() == 5);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const bool eq = s.truth.rank[static_cast<std::size_t>(i)] == s.truth.rank[static_cast<std::size_t>(j)];
        const bool lt = s.truth.rank[static_cast<std::size_t>(i)] < s.truth.rank[static_cast<std::size_t>(j)];
        if (eq) CHECK(s.generator.beta[static_cast<std::size_t>(i)] == s.generator.beta[static_cast<std::size_t>(j)]);
        if (lt) CHECK(s.generator.beta[static_cast<std::size_t>(i)] < s.generator.beta[static_cast<std::size_t>(j)]);
      }
  }
  // Every total preorder on three items appears once.
  CHECK(truths.size() == 13u);
  const auto preset = find_scenario("F1<F3<F2");
  CHECK(preset.generator.beta[2] > 0.0);
  CHECK(preset.generator.beta[1] > preset.generator.beta[2]);
  CHECK(preset.generator.cutpoints[1] == 5.0);
  CHECK_THROWS(find_scenario("F1<F1<F2"));
}

TEST_CASE("closure against enumeration of all pairwise outcomes") {
  const auto orders = all_preorders();
  REQUIRE(orders.size() == 13u);
  const int symbols[] = {-1, 0, 1};
  int combos = 0;
  for (int s01 : symbols)
    for (int s02 : symbols)
      for (int s12 : symbols) {
        ++combos;
        PairwiseOutcomes raw{{0, s01, s02}, {-s01, 0, s12}, {-s02, -s12, 0}};
        // Oracle: the finest preorder that keeps every raw equality and never
        // reverses a raw strict outcome.
        std::vector<std::vector<int>> best;
        for (const auto& r : orders) {
          bool ok = true;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              const int o = raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
              const int ri = r[static_cast<std::size_t>(i)], rj = r[static_cast<std::size_t>(j)];
              if (i != j && o == 0 && ri != rj) ok = false;
              if (o < 0 && ri > rj) ok = false;
            }
          if (!ok) continue;
          if (best.empty() || classes(r) > classes(best.front())) best = {r};
          else if (classes(r) == classes(best.front())) best.push_back(r);
        }
        REQUIRE(best.size() == 1u);
        bool merged_strict = false;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            if (raw[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] != 0 &&
                best.front()[static_cast<std::size_t>(i)] == best.front()[static_cast<std::size_t>(j)])
              merged_strict = true;
        const auto d = close_pairwise(raw);
        CAPTURE(s01);
        CAPTURE(s02);
        CAPTURE(s12);
        CHECK(d.order.rank == best.front());
        CHECK(d.intransitive == merged_strict);
      }
  CHECK(combos == 27);
}

TEST_CASE("pairwise Wald outcomes and decisions") {
  const Eigen::Matrix3d tiny = Eigen::Matrix3d::Identity() * 1e-6;
  const auto sep = pairwise_wald({0.0, 6.0, 3.0}, tiny, 0.05);
  CHECK(format_preorder(close_pairwise(sep).order, kForms) == "F1<F3<F2");
  const Eigen::Matrix3d huge = Eigen::Matrix3d::Identity() * 100.0;
  CHECK(format_preorder(close_pairwise(pairwise_wald({0.0, 0.0, 0.0}, huge, 0.05)).order, kForms) == "F1=F2=F3");
  // Contrast variance uses the covariance: var(b1 - b2) = 1 + 1 - 2 * 0.9 = 0.2.
  Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
  cov(1, 2) = cov(2, 1) = 0.9;
  const auto r = pairwise_wald({0.0, 1.0, 0.0}, cov, 0.05);
  CHECK(r[1][2] == 1);
  CHECK(r[0][1] == 0);
}

TEST_CASE("decision rules operate on fitted formulation effects") {
  FitResult f;
  f.coding.formulations = kForms;
  f.coding.attributes = {"A", "B"};
  f.columns = {0, 1, 2, 3};
  f.column_names = {"(Intercept)", "formulation[F2]", "formulation[F3]", "attribute[A]"};
  f.n_formulation_cols = 2;
  f.n_attribute_cols = 1;
  f.coefficients = {{"(Intercept)", 1.0, {}, {}, {}},
                    {"formulation[F2]", 6.0, {}, {}, {}},
                    {"formulation[F3]", 3.0, {}, {}, {}},
                    {"attribute[A]", 0.5, {}, {}, {}}};
  f.theta_covariance = Eigen::Matrix4d::Identity() * 1e-4;
  f.converged = true;
  CHECK(format_preorder(decide_ordering(f, 0.05).order, kForms) == "F1<F3<F2");
  CHECK(format_preorder(decide_ordering_global_first(f, 0.05).order, kForms) == "F1<F3<F2");
  f.theta_covariance = Eigen::Matrix4d::Identity() * 1e4;
  CHECK(format_preorder(decision_rule("pairwise")(f, 0.05).order, kForms) == "F1=F2=F3");
  CHECK(format_preorder(decision_rule("global-first")(f, 0.05).order, kForms) == "F1=F2=F3");
  CHECK_THROWS(decision_rule("coin-flip"));
}

TEST_CASE("one replication with a large effect gap") {
  Scenario s = find_scenario("F2<F3<F1");
  RunOptions o;
  o.replications = 1;
  o.panelists = 60;
  const auto r = run_scenario(s, o);
  REQUIRE(r.details.size() == 1u);
  CHECK(r.truth == "F2<F3<F1");
  CHECK(r.truth_agreement[0].valid == 1);
  CHECK(r.details[0].decisions[0] == "F2<F3<F1");
  CHECK(r.truth_agreement[0].rate() == 1.0);
}

TEST_CASE("replication seeds and reports are reproducible") {
  CHECK(replication_seed(1, "F1=F2=F3", 90, 0) == replication_seed(1, "F1=F2=F3", 90, 0));
  CHECK(replication_seed(1, "F1=F2=F3", 90, 0) != replication_seed(1, "F1=F2=F3", 90, 1));
  CHECK(replication_seed(1, "F1=F2=F3", 90, 0) != replication_seed(1, "F1=F2=F3", 300, 0));
  CHECK(replication_seed(1, "F1=F2=F3", 90, 0) != replication_seed(2, "F1=F2=F3", 90, 0));

  RunOptions o;
  o.replications = 6;
  o.panelists = 30;
  const auto s = find_scenario("F1=F2<F3");
  ConcordanceReport a{{run_scenario(s, o)}};
  o.workers = 3;
  ConcordanceReport b{{run_scenario(s, o)}};
  ConcordanceReport c{{run_scenario(s, o)}};
  CHECK(concordance_csv(a) == concordance_csv(b));
  CHECK(concordance_json(a, true).dump() == concordance_json(b, true).dump());
  CHECK(concordance_json(b, true).dump() == concordance_json(c, true).dump());
  for (const auto& rate : a.rows[0].truth_agreement) {
    CHECK(rate.valid + rate.failures == 6);
    CHECK(rate.rate() >= 0.0);
    CHECK(rate.rate() <= 1.0);
  }
}

TEST_CASE("beta responses simulated on a dataset layout") {
  std::vector<RatingRecord> recs;
  for (int i = 1; i <= 50; ++i)
    for (const char* f : {"F1", "F2"}) recs.push_back({std::to_string(i), f, "A", 3, 0});
  const auto shape = build_stacked(recs, {});
  ParameterVector truth;
  truth.theta = Eigen::Vector2d(0.5, -1.0);
  truth.log_sigma_u2 = std::log(0.01);
  truth.log_phi = std::log(50.0);
  const auto ds = simulate_beta_responses(shape, {0, 1}, truth, 5);
  CHECK(ds.rows() == shape.rows());
  CHECK(ds.x == shape.x);
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < ds.rows(); ++i) (ds.formulation_index[i] == 0 ? m1 : m2) += ds.y[static_cast<Eigen::Index>(i)] / 50;
  CHECK(m1 == doctest::Approx(inv_logit(0.5)).epsilon(0.05));
  CHECK(m2 == doctest::Approx(inv_logit(-0.5)).epsilon(0.05));
  CHECK(simulate_beta_responses(shape, {0, 1}, truth, 5).y == ds.y);
}
