#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>

#include "design.hpp"
#include "error.hpp"
#include "example.hpp"

using namespace unibeta;

namespace {

const ConstraintCheck& check_named(const BibReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  FAIL("missing check " << name);
  static ConstraintCheck none;
  return none;
}

// Complete-block records over formulations F1..Fv and the given attributes.
std::vector<RatingRecord> complete(int panelists, int v, const std::vector<std::string>& attrs) {
  std::vector<RatingRecord> out;
  for (int i = 1; i <= panelists; ++i)
    for (const auto& a : attrs)
      for (int f = 1; f <= v; ++f) out.push_back({std::to_string(i), "F" + std::to_string(f), a, 1 + (i * f) % 5, 0});
  return out;
}

std::vector<RatingRecord> from_layout(const BibDesign& d, const std::vector<std::string>& attrs) {
  std::vector<RatingRecord> out;
  for (std::size_t b = 0; b < d.layout.size(); ++b)
    for (const auto& a : attrs)
      for (int t : d.layout[b])
        out.push_back({std::to_string(b + 1), "F" + std::to_string(t + 1), a, 1 + static_cast<int>((b + t) % 5), 0});
  return out;
}

}  // namespace

TEST_CASE("validate_bib arithmetic") {
  CHECK(validate_bib({7, 7, 3, 3, 1, {}}).valid);
  const auto big = validate_bib({8, 98, 4, 49, 21, {}});
  CHECK(big.valid);
  const auto bad = validate_bib({8, 98, 3, {}, {}, {}});
  CHECK_FALSE(bad.valid);
  CHECK_FALSE(check_named(bad, "bk = rv").passed);
  CHECK(check_named(bad, "bk = rv").detail.find("294/8") != std::string::npos);
  const auto derived = validate_bib({7, 7, 3, {}, {}, {}});
  REQUIRE(derived.r);
  REQUIRE(derived.lambda);
  CHECK(*derived.r == 3);
  CHECK(*derived.lambda == 1);
  CHECK_FALSE(validate_bib({3, 3, 4, {}, {}, {}}).valid);
  CHECK_FALSE(validate_bib({0, 3, 2, {}, {}, {}}).valid);
  CHECK_FALSE(validate_bib({7, 7, 3, 3, 2, {}}).valid);
}

TEST_CASE("Fano plane layout and its defects") {
  BibDesign fano = develop_cyclic(7, {{0, 1, 3}}, false);
  fano.r = 3;
  fano.lambda = 1;
  const auto ok = validate_bib(fano);
  CHECK(ok.valid);
  REQUIRE(ok.pair_counts.size() == 7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j)
      if (i != j) CHECK(ok.pair_counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == 1);

  BibDesign dup = fano;
  dup.layout[4] = {2, 2, 5};
  const auto r = validate_bib(dup);
  CHECK_FALSE(r.valid);
  const auto& c = check_named(r, "blocks list k distinct varieties");
  CHECK_FALSE(c.passed);
  CHECK(c.detail.find("block 5") != std::string::npos);
}

TEST_CASE("bundled example layout is a (8, 98, 4, 49, 21) BIB") {
  const auto d = example_design();
  CHECK(d.v == 8);
  CHECK(d.b == 98);
  CHECK(d.k == 4);
  const auto r = validate_bib(d);
  CHECK(r.valid);
  CHECK(*r.r == 49);
  CHECK(*r.lambda == 21);
}

TEST_CASE("complete blocks are the degenerate BIB with lambda = r") {
  const auto d = infer_design(complete(6, 3, {"a"}));
  const auto r = validate_bib(d);
  CHECK(r.valid);
  CHECK(*r.r == 6);
  CHECK(*r.lambda == 6);
}

TEST_CASE("separate matrix coding") {
  const auto recs = complete(3, 3, {"a"});
  // Drop one cell per block to get v=3, b=3, k=2.
  std::vector<RatingRecord> k2;
  for (const auto& r : recs)
    if (!(r.panelist == "1" && r.formulation == "F3") && !(r.panelist == "2" && r.formulation == "F1") &&
        !(r.panelist == "3" && r.formulation == "F2"))
      k2.push_back(r);
  CodingOptions opts;
  opts.reference_formulation = "F1";
  const auto ds = build_separate(k2, "a", opts);
  CHECK(ds.x.rows() == 6);
  CHECK(ds.x.cols() == 3);
  // Block 1 holds F1 then F2.
  CHECK(ds.x.row(0) == Eigen::RowVector3d(1, 0, 0));
  CHECK(ds.x.row(1) == Eigen::RowVector3d(1, 1, 0));
  CHECK(ds.compression_n == 6);
  CHECK(ds.n_attribute_cols == 0);
}

TEST_CASE("stacked dimensions and coding") {
  const auto recs = complete(3, 3, {"a", "b"});
  const auto ds = build_stacked(recs, {});
  CHECK(ds.x.rows() == 18);
  CHECK(ds.x.cols() == 4);
  CHECK(ds.column_names == std::vector<std::string>{"(Intercept)", "formulation[F2]", "formulation[F3]", "attribute[a]"});
  // The second attribute level is the reference by default.
  CHECK(ds.coding.attributes[static_cast<std::size_t>(ds.coding.reference_attribute)] == "b");
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    CHECK(ds.y[static_cast<Eigen::Index>(i)] > 0.0);
    CHECK(ds.y[static_cast<Eigen::Index>(i)] < 1.0);
  }

  // b=3, k=2, L=2, v=3: bkL x (v+L-1) = 12 x 4.
  BibDesign d{3, 3, 2, {}, {}, {{0, 1}, {1, 2}, {0, 2}}};
  const auto small = build_stacked(from_layout(d, {"a", "b"}), {});
  CHECK(small.x.rows() == 12);
  CHECK(small.x.cols() == 4);
}

TEST_CASE("example shape has 12 fixed-effect columns") {
  const auto ds = build_stacked(make_example(), {});
  CHECK(ds.x.cols() == 12);
  CHECK(ds.rows() == 98u * 4u * 5u);
  CHECK(ds.coding.formulations[static_cast<std::size_t>(ds.coding.reference_formulation)] == "F179");
  CHECK(ds.coding.attributes[static_cast<std::size_t>(ds.coding.reference_attribute)] == "A2_acidity");
  // Each formulation dummy column sums to r * L.
  for (int j = 1; j <= ds.n_formulation_cols; ++j) CHECK(ds.x.col(j).sum() == doctest::Approx(49.0 * 5));
  CHECK(ds.compression_n == 392);
}

TEST_CASE("L = 1 stack equals the separate build") {
  const auto recs = complete(5, 3, {"a"});
  const auto s = build_stacked(recs, {});
  const auto p = build_separate(recs, "a", {});
  CHECK(s.x == p.x);
  CHECK(s.y == p.y);
  CHECK(s.fingerprint() == p.fingerprint());
}

TEST_CASE("record order does not matter") {
  auto recs = from_layout(example_design(), {"x", "y", "z"});
  const auto a = build_stacked(recs, {});
  std::mt19937 g(4);
  std::shuffle(recs.begin(), recs.end(), g);
  const auto b = build_stacked(recs, {});
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
}

TEST_CASE("stacked compression scope and override") {
  const auto recs = complete(4, 3, {"a", "b"});
  CodingOptions o;
  o.compression_scope = CompressionScope::kStacked;
  CHECK(build_stacked(recs, o).compression_n == 24);
  o.compression_n = 100;
  const auto ds = build_stacked(recs, o);
  CHECK(ds.compression_n == 100);
  CHECK(ds.y.minCoeff() >= 0.005 - 1e-15);
}

TEST_CASE("dataset errors") {
  auto recs = complete(3, 3, {"a", "b"});
  CodingOptions o;
  o.reference_formulation = "F9";
  try {
    build_stacked(recs, o);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("F1, F2, F3") != std::string::npos);
  }
  o = {};
  o.reference_attribute = "nope";
  CHECK_THROWS_AS(build_stacked(recs, o), DataError);

  auto dup = recs;
  dup.push_back(recs.front());
  CHECK_THROWS_AS(build_stacked(dup, {}), DataError);

  auto missing = recs;
  missing.erase(std::remove_if(missing.begin(), missing.end(),
                               [](const RatingRecord& r) { return r.panelist == "2" && r.attribute == "b"; }),
                missing.end());
  try {
    build_stacked(missing, {});
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("inconsistent") != std::string::npos);
    CHECK_FALSE(e.details().empty());
  }

  auto high = recs;
  high[3].rating = 6;
  high[3].source_line = 42;
  try {
    build_stacked(high, {});
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 42") != std::string::npos);
  }
  CHECK_THROWS_AS(build_separate(recs, "zzz", {}), DataError);
}

TEST_CASE("separate build checks a supplied layout") {
  BibDesign d{3, 3, 2, {}, {}, {{0, 1}, {1, 2}, {0, 2}}};
  const auto recs = from_layout(d, {"a"});
  CHECK_NOTHROW(build_separate(recs, "a", {}, d));
  BibDesign other{3, 3, 2, {}, {}, {{0, 1}, {1, 2}, {1, 2}}};
  CHECK_THROWS_AS(build_separate(recs, "a", {}, other), DataError);
}
