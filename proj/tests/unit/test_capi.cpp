#include <doctest.h>
#include <unibeta/unibeta.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace {

// Owns a library-allocated string.
struct Owned {
  char* p = nullptr;
  ~Owned() { ub_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

ub_records* example_records() {
  Owned csv;
  REQUIRE(ub_make_example(2025, &csv.p) == UB_OK);
  const std::string path = "capi_example.csv";
  std::ofstream(path) << csv.str();
  ub_records* r = nullptr;
  REQUIRE(ub_records_read_csv(path.c_str(), &r) == UB_OK);
  return r;
}

}  // namespace

TEST_CASE("version and errors") {
  CHECK(std::string(ub_version()).size() > 0);
  ub_records* r = nullptr;
  CHECK(ub_records_read_csv("no/such/file.csv", &r) == UB_ERR_IO);
  CHECK(r == nullptr);
  CHECK(std::string(ub_last_error()).find("no/such/file.csv") != std::string::npos);
  CHECK(ub_records_create(nullptr) == UB_ERR_INVALID_ARGUMENT);
  ub_structure s;
  CHECK(ub_parse_structure("m3", &s) == UB_OK);
  CHECK(s == UB_STRUCTURE_M3);
  CHECK(ub_parse_structure("m7", &s) == UB_ERR_INVALID_ARGUMENT);
}

TEST_CASE("records built in memory") {
  ub_records* r = nullptr;
  REQUIRE(ub_records_create(&r) == UB_OK);
  CHECK(ub_records_add(r, "1", "F1", "color", 3) == UB_OK);
  CHECK(ub_records_add(r, "1", "F1", "color", 0) == UB_ERR_DATA);
  CHECK(ub_records_count(r) == 1u);
  Owned attrs;
  CHECK(ub_records_attributes_json(r, &attrs.p) == UB_OK);
  CHECK(attrs.str() == "[\"color\"]");
  ub_records_free(r);
}

TEST_CASE("fit through the C interface") {
  ub_records* r = example_records();
  ub_dataset_options dopt;
  ub_dataset_options_init(&dopt);
  CHECK(dopt.scale_points == 5);
  ub_dataset* ds = nullptr;
  REQUIRE(ub_dataset_build_stacked(r, &dopt, &ds) == UB_OK);
  CHECK(ub_dataset_rows(ds) == 1960u);

  ub_fit_options fopt;
  ub_fit_options_init(&fopt);
  ub_fit* m2 = nullptr;
  ub_fit* m3 = nullptr;
  REQUIRE(ub_fit_model(ds, UB_STRUCTURE_M2, &fopt, &m2) == UB_OK);
  REQUIRE(ub_fit_model(ds, UB_STRUCTURE_M3, &fopt, &m3) == UB_OK);
  CHECK(ub_fit_converged(m3));
  CHECK(ub_fit_n_params(m3) == 14);
  CHECK(ub_fit_aic(m3) == -2.0 * ub_fit_loglik(m3) + 28.0);
  CHECK(ub_fit_n_coefficients(m3) == 12u);
  const char* name = nullptr;
  double est, se, z, p;
  REQUIRE(ub_fit_coefficient(m3, 0, &name, &est, &se, &z, &p) == UB_OK);
  CHECK(std::string(name) == "(Intercept)");
  CHECK(z == doctest::Approx(est / se));
  CHECK(ub_fit_coefficient(m3, 99, &name, &est, &se, &z, &p) == UB_ERR_INVALID_ARGUMENT);

  double mean = 0.0;
  CHECK(ub_fit_predict_mean(m3, "F179", "A2_acidity", 0.0, &mean) == UB_OK);
  CHECK(mean == doctest::Approx(1.0 / (1.0 + std::exp(-est))).epsilon(1e-12));
  CHECK(ub_fit_predict_mean(m3, "nope", "A2_acidity", 0.0, &mean) == UB_ERR_DATA);

  double stat, pv, mix;
  int df;
  REQUIRE(ub_fit_lrt(m2, m3, &stat, &df, &pv, &mix) == UB_OK);
  CHECK(df == 1);
  CHECK(stat == doctest::Approx(2.0 * (ub_fit_loglik(m3) - ub_fit_loglik(m2))));
  CHECK(mix == doctest::Approx(pv / 2));

  Owned json, coef, cmp;
  CHECK(ub_fit_report_json(m3, 1, 7, &json.p) == UB_OK);
  CHECK(json.str().find("\"unibeta.fit/1\"") != std::string::npos);
  const ub_fit* both[] = {m2, m3};
  const char* models[] = {"unified", "unified"};
  CHECK(ub_coefficients_csv(both, 2, &coef.p) == UB_OK);
  CHECK(coef.str().rfind("structure,parameter,estimate,std_error,z,p_value\n", 0) == 0);
  CHECK(ub_comparison_csv(both, models, 2, &cmp.p) == UB_OK);

  // A fit on a different dataset cannot be tested against these.
  ub_dataset* sep = nullptr;
  REQUIRE(ub_dataset_build_separate(r, "A1_color", &dopt, &sep) == UB_OK);
  ub_fit* other = nullptr;
  REQUIRE(ub_fit_model(sep, UB_STRUCTURE_M3, &fopt, &other) == UB_OK);
  CHECK(ub_fit_lrt(m2, other, &stat, &df, &pv, &mix) == UB_ERR_DATA);

  ub_fit_free(other);
  ub_dataset_free(sep);
  ub_fit_free(m2);
  ub_fit_free(m3);
  ub_dataset_free(ds);
  ub_records_free(r);
}

TEST_CASE("design, transform and digests") {
  int valid = -1;
  Owned json, text;
  CHECK(ub_design_validate(8, 98, 4, 49, 21, nullptr, &valid, &json.p, &text.p) == UB_OK);
  CHECK(valid == 1);
  Owned j2, t2;
  CHECK(ub_design_validate(8, 98, 3, 0, 0, nullptr, &valid, &j2.p, &t2.p) == UB_OK);
  CHECK(valid == 0);

  std::ofstream("capi_ratings.csv") << "panelist,formulation,attribute,rating\n1,F1,a,1\n1,F2,a,5\n";
  Owned out;
  double lo = 0, hi = 0;
  CHECK(ub_transform_csv("capi_ratings.csv", 5, 100, &out.p, &lo, &hi) == UB_OK);
  CHECK(lo == doctest::Approx(0.005));
  CHECK(hi == doctest::Approx(0.995));

  Owned digest;
  CHECK(ub_sha256_bytes("abc", 3, &digest.p) == UB_OK);
  CHECK(digest.str() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("simulation through the C interface") {
  Owned names;
  CHECK(ub_scenario_names_json(&names.p) == UB_OK);
  CHECK(names.str().find("F1<F3<F2") != std::string::npos);
  Owned csv, json;
  CHECK(ub_simulate(R"({"scenarios":["F2<F3<F1"],"n":[40],"reps":2,"seed":3})", 0, &csv.p, &json.p) == UB_OK);
  CHECK(csv.str().find("F2<F3<F1") != std::string::npos);
  Owned c2, j2;
  CHECK(ub_simulate(R"({"scenarios":["F9<F1<F2"]})", 0, &c2.p, &j2.p) != UB_OK);
  CHECK(std::string(ub_last_error()).find("F1=F2=F3") != std::string::npos);
}
