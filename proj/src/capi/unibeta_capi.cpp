#include "unibeta/unibeta.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <new>
#include <sstream>
#include <string>

#include "design.hpp"
#include "digest.hpp"
#include "error.hpp"
#include "example.hpp"
#include "fit.hpp"
#include "records.hpp"
#include "report.hpp"
#include "simulate.hpp"

struct ub_records {
  std::vector<unibeta::RatingRecord> rows;
};

struct ub_dataset {
  unibeta::StackedDataset ds;
};

struct ub_fit {
  unibeta::FitResult result;
  unibeta::FitOptions options;
};

namespace {

thread_local std::string g_last_error;

class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

ub_status fail(ub_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class F>
ub_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return UB_OK;
  } catch (const IoError& e) {
    return fail(UB_ERR_IO, e.what());
  } catch (const unibeta::DataError& e) {
    std::string msg = e.what();
    for (const auto& d : e.details()) msg += "\n  " + d;
    return fail(UB_ERR_DATA, msg);
  } catch (const unibeta::ConvergenceError& e) {
    return fail(UB_ERR_CONVERGENCE, e.what());
  } catch (const unibeta::DomainError& e) {
    return fail(UB_ERR_DOMAIN, e.what());
  } catch (const unibeta::Error& e) {
    return fail(UB_ERR_DATA, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(UB_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(UB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(UB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(UB_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw std::invalid_argument(std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::ifstream open_input(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open '") + path + "'");
  return in;
}

unibeta::CodingOptions coding_options(const ub_dataset_options* o) {
  unibeta::CodingOptions c;
  if (o == nullptr) return c;
  if (o->reference_formulation) c.reference_formulation = o->reference_formulation;
  if (o->reference_attribute) c.reference_attribute = o->reference_attribute;
  c.scale_points = o->scale_points;
  c.compression_scope = o->stacked_compression ? unibeta::CompressionScope::kStacked : unibeta::CompressionScope::kPerAttribute;
  if (o->compression_n > 0) c.compression_n = o->compression_n;
  return c;
}

double nan_if_absent(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

std::vector<unibeta::LabeledFit> labeled(const ub_fit* const* fits, const char* const* models, size_t n) {
  require(fits, "fits");
  require(models, "models");
  std::vector<unibeta::LabeledFit> out;
  for (size_t i = 0; i < n; ++i) {
    require(fits[i], "fit");
    require(models[i], "model label");
    out.push_back({models[i], &fits[i]->result, nullptr});
  }
  return out;
}

void emit_design(const unibeta::BibDesign& d, int* valid, char** report_json, char** report_text) {
  const auto report = unibeta::validate_bib(d);
  std::string js = unibeta::design_to_json(d, report).dump(2);
  std::string text = unibeta::design_report_text(report);
  if (valid) *valid = report.valid ? 1 : 0;
  char* j = report_json ? dup(js) : nullptr;
  if (report_text) {
    try {
      *report_text = dup(text);
    } catch (...) {
      std::free(j);
      throw;
    }
  }
  if (report_json) *report_json = j;
}

}  // namespace

extern "C" {

const char* ub_version(void) { return UNIBETA_VERSION; }

const char* ub_last_error(void) { return g_last_error.c_str(); }

void ub_string_free(char* s) { std::free(s); }

ub_status ub_records_create(ub_records** out) {
  return guard([&] {
    require(out, "out");
    *out = new ub_records();
  });
}

ub_status ub_records_read_csv(const char* path, ub_records** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto in = open_input(path);
    auto rows = unibeta::read_ratings_csv(in);
    *out = new ub_records{std::move(rows)};
  });
}

ub_status ub_records_add(ub_records* records, const char* panelist, const char* formulation, const char* attribute,
                         int rating) {
  return guard([&] {
    require(records, "records");
    require(panelist, "panelist");
    require(formulation, "formulation");
    require(attribute, "attribute");
    if (!*panelist || !*formulation || !*attribute) throw unibeta::DataError("identifiers must be non-empty");
    if (rating < 1) throw unibeta::DataError("rating " + std::to_string(rating) + " is out of range");
    records->rows.push_back({panelist, formulation, attribute, rating, 0});
  });
}

size_t ub_records_count(const ub_records* records) { return records ? records->rows.size() : 0; }

ub_status ub_records_attributes_json(const ub_records* records, char** out) {
  return guard([&] {
    require(records, "records");
    require(out, "out");
    std::vector<std::string> names;
    for (const auto& r : records->rows) names.push_back(r.attribute);
    *out = dup(nlohmann::json(unibeta::sorted_levels(names)).dump());
  });
}

ub_status ub_records_summary_csv(const ub_records* records, char** out) {
  return guard([&] {
    require(records, "records");
    require(out, "out");
    *out = dup(unibeta::summary_csv(unibeta::summarize_ratings(records->rows)));
  });
}

void ub_records_free(ub_records* records) { delete records; }

void ub_dataset_options_init(ub_dataset_options* options) {
  if (options == nullptr) return;
  options->reference_formulation = nullptr;
  options->reference_attribute = nullptr;
  options->scale_points = 5;
  options->stacked_compression = 0;
  options->compression_n = 0;
}

ub_status ub_dataset_build_stacked(const ub_records* records, const ub_dataset_options* options, ub_dataset** out) {
  return guard([&] {
    require(records, "records");
    require(out, "out");
    auto ds = unibeta::build_stacked(records->rows, coding_options(options));
    *out = new ub_dataset{std::move(ds)};
  });
}

ub_status ub_dataset_build_separate(const ub_records* records, const char* attribute, const ub_dataset_options* options,
                                    ub_dataset** out) {
  return guard([&] {
    require(records, "records");
    require(attribute, "attribute");
    require(out, "out");
    auto ds = unibeta::build_separate(records->rows, attribute, coding_options(options));
    *out = new ub_dataset{std::move(ds)};
  });
}

size_t ub_dataset_rows(const ub_dataset* dataset) { return dataset ? dataset->ds.rows() : 0; }

ub_status ub_dataset_fingerprint(const ub_dataset* dataset, char** out) {
  return guard([&] {
    require(dataset, "dataset");
    require(out, "out");
    *out = dup(dataset->ds.fingerprint());
  });
}

void ub_dataset_free(ub_dataset* dataset) { delete dataset; }

void ub_fit_options_init(ub_fit_options* options) {
  if (options == nullptr) return;
  const unibeta::FitOptions d;
  options->workers = d.workers;
  options->max_iterations = d.max_iterations;
  options->gradient_tolerance = d.gradient_tolerance;
  options->relative_tolerance = d.relative_tolerance;
  options->zero_start = 0;
}

ub_status ub_parse_structure(const char* name, ub_structure* out) {
  return guard([&] {
    require(name, "name");
    require(out, "out");
    try {
      *out = static_cast<ub_structure>(unibeta::parse_structure(name));
    } catch (const unibeta::Error& e) {
      throw std::invalid_argument(e.what());
    }
  });
}

ub_status ub_fit_model(const ub_dataset* dataset, ub_structure structure, const ub_fit_options* options, ub_fit** out) {
  return guard([&] {
    require(dataset, "dataset");
    require(out, "out");
    if (structure < UB_STRUCTURE_NULL || structure > UB_STRUCTURE_M3) throw std::invalid_argument("unknown structure");
    unibeta::FitOptions fo;
    if (options) {
      if (options->workers < 1) throw std::invalid_argument("workers must be >= 1");
      if (options->max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
      if (!(options->gradient_tolerance > 0.0) || !(options->relative_tolerance > 0.0))
        throw std::invalid_argument("tolerances must be positive");
      fo.workers = options->workers;
      fo.max_iterations = options->max_iterations;
      fo.gradient_tolerance = options->gradient_tolerance;
      fo.relative_tolerance = options->relative_tolerance;
      fo.start = options->zero_start ? unibeta::StartMode::kZero : unibeta::StartMode::kDefault;
    }
    const unibeta::ModelSpec spec{static_cast<unibeta::Structure>(structure)};
    auto result = unibeta::fit(dataset->ds, spec, fo);
    *out = new ub_fit{std::move(result), fo};
  });
}

int ub_fit_converged(const ub_fit* fit) { return fit && fit->result.converged ? 1 : 0; }
double ub_fit_loglik(const ub_fit* fit) { return fit ? fit->result.loglik : std::numeric_limits<double>::quiet_NaN(); }
double ub_fit_aic(const ub_fit* fit) { return fit ? fit->result.aic : std::numeric_limits<double>::quiet_NaN(); }
double ub_fit_phi(const ub_fit* fit) { return fit ? fit->result.phi_hat : std::numeric_limits<double>::quiet_NaN(); }
double ub_fit_sigma_u2(const ub_fit* fit) {
  return fit ? fit->result.sigma_u2_hat : std::numeric_limits<double>::quiet_NaN();
}
int ub_fit_n_params(const ub_fit* fit) { return fit ? fit->result.n_params : 0; }
size_t ub_fit_n_coefficients(const ub_fit* fit) { return fit ? fit->result.coefficients.size() : 0; }

ub_status ub_fit_coefficient(const ub_fit* fit, size_t index, const char** name, double* estimate, double* std_error,
                             double* z, double* p_value) {
  return guard([&] {
    require(fit, "fit");
    if (index >= fit->result.coefficients.size()) throw std::invalid_argument("coefficient index out of range");
    const auto& c = fit->result.coefficients[index];
    if (name) *name = c.name.c_str();
    if (estimate) *estimate = c.estimate;
    if (std_error) *std_error = nan_if_absent(c.std_error);
    if (z) *z = nan_if_absent(c.z);
    if (p_value) *p_value = nan_if_absent(c.p_value);
  });
}

size_t ub_fit_n_warnings(const ub_fit* fit) { return fit ? fit->result.warnings.size() : 0; }

const char* ub_fit_warning(const ub_fit* fit, size_t index) {
  if (fit == nullptr || index >= fit->result.warnings.size()) return nullptr;
  return fit->result.warnings[index].c_str();
}

ub_status ub_fit_report_json(const ub_fit* fit, int has_seed, uint64_t seed, char** out) {
  return guard([&] {
    require(fit, "fit");
    require(out, "out");
    std::optional<std::uint64_t> s;
    if (has_seed) s = seed;
    *out = dup(unibeta::fit_to_json(fit->result, fit->options, s).dump(2));
  });
}

ub_status ub_fit_predict_mean(const ub_fit* fit, const char* formulation, const char* attribute, double conditional_u,
                              double* out) {
  return guard([&] {
    require(fit, "fit");
    require(formulation, "formulation");
    require(attribute, "attribute");
    require(out, "out");
    *out = unibeta::predict_mean(fit->result, formulation, attribute, conditional_u);
  });
}

ub_status ub_fit_lrt(const ub_fit* nested, const ub_fit* full, double* statistic, int* df, double* p_value,
                     double* mixture_p_value) {
  return guard([&] {
    require(nested, "nested");
    require(full, "full");
    const auto r = unibeta::lrt(nested->result, full->result);
    if (statistic) *statistic = r.statistic;
    if (df) *df = r.df;
    if (p_value) *p_value = r.p_value;
    if (mixture_p_value) *mixture_p_value = nan_if_absent(r.mixture_p_value);
  });
}

void ub_fit_free(ub_fit* fit) { delete fit; }

ub_status ub_coefficients_csv(const ub_fit* const* fits, size_t n, char** out) {
  return guard([&] {
    require(fits, "fits");
    require(out, "out");
    std::vector<const unibeta::FitResult*> v;
    for (size_t i = 0; i < n; ++i) {
      require(fits[i], "fit");
      v.push_back(&fits[i]->result);
    }
    *out = dup(unibeta::coefficients_csv(v));
  });
}

ub_status ub_comparison_csv(const ub_fit* const* fits, const char* const* models, size_t n, char** out) {
  return guard([&] {
    require(out, "out");
    *out = dup(unibeta::comparison_csv(labeled(fits, models, n)));
  });
}

ub_status ub_predicted_means_csv(const ub_fit* const* fits, const char* const* models, size_t n, char** out) {
  return guard([&] {
    require(out, "out");
    *out = dup(unibeta::predicted_means_csv(labeled(fits, models, n)));
  });
}

ub_status ub_observed_fitted_csv(const ub_fit* const* fits, const ub_dataset* const* datasets, const char* const* models,
                                 size_t n, char** out) {
  return guard([&] {
    require(out, "out");
    require(datasets, "datasets");
    auto v = labeled(fits, models, n);
    for (size_t i = 0; i < n; ++i) {
      require(datasets[i], "dataset");
      v[i].data = &datasets[i]->ds;
    }
    *out = dup(unibeta::observed_fitted_csv(v));
  });
}

ub_status ub_design_validate(int v, int b, int k, int r, int lambda, const char* layout_csv_path, int* valid,
                             char** report_json, char** report_text) {
  return guard([&] {
    unibeta::BibDesign d;
    if (layout_csv_path) {
      auto in = open_input(layout_csv_path);
      d = unibeta::read_layout_csv(in);
      if (v > 0 && v != d.v)
        throw unibeta::DataError("layout has " + std::to_string(d.v) + " varieties but v = " + std::to_string(v));
      if (b > 0 && b != d.b)
        throw unibeta::DataError("layout has " + std::to_string(d.b) + " blocks but b = " + std::to_string(b));
      if (k > 0) d.k = k;
    } else {
      d.v = v;
      d.b = b;
      d.k = k;
    }
    if (r > 0) d.r = r;
    if (lambda > 0) d.lambda = lambda;
    emit_design(d, valid, report_json, report_text);
  });
}

ub_status ub_design_validate_records(const ub_records* records, const char* attribute, int* valid, char** report_json,
                                     char** report_text) {
  return guard([&] {
    require(records, "records");
    require(attribute, "attribute");
    std::vector<unibeta::RatingRecord> subset;
    for (const auto& rec : records->rows)
      if (rec.attribute == attribute) subset.push_back(rec);
    if (subset.empty()) throw unibeta::DataError(std::string("no ratings for attribute '") + attribute + "'");
    emit_design(unibeta::infer_design(subset), valid, report_json, report_text);
  });
}

ub_status ub_transform_csv(const char* path, int scale_points, long n_override, char** out_csv, double* min,
                           double* max) {
  return guard([&] {
    require(path, "path");
    require(out_csv, "out_csv");
    auto in = open_input(path);
    std::ostringstream os;
    std::optional<long> n;
    if (n_override > 0) n = n_override;
    const auto s = unibeta::transform_ratings_csv(in, os, scale_points, n);
    *out_csv = dup(os.str());
    if (min) *min = s.min;
    if (max) *max = s.max;
  });
}

ub_status ub_scenario_names_json(char** out) {
  return guard([&] {
    require(out, "out");
    std::vector<std::string> names;
    for (const auto& s : unibeta::scenario_catalog()) names.push_back(s.name);
    *out = dup(nlohmann::json(names).dump());
  });
}

ub_status ub_simulate(const char* config_json, int with_details, char** report_csv, char** report_json) {
  return guard([&] {
    require(config_json, "config_json");
    nlohmann::json cfg;
    try {
      cfg = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      throw unibeta::DataError(std::string("simulation config is not valid JSON: ") + e.what());
    }
    const auto sc = unibeta::parse_simulation_config(cfg);
    unibeta::ConcordanceReport report;
    for (const auto& scenario : sc.scenarios) {
      for (int n : sc.panelists) {
        auto run = sc.run;
        run.panelists = n;
        report.rows.push_back(unibeta::run_scenario(scenario, run));
      }
    }
    char* csv = report_csv ? dup(unibeta::concordance_csv(report)) : nullptr;
    if (report_json) {
      try {
        *report_json = dup(unibeta::concordance_json(report, with_details != 0).dump(2));
      } catch (...) {
        std::free(csv);
        throw;
      }
    }
    if (report_csv) *report_csv = csv;
  });
}

ub_status ub_make_example(uint64_t seed, char** out_csv) {
  return guard([&] {
    require(out_csv, "out_csv");
    unibeta::ExampleSpec spec;
    spec.seed = seed;
    std::string csv = "panelist,formulation,attribute,rating\n";
    for (const auto& r : unibeta::make_example(spec))
      csv += r.panelist + ',' + r.formulation + ',' + r.attribute + ',' + std::to_string(r.rating) + '\n';
    *out_csv = dup(csv);
  });
}

ub_status ub_sha256_file(const char* path, char** out_hex) {
  return guard([&] {
    require(path, "path");
    require(out_hex, "out_hex");
    std::string hex;
    try {
      hex = unibeta::sha256_file(path);
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
    *out_hex = dup(hex);
  });
}

ub_status ub_sha256_bytes(const void* data, size_t size, char** out_hex) {
  return guard([&] {
    if (size > 0) require(data, "data");
    require(out_hex, "out_hex");
    *out_hex = dup(unibeta::sha256_hex(std::string_view(static_cast<const char*>(data), size)));
  });
}

}  // extern "C"
