#ifndef UNIBETA_UNIBETA_H
#define UNIBETA_UNIBETA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(UNIBETA_BUILDING_LIBRARY)
#define UB_API __declspec(dllexport)
#else
#define UB_API __declspec(dllimport)
#endif
#else
#define UB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Every fallible call returns one; details via ub_last_error(). */
typedef enum ub_status {
  UB_OK = 0,
  UB_ERR_INVALID_ARGUMENT = 1, /* null handle, bad enum, bad option value */
  UB_ERR_DATA = 2,             /* malformed or inconsistent input data */
  UB_ERR_DOMAIN = 3,           /* parameter outside its valid domain */
  UB_ERR_CONVERGENCE = 4,      /* mode search or optimizer failure */
  UB_ERR_IO = 5,
  UB_ERR_INTERNAL = 6
} ub_status;

typedef enum ub_structure {
  UB_STRUCTURE_NULL = 0, /* intercept only */
  UB_STRUCTURE_M1 = 1,   /* + formulation effects */
  UB_STRUCTURE_M2 = 2,   /* + attribute effects */
  UB_STRUCTURE_M3 = 3    /* + panelist random intercept */
} ub_structure;

typedef struct ub_records ub_records;
typedef struct ub_dataset ub_dataset;
typedef struct ub_fit ub_fit;

UB_API const char* ub_version(void);

/* Message of the last failed call on this thread; "" if none. */
UB_API const char* ub_last_error(void);

/* Frees strings returned through char** out-parameters. */
UB_API void ub_string_free(char* s);

/* ---- ratings ---- */

UB_API ub_status ub_records_create(ub_records** out);
UB_API ub_status ub_records_read_csv(const char* path, ub_records** out);
UB_API ub_status ub_records_add(ub_records* records, const char* panelist, const char* formulation,
                                const char* attribute, int rating);
UB_API size_t ub_records_count(const ub_records* records);
/* JSON array of attribute names in level order. */
UB_API ub_status ub_records_attributes_json(const ub_records* records, char** out);
/* Per attribute x formulation descriptive statistics as CSV. */
UB_API ub_status ub_records_summary_csv(const ub_records* records, char** out);
UB_API void ub_records_free(ub_records* records);

/* ---- datasets ---- */

typedef struct ub_dataset_options {
  const char* reference_formulation; /* NULL: first level */
  const char* reference_attribute;   /* NULL: second level when there are two or more */
  int scale_points;                  /* default 5 */
  int stacked_compression;           /* 0: n = rows per attribute, 1: n = all stacked rows */
  long compression_n;                /* > 0 overrides n */
} ub_dataset_options;

UB_API void ub_dataset_options_init(ub_dataset_options* options);
UB_API ub_status ub_dataset_build_stacked(const ub_records* records, const ub_dataset_options* options,
                                          ub_dataset** out);
UB_API ub_status ub_dataset_build_separate(const ub_records* records, const char* attribute,
                                           const ub_dataset_options* options, ub_dataset** out);
UB_API size_t ub_dataset_rows(const ub_dataset* dataset);
UB_API ub_status ub_dataset_fingerprint(const ub_dataset* dataset, char** out);
UB_API void ub_dataset_free(ub_dataset* dataset);

/* ---- fitting ---- */

typedef struct ub_fit_options {
  int workers;               /* default 1 */
  int max_iterations;        /* default 1000 */
  double gradient_tolerance; /* default 1e-6 */
  double relative_tolerance; /* default 1e-9 */
  int zero_start;            /* nonzero: start from theta = 0 instead of OLS */
} ub_fit_options;

UB_API void ub_fit_options_init(ub_fit_options* options);
UB_API ub_status ub_parse_structure(const char* name, ub_structure* out);

/* Non-convergence is not an error here: check ub_fit_converged(). */
UB_API ub_status ub_fit_model(const ub_dataset* dataset, ub_structure structure, const ub_fit_options* options,
                              ub_fit** out);
UB_API int ub_fit_converged(const ub_fit* fit);
UB_API double ub_fit_loglik(const ub_fit* fit);
UB_API double ub_fit_aic(const ub_fit* fit);
UB_API double ub_fit_phi(const ub_fit* fit);
UB_API double ub_fit_sigma_u2(const ub_fit* fit);
UB_API int ub_fit_n_params(const ub_fit* fit);
UB_API size_t ub_fit_n_coefficients(const ub_fit* fit);
/* Absent standard errors, z and p are reported as NaN. name stays owned by fit. */
UB_API ub_status ub_fit_coefficient(const ub_fit* fit, size_t index, const char** name, double* estimate,
                                    double* std_error, double* z, double* p_value);
UB_API size_t ub_fit_n_warnings(const ub_fit* fit);
UB_API const char* ub_fit_warning(const ub_fit* fit, size_t index);
/* Full report; seed is recorded when has_seed is nonzero. */
UB_API ub_status ub_fit_report_json(const ub_fit* fit, int has_seed, uint64_t seed, char** out);
UB_API ub_status ub_fit_predict_mean(const ub_fit* fit, const char* formulation, const char* attribute,
                                     double conditional_u, double* out);
/* mixture_p_value is NaN unless the test is for the random-effect variance. */
UB_API ub_status ub_fit_lrt(const ub_fit* nested, const ub_fit* full, double* statistic, int* df, double* p_value,
                            double* mixture_p_value);
UB_API void ub_fit_free(ub_fit* fit);

/* ---- tables (CSV, 17 significant digits) ---- */

/* One model's structures: structure,parameter,estimate,std_error,z,p_value */
UB_API ub_status ub_coefficients_csv(const ub_fit* const* fits, size_t n, char** out);
/* model,structure,n_params,phi_hat,sigma_u2_hat,loglik,aic,converged */
UB_API ub_status ub_comparison_csv(const ub_fit* const* fits, const char* const* models, size_t n, char** out);
/* model,structure,formulation,attribute,mean */
UB_API ub_status ub_predicted_means_csv(const ub_fit* const* fits, const char* const* models, size_t n, char** out);
/* model,structure,panelist,formulation,attribute,rating,y_observed,mu_fitted */
UB_API ub_status ub_observed_fitted_csv(const ub_fit* const* fits, const ub_dataset* const* datasets,
                                        const char* const* models, size_t n, char** out);

/* ---- designs ---- */

/* r or lambda <= 0 means derive. layout_csv_path may be NULL (counts only);
   its columns are block,variety. valid receives 1 or 0. */
UB_API ub_status ub_design_validate(int v, int b, int k, int r, int lambda, const char* layout_csv_path, int* valid,
                                    char** report_json, char** report_text);
/* Layout implied by one attribute's ratings. */
UB_API ub_status ub_design_validate_records(const ub_records* records, const char* attribute, int* valid,
                                            char** report_json, char** report_text);

/* ---- transform ---- */

/* Appends y_unit to a ratings CSV; n_override <= 0 uses rows per attribute. */
UB_API ub_status ub_transform_csv(const char* path, int scale_points, long n_override, char** out_csv, double* min,
                                  double* max);

/* ---- simulation ---- */

/* JSON array of the preset scenario names. */
UB_API ub_status ub_scenario_names_json(char** out);
/* Runs the concordance study described by a JSON config. */
UB_API ub_status ub_simulate(const char* config_json, int with_details, char** report_csv, char** report_json);
/* Synthetic 8-formulation, 98-panelist, 5-attribute ratings CSV. */
UB_API ub_status ub_make_example(uint64_t seed, char** out_csv);

/* ---- digests ---- */

UB_API ub_status ub_sha256_file(const char* path, char** out_hex);
UB_API ub_status ub_sha256_bytes(const void* data, size_t size, char** out_hex);

#ifdef __cplusplus
}
#endif

#endif
