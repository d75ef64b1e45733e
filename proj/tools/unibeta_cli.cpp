// unibeta command-line front end. Talks to the library only through the C API.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "unibeta/unibeta.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Carries an exit code out of a command.
struct CommandError {
  int code;
  std::string message;
};

void check(ub_status s, const std::string& what) {
  if (s == UB_OK) return;
  const int code = s == UB_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
  throw CommandError{code, what + ": " + ub_last_error()};
}

struct CString {
  char* p = nullptr;
  ~CString() { ub_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct RecordsDeleter {
  void operator()(ub_records* r) const { ub_records_free(r); }
};
struct DatasetDeleter {
  void operator()(ub_dataset* d) const { ub_dataset_free(d); }
};
struct FitDeleter {
  void operator()(ub_fit* f) const { ub_fit_free(f); }
};
using RecordsPtr = std::unique_ptr<ub_records, RecordsDeleter>;
using DatasetPtr = std::unique_ptr<ub_dataset, DatasetDeleter>;
using FitPtr = std::unique_ptr<ub_fit, FitDeleter>;

std::string digest_file(const fs::path& p) {
  CString hex;
  check(ub_sha256_file(p.string().c_str(), &hex.p), "digest " + p.string());
  return hex.str();
}

// Collects outputs and writes them atomically (temp file + rename).
class Run {
 public:
  Run(std::string command, fs::path out_dir) : command_(std::move(command)), out_dir_(std::move(out_dir)) {}

  void input(const fs::path& p) { inputs_.push_back({{"path", p.string()}, {"sha256", digest_file(p)}}); }

  fs::path write(const std::string& name, const std::string& content) {
    const fs::path target = name.find('/') == std::string::npos ? out_dir_ / name : fs::path(name);
    write_atomic(target, content);
    outputs_.push_back({{"path", target.string()}, {"sha256", sha(content)}});
    return target;
  }

  void finish(const json& config, std::optional<std::uint64_t> seed, const std::string& seed_source,
              const std::vector<std::string>& argv) {
    json m;
    m["schema"] = "unibeta.manifest/1";
    m["tool"] = "unibeta";
    m["version"] = ub_version();
    m["command"] = command_;
    m["argv"] = argv;
    m["config"] = config;
    m["seed"] = seed ? json(*seed) : json(nullptr);
    m["seed_source"] = seed_source;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    write_atomic(out_dir_ / "manifest.json", m.dump(2) + "\n");
  }

  static void write_atomic(const fs::path& target, const std::string& content) {
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw CommandError{kExitFailure, "cannot write " + tmp.string()};
      out << content;
      out.flush();
      if (!out) throw CommandError{kExitFailure, "write failed for " + tmp.string()};
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
      fs::remove(tmp);
      throw CommandError{kExitFailure, "cannot move output into place: " + target.string() + ": " + ec.message()};
    }
  }

 private:
  static std::string sha(const std::string& s) {
    CString hex;
    check(ub_sha256_bytes(s.data(), s.size(), &hex.p), "digest");
    return hex.str();
  }

  std::string command_;
  fs::path out_dir_;
  json inputs_ = json::array();
  json outputs_ = json::array();
};

struct SeedChoice {
  std::uint64_t value = 1;
  std::string source = "default";
};

SeedChoice resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return {*flag, "flag"};
  if (const char* env = std::getenv("UNIBETA_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::strlen(env)) throw std::invalid_argument("trailing characters");
      return {static_cast<std::uint64_t>(v), "UNIBETA_SEED"};
    } catch (const std::exception&) {
      throw CommandError{kExitUsage, std::string("UNIBETA_SEED is not an unsigned integer: '") + env + "'"};
    }
  }
  return {};
}

fs::path absolute_path(const std::string& p) { return fs::absolute(fs::path(p)).lexically_normal(); }

std::string file_label(const std::string& s) {
  std::string out;
  for (unsigned char ch : s) out += std::isalnum(ch) || ch == '-' || ch == '_' ? static_cast<char>(ch) : '_';
  return out;
}

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---- fit ----

struct FitArgs {
  std::string input;
  bool unified = false;
  std::string structure = "m3";
  int scale_points = 5;
  std::string reference_formulation;
  std::string reference_attribute;
  long compression_n = 0;
  bool stacked_compression = false;
  int workers = 1;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

int cmd_fit(const FitArgs& a, const std::vector<std::string>& argv) {
  const fs::path input = absolute_path(a.input);
  const fs::path out_dir = absolute_path(a.out_dir);
  const SeedChoice seed = resolve_seed(a.seed);
  Run run("fit", out_dir);

  std::vector<ub_structure> structures;
  const bool all = a.structure == "all";
  if (all) {
    structures = {UB_STRUCTURE_NULL, UB_STRUCTURE_M1, UB_STRUCTURE_M2, UB_STRUCTURE_M3};
  } else {
    ub_structure s;
    check(ub_parse_structure(a.structure.c_str(), &s), "--structure");
    structures = {s};
  }

  ub_records* raw = nullptr;
  check(ub_records_read_csv(input.string().c_str(), &raw), "reading " + input.string());
  RecordsPtr records(raw);
  run.input(input);

  ub_dataset_options dopt;
  ub_dataset_options_init(&dopt);
  dopt.scale_points = a.scale_points;
  dopt.reference_formulation = a.reference_formulation.empty() ? nullptr : a.reference_formulation.c_str();
  dopt.reference_attribute = a.reference_attribute.empty() ? nullptr : a.reference_attribute.c_str();
  dopt.compression_n = a.compression_n;
  dopt.stacked_compression = a.stacked_compression ? 1 : 0;

  ub_fit_options fopt;
  ub_fit_options_init(&fopt);
  fopt.workers = a.workers;

  struct Model {
    std::string label;
    DatasetPtr data;
    std::vector<FitPtr> fits;
  };
  std::vector<Model> models;
  if (a.unified) {
    ub_dataset* d = nullptr;
    check(ub_dataset_build_stacked(records.get(), &dopt, &d), "building stacked dataset");
    models.push_back({"unified", DatasetPtr(d), {}});
  } else {
    CString attrs;
    check(ub_records_attributes_json(records.get(), &attrs.p), "listing attributes");
    for (const auto& name : json::parse(attrs.str())) {
      const std::string attr = name.get<std::string>();
      ub_dataset* d = nullptr;
      check(ub_dataset_build_separate(records.get(), attr.c_str(), &dopt, &d), "building dataset for " + attr);
      models.push_back({attr, DatasetPtr(d), {}});
    }
  }

  bool all_converged = true;
  std::vector<const ub_fit*> table_fits;
  std::vector<const ub_dataset*> table_data;
  std::vector<const char*> table_labels;
  json lrt_rows = json::array();
  std::string lrt_csv = "model,nested,full,statistic,df,p_value,mixture_p_value\n";

  for (auto& m : models) {
    // Without attribute contrasts m2 repeats m1.
    CString fp;
    check(ub_dataset_fingerprint(m.data.get(), &fp.p), "fingerprint");
    for (ub_structure s : structures) {
      if (all && s == UB_STRUCTURE_M2 && !a.unified) continue;
      if (all && s == UB_STRUCTURE_M2 && a.unified) {
        CString attrs;
        check(ub_records_attributes_json(records.get(), &attrs.p), "listing attributes");
        if (json::parse(attrs.str()).size() < 2) continue;
      }
      ub_fit* f = nullptr;
      check(ub_fit_model(m.data.get(), s, &fopt, &f), "fitting " + m.label);
      m.fits.emplace_back(f);
      if (!ub_fit_converged(f)) {
        all_converged = false;
        std::cerr << "warning: " << m.label << " did not converge\n";
      }
      for (size_t w = 0; w < ub_fit_n_warnings(f); ++w) std::cerr << m.label << ": " << ub_fit_warning(f, w) << "\n";
    }
    std::vector<const ub_fit*> own;
    for (const auto& f : m.fits) own.push_back(f.get());
    CString coef;
    check(ub_coefficients_csv(own.data(), own.size(), &coef.p), "coefficient table");
    run.write("coefficients_" + file_label(m.label) + ".csv", coef.str());
    for (const auto& f : m.fits) {
      CString js;
      check(ub_fit_report_json(f.get(), 1, seed.value, &js.p), "fit report");
      const json parsed = json::parse(js.str());
      run.write("fit_" + file_label(m.label) + "_" + parsed.at("structure").get<std::string>() + ".json", js.str() + "\n");
      table_fits.push_back(f.get());
      table_data.push_back(m.data.get());
      table_labels.push_back(m.label.c_str());
    }
    for (std::size_t i = 1; i < m.fits.size(); ++i) {
      double stat = 0, p = 0, mix = 0;
      int df = 0;
      check(ub_fit_lrt(m.fits[i - 1].get(), m.fits[i].get(), &stat, &df, &p, &mix), "likelihood ratio test");
      CString j0, j1;
      check(ub_fit_report_json(m.fits[i - 1].get(), 0, 0, &j0.p), "fit report");
      check(ub_fit_report_json(m.fits[i].get(), 0, 0, &j1.p), "fit report");
      const std::string s0 = json::parse(j0.str()).at("structure"), s1 = json::parse(j1.str()).at("structure");
      lrt_csv += m.label + ',' + s0 + ',' + s1 + ',' + full(stat) + ',' + std::to_string(df) + ',' + full(p) + ',' +
                 (std::isnan(mix) ? "" : full(mix)) + '\n';
    }
  }

  CString comparison, means, fitted, summary;
  check(ub_comparison_csv(table_fits.data(), table_labels.data(), table_fits.size(), &comparison.p), "comparison table");
  check(ub_predicted_means_csv(table_fits.data(), table_labels.data(), table_fits.size(), &means.p), "predicted means");
  check(ub_observed_fitted_csv(table_fits.data(), table_data.data(), table_labels.data(), table_fits.size(), &fitted.p),
        "observed vs fitted");
  check(ub_records_summary_csv(records.get(), &summary.p), "summary table");
  run.write("comparison.csv", comparison.str());
  run.write("predicted_means.csv", means.str());
  run.write("observed_fitted.csv", fitted.str());
  run.write("summary.csv", summary.str());
  if (lrt_csv.find('\n') + 1 < lrt_csv.size()) run.write("lrt.csv", lrt_csv);

  json config = {{"input", input.string()},
                 {"unified", a.unified},
                 {"structure", a.structure},
                 {"scale_points", a.scale_points},
                 {"reference_formulation", a.reference_formulation.empty() ? json(nullptr) : json(a.reference_formulation)},
                 {"reference_attribute", a.reference_attribute.empty() ? json(nullptr) : json(a.reference_attribute)},
                 {"compression_n", a.compression_n > 0 ? json(a.compression_n) : json(nullptr)},
                 {"stacked_compression", a.stacked_compression},
                 {"workers", a.workers},
                 {"out_dir", out_dir.string()}};
  run.finish(config, seed.value, seed.source, argv);

  std::cout << comparison.str();
  if (!all_converged) {
    std::cerr << "error: at least one fit did not converge (see fit_*.json)\n";
    return kExitFailure;
  }
  return kExitOk;
}

// ---- simulate ----

struct SimulateArgs {
  std::vector<std::string> scenarios;
  std::string config;
  std::vector<int> n;
  int reps = 200;
  std::optional<std::uint64_t> seed;
  double alpha = 0.05;
  int workers = 1;
  std::string rule = "pairwise";
  bool details = false;
  std::string out_dir = ".";
};

int cmd_simulate(const SimulateArgs& a, const std::vector<std::string>& argv, const CLI::App& sub) {
  const fs::path out_dir = absolute_path(a.out_dir);
  const SeedChoice seed = resolve_seed(a.seed);
  Run run("simulate", out_dir);

  json cfg = json::object();
  if (!a.config.empty()) {
    const fs::path path = absolute_path(a.config);
    std::ifstream in(path);
    if (!in) throw CommandError{kExitFailure, "cannot open " + path.string()};
    try {
      cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw CommandError{kExitFailure, path.string() + ": " + e.what()};
    }
    run.input(path);
  }
  // Flags given on the command line override the file.
  if (!a.scenarios.empty()) cfg["scenarios"] = a.scenarios;
  if (!a.n.empty()) cfg["n"] = a.n;
  if (sub.count("--reps") || !cfg.contains("reps")) cfg["reps"] = a.reps;
  if (sub.count("--alpha") || !cfg.contains("alpha")) cfg["alpha"] = a.alpha;
  if (sub.count("--workers") || !cfg.contains("workers")) cfg["workers"] = a.workers;
  if (sub.count("--rule") || !cfg.contains("rule")) cfg["rule"] = a.rule;
  if (seed.source != "default" || !cfg.contains("seed")) cfg["seed"] = seed.value;
  if (!cfg.contains("n")) cfg["n"] = json::array({90});

  CString csv, js;
  const ub_status s = ub_simulate(cfg.dump().c_str(), a.details ? 1 : 0, &csv.p, &js.p);
  if (s != UB_OK) {
    std::string msg = ub_last_error();
    throw CommandError{s == UB_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailure, "simulate: " + msg};
  }
  run.write("concordance.csv", csv.str());
  run.write("concordance.json", js.str() + "\n");
  run.finish(cfg, cfg.at("seed").get<std::uint64_t>(), seed.source, argv);

  const json report = json::parse(js.str());
  for (const auto& row : report.at("rows")) {
    std::cout << row.at("scenario").get<std::string>() << "  N=" << row.at("n") << "  reps=" << row.at("replications");
    for (const auto& m : row.at("truth_agreement")) {
      std::cout << "  " << m.at("model").get<std::string>() << "=" << fmt(100.0 * m.at("rate").get<double>()) << "%";
      if (m.at("failures").get<int>() > 0) std::cout << " (" << m.at("failures") << " failed)";
    }
    std::cout << "\n";
  }
  return kExitOk;
}

// ---- transform ----

struct TransformArgs {
  std::string input;
  int scale_points = 5;
  long n = 0;
  std::string output;
  std::string out_dir = ".";
};

int cmd_transform(const TransformArgs& a, const std::vector<std::string>& argv) {
  const fs::path input = absolute_path(a.input);
  const fs::path out_dir = absolute_path(a.out_dir);
  const fs::path output = a.output.empty() ? out_dir / "ratings_unit.csv" : absolute_path(a.output);
  Run run("transform", out_dir);
  CString csv;
  double lo = 0, hi = 0;
  check(ub_transform_csv(input.string().c_str(), a.scale_points, a.n, &csv.p, &lo, &hi), "transform");
  run.input(input);
  run.write(output.string(), csv.str());
  json config = {{"input", input.string()},
                 {"scale_points", a.scale_points},
                 {"n", a.n > 0 ? json(a.n) : json("rows per attribute")},
                 {"output", output.string()}};
  run.finish(config, std::nullopt, "none", argv);
  std::printf("y_unit min = %.17g\ny_unit max = %.17g\n", lo, hi);
  return kExitOk;
}

// ---- validate-design ----

struct DesignArgs {
  int v = 0, b = 0, k = 0, r = 0, lambda = 0;
  std::string layout;
  std::string ratings;
  std::string attribute;
  std::string out_dir;
};

int cmd_validate_design(const DesignArgs& a, const std::vector<std::string>& argv) {
  std::optional<Run> run;
  if (!a.out_dir.empty()) run.emplace("validate-design", absolute_path(a.out_dir));
  bool valid = true;
  json reports = json::array();
  auto take = [&](ub_status s, int ok, CString& js, CString& text, const std::string& label) {
    check(s, "validate-design");
    if (!label.empty()) std::cout << "[" << label << "]\n";
    std::cout << text.str();
    json r = json::parse(js.str());
    if (!label.empty()) r["attribute"] = label;
    reports.push_back(r);
    valid = valid && ok == 1;
  };

  if (!a.ratings.empty()) {
    const fs::path path = absolute_path(a.ratings);
    ub_records* raw = nullptr;
    check(ub_records_read_csv(path.string().c_str(), &raw), "reading " + path.string());
    RecordsPtr records(raw);
    if (run) run->input(path);
    std::vector<std::string> attrs;
    if (!a.attribute.empty()) {
      attrs.push_back(a.attribute);
    } else {
      CString list;
      check(ub_records_attributes_json(records.get(), &list.p), "listing attributes");
      for (const auto& n : json::parse(list.str())) attrs.push_back(n.get<std::string>());
    }
    for (const auto& attr : attrs) {
      CString js, text;
      int ok = 0;
      const ub_status s = ub_design_validate_records(records.get(), attr.c_str(), &ok, &js.p, &text.p);
      take(s, ok, js, text, attr);
    }
  } else {
    std::string layout;
    if (!a.layout.empty()) {
      const fs::path path = absolute_path(a.layout);
      layout = path.string();
      if (run) run->input(path);
    } else if (a.v <= 0 || a.b <= 0 || a.k <= 0) {
      throw CommandError{kExitUsage, "give --v, --b and --k, or --layout, or --ratings"};
    }
    CString js, text;
    int ok = 0;
    const ub_status s =
        ub_design_validate(a.v, a.b, a.k, a.r, a.lambda, layout.empty() ? nullptr : layout.c_str(), &ok, &js.p, &text.p);
    take(s, ok, js, text, "");
  }

  if (run) {
    run->write("design_report.json", (reports.size() == 1 ? reports.front() : reports).dump(2) + "\n");
    json config = {{"v", a.v}, {"b", a.b}, {"k", a.k}, {"r", a.r}, {"lambda", a.lambda},
                   {"layout", a.layout}, {"ratings", a.ratings}, {"attribute", a.attribute}};
    run->finish(config, std::nullopt, "none", argv);
  }
  return valid ? kExitOk : kExitFailure;
}

int make_example(const std::string& path, const std::optional<std::uint64_t>& flag, const std::vector<std::string>& argv) {
  const SeedChoice seed = flag ? SeedChoice{*flag, "flag"} : [&] {
    SeedChoice s = resolve_seed(std::nullopt);
    if (s.source == "default") s.value = 2025;
    return s;
  }();
  const fs::path target = absolute_path(path);
  CString csv;
  check(ub_make_example(seed.value, &csv.p), "make-example");
  Run run("make-example", target.parent_path());
  run.write(target.string(), csv.str());
  run.finish({{"output", target.string()}}, seed.value, seed.source, argv);
  std::cout << "wrote " << target.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Mixed beta regression for sensory panel ratings"};
  app.set_version_flag("--version", std::string(ub_version()));
  app.require_subcommand(0, 1);

  std::string example_path;
  std::optional<std::uint64_t> example_seed;
  app.add_option("--make-example", example_path, "Write the synthetic example ratings CSV to this path");
  app.add_option("--seed", example_seed, "Seed for --make-example (default 2025, or UNIBETA_SEED)");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit null/m1/m2/m3 beta regressions to a ratings CSV");
  fit->add_option("input", fa.input, "Ratings CSV (panelist,formulation,attribute,rating)")->required();
  fit->add_flag("--unified", fa.unified, "Stack all attributes into one model");
  fit->add_option("--structure", fa.structure, "null, m1, m2, m3 or all")
      ->check(CLI::IsMember({"null", "m1", "m2", "m3", "all"}));
  fit->add_option("--scale-points", fa.scale_points, "Points on the rating scale")->check(CLI::Range(2, 1000));
  fit->add_option("--reference-formulation", fa.reference_formulation, "Reference formulation level");
  fit->add_option("--reference-attribute", fa.reference_attribute, "Reference attribute level");
  fit->add_option("--compression-n", fa.compression_n, "Override n in (y(n-1)+0.5)/n")->check(CLI::Range(2L, 1000000000L));
  fit->add_flag("--stacked-compression", fa.stacked_compression, "Use all stacked rows as n");
  fit->add_option("--workers", fa.workers, "Worker threads")->check(CLI::Range(1, 1024));
  fit->add_option("--out-dir", fa.out_dir, "Output directory");
  fit->add_option("--seed", fa.seed, "Recorded in reports (fits are deterministic)");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run the unified-vs-separate concordance study");
  sim->add_option("--scenario", sa.scenarios, "Scenario name, e.g. \"F1<F3<F2\" (repeatable)");
  sim->add_option("--config", sa.config, "JSON scenario configuration");
  sim->add_option("--n", sa.n, "Panel size (repeatable)")->check(CLI::Range(2, 1000000));
  sim->add_option("--reps", sa.reps, "Replications per scenario")->check(CLI::Range(1, 10000000));
  sim->add_option("--seed", sa.seed, "Master seed (UNIBETA_SEED when absent)");
  sim->add_option("--alpha", sa.alpha, "Test level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
  sim->add_option("--workers", sa.workers, "Worker threads")->check(CLI::Range(1, 1024));
  sim->add_option("--rule", sa.rule, "Decision rule")->check(CLI::IsMember({"pairwise", "global-first"}));
  sim->add_flag("--details", sa.details, "Include per-replication decisions in the JSON");
  sim->add_option("--out-dir", sa.out_dir, "Output directory");

  TransformArgs ta;
  auto* tr = app.add_subcommand("transform", "Append the unit-interval response y_unit to a ratings CSV");
  tr->add_option("input", ta.input, "Ratings CSV")->required();
  tr->add_option("--scale-points", ta.scale_points, "Points on the rating scale")->check(CLI::Range(2, 1000));
  tr->add_option("--n", ta.n, "Override n (default: rows per attribute)")->check(CLI::Range(2L, 1000000000L));
  tr->add_option("--output", ta.output, "Output CSV (default <out-dir>/ratings_unit.csv)");
  tr->add_option("--out-dir", ta.out_dir, "Output directory");

  DesignArgs da;
  auto* vd = app.add_subcommand("validate-design", "Check balanced incomplete block design constraints");
  vd->add_option("--v", da.v, "Number of formulations");
  vd->add_option("--b", da.b, "Number of blocks (panelists)");
  vd->add_option("--k", da.k, "Block size");
  vd->add_option("--r", da.r, "Replications per formulation");
  vd->add_option("--lambda", da.lambda, "Pair co-occurrence count");
  vd->add_option("--layout", da.layout, "Layout CSV with columns block,variety");
  vd->add_option("--ratings", da.ratings, "Ratings CSV; checks the layout of each attribute");
  vd->add_option("--attribute", da.attribute, "Restrict --ratings to one attribute");
  vd->add_option("--out-dir", da.out_dir, "Write design_report.json and a manifest here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!example_path.empty()) return make_example(example_path, example_seed, args);
    if (*fit) return cmd_fit(fa, args);
    if (*sim) return cmd_simulate(sa, args, *sim);
    if (*tr) return cmd_transform(ta, args);
    if (*vd) return cmd_validate_design(da, args);
    std::cerr << app.help();
    return kExitUsage;
  } catch (const CommandError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
