#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "error.hpp"
#include "transform.hpp"

namespace unibeta {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + '\n';
}

}  // namespace

json fit_to_json(const FitResult& fit, const FitOptions& options, std::optional<std::uint64_t> seed) {
  json j;
  j["schema"] = kFitSchema;
  j["structure"] = structure_name(fit.spec.structure);
  j["includes_random"] = fit.spec.includes_random();
  j["columns"] = fit.columns;
  json coefs = json::array();
  for (const auto& c : fit.coefficients) {
    coefs.push_back({{"name", c.name},
                     {"estimate", c.estimate},
                     {"std_error", opt_json(c.std_error)},
                     {"z", opt_json(c.z)},
                     {"p_value", opt_json(c.p_value)}});
  }
  j["coefficients"] = coefs;
  j["phi_hat"] = fit.phi_hat;
  j["phi_se"] = opt_json(fit.phi_se);
  j["sigma_u2_hat"] = fit.sigma_u2_hat;
  j["sigma_u2_se"] = opt_json(fit.sigma_u2_se);
  j["loglik"] = fit.loglik;
  j["aic"] = fit.aic;
  j["n_params"] = fit.n_params;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["gradient_max_norm"] = fit.gradient_max_norm;
  j["last_relative_change"] = fit.last_relative_change;
  j["warnings"] = fit.warnings;
  j["dataset_fingerprint"] = fit.dataset_fingerprint;
  std::vector<double> theta(fit.params.theta.data(), fit.params.theta.data() + fit.params.theta.size());
  j["params"] = {{"theta", theta}, {"log_sigma_u2", fit.params.log_sigma_u2}, {"log_phi", fit.params.log_phi}};
  j["theta_covariance"] = matrix_json(fit.theta_covariance);
  j["modes"] = fit.modes;
  const auto& cd = fit.coding;
  j["coding"] = {{"panelists", cd.panelists},
                 {"formulations", cd.formulations},
                 {"attributes", cd.attributes},
                 {"reference_formulation", cd.formulations.empty() ? json(nullptr)
                                                                   : json(cd.formulations[static_cast<std::size_t>(cd.reference_formulation)])},
                 {"reference_attribute", cd.attributes.empty() ? json(nullptr)
                                                               : json(cd.attributes[static_cast<std::size_t>(cd.reference_attribute)])}};
  j["column_names"] = fit.column_names;
  j["n_formulation_cols"] = fit.n_formulation_cols;
  j["n_attribute_cols"] = fit.n_attribute_cols;
  j["options"] = {{"workers", options.workers},
                  {"max_iterations", options.max_iterations},
                  {"gradient_tolerance", options.gradient_tolerance},
                  {"relative_tolerance", options.relative_tolerance},
                  {"start", options.start == StartMode::kZero ? "zero" : "default"},
                  {"compute_standard_errors", options.compute_standard_errors}};
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

std::string coefficients_csv(const std::vector<const FitResult*>& fits) {
  std::string out = "structure,parameter,estimate,std_error,z,p_value\n";
  for (const FitResult* f : fits) {
    const std::string s = structure_name(f->spec.structure);
    for (const auto& c : f->coefficients)
      out += join_row({s, c.name, format_number(c.estimate), opt(c.std_error), opt(c.z), opt(c.p_value)});
    out += join_row({s, "phi", format_number(f->phi_hat), opt(f->phi_se), "", ""});
    if (f->spec.includes_random())
      out += join_row({s, "sigma_u2", format_number(f->sigma_u2_hat), opt(f->sigma_u2_se), "", ""});
  }
  return out;
}

std::string comparison_csv(const std::vector<LabeledFit>& fits) {
  std::string out = "model,structure,n_params,phi_hat,sigma_u2_hat,loglik,aic,converged\n";
  for (const auto& lf : fits) {
    const FitResult& f = *lf.fit;
    out += join_row({lf.model, structure_name(f.spec.structure), std::to_string(f.n_params), format_number(f.phi_hat),
                     f.spec.includes_random() ? format_number(f.sigma_u2_hat) : "", format_number(f.loglik),
                     format_number(f.aic), f.converged ? "true" : "false"});
  }
  return out;
}

std::string predicted_means_csv(const std::vector<LabeledFit>& fits) {
  std::string out = "model,structure,formulation,attribute,mean\n";
  for (const auto& lf : fits) {
    const std::string s = structure_name(lf.fit->spec.structure);
    for (const auto& p : predict_means(*lf.fit))
      out += join_row({lf.model, s, p.formulation, p.attribute, format_number(p.mean)});
  }
  return out;
}

std::string observed_fitted_csv(const std::vector<LabeledFit>& fits) {
  std::string out = "model,structure,panelist,formulation,attribute,rating,y_observed,mu_fitted\n";
  for (const auto& lf : fits) {
    const StackedDataset& ds = *lf.data;
    const std::string s = structure_name(lf.fit->spec.structure);
    const auto mu = fitted_values(*lf.fit, ds);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      out += join_row({lf.model, s, ds.coding.panelists[static_cast<std::size_t>(ds.block_index[i])],
                       ds.coding.formulations[static_cast<std::size_t>(ds.formulation_index[i])],
                       ds.coding.attributes[static_cast<std::size_t>(ds.attribute_index[i])], std::to_string(ds.rating[i]),
                       format_number(ds.y(static_cast<Eigen::Index>(i))), format_number(mu[i])});
    }
  }
  return out;
}

std::string summary_csv(const std::vector<LevelSummary>& rows) {
  std::string out = "attribute,formulation,n,mean,min,q1,median,q3,max,n_outliers\n";
  for (const auto& r : rows) {
    out += join_row({r.attribute, r.formulation, std::to_string(r.n), format_number(r.mean), format_number(r.min),
                     format_number(r.q1), format_number(r.median), format_number(r.q3), format_number(r.max),
                     std::to_string(r.n_outliers)});
  }
  return out;
}

json design_to_json(const BibDesign& design, const BibReport& report) {
  json j;
  j["schema"] = kDesignSchema;
  j["valid"] = report.valid;
  j["v"] = design.v;
  j["b"] = design.b;
  j["k"] = design.k;
  j["r"] = report.r ? json(*report.r) : json(nullptr);
  j["lambda"] = report.lambda ? json(*report.lambda) : json(nullptr);
  json checks = json::array();
  for (const auto& c : report.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  j["pair_counts"] = report.pair_counts;
  return j;
}

std::string design_report_text(const BibReport& report) {
  std::ostringstream os;
  for (const auto& c : report.checks) {
    os << (c.passed ? "ok    " : "FAIL  ") << c.name;
    if (!c.detail.empty()) os << ": " << c.detail;
    os << '\n';
  }
  os << (report.valid ? "design is a valid BIB" : "design is NOT a valid BIB");
  if (report.r) os << " (r = " << *report.r;
  if (report.r && report.lambda) os << ", lambda = " << *report.lambda;
  if (report.r) os << ')';
  os << '\n';
  return os.str();
}

BibDesign read_layout_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line.find_first_not_of(" \t\r") == std::string::npos) throw DataError("layout CSV is empty (a header row is required)");
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("line " + std::to_string(line_no) + ": header lacks required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cb = column("block");
  const std::size_t cv = column("variety");
  std::vector<std::pair<std::string, std::string>> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() <= std::max(cb, cv))
      throw DataError("line " + std::to_string(line_no) + ": expected at least " + std::to_string(std::max(cb, cv) + 1) +
                      " fields, found " + std::to_string(f.size()));
    if (f[cb].empty() || f[cv].empty()) throw DataError("line " + std::to_string(line_no) + ": empty identifier");
    cells.emplace_back(f[cb], f[cv]);
  }
  if (cells.empty()) throw DataError("layout CSV has no data rows");
  std::vector<std::string> blocks, varieties;
  for (const auto& [b, v] : cells) {
    blocks.push_back(b);
    varieties.push_back(v);
  }
  blocks = sorted_levels(blocks);
  varieties = sorted_levels(varieties);
  std::map<std::string, int> bi, vi;
  for (std::size_t i = 0; i < blocks.size(); ++i) bi[blocks[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < varieties.size(); ++i) vi[varieties[i]] = static_cast<int>(i);
  BibDesign d;
  d.v = static_cast<int>(varieties.size());
  d.b = static_cast<int>(blocks.size());
  d.layout.assign(blocks.size(), {});
  for (const auto& [b, v] : cells) d.layout[static_cast<std::size_t>(bi[b])].push_back(vi[v]);
  d.k = static_cast<int>(d.layout.front().size());
  return d;
}

Scenario find_scenario(const std::string& name) {
  const auto catalog = scenario_catalog();
  const auto& forms = scenario_formulations();
  std::string wanted;
  try {
    wanted = format_preorder(parse_preorder(name, forms), forms);
  } catch (const Error&) {
    wanted = name;
  }
  std::string valid;
  for (const auto& s : catalog) {
    if (format_preorder(s.truth, forms) == wanted) return s;
    valid += (valid.empty() ? "" : ", ") + s.name;
  }
  throw DomainError("unknown scenario '" + name + "'; valid names: " + valid);
}

SimulationConfig parse_simulation_config(const json& config) {
  if (!config.is_object()) throw DataError("simulation config must be a JSON object");
  SimulationConfig out;
  try {
    if (config.contains("scenarios")) {
      for (const auto& entry : config.at("scenarios")) {
        if (entry.is_string()) {
          out.scenarios.push_back(find_scenario(entry.get<std::string>()));
          continue;
        }
        const std::string name = entry.at("name").get<std::string>();
        Scenario s;
        try {
          s = find_scenario(name);
        } catch (const DomainError&) {
          s.name = name;
          s.truth = parse_preorder(name, scenario_formulations());
          s.generator.delta = {0.5, 0.0};
          s.generator.sigma_u2 = 1.0;
          s.notes = "custom";
        }
        if (entry.contains("cutpoints")) s.generator.cutpoints = entry.at("cutpoints").get<std::vector<double>>();
        if (entry.contains("beta")) s.generator.beta = entry.at("beta").get<std::vector<double>>();
        if (entry.contains("delta")) s.generator.delta = entry.at("delta").get<std::vector<double>>();
        if (entry.contains("sigma_u2")) s.generator.sigma_u2 = entry.at("sigma_u2").get<double>();
        if (entry.contains("notes")) s.notes = entry.at("notes").get<std::string>();
        s.generator.validate();
        if (s.generator.beta.size() != scenario_formulations().size() ||
            s.generator.delta.size() != scenario_attributes().size())
          throw DataError("scenario '" + name + "' needs 3 formulation and 2 attribute coefficients");
        out.scenarios.push_back(std::move(s));
      }
    } else {
      out.scenarios = scenario_catalog();
    }
    if (config.contains("n")) {
      const auto& n = config.at("n");
      out.panelists = n.is_array() ? n.get<std::vector<int>>() : std::vector<int>{n.get<int>()};
    }
    if (config.contains("reps")) out.run.replications = config.at("reps").get<int>();
    if (config.contains("seed")) out.run.seed = config.at("seed").get<std::uint64_t>();
    if (config.contains("alpha")) out.run.alpha = config.at("alpha").get<double>();
    if (config.contains("workers")) out.run.workers = config.at("workers").get<int>();
    if (config.contains("rule")) out.run.rule = config.at("rule").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("simulation config: ") + e.what());
  }
  if (out.scenarios.empty()) throw DataError("simulation config lists no scenarios");
  if (out.panelists.empty()) throw DataError("simulation config lists no panel sizes");
  for (int n : out.panelists)
    if (n < 2) throw DataError("panel sizes must be >= 2");
  if (out.run.replications < 1) throw DataError("reps must be >= 1");
  if (!(out.run.alpha > 0.0 && out.run.alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  decision_rule(out.run.rule);
  return out;
}

std::string concordance_csv(const ConcordanceReport& report) {
  std::string out = "scenario,truth,model,metric,n,replications,valid,failures,concordant,rate,alpha,seed\n";
  for (const auto& row : report.rows) {
    auto emit = [&](const ModelRate& m, const char* metric) {
      out += join_row({row.scenario, row.truth, m.model, metric, std::to_string(row.panelists),
                       std::to_string(row.replications), std::to_string(m.valid), std::to_string(m.failures),
                       std::to_string(m.concordant), format_number(m.rate()), format_number(row.alpha),
                       std::to_string(row.master_seed)});
    };
    for (const auto& m : row.truth_agreement) emit(m, "truth");
    for (const auto& m : row.unified_vs_separate) emit(m, "unified-vs-separate");
  }
  return out;
}

json concordance_json(const ConcordanceReport& report, bool with_details) {
  json rows = json::array();
  auto rates = [](const std::vector<ModelRate>& v) {
    json a = json::array();
    for (const auto& m : v)
      a.push_back({{"model", m.model}, {"valid", m.valid}, {"failures", m.failures}, {"concordant", m.concordant}, {"rate", m.rate()}});
    return a;
  };
  for (const auto& row : report.rows) {
    json r = {{"scenario", row.scenario},
              {"truth", row.truth},
              {"n", row.panelists},
              {"replications", row.replications},
              {"alpha", row.alpha},
              {"seed", row.master_seed},
              {"truth_agreement", rates(row.truth_agreement)},
              {"unified_vs_separate", rates(row.unified_vs_separate)}};
    if (with_details) {
      json d = json::array();
      for (const auto& rep : row.details) {
        json dec = json::array();
        for (std::size_t m = 0; m < rep.decisions.size(); ++m) {
          dec.push_back({{"decision", rep.failed[m] ? json(nullptr) : json(rep.decisions[m])},
                         {"failed", static_cast<bool>(rep.failed[m])},
                         {"intransitive", static_cast<bool>(rep.intransitive[m])}});
        }
        d.push_back({{"seed", rep.seed}, {"models", dec}});
      }
      r["details"] = d;
    }
    rows.push_back(r);
  }
  return {{"schema", kConcordanceSchema}, {"models", {"unified", "A", "B"}}, {"rows", rows}};
}

TransformSummary transform_ratings_csv(std::istream& in, std::ostream& out, int scale_points,
                                       std::optional<long> n_override) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  std::size_t header_at = 0;
  while (header_at < lines.size() && lines[header_at].find_first_not_of(" \t") == std::string::npos) ++header_at;
  if (header_at < lines.size()) {
    std::string h = lines[header_at];
    if (header_at == 0 && h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
    const auto cols = split_csv_line(h);
    if (std::find(cols.begin(), cols.end(), "y_unit") != cols.end())
      throw DataError("line " + std::to_string(header_at + 1) + ": input already has a y_unit column");
  }
  std::ostringstream joined;
  for (const auto& l : lines) joined << l << '\n';
  std::istringstream parse(joined.str());
  const auto records = read_ratings_csv(parse);

  std::map<std::string, long> per_attribute;
  for (const auto& r : records) ++per_attribute[r.attribute];
  std::map<std::size_t, double> by_line;
  TransformSummary summary;
  summary.rows = records.size();
  summary.min = 1.0;
  summary.max = 0.0;
  for (const auto& r : records) {
    CompressionConfig cfg{scale_points, n_override ? *n_override : per_attribute[r.attribute]};
    double y;
    try {
      y = rating_to_unit(r.rating, cfg);
    } catch (const Error& e) {
      throw DataError("line " + std::to_string(r.source_line) + ": " + e.what());
    }
    by_line[r.source_line] = y;
    summary.min = std::min(summary.min, y);
    summary.max = std::max(summary.max, y);
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i == header_at) {
      out << lines[i] << ",y_unit\n";
      continue;
    }
    const auto it = by_line.find(i + 1);
    if (it == by_line.end()) {
      if (i > header_at) continue;
      out << lines[i] << '\n';
      continue;
    }
    out << lines[i] << ',' << format_number(it->second) << '\n';
  }
  return summary;
}

}  // namespace unibeta
