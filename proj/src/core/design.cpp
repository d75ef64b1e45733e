#include "design.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "digest.hpp"
#include "error.hpp"
#include "transform.hpp"

namespace unibeta {
namespace {

int index_of(const std::vector<std::string>& levels, const std::string& name) {
  auto it = std::find(levels.begin(), levels.end(), name);
  return it == levels.end() ? -1 : static_cast<int>(it - levels.begin());
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += v[i];
  }
  return out;
}

}  // namespace

BibReport validate_bib(const BibDesign& d) {
  BibReport rep;
  auto add = [&](std::string name, bool ok, std::string detail) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  const bool positive = d.v > 0 && d.b > 0 && d.k > 0 && d.r.value_or(1) > 0 && d.lambda.value_or(1) > 0;
  add("positive counts", positive, "v=" + std::to_string(d.v) + " b=" + std::to_string(d.b) + " k=" + std::to_string(d.k));
  if (!positive) {
    rep.valid = false;
    return rep;
  }
  add("k <= v", d.k <= d.v, std::to_string(d.k) + " <= " + std::to_string(d.v));

  const long bk = static_cast<long>(d.b) * d.k;
  if (d.r) {
    add("bk = rv", bk == static_cast<long>(*d.r) * d.v,
        std::to_string(bk) + " vs " + std::to_string(static_cast<long>(*d.r) * d.v));
    rep.r = d.r;
  } else if (bk % d.v == 0) {
    rep.r = static_cast<int>(bk / d.v);
    add("bk = rv", true, "r = " + std::to_string(bk) + "/" + std::to_string(d.v) + " = " + std::to_string(*rep.r));
  } else {
    add("bk = rv", false, "r = " + std::to_string(bk) + "/" + std::to_string(d.v) + " is not an integer");
  }

  if (rep.r) {
    const long rk1 = static_cast<long>(*rep.r) * (d.k - 1);
    if (d.lambda) {
      add("lambda(v-1) = r(k-1)", static_cast<long>(*d.lambda) * (d.v - 1) == rk1,
          std::to_string(static_cast<long>(*d.lambda) * (d.v - 1)) + " vs " + std::to_string(rk1));
      rep.lambda = d.lambda;
    } else if (d.v > 1 && rk1 % (d.v - 1) == 0) {
      rep.lambda = static_cast<int>(rk1 / (d.v - 1));
      add("lambda(v-1) = r(k-1)", true, "lambda = " + std::to_string(*rep.lambda));
    } else {
      add("lambda(v-1) = r(k-1)", false,
          "lambda = " + std::to_string(rk1) + "/" + std::to_string(d.v - 1) + " is not an integer");
    }
  }

  if (!d.layout.empty()) {
    add("layout has b blocks", static_cast<int>(d.layout.size()) == d.b,
        std::to_string(d.layout.size()) + " blocks listed");
    rep.pair_counts.assign(static_cast<std::size_t>(d.v), std::vector<int>(static_cast<std::size_t>(d.v), 0));
    std::vector<int> replicates(static_cast<std::size_t>(d.v), 0);
    std::vector<std::string> bad_blocks;
    for (std::size_t bi = 0; bi < d.layout.size(); ++bi) {
      const auto& blk = d.layout[bi];
      std::set<int> distinct(blk.begin(), blk.end());
      const bool in_range = std::all_of(blk.begin(), blk.end(), [&](int t) { return t >= 0 && t < d.v; });
      if (static_cast<int>(blk.size()) != d.k || distinct.size() != blk.size() || !in_range) {
        bad_blocks.push_back("block " + std::to_string(bi + 1));
        continue;
      }
      for (std::size_t i = 0; i < blk.size(); ++i) {
        ++replicates[static_cast<std::size_t>(blk[i])];
        for (std::size_t j = i + 1; j < blk.size(); ++j) {
          ++rep.pair_counts[static_cast<std::size_t>(blk[i])][static_cast<std::size_t>(blk[j])];
          ++rep.pair_counts[static_cast<std::size_t>(blk[j])][static_cast<std::size_t>(blk[i])];
        }
      }
    }
    add("blocks list k distinct varieties", bad_blocks.empty(),
        bad_blocks.empty() ? "ok" : "offending: " + join(bad_blocks));
    if (rep.r) {
      std::vector<std::string> off;
      for (int t = 0; t < d.v; ++t) {
        if (replicates[static_cast<std::size_t>(t)] != *rep.r) {
          off.push_back("variety " + std::to_string(t) + " appears " + std::to_string(replicates[static_cast<std::size_t>(t)]) + "x");
        }
      }
      add("every variety replicated r times", off.empty(), off.empty() ? "ok" : join(off));
    }
    if (rep.lambda) {
      std::vector<std::string> off;
      for (int i = 0; i < d.v; ++i) {
        for (int j = i + 1; j < d.v; ++j) {
          const int c = rep.pair_counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          if (c != *rep.lambda) {
            off.push_back("(" + std::to_string(i) + "," + std::to_string(j) + ")=" + std::to_string(c));
          }
        }
      }
      add("every pair co-occurs lambda times", off.empty(), off.empty() ? "ok" : join(off));
    }
  }

  rep.valid = std::all_of(rep.checks.begin(), rep.checks.end(), [](const ConstraintCheck& c) { return c.passed; });
  return rep;
}

BibDesign develop_cyclic(int modulus, const std::vector<std::vector<int>>& base_blocks, bool with_infinity) {
  if (modulus < 1 || base_blocks.empty()) throw DomainError("cyclic development needs a modulus and base blocks");
  BibDesign d;
  d.v = modulus + (with_infinity ? 1 : 0);
  d.k = static_cast<int>(base_blocks.front().size());
  for (const auto& base : base_blocks) {
    if (static_cast<int>(base.size()) != d.k) throw DomainError("base blocks must share one size");
    for (int shift = 0; shift < modulus; ++shift) {
      std::vector<int> blk;
      for (int t : base) blk.push_back(with_infinity && t == modulus ? modulus : (t + shift) % modulus);
      std::sort(blk.begin(), blk.end());
      d.layout.push_back(std::move(blk));
    }
  }
  d.b = static_cast<int>(d.layout.size());
  return d;
}

BibDesign replicate_design(const BibDesign& design, int times) {
  BibDesign d = design;
  d.layout.clear();
  for (int t = 0; t < times; ++t) d.layout.insert(d.layout.end(), design.layout.begin(), design.layout.end());
  d.b = design.b * times;
  if (design.r) d.r = *design.r * times;
  if (design.lambda) d.lambda = *design.lambda * times;
  return d;
}

BibDesign infer_design(const std::vector<RatingRecord>& records) {
  std::vector<std::string> panelists, formulations;
  for (const auto& r : records) {
    panelists.push_back(r.panelist);
    formulations.push_back(r.formulation);
  }
  panelists = sorted_levels(std::move(panelists));
  formulations = sorted_levels(std::move(formulations));
  std::vector<std::vector<int>> layout(panelists.size());
  for (const auto& r : records) {
    layout[static_cast<std::size_t>(index_of(panelists, r.panelist))].push_back(index_of(formulations, r.formulation));
  }
  BibDesign d;
  d.v = static_cast<int>(formulations.size());
  d.b = static_cast<int>(panelists.size());
  d.k = layout.empty() ? 0 : static_cast<int>(layout.front().size());
  for (auto& blk : layout) std::sort(blk.begin(), blk.end());
  d.layout = std::move(layout);
  return d;
}

StackedDataset build_stacked(const std::vector<RatingRecord>& records, const CodingOptions& options) {
  if (records.empty()) throw DataError("no rating records supplied");
  if (options.scale_points < 2) throw DomainError("scale must have at least 2 points");

  for (const auto& r : records) {
    if (r.rating < 1 || r.rating > options.scale_points) {
      const std::string where = r.source_line ? "line " + std::to_string(r.source_line) + ": " : "";
      throw DataError(where + "rating " + std::to_string(r.rating) + " outside 1.." +
                      std::to_string(options.scale_points));
    }
  }

  Coding coding;
  {
    std::vector<std::string> p, f, a;
    for (const auto& r : records) {
      p.push_back(r.panelist);
      f.push_back(r.formulation);
      a.push_back(r.attribute);
    }
    coding.panelists = sorted_levels(std::move(p));
    coding.formulations = sorted_levels(std::move(f));
    coding.attributes = sorted_levels(std::move(a));
  }
  if (options.reference_formulation) {
    coding.reference_formulation = index_of(coding.formulations, *options.reference_formulation);
    if (coding.reference_formulation < 0) {
      throw DataError("unknown reference formulation '" + *options.reference_formulation + "'; valid levels: " +
                      join(coding.formulations));
    }
  }
  const auto n_attr = coding.attributes.size();
  coding.reference_attribute = n_attr >= 2 ? 1 : 0;
  if (options.reference_attribute) {
    const int idx = index_of(coding.attributes, *options.reference_attribute);
    if (idx < 0) {
      throw DataError("unknown reference attribute '" + *options.reference_attribute + "'; valid levels: " +
                      join(coding.attributes));
    }
    coding.reference_attribute = idx;
  }

  // (attribute, panelist, formulation) -> record
  std::map<std::tuple<int, int, int>, const RatingRecord*> cells;
  for (const auto& r : records) {
    const auto key = std::make_tuple(index_of(coding.attributes, r.attribute), index_of(coding.panelists, r.panelist),
                                     index_of(coding.formulations, r.formulation));
    auto [it, inserted] = cells.emplace(key, &r);
    if (!inserted) {
      throw DataError("duplicate rating for panelist '" + r.panelist + "', formulation '" + r.formulation +
                      "', attribute '" + r.attribute + "'");
    }
  }

  // Every attribute must cover the same (panelist, formulation) cells.
  std::set<std::pair<int, int>> layout;
  for (const auto& [key, rec] : cells) layout.emplace(std::get<1>(key), std::get<2>(key));
  std::vector<std::string> problems;
  for (std::size_t a = 0; a < n_attr; ++a) {
    for (const auto& [p, f] : layout) {
      if (!cells.count({static_cast<int>(a), p, f})) {
        problems.push_back("panelist '" + coding.panelists[static_cast<std::size_t>(p)] + "' lacks attribute '" +
                           coding.attributes[a] + "' for formulation '" +
                           coding.formulations[static_cast<std::size_t>(f)] + "'");
      }
    }
  }
  if (!problems.empty()) {
    throw DataError("attribute sets are inconsistent across panelists: " + problems.front() +
                        (problems.size() > 1 ? " (and " + std::to_string(problems.size() - 1) + " more)" : ""),
                    problems);
  }

  StackedDataset ds;
  ds.coding = coding;
  ds.scale_points = options.scale_points;
  const std::size_t per_attr = layout.size();
  const std::size_t n = per_attr * n_attr;
  const auto v = coding.formulations.size();
  ds.n_formulation_cols = static_cast<int>(v) - 1;
  ds.n_attribute_cols = static_cast<int>(n_attr) - 1;
  const auto p = static_cast<Eigen::Index>(1 + ds.n_formulation_cols + ds.n_attribute_cols);

  if (options.compression_n) {
    ds.compression_n = *options.compression_n;
  } else {
    ds.compression_n = static_cast<long>(options.compression_scope == CompressionScope::kStacked ? n : per_attr);
  }
  const CompressionConfig cfg{options.scale_points, ds.compression_n};
  cfg.validate();

  ds.column_names.push_back("(Intercept)");
  std::vector<int> f_col(v, -1), a_col(n_attr, -1);
  for (std::size_t f = 0, c = 1; f < v; ++f) {
    if (static_cast<int>(f) == coding.reference_formulation) continue;
    f_col[f] = static_cast<int>(c++);
    ds.column_names.push_back("formulation[" + coding.formulations[f] + "]");
  }
  for (std::size_t a = 0, c = static_cast<std::size_t>(1 + ds.n_formulation_cols); a < n_attr; ++a) {
    if (static_cast<int>(a) == coding.reference_attribute) continue;
    a_col[a] = static_cast<int>(c++);
    ds.column_names.push_back("attribute[" + coding.attributes[a] + "]");
  }

  ds.y.resize(static_cast<Eigen::Index>(n));
  ds.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), p);
  ds.blocks.assign(coding.panelists.size(), {});
  Eigen::Index row = 0;
  for (std::size_t a = 0; a < n_attr; ++a) {
    for (const auto& [pi, fi] : layout) {  // std::set order: block-major, then formulation
      const RatingRecord* rec = cells.at({static_cast<int>(a), pi, fi});
      ds.y[row] = rating_to_unit(rec->rating, cfg);
      ds.x(row, 0) = 1.0;
      if (f_col[static_cast<std::size_t>(fi)] >= 0) ds.x(row, f_col[static_cast<std::size_t>(fi)]) = 1.0;
      if (a_col[a] >= 0) ds.x(row, a_col[a]) = 1.0;
      ds.block_index.push_back(pi);
      ds.formulation_index.push_back(fi);
      ds.attribute_index.push_back(static_cast<int>(a));
      ds.rating.push_back(rec->rating);
      ds.blocks[static_cast<std::size_t>(pi)].push_back(static_cast<int>(row));
      ++row;
    }
  }
  return ds;
}

StackedDataset build_separate(const std::vector<RatingRecord>& records, const std::string& attribute,
                              const CodingOptions& options, const std::optional<BibDesign>& design) {
  std::vector<RatingRecord> subset;
  for (const auto& r : records) {
    if (r.attribute == attribute) subset.push_back(r);
  }
  if (subset.empty()) throw DataError("no ratings for attribute '" + attribute + "'");

  if (design && !design->layout.empty()) {
    std::vector<std::string> panelists, formulations;
    for (const auto& r : subset) {
      panelists.push_back(r.panelist);
      formulations.push_back(r.formulation);
    }
    panelists = sorted_levels(std::move(panelists));
    formulations = sorted_levels(std::move(formulations));
    std::map<std::pair<int, int>, int> seen;
    for (const auto& r : subset) ++seen[{index_of(panelists, r.panelist), index_of(formulations, r.formulation)}];
    std::vector<std::string> problems;
    if (static_cast<int>(panelists.size()) != design->b || static_cast<int>(formulations.size()) != design->v) {
      problems.push_back("records have " + std::to_string(panelists.size()) + " panelists and " +
                         std::to_string(formulations.size()) + " formulations; design has b=" +
                         std::to_string(design->b) + ", v=" + std::to_string(design->v));
    } else {
      for (std::size_t bi = 0; bi < design->layout.size(); ++bi) {
        for (int t : design->layout[bi]) {
          auto it = seen.find({static_cast<int>(bi), t});
          const std::string cell = "(block " + std::to_string(bi + 1) + " '" + panelists[bi] + "', formulation '" +
                                   formulations[static_cast<std::size_t>(t)] + "')";
          if (it == seen.end()) {
            problems.push_back("missing cell " + cell);
          } else {
            if (it->second > 1) problems.push_back("duplicate cell " + cell);
            seen.erase(it);
          }
        }
      }
      for (const auto& [cell, count] : seen) {
        problems.push_back("cell outside design (block " + std::to_string(cell.first + 1) + " '" +
                           panelists[static_cast<std::size_t>(cell.first)] + "', formulation '" +
                           formulations[static_cast<std::size_t>(cell.second)] + "')");
      }
    }
    if (!problems.empty()) throw DataError("records do not match the design layout: " + problems.front(), problems);
  }

  CodingOptions opts = options;
  opts.reference_attribute.reset();
  return build_stacked(subset, opts);
}

std::string StackedDataset::fingerprint() const {
  Sha256 h;
  h.update_int(static_cast<long long>(rows()));
  h.update_int(x.cols());
  for (Eigen::Index i = 0; i < y.size(); ++i) h.update_double(y[i]);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) h.update_double(x(i, j));
  }
  for (int b : block_index) h.update_int(b);
  for (const auto& name : column_names) {
    h.update(name);
    h.update(std::string_view("\0", 1));
  }
  return h.finish();
}

}  // namespace unibeta
