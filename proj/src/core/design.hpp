#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "records.hpp"

namespace unibeta {

// Balanced incomplete block design descriptor. r and lambda may be left unset,
// in which case validation derives them and checks they are integral.
// layout[block] lists the 0-based variety ids evaluated in that block.
struct BibDesign {
  int v = 0;
  int b = 0;
  int k = 0;
  std::optional<int> r;
  std::optional<int> lambda;
  std::vector<std::vector<int>> layout;
};

struct ConstraintCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct BibReport {
  bool valid = false;
  std::vector<ConstraintCheck> checks;
  // Derived (or supplied) replication and co-occurrence counts, when integral.
  std::optional<int> r;
  std::optional<int> lambda;
  // v x v symmetric co-occurrence counts; empty when no layout was supplied.
  std::vector<std::vector<int>> pair_counts;
};

BibReport validate_bib(const BibDesign& design);

// Develops base blocks modulo `modulus`. When with_infinity is set, the id
// `modulus` is a fixed point (it is not shifted). Used to build test fixtures
// and the bundled example layout.
BibDesign develop_cyclic(int modulus, const std::vector<std::vector<int>>& base_blocks, bool with_infinity);

// Copies a layout `times` times (b and r scale, k and v do not).
BibDesign replicate_design(const BibDesign& design, int times);

// Layout implied by ratings of one attribute: varieties and blocks are indexed
// by sorted level order.
BibDesign infer_design(const std::vector<RatingRecord>& records);

enum class CompressionScope { kPerAttribute, kStacked };

struct CodingOptions {
  std::optional<std::string> reference_formulation;
  std::optional<std::string> reference_attribute;
  int scale_points = 5;
  CompressionScope compression_scope = CompressionScope::kPerAttribute;
  // Overrides the compression count entirely when set.
  std::optional<long> compression_n;
};

// Level sets and reference choices of a built dataset.
struct Coding {
  std::vector<std::string> panelists;
  std::vector<std::string> formulations;
  std::vector<std::string> attributes;
  int reference_formulation = 0;
  int reference_attribute = 0;
};

// Unit-interval responses with the fixed-effect matrix [X1 | X2].
// Column 0 is the intercept, then one dummy per non-reference formulation in
// level order, then one dummy per non-reference attribute. Rows are stacked
// attribute-major; within an attribute, block-major then formulation order.
struct StackedDataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::vector<int> block_index;
  std::vector<int> formulation_index;
  std::vector<int> attribute_index;
  std::vector<int> rating;
  Coding coding;
  std::vector<std::string> column_names;
  int n_formulation_cols = 0;
  int n_attribute_cols = 0;
  long compression_n = 0;
  int scale_points = 0;
  // Row ids of each block in canonical order.
  std::vector<std::vector<int>> blocks;

  std::size_t rows() const { return static_cast<std::size_t>(y.size()); }
  std::size_t n_blocks() const { return blocks.size(); }
  std::size_t n_attributes() const { return coding.attributes.size(); }
  // SHA-256 over the canonical numeric content and level names.
  std::string fingerprint() const;
};

StackedDataset build_stacked(const std::vector<RatingRecord>& records, const CodingOptions& options);

// Single-attribute dataset: X has the intercept plus v-1 formulation dummies
// and no attribute columns. When a design with a layout is given, the records
// must cover exactly its cells (varieties and blocks map onto sorted levels).
StackedDataset build_separate(const std::vector<RatingRecord>& records, const std::string& attribute,
                              const CodingOptions& options, const std::optional<BibDesign>& design = {});

}  // namespace unibeta
