#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace unibeta {

// One panelist x formulation x attribute hedonic score.
struct RatingRecord {
  std::string panelist;
  std::string formulation;
  std::string attribute;
  int rating = 0;
  // 1-based CSV line the record came from; 0 when built in memory.
  std::size_t source_line = 0;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

// Long-format ratings CSV: header row mandatory, columns
// panelist,formulation,attribute,rating in any order; extra columns ignored.
// Parse errors carry the 1-based line number.
std::vector<RatingRecord> read_ratings_csv(std::istream& in);
std::vector<RatingRecord> read_ratings_csv_file(const std::string& path);

// Splits one CSV line. Quoted fields with embedded commas and doubled quotes
// are supported; multi-line quoted fields are not.
std::vector<std::string> split_csv_line(const std::string& line);

// Orders identifiers numerically when every one parses as an integer,
// lexicographically otherwise.
std::vector<std::string> sorted_levels(std::vector<std::string> levels);

// Per (attribute, formulation) descriptive statistics on the raw rating scale:
// the numbers behind bar charts and box plots. Attribute "(stacked)" pools all
// attributes. Outliers use the 1.5 IQR fence.
struct LevelSummary {
  std::string attribute;
  std::string formulation;
  std::size_t n = 0;
  double mean = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n_outliers = 0;
};

std::vector<LevelSummary> summarize_ratings(const std::vector<RatingRecord>& records);

}  // namespace unibeta
