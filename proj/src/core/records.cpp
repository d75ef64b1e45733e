#include "records.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "error.hpp"

namespace unibeta {
namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Linear-interpolation quantile on sorted data (Hyndman-Fan type 7).
double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return std::nan("");
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

LevelSummary summarize(const std::string& attribute, const std::string& formulation,
                       std::vector<double> values) {
  std::sort(values.begin(), values.end());
  LevelSummary s;
  s.attribute = attribute;
  s.formulation = formulation;
  s.n = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  s.min = values.front();
  s.max = values.back();
  const double iqr = s.q3 - s.q1;
  s.n_outliers = static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [&](double x) {
    return x < s.q1 - 1.5 * iqr || x > s.q3 + 1.5 * iqr;
  }));
  return s;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

std::vector<RatingRecord> read_ratings_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  // Skip a UTF-8 byte order mark and blank leading lines.
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw DataError("ratings CSV is empty (a header row is required)");

  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("line " + std::to_string(line_no) + ": header lacks required column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_panelist = column("panelist");
  const std::size_t c_formulation = column("formulation");
  const std::size_t c_attribute = column("attribute");
  const std::size_t c_rating = column("rating");
  const std::size_t needed = std::max({c_panelist, c_formulation, c_attribute, c_rating}) + 1;

  std::vector<RatingRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = "line " + std::to_string(line_no);
    if (f.size() < needed) {
      throw DataError(where + ": expected at least " + std::to_string(needed) + " fields, found " +
                      std::to_string(f.size()));
    }
    RatingRecord r;
    r.panelist = f[c_panelist];
    r.formulation = f[c_formulation];
    r.attribute = f[c_attribute];
    if (r.panelist.empty() || r.formulation.empty() || r.attribute.empty()) {
      throw DataError(where + ": empty identifier");
    }
    long long rating = 0;
    if (!parse_int(f[c_rating], rating)) {
      throw DataError(where + ": rating '" + f[c_rating] + "' is not an integer");
    }
    if (rating < 1 || rating > 1000000) {
      throw DataError(where + ": rating " + f[c_rating] + " is out of range");
    }
    r.rating = static_cast<int>(rating);
    r.source_line = line_no;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RatingRecord> read_ratings_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ratings file '" + path + "'");
  return read_ratings_csv(in);
}

std::vector<std::string> sorted_levels(std::vector<std::string> levels) {
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const bool numeric = std::all_of(levels.begin(), levels.end(), [](const std::string& s) {
    long long v = 0;
    return parse_int(s, v);
  });
  if (numeric) {
    std::stable_sort(levels.begin(), levels.end(), [](const std::string& a, const std::string& b) {
      long long x = 0, y = 0;
      parse_int(a, x);
      parse_int(b, y);
      return x < y;
    });
  }
  return levels;
}

std::vector<LevelSummary> summarize_ratings(const std::vector<RatingRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> by_cell;
  std::map<std::string, std::vector<double>> pooled;
  for (const auto& r : records) {
    by_cell[{r.attribute, r.formulation}].push_back(r.rating);
    pooled[r.formulation].push_back(r.rating);
  }
  std::vector<std::string> attributes, formulations;
  for (const auto& r : records) {
    attributes.push_back(r.attribute);
    formulations.push_back(r.formulation);
  }
  attributes = sorted_levels(std::move(attributes));
  formulations = sorted_levels(std::move(formulations));

  std::vector<LevelSummary> out;
  for (const auto& a : attributes) {
    for (const auto& f : formulations) {
      auto it = by_cell.find({a, f});
      if (it != by_cell.end()) out.push_back(summarize(a, f, it->second));
    }
  }
  for (const auto& f : formulations) out.push_back(summarize("(stacked)", f, pooled[f]));
  return out;
}

}  // namespace unibeta
