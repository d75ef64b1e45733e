#include <doctest.h>

#include <sstream>
#include <string>

#include "error.hpp"
#include "records.hpp"

using namespace unibeta;

namespace {

std::string message_of(const std::string& csv) {
  std::istringstream in(csv);
  try {
    read_ratings_csv(in);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("reads long-format ratings in any column order") {
  std::istringstream in(
      "\xEF\xBB\xBF"
      "rating,attribute,panelist,formulation,comment\n"
      "5,color,1,F1,\"fine, really\"\n"
      "\n"
      "2,color,1,F2,x\n");
  const auto rows = read_ratings_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == RatingRecord{"1", "F1", "color", 5, 2});
  CHECK(rows[1].rating == 2);
  CHECK(rows[1].source_line == 4);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK(message_of("") .find("header") != std::string::npos);
  CHECK(message_of("panelist,formulation,rating\n1,F1,3\n").find("'attribute'") != std::string::npos);
  CHECK(message_of("panelist,formulation,attribute,rating\n1,F1,a,3\n1,F2,a,x\n").find("line 3") != std::string::npos);
  CHECK(message_of("panelist,formulation,attribute,rating\n1,F1,a,0\n").find("line 2") != std::string::npos);
  CHECK(message_of("panelist,formulation,attribute,rating\n1,F1\n").find("line 2") != std::string::npos);
  CHECK(message_of("panelist,formulation,attribute,rating\n1,,a,3\n").find("line 2") != std::string::npos);
}

TEST_CASE("split_csv_line handles quotes") {
  const auto f = split_csv_line("a,\"b,c\",\"say \"\"hi\"\"\",");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "say \"hi\"");
  CHECK(f[3].empty());
}

TEST_CASE("sorted_levels orders numerically when possible") {
  CHECK(sorted_levels({"10", "2", "1", "2"}) == std::vector<std::string>{"1", "2", "10"});
  CHECK(sorted_levels({"F318", "F179", "F73"}) == std::vector<std::string>{"F179", "F318", "F73"});
}

TEST_CASE("summaries behind the bar and box charts") {
  std::vector<RatingRecord> rows;
  const int ratings[] = {1, 2, 3, 4, 5, 5, 5, 5, 5};
  int p = 0;
  for (int r : ratings) rows.push_back({std::to_string(++p), "F1", "a", r, 0});
  rows.push_back({"1", "F2", "b", 3, 0});
  const auto s = summarize_ratings(rows);
  const LevelSummary* f1 = nullptr;
  const LevelSummary* stacked = nullptr;
  for (const auto& x : s) {
    if (x.attribute == "a" && x.formulation == "F1") f1 = &x;
    if (x.attribute == "(stacked)" && x.formulation == "F1") stacked = &x;
  }
  REQUIRE(f1 != nullptr);
  REQUIRE(stacked != nullptr);
  CHECK(f1->n == 9);
  CHECK(f1->mean == doctest::Approx(35.0 / 9));
  CHECK(f1->median == 5.0);
  // Type-7 quantiles of {1,2,3,4,5,5,5,5,5}.
  CHECK(f1->q1 == 3.0);
  CHECK(f1->q3 == 5.0);
  CHECK(f1->min == 1.0);
  CHECK(f1->max == 5.0);
  // Fences 0 and 8: nothing outside.
  CHECK(f1->n_outliers == 0);
  CHECK(stacked->n == 9);
}
