#include <doctest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI from the scratch directory, capturing stdout and stderr together.
Run cli(const std::string& args, const std::string& env = "") {
  const std::string log = (fs::current_path() / "cli_output.txt").string();
  const std::string cmd = env + " \"" UNIBETA_CLI "\" " + args + " > \"" + log + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  r.out.assign(std::istreambuf_iterator<char>(in), {});
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::vector<std::vector<std::string>> rows_of(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    out.push_back(f);
  }
  return out;
}

// Each test case works in its own scratch directory under the build tree.
struct Scratch {
  fs::path old = fs::current_path();
  explicit Scratch(const std::string& name) {
    const fs::path dir = fs::path(UNIBETA_SCRATCH) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::current_path(dir);
  }
  ~Scratch() { fs::current_path(old); }
};

}  // namespace

TEST_CASE("validate-design exit codes") {
  Scratch s("design");
  CHECK(cli("validate-design --v 7 --b 7 --k 3 --r 3 --lambda 1").code == 0);
  const auto bad = cli("validate-design --v 8 --b 98 --k 3");
  CHECK(bad.code == 1);
  CHECK(bad.out.find("bk = rv") != std::string::npos);

  spit("fano.csv", "block,variety\n1,1\n1,2\n1,4\n2,2\n2,3\n2,5\n3,3\n3,4\n3,6\n4,4\n4,5\n4,7\n5,5\n5,6\n5,1\n6,6\n6,7\n6,2\n7,7\n7,1\n7,3\n");
  CHECK(cli("validate-design --v 7 --b 7 --k 3 --layout fano.csv --out-dir ok").code == 0);
  CHECK(fs::exists("ok/design_report.json"));
  std::string dup = slurp("fano.csv");
  dup.replace(dup.find("2,3\n"), 4, "2,2\n");
  spit("dup.csv", dup);
  const auto d = cli("validate-design --v 7 --b 7 --k 3 --layout dup.csv");
  CHECK(d.code == 1);
  CHECK(d.out.find("block 2") != std::string::npos);
  spit("broken.csv", "block,variety\n1,1\n1\n");
  const auto p = cli("validate-design --v 7 --b 7 --k 3 --layout broken.csv");
  CHECK(p.code == 1);
  CHECK(p.out.find("line 3") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  Scratch s("usage");
  CHECK(cli("--no-such-flag").code == 2);
  CHECK(cli("fit").code == 2);
  CHECK(cli("simulate --reps 0").code == 2);
  CHECK(cli("fit x.csv --structure m9").code == 2);
}

TEST_CASE("unified fit of the example with all structures") {
  Scratch s("fit_all");
  REQUIRE(cli("--make-example ex.csv").code == 0);
  const auto r = cli("fit ex.csv --unified --structure all --out-dir out");
  REQUIRE(r.code == 0);
  const auto cmp = rows_of(slurp("out/comparison.csv"));
  REQUIRE(cmp.size() == 5u);
  CHECK(cmp[0] == std::vector<std::string>{"model", "structure", "n_params", "phi_hat", "sigma_u2_hat", "loglik", "aic",
                                           "converged"});
  const char* order[] = {"null", "m1", "m2", "m3"};
  for (std::size_t i = 1; i < cmp.size(); ++i) {
    CHECK(cmp[i][1] == order[i - 1]);
    const double p = std::stod(cmp[i][2]), ll = std::stod(cmp[i][5]), aic = std::stod(cmp[i][6]);
    CHECK(aic == -2.0 * ll + 2.0 * p);
    CHECK(cmp[i][7] == "true");
  }
  for (const char* f : {"coefficients_unified.csv", "predicted_means.csv", "observed_fitted.csv", "summary.csv",
                        "lrt.csv", "manifest.json", "fit_unified_m3.json"})
    CHECK(fs::exists(fs::path("out") / f));
  const std::string manifest = slurp("out/manifest.json");
  CHECK(manifest.find("\"sha256\"") != std::string::npos);
  CHECK(manifest.find("\"seed\"") != std::string::npos);

  // Same inputs, same bytes.
  REQUIRE(cli("fit ex.csv --unified --structure all --out-dir again").code == 0);
  for (const char* f : {"comparison.csv", "coefficients_unified.csv", "predicted_means.csv", "lrt.csv"})
    CHECK(slurp(fs::path("out") / f) == slurp(fs::path("again") / f));
}

TEST_CASE("reference level does not change predicted means") {
  Scratch s("reference");
  REQUIRE(cli("--make-example ex.csv").code == 0);
  REQUIRE(cli("fit ex.csv --unified --structure m3 --out-dir a").code == 0);
  REQUIRE(cli("fit ex.csv --unified --structure m3 --reference-formulation F873 --reference-attribute A4_flavor "
              "--out-dir b")
              .code == 0);
  const auto a = rows_of(slurp("a/predicted_means.csv"));
  const auto b = rows_of(slurp("b/predicted_means.csv"));
  REQUIRE(a.size() == 41u);
  REQUIRE(b.size() == a.size());
  std::map<std::string, double> means;
  for (std::size_t i = 1; i < a.size(); ++i) means[a[i][2] + "|" + a[i][3]] = std::stod(a[i][4]);
  for (std::size_t i = 1; i < b.size(); ++i) CHECK(std::abs(means.at(b[i][2] + "|" + b[i][3]) - std::stod(b[i][4])) <= 1e-6);
  CHECK(slurp("a/coefficients_unified.csv") != slurp("b/coefficients_unified.csv"));
}

TEST_CASE("a one-attribute stack reproduces the separate fit byte for byte") {
  Scratch s("single");
  REQUIRE(cli("--make-example ex.csv").code == 0);
  std::istringstream in(slurp("ex.csv"));
  std::string line, kept;
  std::getline(in, line);
  kept = line + "\n";
  while (std::getline(in, line))
    if (line.find("A3_sweetness") != std::string::npos) kept += line + "\n";
  spit("one.csv", kept);
  REQUIRE(cli("fit one.csv --unified --structure all --out-dir u").code == 0);
  REQUIRE(cli("fit one.csv --structure all --out-dir p").code == 0);
  const std::string unified = slurp("u/coefficients_unified.csv");
  const std::string separate = slurp("p/coefficients_A3_sweetness.csv");
  CHECK(unified == separate);
  CHECK(unified.find("m3,") != std::string::npos);
}

TEST_CASE("transform command") {
  Scratch s("transform");
  spit("r.csv", "panelist,formulation,attribute,rating\n1,F1,a,1\n1,F2,a,3\n1,F3,a,5\n");
  const auto r = cli("transform r.csv --n 100 --output t.csv");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("0.005") != std::string::npos);
  const auto rows = rows_of(slurp("t.csv"));
  REQUIRE(rows.size() == 4u);
  CHECK(rows[0].back() == "y_unit");
  CHECK(std::stod(rows[1].back()) == 0.005);
  CHECK(std::stod(rows[2].back()) == 0.5);
  CHECK(std::stod(rows[3].back()) == 0.995);
  CHECK(cli("transform t.csv --output t2.csv").code == 1);
  CHECK_FALSE(fs::exists("t2.csv"));
  spit("bad.csv", "panelist,formulation,attribute,rating\n1,F1,a,1\n1,F2,a,6\n");
  const auto bad = cli("transform bad.csv --output b.csv");
  CHECK(bad.code == 1);
  CHECK(bad.out.find("line 3") != std::string::npos);
}

TEST_CASE("simulate command") {
  Scratch s("simulate");
  const auto one = cli("simulate --scenario \"F2<F3<F1\" --n 40 --reps 1 --seed 5 --details --out-dir one");
  REQUIRE(one.code == 0);
  const auto rows = rows_of(slurp("one/concordance.csv"));
  REQUIRE(rows.size() > 1u);
  CHECK(rows[0] == std::vector<std::string>{"scenario", "truth", "model", "metric", "n", "replications", "valid",
                                            "failures", "concordant", "rate", "alpha", "seed"});
  CHECK(rows[1][5] == "1");
  CHECK(slurp("one/concordance.json").find("\"decision\": \"F2<F3<F1\"") != std::string::npos);

  const std::string args = "simulate --scenario \"F1=F2<F3\" --n 30 --reps 4 --seed 9 --details";
  REQUIRE(cli(args + " --out-dir a").code == 0);
  REQUIRE(cli(args + " --out-dir b").code == 0);
  REQUIRE(cli(args + " --workers 3 --out-dir c").code == 0);
  for (const char* f : {"concordance.csv", "concordance.json"}) {
    CHECK(slurp(fs::path("a") / f) == slurp(fs::path("b") / f));
    CHECK(slurp(fs::path("a") / f) == slurp(fs::path("c") / f));
  }

  // The environment seed is a fallback only.
  REQUIRE(cli("simulate --scenario \"F1=F2<F3\" --n 30 --reps 4 --details --out-dir env", "UNIBETA_SEED=9").code == 0);
  CHECK(slurp("env/concordance.csv") == slurp("a/concordance.csv"));
  CHECK(slurp("env/manifest.json").find("UNIBETA_SEED") != std::string::npos);
  REQUIRE(cli(args + " --out-dir flag", "UNIBETA_SEED=123").code == 0);
  CHECK(slurp("flag/concordance.csv") == slurp("a/concordance.csv"));

  const auto unknown = cli("simulate --scenario \"F1<F1<F2\" --reps 1");
  CHECK(unknown.code == 1);
  CHECK(unknown.out.find("F1=F2=F3") != std::string::npos);
}
