#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sketchls/montecarlo.hpp"
#include "sketchls/rng.hpp"

using namespace sketchls;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SKETCHLS_CLI_PATH;

int run(const std::string& args, const std::string& stdout_path = "") {
  std::string cmd = kCli + " " + args;
  if (!stdout_path.empty()) cmd += " > " + stdout_path;
  cmd += " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

// Small synthetic regression CSV written once per process.
std::string fixture_csv(Eigen::Index n = 120, Eigen::Index p = 3) {
  static std::string path;
  if (!path.empty()) return path;
  const auto sd = synthetic_dataset(n, p, 4242);
  path = temp_file("sketchls_cli_fixture.csv").string();
  std::ofstream os(path);
  os << "y";
  for (Eigen::Index j = 0; j < p; ++j) os << ",x" << (j + 1);
  os << "\n";
  os.precision(17);
  for (Eigen::Index i = 0; i < n; ++i) {
    os << sd.dataset.y[i];
    for (Eigen::Index j = 0; j < p; ++j) os << ',' << sd.dataset.X(i, j);
    os << "\n";
  }
  return path;
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (const char c : text)
    if (c == '\n') ++lines;
  return lines;
}

}  // namespace

TEST_CASE("sketch subcommand writes k rows plus a header") {
  const auto out = temp_file("sketchls_cli_sketch.csv").string();
  const int code = run("sketch --input " + fixture_csv() +
                       " --response y --method gaussian --k 20 --seed 7 -o " +
                       out);
  CHECK(code == 0);
  const auto text = slurp(out);
  CHECK(count_lines(text) == 21);
  CHECK(text.rfind("y_tilde,x1,x2,x3\n", 0) == 0);
}

TEST_CASE("unknown sketch method is a usage error") {
  const int code = run("sketch --input " + fixture_csv() +
                       " --response y --method bogus --k 20 --seed 7");
  CHECK(code == 2);
}

TEST_CASE("missing input file is a data error") {
  const int code = run(
      "sketch --input /nonexistent.csv --response y --method gaussian "
      "--k 20 --seed 7");
  CHECK(code == 3);
}

TEST_CASE("materialized countsketch has one sign per column") {
  const auto csv = temp_file("sketchls_cli_cw_fixture.csv").string();
  {
    const auto sd = synthetic_dataset(36, 2, 5);
    std::ofstream os(csv);
    os << "y,x1,x2\n";
    os.precision(17);
    for (Eigen::Index i = 0; i < 36; ++i)
      os << sd.dataset.y[i] << ',' << sd.dataset.X(i, 0) << ','
         << sd.dataset.X(i, 1) << "\n";
  }
  const auto out = temp_file("sketchls_cli_cw.csv").string();
  const int code = run("sketch --input " + csv +
                       " --response y --method cw --k 32 --seed 3 "
                       "--materialize -o " + out);
  CHECK(code == 0);
  const auto text = slurp(out);
  REQUIRE(count_lines(text) == 32);
  // Parse and audit: 32x36, exactly one +-1 per column.
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    REQUIRE(row.size() == 36);
    rows.push_back(std::move(row));
  }
  for (int j = 0; j < 36; ++j) {
    int nonzero = 0;
    for (int i = 0; i < 32; ++i)
      if (rows[i][j] != 0.0) {
        ++nonzero;
        CHECK(std::abs(rows[i][j]) == 1.0);
      }
    CHECK(nonzero == 1);
  }
}

TEST_CASE("fit full matches the library and omits sketch metadata") {
  const auto out = temp_file("sketchls_cli_fit_full.json").string();
  const int code = run("fit --input " + fixture_csv() +
                       " --response y --estimator full -o " + out);
  CHECK(code == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK_FALSE(j.at("estimate").contains("spec"));
  const Dataset d = load_csv(fixture_csv(), "y");
  const FitSummary fsum = fit_full(d);
  for (int i = 0; i < 3; ++i)
    CHECK(j.at("estimate").at("beta")[i].get<double>() ==
          doctest::Approx(fsum.beta_f[i]).epsilon(1e-9));
}

TEST_CASE("fit pstar below the variance threshold is a data error") {
  // p=3, so k = p+2 = 5 violates k > p+3.
  const int code = run("fit --input " + fixture_csv() +
                       " --response y --method gaussian --k 5 --seed 1 "
                       "--estimator pstar");
  CHECK(code == 3);
}

TEST_CASE("fit complete emits intervals with the method annotation") {
  const auto out = temp_file("sketchls_cli_fit_s.json").string();
  int code = run("fit --input " + fixture_csv() +
                 " --response y --method gaussian --k 40 --seed 1 "
                 "--estimator s --alpha 0.05 -o " + out);
  CHECK(code == 0);
  auto j = nlohmann::json::parse(slurp(out));
  CHECK(j.at("intervals").at("method") == "exact_t");
  CHECK(j.at("intervals").at("lower").size() == 3);
  CHECK(j.at("estimate").at("spec").at("kind") == "gaussian");
  CHECK(j.at("variance").at("formula_tag") == "eq6_plugin");
  CHECK(j.contains("diagnostics"));

  code = run("fit --input " + fixture_csv() +
             " --response y --method cw --k 40 --seed 1 "
             "--estimator s --alpha 0.05 -o " + out);
  CHECK(code == 0);
  j = nlohmann::json::parse(slurp(out));
  CHECK(j.at("intervals").at("method") == "asymptotic_normal");
}

TEST_CASE("diagnose reports epsilon, bounds, advisory table and quantiles") {
  const auto out = temp_file("sketchls_cli_diag.json").string();
  const int code = run("diagnose --input " + fixture_csv() +
                       " --response y --method gaussian --k 60 --seed 2 "
                       "--reps 50 -o " + out);
  CHECK(code == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j.contains("max_leverage"));
  CHECK(j.at("bound_audit").contains("satisfied"));
  CHECK(j.at("mahalanobis").contains("p_value"));
  CHECK(j.at("epsilon_quantiles").at("reps") == 50);
  CHECK(j.at("epsilon_quantiles").at("median").get<double>() > 0.0);
  for (const auto& row : j.at("recommended_k")) {
    CHECK(row.at("advisory") == true);
    CHECK(row.at("k").get<long>() > 0);
  }
}

TEST_CASE("experiment runs from a config file and is seed-deterministic") {
  const auto cfg_path = temp_file("sketchls_cli_cfg.json").string();
  {
    std::ofstream os(cfg_path);
    os << R"({"dataset":{"type":"synthetic","n":200,"p":3,"seed":8},
             "kinds":["gaussian"],"ks":[24],
             "estimators":["s","pstar"],
             "replications":30,"master_seed":55,"parallelism":2})";
  }
  const auto out = temp_file("sketchls_cli_report.json").string();
  const auto rec1 = temp_file("sketchls_cli_rec1.csv").string();
  const auto rec2 = temp_file("sketchls_cli_rec2.csv").string();
  int code = run("experiment --suite mse --config " + cfg_path + " -o " + out +
                 " --records-csv " + rec1);
  CHECK(code == 0);
  code = run("experiment --suite mse --config " + cfg_path + " -o " + out +
             " --records-csv " + rec2);
  CHECK(code == 0);
  CHECK(slurp(rec1) == slurp(rec2));
  CHECK(!slurp(rec1).empty());
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j.at("cells").size() == 2);  // one per (kind, k, estimator)
  CHECK(j.at("master_seed") == 55);
}

TEST_CASE("config schema violations exit with the usage code") {
  const auto cfg_path = temp_file("sketchls_cli_badcfg.json").string();
  {
    std::ofstream os(cfg_path);
    os << R"({"dataset":{"type":"synthetic","n":200,"p":3,"seed":8}})";
  }
  CHECK(run("experiment --suite mse --config " + cfg_path) == 2);
  CHECK(run("experiment --suite bogus --config " + cfg_path) == 2);
}
