#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "obflip/cli.hpp"

using namespace obflip;
namespace fs = std::filesystem;

namespace {

const std::string kData = OBFLIP_DATA_DIR;

struct Run {
  int status;
  std::string out;
  std::string err;
  std::optional<Report> report;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "obflip");
  std::ostringstream out, err;
  auto r = cli::run_command(args, out, err);
  return {r.status, out.str(), err.str(), std::move(r.report)};
}

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "obflip_test_cli";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code_of(const std::string& args) {
  const int rc = std::system((std::string(OBFLIP_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// CSV from the two-covariate DGP config, regenerated per test run.
fs::path simulated_csv() {
  const auto csv = temp_dir() / "two_covariate.csv";
  const auto r = run({"simulate", "--config", kData + "/two_covariate_dgp.json", "--csv", csv.string()});
  EXPECT_EQ(r.status, 0) << r.err;
  return csv;
}

}  // namespace

TEST(Cli, DecomposeSbpBmiParams) {
  const auto r = run({"decompose", "--params", kData + "/sbp_bmi_params.json"});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json& d = r.report->body.at("decomposition");
  EXPECT_NEAR(d["by_H"]["explained"].get<double>(), -2.0, 1e-9);
  EXPECT_NEAR(d["by_H"]["unexplained"].get<double>(), -0.4, 1e-9);
  EXPECT_NEAR(d["by_K"]["explained"].get<double>(), -2.8, 1e-9);
  EXPECT_NEAR(d["by_K"]["unexplained"].get<double>(), 0.4, 1e-9);
  EXPECT_NEAR(d["by_H"]["total_gap"].get<double>(), -2.4, 1e-9);
  EXPECT_NE(r.out.find("-2.800"), std::string::npos);
}

TEST(Cli, VolumeExactD1) {
  const auto r = run({"volume", "--component", "unexplained", "--d", "1", "--exact"});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json& row = r.report->body.at("series").at(0);
  EXPECT_NEAR(row["fraction"].get<double>(), 0.25, 1e-9);
  EXPECT_NE(r.out.find("0.250000"), std::string::npos);
}

TEST(Cli, VolumeSeriesOverDRange) {
  const auto r = run({"volume", "--component", "unexplained", "--d-max", "5", "--exact"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.report->body.at("series").size(), 5u);
}

TEST(Cli, FlipcheckTrace) {
  const auto r = run({"flipcheck", "--params", kData + "/sbp_bmi_params.json"});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json& f = r.report->body.at("flips");
  EXPECT_EQ(f["unexplained"]["verdict"], "flip");
  EXPECT_NE(r.out.find("10 < 10.4 < 10.8"), std::string::npos) << r.out;
  EXPECT_NE(f.dump().find("10 < 10.4 < 10.8"), std::string::npos);
}

TEST(Cli, HrQuartile2Params) {
  const auto r = run({"decompose", "--params", kData + "/hr_quartile2_params.json"});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json& d = r.report->body.at("decomposition");
  EXPECT_NEAR(d["by_K"]["explained"].get<double>(), 0.021, 0.002);
  EXPECT_NEAR(d["by_H"]["explained"].get<double>(), -0.007, 0.002);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).status, 1);
  EXPECT_EQ(run({"nosuch"}).status, 1);
  EXPECT_EQ(run({"volume", "--d", "3"}).status, 1);  // Monte Carlo without --seed
  EXPECT_EQ(run({"volume", "--d", "3", "--draws", "10", "--seed", "1"}).status, 1);
  EXPECT_EQ(run({"decompose"}).status, 1);
  EXPECT_EQ(run({"decompose", "--data", "x.csv"}).status, 1);
  const auto help = run({"volume", "--help"});
  EXPECT_EQ(help.status, 0);
  EXPECT_NE(help.out.find("--component"), std::string::npos);
}

TEST(Cli, DataErrors) {
  EXPECT_EQ(run({"decompose", "--params", "/nonexistent.json"}).status, 2);
  const auto csv = simulated_csv();
  const auto r = run({"decompose", "--data", csv.string(), "--outcome", "y", "--group", "sex", "--h-value", "M",
                      "--k-value", "F", "--covariates", "x1,missing"});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("missing"), std::string::npos);
}

TEST(Cli, BinaryExitCodes) {
  EXPECT_EQ(exit_code_of("volume --component unexplained --d 1 --exact"), 0);
  EXPECT_EQ(exit_code_of("volume --bogus"), 1);
  EXPECT_EQ(exit_code_of("flipcheck --params /nonexistent.json"), 2);
}

TEST(Cli, BootstrapTableHasParenthesizedSes) {
  const auto csv = simulated_csv();
  const auto r = run({"decompose", "--data", csv.string(), "--outcome", "y", "--group", "sex", "--h-value", "M",
                      "--k-value", "F", "--covariates", "x1,x2", "--bootstrap", "--B", "200", "--seed", "3"});
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  // Each reference row is followed by a line holding its three parenthesized SEs.
  std::vector<std::string> table;
  while (std::getline(lines, line)) table.push_back(line);
  int reference_rows = 0;
  for (std::size_t i = 0; i + 1 < table.size(); ++i) {
    if (table[i].rfind("M ", 0) == 0 || table[i].rfind("F ", 0) == 0) {
      ++reference_rows;
      EXPECT_EQ(std::count(table[i + 1].begin(), table[i + 1].end(), '('), 3) << r.out;
    }
  }
  EXPECT_EQ(reference_rows, 2) << r.out;
  EXPECT_NE(r.out.find("Explained"), std::string::npos);
  EXPECT_NE(r.out.find("Unexplained"), std::string::npos);
  EXPECT_NE(r.out.find("Total gap"), std::string::npos);
  EXPECT_TRUE(r.report->body.contains("bootstrap"));
}

TEST(Cli, BootstrapRequiresSeed) {
  const auto csv = simulated_csv();
  const auto r = run({"bootstrap", "--data", csv.string(), "--outcome", "y", "--group", "sex", "--h-value", "M",
                      "--k-value", "F", "--covariates", "x1,x2", "--B", "200"});
  EXPECT_EQ(r.status, 1);
}

TEST(Cli, JsonRoundTrip) {
  const auto path = temp_dir() / "roundtrip.json";
  const auto r = run({"decompose", "--params", kData + "/sbp_bmi_params.json", "--out", path.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json parsed = Json::parse(slurp(path));
  EXPECT_EQ(parsed, r.report->document());
  EXPECT_EQ(parsed["schema_version"], 1);
  EXPECT_EQ(Json::parse(parsed.dump()), parsed);
}

TEST(Cli, SeededRunsAreByteIdenticalAcrossThreadCounts) {
  const auto dir = temp_dir();
  auto volume = [&](const std::string& threads, const std::string& name) {
    const auto path = dir / name;
    const auto r = run({"volume", "--component", "unexplained", "--d", "3,7", "--draws", "20000", "--seed", "11",
                        "--threads", threads, "--out", path.string()});
    EXPECT_EQ(r.status, 0) << r.err;
    return slurp(path);
  };
  const auto a = volume("1", "v1.json"), b = volume("1", "v2.json"), c = volume("3", "v3.json");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);

  const auto csv = simulated_csv();
  auto boot = [&](const std::string& threads, const std::string& name) {
    const auto path = dir / name;
    const auto r = run({"bootstrap", "--data", csv.string(), "--outcome", "y", "--group", "sex", "--h-value", "M",
                        "--k-value", "F", "--covariates", "x1,x2", "--B", "150", "--seed", "4", "--threads", threads,
                        "--out", path.string()});
    EXPECT_EQ(r.status, 0) << r.err;
    return slurp(path);
  };
  EXPECT_EQ(boot("1", "b1.json"), boot("4", "b2.json"));
}

TEST(Cli, SearchWithConfig) {
  const auto csv = simulated_csv();
  const auto config = temp_dir() / "census.json";
  std::ofstream(config) << R"({"mode": "icu-style", "data": "two_covariate.csv", "outcome": "y",
    "group": {"column": "sex", "H": "M", "K": "F"}, "covariates": ["x1", "x2"],
    "generators": [{"type": "whole"}, {"type": "quantile", "column": "x1", "bins": 4},
                   {"type": "random", "fraction": 0.5, "count": 5}],
    "bootstrap": {"B": 100, "scope": "flips"}})";
  const auto a = run({"search", "--config", config.string(), "--seed", "9", "--out", (temp_dir() / "s1.json").string()});
  ASSERT_EQ(a.status, 0) << a.err;
  const auto b = run({"search", "--config", config.string(), "--seed", "9", "--out", (temp_dir() / "s2.json").string()});
  EXPECT_EQ(slurp(temp_dir() / "s1.json"), slurp(temp_dir() / "s2.json"));
  EXPECT_EQ(a.report->body["aggregates"]["specs"], 10);
  EXPECT_EQ(run({"search", "--config", config.string()}).status, 1);  // no seed anywhere
}

TEST(Cli, ShippedCensusExample) {
  const auto r = run({"search", "--config", kData + "/census_example.json"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.report->body["aggregates"]["specs"], 16);
}

TEST(Cli, SimulateIsDeterministic) {
  const auto a = temp_dir() / "sim_a.csv", b = temp_dir() / "sim_b.csv";
  ASSERT_EQ(run({"simulate", "--config", kData + "/sbp_bmi_dgp.json", "--csv", a.string()}).status, 0);
  ASSERT_EQ(run({"simulate", "--config", kData + "/sbp_bmi_dgp.json", "--csv", b.string()}).status, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  const auto r = run({"decompose", "--data", a.string(), "--outcome", "sbp", "--group", "group", "--h-value", "H",
                      "--k-value", "K", "--covariates", "bmi"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NEAR(r.report->body["decomposition"]["by_H"]["total_gap"].get<double>(), -2.4, 0.5);
}
