#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("robcomp_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Runs the CLI with stdout captured to `out`; returns the exit status.
  int run(const std::string& args, const std::string& out = "stdout.txt") const {
    const std::string cmd = std::string(ROBCOMP_CLI_PATH) + " " + args + " > " + path(out) + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  json run_json(const std::string& args) const {
    EXPECT_EQ(run(args), 0) << read("stderr.txt");
    return json::parse(read("stdout.txt"));
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, EstimateMedianOfMedians) {
  write("d.txt", "a: 1 2 3\nb: 4 5 6\nc: 7 8 9\n");
  const auto doc = run_json("estimate --estimator 1=median --estimator 2=median --input " + path("d.txt"));
  EXPECT_EQ(doc["result"]["value"], 5.0);
  EXPECT_EQ(doc["version"], "0.1.0");
  EXPECT_EQ(doc["config"]["estimators"], json::array({"median", "median"}));
}

TEST_F(Cli, ConfigEchoKeepsPercentileLevels) {
  write("d.txt", "a: 1 2 3\nb: 4 5 6\n");
  const auto doc = run_json("estimate --estimator 2=percentile:0.55 --estimator 1=percentile:0.45 --input " + path("d.txt"));
  EXPECT_EQ(doc["config"]["estimators"], json::array({"percentile:0.45", "percentile:0.55"}));
}

TEST_F(Cli, BreakdownElevenPoints) {
  write("d.txt", "x: 0 0.15 0.2 0.25 0.4 0.55 0.6 0.65 0.72 0.8 1.0\n");
  const auto doc = run_json("breakdown --estimator 1=median --input " + path("d.txt"));
  EXPECT_EQ(doc["result"]["breakdown"]["g"], 5);
  EXPECT_EQ(doc["result"]["breakdown"]["f"], 6);
}

TEST_F(Cli, BreakdownPlanarCompositeBeta) {
  ASSERT_EQ(run("generate --shape 5x5 --planar --seed 3 --out " + path("p.txt")), 0);
  const auto doc = run_json("breakdown --estimator 1=l1median --estimator 2=siegel --no-onto --input " + path("p.txt"));
  EXPECT_EQ(doc["result"]["composite_beta"]["beta"], 0.25);
}

TEST_F(Cli, ManipulateReportsPlan) {
  ASSERT_EQ(run("generate --shape 5x8 --planar --distribution uniform --scale 10 --seed 4 --out " + path("p.txt")), 0);
  const auto doc = run_json("manipulate --target 1,2 --input " + path("p.txt"));
  EXPECT_EQ(doc["result"]["modified_count"], 12);
  EXPECT_LE(doc["result"]["residual"].get<double>(), 0.02);
}

TEST_F(Cli, ExitCodes) {
  write("bad.txt", "a: 1 2\nb: oops\n");
  EXPECT_EQ(run("estimate --estimator 1=median --input " + path("bad.txt")), 2);
  EXPECT_NE(read("stderr.txt").find("line 2"), std::string::npos);
  write("d.txt", "a: 1 2\n");
  EXPECT_EQ(run("estimate --input " + path("d.txt")), 3);
  EXPECT_EQ(run("estimate --estimator 1=median --estimator 2=l1median --input " + path("d.txt")), 3);
  EXPECT_EQ(run("estimate --bogus"), 64);
  EXPECT_EQ(run(""), 64);
  ASSERT_EQ(run("generate --shape 4x6 --planar --seed 1 --out " + path("p.txt")), 0);
  EXPECT_EQ(run("manipulate --target 1e6,1e6 --grad-tol 1e-300 --input " + path("p.txt")), 4);
}

TEST_F(Cli, TabularFormats) {
  write("d.txt", "a: 1 2 3\n");
  ASSERT_EQ(run("estimate --estimator 1=median --format tabular --input " + path("d.txt")), 0);
  EXPECT_NE(read("stdout.txt").find("result.value\t2\n"), std::string::npos);
  ASSERT_EQ(run("monitor --routers 20 --stream-length 50 --format tabular"), 0);
  EXPECT_EQ(read("stdout.txt").rfind("proportion,interval,n1,k1,", 0), 0u);
}

TEST_F(Cli, SameSeedSameBytes) {
  ASSERT_EQ(run("generate --shape 3x4x5 --seed 9", "g1.txt"), 0);
  ASSERT_EQ(run("generate --shape 3x4x5 --seed 9", "g2.txt"), 0);
  EXPECT_EQ(read("g1.txt"), read("g2.txt"));
  ASSERT_EQ(run("monitor --seed 5 --routers 30 --stream-length 200 --out " + path("m1.json")), 0);
  ASSERT_EQ(run("monitor --seed 5 --routers 30 --stream-length 200 --out " + path("m2.json")), 0);
  EXPECT_EQ(read("m1.json"), read("m2.json"));
  ASSERT_EQ(run("generate --shape 3x4x5 --seed 10", "g3.txt"), 0);
  EXPECT_NE(read("g1.txt"), read("g3.txt"));
}

TEST_F(Cli, ThreeLevelSyntheticRuns) {
  ASSERT_EQ(run("generate --shape 50x100x24 --seed 2 --out " + path("big.txt")), 0);
  const auto doc = run_json("estimate --estimator 1=median --estimator 2=median --estimator 3=median --input " + path("big.txt"));
  EXPECT_EQ(doc["result"]["points"], 120000);
  EXPECT_TRUE(doc["result"]["value"].is_number());
}
