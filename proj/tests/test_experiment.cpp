#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dppmle/experiment.hpp"

using namespace dppmle;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DPPMLE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dppmle_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Presets, Table1AndTwoByTwo) {
  const ExperimentConfig t = preset_config("table1");
  ASSERT_EQ(t.kernels.size(), 3u);
  EXPECT_EQ(t.kernels[1].truth, Eigen::MatrixXd(Eigen::Vector3d(7, 5, 9).asDiagonal()));
  EXPECT_EQ(t.sample_sizes, std::vector<std::size_t>{30000});
  EXPECT_EQ(t.methods, (std::vector<Method>{Method::newton, Method::sgd}));
  const ExperimentConfig s = preset_config("twobytwo");
  EXPECT_EQ(s.sample_sizes, (std::vector<std::size_t>{300, 3000, 10000, 30000}));
  EXPECT_EQ(s.methods, std::vector<Method>{Method::closed2x2});
  EXPECT_THROW(preset_config("table9"), ConfigError);
}

TEST(Config, JsonAndValidation) {
  const auto j = nlohmann::json::parse(R"({
    "kernel": [[1, 1], [1, 2]], "method": "closed2x2",
    "sample_sizes": [300], "seeds": [1, 2], "output_dir": "x"})");
  const ExperimentConfig c = config_from_json(j);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_NO_THROW(validate_config(c));

  ExperimentConfig empty = c;
  empty.sample_sizes.clear();
  EXPECT_THROW(validate_config(empty), ConfigError);

  ExperimentConfig wrong = c;
  wrong.kernels[0].truth = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(validate_config(wrong), ConfigError);

  ExperimentConfig block = c;
  block.methods = {Method::block};
  EXPECT_THROW(validate_config(block), ConfigError);

  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"method": "lbfgs"})")), ConfigError);
}

TEST(RunCells, DivergenceIsARowAndOutputIsReproducible) {
  ExperimentConfig c = preset_config("twobytwo");
  c.sample_sizes = {300, 3000};
  c.seeds = {0, 1, 2};
  c.methods = {Method::closed2x2, Method::sgd};
  c.iterations = 2000;
  const ExperimentResult a = run_cells(c);
  const ExperimentResult b = run_cells(c);
  ASSERT_EQ(a.rows.size(), 12u);
  std::ostringstream ca, cb;
  write_runs_csv(ca, a.rows);
  write_runs_csv(cb, b.rows);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_EQ(ca.str().rfind("kernel,n,seed,method,iterations,status,ell_distance,estimate\n", 0), 0u);
  EXPECT_EQ(a.summary.dump(), b.summary.dump());
}

TEST(RunExperiment, WritesArtifacts) {
  const fs::path dir = scratch("artifacts");
  ExperimentConfig c = preset_config("twobytwo");
  c.sample_sizes = {300};
  c.output_dir = dir.string();
  std::ostringstream log;
  EXPECT_EQ(run_experiment(c, log), 0);
  EXPECT_TRUE(fs::exists(dir / "runs.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["groups"][0]["method"], "closed2x2");
  EXPECT_TRUE(summary["groups"][0]["median_ell_by_n"].contains("300"));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  EXPECT_EQ(run_cli("experiment --kernel '1,1;1,2' --method closed2x2 --n 300 --out " +
                    (dir / "ok").string()),
            0);
  const fs::path cfg = dir / "empty.json";
  std::ofstream(cfg) << R"({"kernel": [[1,1],[1,2]], "method": "closed2x2", "sample_sizes": []})";
  EXPECT_EQ(run_cli("experiment --config " + cfg.string()), 2);
  EXPECT_EQ(run_cli("experiment --config " + (dir / "missing.json").string()), 3);
  EXPECT_EQ(run_cli("estimate --kernel '1,2;2,1' --method newton"), 2);
  EXPECT_EQ(run_cli("verify --level nonsense"), 2);
  EXPECT_EQ(run_cli("sample --kernel '1,1;1,2' --n 5 --out /nonexistent/dir/x.csv"), 3);
}

TEST(Cli, SampleThenEstimateFromFile) {
  const fs::path dir = scratch("roundtrip");
  const std::string batch = (dir / "b.csv").string();
  ASSERT_EQ(run_cli("sample --kernel '1,1;1,2' --n 3000 --seed 4 --out " + batch), 0);
  const std::string text = slurp(batch);
  EXPECT_EQ(text.rfind("index,mask,items\n", 0), 0u);
  ASSERT_EQ(run_cli("sample --kernel '1,1;1,2' --n 3000 --seed 4 --out " + batch + "2"), 0);
  EXPECT_EQ(text, slurp(batch + "2"));
  EXPECT_EQ(run_cli("estimate --kernel '1,1;1,2' --batch " + batch + " --method closed2x2"), 0);
  EXPECT_EQ(run_cli("estimate --kernel '1,1;1,2' --batch " + batch +
                    " --method newton --init '1,0.5;0.5,1.5' --trace " + (dir / "t.csv").string()),
            0);
  EXPECT_EQ(slurp(dir / "t.csv").rfind("iter,objective,grad_norm\n", 0), 0u);
}

TEST(Cli, VerifyQuickPasses) {
  EXPECT_EQ(run_cli("verify --level quick"), 0);
}
