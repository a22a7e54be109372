#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("linksched_cli_" + std::string(
        ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "cfg.json") << R"({"system":{"n_cells":2,"users_per_cell":2},
      "power_train":{"epochs":3,"batch_size":32},"sched_train":{"epochs":3,"batch_size":8},
      "dataset":{"power_topologies":6,"sched_topologies":10,"val_fraction":0.2}})";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }
  int run(std::vector<std::string> args) { return linksched::cli::run(args); }

  fs::path dir_;
};

json read_json(const std::string& path) {
  std::ifstream is(path);
  return json::parse(is);
}

}  // namespace

TEST_F(CliTest, FullPipeline) {
  const std::string cfg = p("cfg.json");
  ASSERT_EQ(run({"gen-dataset", "--config", cfg, "--out", p("data")}), 0);
  EXPECT_TRUE(fs::exists(p("data/power_train.csv")));
  EXPECT_TRUE(fs::exists(p("data/power_val.csv")));
  EXPECT_TRUE(fs::exists(p("data/sched_train_topologies.json")));
  ASSERT_EQ(run({"train-power", "--config", cfg, "--data", p("data"), "--out", p("power.json")}), 0);
  EXPECT_TRUE(fs::exists(p("power.json.curve.csv")));
  ASSERT_EQ(run({"train-sched", "--config", cfg, "--power-model", p("power.json"), "--data", p("data"), "--out",
                 p("sched.json")}),
            0);
  ASSERT_EQ(run({"bench", "--config", cfg, "--power-model", p("power.json"), "--sched-model", p("sched.json"), "--n",
                 "4", "--seed", "9", "--out", p("bench")}),
            0);
  const json manifest = read_json(p("bench/manifest.json"));
  EXPECT_EQ(manifest.at("command"), "bench");
  EXPECT_EQ(manifest.at("seeds").at("bench_seed"), 9);
  EXPECT_EQ(manifest.at("config_hash").get<std::string>().size(), 16u);
  EXPECT_TRUE(manifest.contains("version"));
  EXPECT_TRUE(fs::exists(p("bench/summary.csv")));
  EXPECT_TRUE(fs::exists(p("bench/cdf_DQN-DNN-5.csv")));

  ASSERT_EQ(run({"eval", "--topologies", p("data/sched_val_topologies.json"), "--methods", "greedy-mp,exhaustive-gp",
                 "--config", cfg, "--out", p("eval")}),
            0);
  EXPECT_TRUE(fs::exists(p("eval/cdf_Greedy-MP.csv")));
}

TEST_F(CliTest, GenTopoWritesFilesAndManifest) {
  ASSERT_EQ(run({"gen-topo", "--config", p("cfg.json"), "--seed", "5", "--count", "3", "--out", p("t")}), 0);
  EXPECT_TRUE(fs::exists(p("t/topology_00002.json")));
  const json m = read_json(p("t/manifest.json"));
  EXPECT_EQ(m.at("seeds").at("seed"), 5);
  // The written topology is a single document accepted by eval.
  EXPECT_EQ(run({"eval", "--topologies", p("t/topology_00000.json"), "--methods", "greedy-gp"}), 0);
}

TEST_F(CliTest, ErrorsGiveNonZeroExit) {
  EXPECT_NE(run({}), 0);
  EXPECT_NE(run({"frobnicate"}), 0);
  EXPECT_NE(run({"gen-topo", "--seed", "1"}), 0);
  EXPECT_NE(run({"bench", "--methods", "max-dnn", "--n", "2", "--out", p("b")}), 0);  // no model
  EXPECT_NE(run({"bench", "--methods", "bogus", "--n", "2", "--out", p("b")}), 0);
  EXPECT_NE(run({"train-power", "--data", p("missing"), "--out", p("x.json")}), 0);
}
