#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "linksched/config.hpp"
#include "linksched/io.hpp"

using namespace linksched;
using nlohmann::json;

namespace {

std::filesystem::path temp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST(TopologyJson, RoundTripIsExact) {
  const Topology t = generate_topology(SystemConfig{}, 12);
  const Topology back = topology_from_json(json::parse(topology_to_json(t).dump()));
  EXPECT_EQ(back.gains, t.gains);
  EXPECT_EQ(back.weights, t.weights);
  ASSERT_EQ(back.nodes.size(), t.nodes.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    EXPECT_EQ(back.nodes[i].position, t.nodes[i].position);
    EXPECT_EQ(back.nodes[i].kind, t.nodes[i].kind);
    EXPECT_EQ(back.nodes[i].cell, t.nodes[i].cell);
  }
  EXPECT_EQ(back.config.rng_seed, 12u);
}

TEST(TopologyJson, LayoutIsRowMajorLinear) {
  SystemConfig c;
  c.n_cells = 1;
  c.users_per_cell = 2;
  const Topology t = generate_topology(c, 3);
  const json j = topology_to_json(t);
  EXPECT_EQ(j.at("gains").at("rows"), 3);
  EXPECT_EQ(j.at("gains").at("data")[1].get<double>(), t.gains(0, 1));
  EXPECT_EQ(j.at("gains").at("data")[3].get<double>(), t.gains(1, 0));
  EXPECT_EQ(j.at("nodes")[0].at("kind"), "BS");
  EXPECT_EQ(j.at("nodes")[1].at("kind"), "UE");
}

TEST(TopologyJson, MalformedDocumentsAreRejected) {
  const Topology t = generate_topology(SystemConfig{}, 1);
  json j = topology_to_json(t);
  j["format"] = "something-else";
  EXPECT_THROW(topology_from_json(j), std::runtime_error);
  j = topology_to_json(t);
  j["gains"]["data"].erase(0);
  EXPECT_THROW(topology_from_json(j), std::runtime_error);
  j = topology_to_json(t);
  j["nodes"][3]["kind"] = "relay";
  EXPECT_THROW(topology_from_json(j), std::runtime_error);
}

TEST(TopologyFile, ArrayRoundTrip) {
  std::vector<Topology> topos = {generate_topology(SystemConfig{}, 1), generate_topology(SystemConfig{}, 2)};
  const auto path = temp("linksched_topos.json").string();
  write_topologies(path, topos);
  const auto back = read_topologies(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].gains, topos[1].gains);
  std::ofstream(path) << "[{\"format\":";
  EXPECT_THROW(read_topologies(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(PowerCorpusCsv, RoundTrip) {
  SystemConfig c;
  c.n_cells = 2;
  c.users_per_cell = 2;
  std::vector<Topology> topos = {generate_topology(c, 1), generate_topology(c, 2)};
  const PowerCorpusSplit split = make_dataset(topos, GpConfig{}, 0.5);
  const auto path = temp("linksched_corpus.csv").string();
  write_power_corpus(path, split.train);
  const PowerCorpus back = read_power_corpus(path, c);
  ASSERT_EQ(back.size(), split.train.size());
  EXPECT_EQ(back.targets, split.train.targets);
  EXPECT_EQ(back.schedule_index, split.train.schedule_index);
  EXPECT_EQ(back.gp_outer_iters, split.train.gp_outer_iters);
  for (std::size_t k = 0; k < back.problems.size(); ++k) {
    const auto& a = back.problems[k];
    const auto& b = split.train.problems[k];
    EXPECT_TRUE(a.gain.isApprox(b.gain, 1e-12));
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.downlink, b.downlink);
    EXPECT_EQ(a.noise_w, b.noise_w);
    EXPECT_EQ(a.p_max_w, b.p_max_w);
  }
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header.rfind("topology,schedule,gp_iters,g0,g1,g2,g3,w0,w1,u0,u1,", 0), 0u);
  std::filesystem::remove(path);
}

TEST(PowerCorpusCsv, MalformedRowsAreRejected) {
  const auto path = temp("linksched_bad.csv").string();
  std::ofstream(path) << "a,b,c\n1,2,3\n";
  EXPECT_THROW(read_power_corpus(path, SystemConfig{}), std::runtime_error);
  {
    std::ofstream os(path);
    os << "topology,schedule,gp_iters,g0,w0,u0,noise0,pmax0,target0\n";
    os << "0,0,3,-80,0.5,1,1e-13,0.25,zz\n";
  }
  EXPECT_THROW(read_power_corpus(path, SystemConfig{}), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(RunConfigTest, DefaultsAndOverrides) {
  const RunConfig d = RunConfig::from_json(json::object());
  EXPECT_EQ(d.system.n_cells, 4);
  EXPECT_EQ(d.gp.trust_factor, 2.0);
  EXPECT_EQ(d.power_train.batch_size, 256);

  const json j = {{"system", {{"n_cells", 2}, {"users_per_cell", 3}}},
                  {"gp", {{"trust_factor", 1.5}, {"init", "given"}}},
                  {"power_train", {{"optimizer", "sgd"}, {"learning_rate", 0.01}, {"init_seed", 5}}},
                  {"dataset", {{"power_topologies", 10}}}};
  const RunConfig c = RunConfig::from_json(j);
  EXPECT_EQ(c.system.n_cells, 2);
  EXPECT_EQ(c.system.users_per_cell, 3);
  EXPECT_EQ(c.gp.trust_factor, 1.5);
  EXPECT_EQ(c.gp.init, GpInit::kGiven);
  EXPECT_EQ(c.power_train.optimizer, OptimizerKind::kSgd);
  EXPECT_EQ(c.power_init_seed, 5u);
  EXPECT_EQ(c.dataset.power_topologies, 10);

  const RunConfig again = RunConfig::from_json(c.to_json());
  EXPECT_EQ(again.to_json(), c.to_json());
  EXPECT_EQ(config_hash(again.to_json()), config_hash(c.to_json()));
  EXPECT_NE(config_hash(c.to_json()), config_hash(d.to_json()));
  EXPECT_EQ(config_hash(c.to_json()).size(), 16u);
}

TEST(RunConfigTest, InvalidValuesAreRejected) {
  EXPECT_THROW(RunConfig::from_json({{"system", {{"n_cells", 0}}}}), std::invalid_argument);
  EXPECT_THROW(RunConfig::from_json({{"gp", {{"trust_factor", 0.5}}}}), std::invalid_argument);
  EXPECT_THROW(RunConfig::from_json({{"power_train", {{"optimizer", "rmsprop"}}}}), std::invalid_argument);
  EXPECT_ANY_THROW(RunConfig::from_json({{"system", {{"n_cells", "four"}}}}));
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), std::runtime_error);
}
