#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "linksched/topo.hpp"

using namespace linksched;

namespace {

SystemConfig small(int n, int m) {
  SystemConfig c;
  c.n_cells = n;
  c.users_per_cell = m;
  return c;
}

double dist(const Node& a, const Node& b) { return (a.position - b.position).norm(); }

}  // namespace

TEST(PathLoss, HandEvaluatedFormulaValues) {
  // Values worked by hand from the Table-1 expressions.
  EXPECT_NEAR(path_loss_db(PathLossKind::kBsUeLos, 100.0), 82.9, 1e-9);
  EXPECT_NEAR(path_loss_db(PathLossKind::kBsUeNlos, 100.0), 107.9, 1e-9);
  EXPECT_NEAR(path_loss_db(PathLossKind::kUeUe, 40.0), 98.45 + 20.0 * std::log10(0.04), 1e-9);
  EXPECT_NEAR(path_loss_db(PathLossKind::kUeUe, 40.0), 70.49, 5e-3);
  EXPECT_NEAR(path_loss_db(PathLossKind::kUeUe, 200.0), 147.82, 5e-3);
  EXPECT_DOUBLE_EQ(path_loss_db(PathLossKind::kBsBs, 100.0), path_loss_db(PathLossKind::kBsUeNlos, 100.0));
}

TEST(PathLoss, UeUeBranchBoundaryIsAtFiftyMeters) {
  EXPECT_NEAR(path_loss_db(PathLossKind::kUeUe, 50.0), 98.45 + 20.0 * std::log10(0.05), 1e-9);
  EXPECT_NEAR(path_loss_db(PathLossKind::kUeUe, 50.0 + 1e-9), 55.78 + 40.0 * std::log10(50.0), 1e-6);
}

TEST(PathLoss, StrictlyIncreasingWithinEachBranch) {
  for (auto kind : {PathLossKind::kBsUeLos, PathLossKind::kBsUeNlos, PathLossKind::kUeUe, PathLossKind::kBsBs}) {
    for (double d = 1.0; d < 1000.0; d *= 1.1) {
      const double next = d * 1.1;
      if (kind == PathLossKind::kUeUe && d <= 50.0 && next > 50.0) continue;
      EXPECT_LT(path_loss_db(kind, d), path_loss_db(kind, next)) << static_cast<int>(kind) << " at " << d;
    }
  }
}

TEST(PathLoss, NonPositiveDistanceIsDomainError) {
  EXPECT_THROW(path_loss_db(PathLossKind::kBsUeLos, 0.0), std::domain_error);
  EXPECT_THROW(path_loss_db(PathLossKind::kUeUe, -3.0), std::domain_error);
}

TEST(LosProbability, HandEvaluatedValues) {
  EXPECT_NEAR(los_probability(30.0), 0.5 - 5.0 * std::exp(-5.2) + 0.5, 1e-12);
  EXPECT_NEAR(los_probability(30.0), 0.9724, 1e-4);
  EXPECT_NEAR(los_probability(1000.0), 0.0, 1e-12);
  EXPECT_NEAR(los_probability(1e-3), 1.0, 1e-12);
}

TEST(LosProbability, BoundedAndNonIncreasingPastPlateau) {
  double prev = 1.0;
  for (double d = 1.0; d < 2000.0; d += 1.0) {
    const double p = los_probability(d);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_LE(p, prev + 1e-15);
    prev = p;
  }
  EXPECT_THROW(los_probability(0.0), std::domain_error);
}

TEST(ChannelGain, DecibelDefinition) {
  EXPECT_NEAR(channel_gain_linear(100.0, 0.0), 1e-10, 1e-22);
  EXPECT_NEAR(channel_gain_linear(82.9, 3.0), std::pow(10.0, -8.59), 1e-20);
  EXPECT_NEAR(channel_gain_linear(82.9, 3.0), 2.57e-9, 0.01e-9);
  EXPECT_GT(channel_gain_linear(400.0, 60.0), 0.0);
}

TEST(ChannelGain, ShadowingSigmaPerKind) {
  EXPECT_EQ(shadowing_sigma_db(PathLossKind::kBsUeLos), 3.0);
  EXPECT_EQ(shadowing_sigma_db(PathLossKind::kBsUeNlos), 4.0);
  EXPECT_EQ(shadowing_sigma_db(PathLossKind::kUeUe), 4.0);
  EXPECT_EQ(shadowing_sigma_db(PathLossKind::kBsBs), 4.0);
}

TEST(Noise, ThermalPlusNoiseFigure) {
  const SystemConfig c;
  EXPECT_NEAR(noise_power_w(c, NodeKind::kUe), 3.162e-13, 0.001e-13);
  EXPECT_NEAR(noise_power_w(c, NodeKind::kBs), 6.31e-13, 0.01e-13);
  EXPECT_NEAR(watts_to_dbm(noise_power_w(c, NodeKind::kUe)), -95.0, 1e-9);
  EXPECT_NEAR(watts_to_dbm(noise_power_w(c, NodeKind::kBs)), -92.0, 1e-9);

  SystemConfig unit = c;
  unit.bandwidth_hz = 1.0;
  unit.ue_noise_figure_db = 0.0;
  EXPECT_NEAR(watts_to_dbm(noise_power_w(unit, NodeKind::kUe)), -174.0, 1e-9);
}

TEST(Units, DbmRoundTrip) {
  EXPECT_NEAR(dbm_to_watts(24.0), 0.2512, 1e-4);
  EXPECT_NEAR(dbm_to_watts(30.0), 1.0, 1e-15);
  EXPECT_NEAR(watts_to_dbm(dbm_to_watts(-37.5)), -37.5, 1e-12);
}

TEST(SystemConfigTest, ValidationRejectsBadFields) {
  EXPECT_NO_THROW(SystemConfig{}.validate());
  auto bad = [](auto mutate) {
    SystemConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](SystemConfig& c) { c.n_cells = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](SystemConfig& c) { c.users_per_cell = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](SystemConfig& c) { c.ue_min_dist_m = 50.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](SystemConfig& c) { c.area_side_m = -1.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](SystemConfig& c) { c.bandwidth_hz = 0.0; }).validate(), std::invalid_argument);
}

TEST(GenerateTopology, PaperDefaultsShape) {
  SystemConfig c;
  const Topology t = generate_topology(c, 7);
  EXPECT_EQ(t.nodes.size(), 24u);
  EXPECT_EQ(t.weights.size(), 40);
  EXPECT_EQ(t.gains.rows(), 24);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(t.nodes[static_cast<std::size_t>(i)].kind, NodeKind::kBs);
  for (int i = 4; i < 24; ++i) EXPECT_EQ(t.nodes[static_cast<std::size_t>(i)].kind, NodeKind::kUe);
  for (int cell = 0; cell < 4; ++cell) {
    for (int s = 0; s < 5; ++s) EXPECT_EQ(t.ue(cell, s).cell, cell);
  }
  EXPECT_NEAR(t.bs(0).max_power_w, dbm_to_watts(24.0), 1e-15);
  EXPECT_NEAR(t.ue(0, 0).max_power_w, dbm_to_watts(23.0), 1e-15);
}

TEST(GenerateTopology, SingleCellSingleUser) {
  const Topology t = generate_topology(small(1, 1), 3);
  ASSERT_EQ(t.nodes.size(), 2u);
  EXPECT_EQ(t.weights.size(), 2);
  const double d = dist(t.bs(0), t.ue(0, 0));
  EXPECT_GE(d, 10.0);
  EXPECT_LE(d, 40.0);
}

TEST(GenerateTopology, DeterministicPerSeed) {
  const SystemConfig c;
  const Topology a = generate_topology(c, 99);
  const Topology b = generate_topology(c, 99);
  const Topology other = generate_topology(c, 100);
  EXPECT_TRUE(a.gains.cwiseEqual(b.gains).all());
  EXPECT_TRUE(a.weights.cwiseEqual(b.weights).all());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) EXPECT_EQ(a.nodes[i].position, b.nodes[i].position);
  EXPECT_FALSE(a.gains.cwiseEqual(other.gains).all());
}

TEST(GenerateTopology, InvariantsOverManyDrops) {
  const SystemConfig c;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Topology t = generate_topology(c, seed);
    for (int a = 0; a < c.n_cells; ++a) {
      for (int b = a + 1; b < c.n_cells; ++b) ASSERT_GE(dist(t.bs(a), t.bs(b)), c.bs_min_sep_m) << seed;
      const Node& bs = t.bs(a);
      ASSERT_GE(bs.position.minCoeff(), 0.0);
      ASSERT_LE(bs.position.maxCoeff(), c.area_side_m);
    }
    for (int cell = 0; cell < c.n_cells; ++cell) {
      for (int s = 0; s < c.users_per_cell; ++s) {
        const Node& ue = t.ue(cell, s);
        const double d = dist(ue, t.bs(cell));
        ASSERT_GE(d, c.ue_min_dist_m - 1e-9) << seed;
        ASSERT_LE(d, c.ue_max_dist_m + 1e-9) << seed;
        for (int other = 0; other < c.n_cells; ++other) {
          // Association to the strongest base station.
          ASSERT_GE(t.gains(cell, ue.id), t.gains(other, ue.id)) << seed;
        }
      }
    }
    for (Eigen::Index a = 0; a < t.gains.rows(); ++a) {
      ASSERT_EQ(t.gains(a, a), 0.0);
      for (Eigen::Index b = 0; b < t.gains.cols(); ++b) {
        if (a == b) continue;
        ASSERT_GT(t.gains(a, b), 0.0);
        ASSERT_LT(t.gains(a, b), 1.0);
        ASSERT_EQ(t.gains(a, b), t.gains(b, a));
      }
    }
    ASSERT_GE(t.weights.minCoeff(), 0.0);
    ASSERT_LE(t.weights.maxCoeff(), 1.0);
  }
}

TEST(GenerateTopology, NodeIdsMatchPositions) {
  const Topology t = generate_topology(small(3, 2), 5);
  for (std::size_t i = 0; i < t.nodes.size(); ++i) EXPECT_EQ(t.nodes[i].id, static_cast<int>(i));
  EXPECT_EQ(t.config.rng_seed, 5u);
}

TEST(GenerateTopology, InfeasibleGeometryFailsAfterBudget) {
  SystemConfig c = small(4, 1);
  c.area_side_m = 10.0;
  c.bs_min_sep_m = 40.0;
  c.max_rejection_attempts = 50;
  EXPECT_THROW(generate_topology(c, 1), GeometryInfeasible);
}
