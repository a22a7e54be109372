#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace linksched {

/// Raised when rejection sampling cannot place a drop within the attempt budget.
class GeometryInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SystemConfig {
  int n_cells = 4;
  int users_per_cell = 5;
  double area_side_m = 120.0;
  double bs_min_sep_m = 40.0;
  double ue_min_dist_m = 10.0;
  double ue_max_dist_m = 40.0;
  double bandwidth_hz = 10e6;
  double bs_max_power_dbm = 24.0;
  double ue_max_power_dbm = 23.0;
  double bs_noise_figure_db = 12.0;
  double ue_noise_figure_db = 9.0;
  double noise_density_dbm_hz = -174.0;
  double se_cap_bps_hz = 7.0;
  std::uint64_t rng_seed = 1;
  int max_rejection_attempts = 10000;

  /// Throws std::invalid_argument naming the first violated field.
  void validate() const;

  int n_users() const { return n_cells * users_per_cell; }
  int n_nodes() const { return n_cells + n_users(); }
  int n_weights() const { return 2 * n_users(); }
};

enum class NodeKind { kBs, kUe };

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::kBs;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  int cell = 0;
  double max_power_w = 0.0;
  double noise_figure_db = 0.0;
};

/// Linear power gains g(a, b) from transmitter a to receiver b; zero diagonal.
using GainTable = Eigen::MatrixXd;

/// One random drop. Nodes hold the N base stations first, then the N*M users
/// grouped by cell. User i (0-based over users) is node n_cells + i, its
/// downlink weight is weights[2i] and its uplink weight weights[2i + 1].
struct Topology {
  SystemConfig config;
  std::vector<Node> nodes;
  GainTable gains;
  Eigen::VectorXd weights;

  const Node& bs(int cell) const { return nodes[static_cast<std::size_t>(cell)]; }
  const Node& ue(int cell, int slot) const {
    return nodes[static_cast<std::size_t>(config.n_cells + cell * config.users_per_cell + slot)];
  }
  int ue_index(int cell, int slot) const { return cell * config.users_per_cell + slot; }
};

enum class PathLossKind { kBsUeLos, kBsUeNlos, kUeUe, kBsBs };

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Table-1 small-cell path loss in dB; distance in meters.
double path_loss_db(PathLossKind kind, double distance_m);

/// Pico outdoor line-of-sight probability, clamped to [0, 1].
double los_probability(double distance_m);

/// 10^(-(PL + shadow)/10).
double channel_gain_linear(double path_loss_db, double shadow_db);

/// Thermal noise plus receiver noise figure, in watts.
double noise_power_w(const SystemConfig& config, NodeKind receiver);

Topology generate_topology(const SystemConfig& config, std::uint64_t seed);

/// Shadowing standard deviation (dB) used for a link of the given kind.
double shadowing_sigma_db(PathLossKind kind);

}  // namespace linksched
