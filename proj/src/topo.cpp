#include "linksched/topo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace linksched {

namespace {

// Links closer than this are evaluated at this distance so that the
// log-distance formulas cannot produce gains above unity.
constexpr double kMinCouplingDistanceM = 1.0;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("SystemConfig: ") + what);
}

std::vector<Eigen::Vector2d> place_base_stations(const SystemConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coord(0.0, cfg.area_side_m);
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(cfg.n_cells));
  int draws = 0;
  while (static_cast<int>(out.size()) < cfg.n_cells) {
    if (++draws > cfg.max_rejection_attempts) {
      throw GeometryInfeasible("geometry infeasible: cannot place " + std::to_string(cfg.n_cells) +
                               " base stations with separation " +
                               std::to_string(cfg.bs_min_sep_m) + " m");
    }
    const Eigen::Vector2d p(coord(rng), coord(rng));
    const bool clear = std::all_of(out.begin(), out.end(), [&](const Eigen::Vector2d& q) {
      return (p - q).norm() >= cfg.bs_min_sep_m;
    });
    if (clear) out.push_back(p);
  }
  return out;
}

}  // namespace

void SystemConfig::validate() const {
  require(n_cells >= 1, "n_cells must be >= 1");
  require(users_per_cell >= 1, "users_per_cell must be >= 1");
  require(area_side_m > 0, "area_side_m must be > 0");
  require(bs_min_sep_m > 0, "bs_min_sep_m must be > 0");
  require(ue_min_dist_m > 0, "ue_min_dist_m must be > 0");
  require(ue_min_dist_m < ue_max_dist_m, "ue_min_dist_m must be < ue_max_dist_m");
  require(bandwidth_hz > 0, "bandwidth_hz must be > 0");
  require(se_cap_bps_hz > 0, "se_cap_bps_hz must be > 0");
  require(max_rejection_attempts >= 1, "max_rejection_attempts must be >= 1");
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double path_loss_db(PathLossKind kind, double distance_m) {
  if (!(distance_m > 0.0) || !std::isfinite(distance_m)) {
    throw std::domain_error("path_loss_db: distance must be positive and finite");
  }
  const double r_km = distance_m / 1000.0;
  switch (kind) {
    case PathLossKind::kBsUeLos:
      return 103.8 + 20.9 * std::log10(r_km);
    case PathLossKind::kBsUeNlos:
    case PathLossKind::kBsBs:
      return 145.4 + 37.5 * std::log10(r_km);
    case PathLossKind::kUeUe:
      // The far branch takes the distance in meters.
      return distance_m <= 50.0 ? 98.45 + 20.0 * std::log10(r_km)
                                : 55.78 + 40.0 * std::log10(distance_m);
  }
  throw std::logic_error("path_loss_db: unknown kind");
}

double los_probability(double distance_m) {
  if (!(distance_m > 0.0)) throw std::domain_error("los_probability: distance must be positive");
  const double p = 0.5 - std::min(0.5, 5.0 * std::exp(-156.0 / distance_m)) +
                   std::min(0.5, 5.0 * std::exp(-distance_m / 30.0));
  return std::clamp(p, 0.0, 1.0);
}

double channel_gain_linear(double path_loss_db, double shadow_db) {
  return std::pow(10.0, -(path_loss_db + shadow_db) / 10.0);
}

double shadowing_sigma_db(PathLossKind kind) {
  return kind == PathLossKind::kBsUeLos ? 3.0 : 4.0;
}

double noise_power_w(const SystemConfig& config, NodeKind receiver) {
  if (!(config.bandwidth_hz > 0)) throw std::invalid_argument("noise_power_w: bandwidth must be > 0");
  const double nf = receiver == NodeKind::kBs ? config.bs_noise_figure_db : config.ue_noise_figure_db;
  return dbm_to_watts(config.noise_density_dbm_hz + 10.0 * std::log10(config.bandwidth_hz) + nf);
}

Topology generate_topology(const SystemConfig& config, std::uint64_t seed) {
  config.validate();
  const int n_cells = config.n_cells;
  const int n_users = config.n_users();
  const int n_nodes = config.n_nodes();
  const double two_pi = 2.0 * std::numbers::pi;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int attempt = 0; attempt < config.max_rejection_attempts; ++attempt) {
    const auto bs_pos = place_base_stations(config, rng);

    std::vector<Eigen::Vector2d> pos(bs_pos);
    pos.reserve(static_cast<std::size_t>(n_nodes));
    const double r2_lo = config.ue_min_dist_m * config.ue_min_dist_m;
    const double r2_hi = config.ue_max_dist_m * config.ue_max_dist_m;
    for (int c = 0; c < n_cells; ++c) {
      for (int s = 0; s < config.users_per_cell; ++s) {
        const double r = std::sqrt(r2_lo + (r2_hi - r2_lo) * unit(rng));
        const double theta = two_pi * unit(rng);
        pos.push_back(bs_pos[static_cast<std::size_t>(c)] +
                      r * Eigen::Vector2d(std::cos(theta), std::sin(theta)));
      }
    }

    // One path-loss and shadowing realization per unordered pair (reciprocal).
    GainTable g = GainTable::Zero(n_nodes, n_nodes);
    for (int a = 0; a < n_nodes; ++a) {
      for (int b = a + 1; b < n_nodes; ++b) {
        const bool a_bs = a < n_cells;
        const bool b_bs = b < n_cells;
        const double d = std::max(kMinCouplingDistanceM,
                                  (pos[static_cast<std::size_t>(a)] - pos[static_cast<std::size_t>(b)]).norm());
        PathLossKind kind;
        if (a_bs && b_bs) {
          kind = PathLossKind::kBsBs;
        } else if (!a_bs && !b_bs) {
          kind = PathLossKind::kUeUe;
        } else {
          kind = unit(rng) < los_probability(d) ? PathLossKind::kBsUeLos : PathLossKind::kBsUeNlos;
        }
        const double shadow = shadowing_sigma_db(kind) * gauss(rng);
        g(a, b) = g(b, a) = channel_gain_linear(path_loss_db(kind, d), shadow);
      }
    }

    // Strongest-BS association; the drop must stay balanced and inside the annulus.
    std::vector<int> serving(static_cast<std::size_t>(n_users));
    std::vector<int> count(static_cast<std::size_t>(n_cells), 0);
    bool ok = true;
    for (int u = 0; u < n_users && ok; ++u) {
      const int node = n_cells + u;
      int best = 0;
      for (int c = 1; c < n_cells; ++c) {
        if (g(c, node) > g(best, node)) best = c;
      }
      const double d = (pos[static_cast<std::size_t>(node)] - bs_pos[static_cast<std::size_t>(best)]).norm();
      ok = d >= config.ue_min_dist_m && d <= config.ue_max_dist_m;
      serving[static_cast<std::size_t>(u)] = best;
      ++count[static_cast<std::size_t>(best)];
    }
    ok = ok && std::all_of(count.begin(), count.end(),
                           [&](int k) { return k == config.users_per_cell; });
    if (!ok) continue;

    // Regroup users by serving cell, keeping draw order within a cell.
    std::vector<int> order(static_cast<std::size_t>(n_nodes));
    for (int c = 0; c < n_cells; ++c) order[static_cast<std::size_t>(c)] = c;
    int next = n_cells;
    for (int c = 0; c < n_cells; ++c) {
      for (int u = 0; u < n_users; ++u) {
        if (serving[static_cast<std::size_t>(u)] == c) order[static_cast<std::size_t>(next++)] = n_cells + u;
      }
    }

    Topology topo;
    topo.config = config;
    topo.config.rng_seed = seed;
    topo.nodes.resize(static_cast<std::size_t>(n_nodes));
    topo.gains.resize(n_nodes, n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
      const int src = order[static_cast<std::size_t>(i)];
      Node& node = topo.nodes[static_cast<std::size_t>(i)];
      node.id = i;
      node.position = pos[static_cast<std::size_t>(src)];
      if (i < n_cells) {
        node.kind = NodeKind::kBs;
        node.cell = i;
        node.max_power_w = dbm_to_watts(config.bs_max_power_dbm);
        node.noise_figure_db = config.bs_noise_figure_db;
      } else {
        node.kind = NodeKind::kUe;
        node.cell = serving[static_cast<std::size_t>(src - n_cells)];
        node.max_power_w = dbm_to_watts(config.ue_max_power_dbm);
        node.noise_figure_db = config.ue_noise_figure_db;
      }
      for (int j = 0; j < n_nodes; ++j) topo.gains(i, j) = g(src, order[static_cast<std::size_t>(j)]);
    }
    topo.weights.resize(config.n_weights());
    for (int k = 0; k < config.n_weights(); ++k) topo.weights(k) = unit(rng);
    return topo;
  }
  throw GeometryInfeasible("geometry infeasible: no balanced drop after " +
                           std::to_string(config.max_rejection_attempts) + " attempts");
}

}  // namespace linksched
