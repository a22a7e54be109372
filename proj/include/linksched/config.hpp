#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "linksched/gp.hpp"
#include "linksched/nncore.hpp"
#include "linksched/topo.hpp"

namespace linksched {

struct DatasetConfig {
  int power_topologies = 1300;  // GP-labelled topologies, split train/validation
  int sched_topologies = 2200;
  double val_fraction = 0.1;
  std::uint64_t seed = 1000;
};

/// Everything a run needs. Every key of the JSON layout is optional:
///
///   { "system":      { "n_cells", "users_per_cell", "area_side_m", "bs_min_sep_m",
///                      "ue_min_dist_m", "ue_max_dist_m", "bandwidth_hz",
///                      "bs_max_power_dbm", "ue_max_power_dbm", "bs_noise_figure_db",
///                      "ue_noise_figure_db", "noise_density_dbm_hz", "se_cap_bps_hz",
///                      "rng_seed", "max_rejection_attempts" },
///     "gp":          { "outer_max_iters", "outer_tol", "trust_factor", "inner_max_iters",
///                      "inner_grad_tol", "p_floor_frac", "init": "full_power" | "given" },
///     "power_train": { "batch_size", "learning_rate", "optimizer": "adam" | "sgd", "beta1",
///                      "beta2", "epsilon", "epochs", "shuffle_seed", "early_stop_patience",
///                      "init_seed" },
///     "sched_train": { same keys as power_train },
///     "dataset":     { "power_topologies", "sched_topologies", "val_fraction", "seed" } }
struct RunConfig {
  SystemConfig system;
  GpConfig gp;
  TrainConfig power_train;
  std::uint64_t power_init_seed = 11;
  TrainConfig sched_train;
  std::uint64_t sched_init_seed = 12;
  DatasetConfig dataset;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

RunConfig load_run_config(const std::string& path);

nlohmann::json system_config_to_json(const SystemConfig& config);
/// Missing keys keep `base` values; the result is validated.
SystemConfig system_config_from_json(const nlohmann::json& j, SystemConfig base = {});

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

}  // namespace linksched
