#include "linksched/config.hpp"

#include <cstdio>
#include <fstream>

namespace linksched {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void read_train(const json& j, TrainConfig& t, std::uint64_t& init_seed) {
  read(j, "batch_size", t.batch_size);
  read(j, "learning_rate", t.learning_rate);
  read(j, "beta1", t.beta1);
  read(j, "beta2", t.beta2);
  read(j, "epsilon", t.epsilon);
  read(j, "epochs", t.epochs);
  read(j, "shuffle_seed", t.shuffle_seed);
  read(j, "early_stop_patience", t.early_stop_patience);
  read(j, "init_seed", init_seed);
  if (j.contains("optimizer")) {
    const auto name = j.at("optimizer").get<std::string>();
    if (name == "adam") {
      t.optimizer = OptimizerKind::kAdam;
    } else if (name == "sgd") {
      t.optimizer = OptimizerKind::kSgd;
    } else {
      throw std::invalid_argument("config: unknown optimizer '" + name + "'");
    }
  }
  t.validate();
}

json train_json(const TrainConfig& t, std::uint64_t init_seed) {
  return {{"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"optimizer", t.optimizer == OptimizerKind::kAdam ? "adam" : "sgd"},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"epsilon", t.epsilon},
          {"epochs", t.epochs},
          {"shuffle_seed", t.shuffle_seed},
          {"early_stop_patience", t.early_stop_patience},
          {"init_seed", init_seed}};
}

}  // namespace

json system_config_to_json(const SystemConfig& s) {
  return {{"n_cells", s.n_cells},
          {"users_per_cell", s.users_per_cell},
          {"area_side_m", s.area_side_m},
          {"bs_min_sep_m", s.bs_min_sep_m},
          {"ue_min_dist_m", s.ue_min_dist_m},
          {"ue_max_dist_m", s.ue_max_dist_m},
          {"bandwidth_hz", s.bandwidth_hz},
          {"bs_max_power_dbm", s.bs_max_power_dbm},
          {"ue_max_power_dbm", s.ue_max_power_dbm},
          {"bs_noise_figure_db", s.bs_noise_figure_db},
          {"ue_noise_figure_db", s.ue_noise_figure_db},
          {"noise_density_dbm_hz", s.noise_density_dbm_hz},
          {"se_cap_bps_hz", s.se_cap_bps_hz},
          {"rng_seed", s.rng_seed},
          {"max_rejection_attempts", s.max_rejection_attempts}};
}

SystemConfig system_config_from_json(const json& s, SystemConfig sc) {
  read(s, "n_cells", sc.n_cells);
  read(s, "users_per_cell", sc.users_per_cell);
  read(s, "area_side_m", sc.area_side_m);
  read(s, "bs_min_sep_m", sc.bs_min_sep_m);
  read(s, "ue_min_dist_m", sc.ue_min_dist_m);
  read(s, "ue_max_dist_m", sc.ue_max_dist_m);
  read(s, "bandwidth_hz", sc.bandwidth_hz);
  read(s, "bs_max_power_dbm", sc.bs_max_power_dbm);
  read(s, "ue_max_power_dbm", sc.ue_max_power_dbm);
  read(s, "bs_noise_figure_db", sc.bs_noise_figure_db);
  read(s, "ue_noise_figure_db", sc.ue_noise_figure_db);
  read(s, "noise_density_dbm_hz", sc.noise_density_dbm_hz);
  read(s, "se_cap_bps_hz", sc.se_cap_bps_hz);
  read(s, "rng_seed", sc.rng_seed);
  read(s, "max_rejection_attempts", sc.max_rejection_attempts);
  sc.validate();
  return sc;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  if (j.contains("system")) c.system = system_config_from_json(j.at("system"));
  c.system.validate();
  if (j.contains("gp")) {
    const json& g = j.at("gp");
    read(g, "outer_max_iters", c.gp.outer_max_iters);
    read(g, "outer_tol", c.gp.outer_tol);
    read(g, "trust_factor", c.gp.trust_factor);
    read(g, "inner_max_iters", c.gp.inner_max_iters);
    read(g, "inner_grad_tol", c.gp.inner_grad_tol);
    read(g, "p_floor_frac", c.gp.p_floor_frac);
    if (g.contains("init")) {
      const auto name = g.at("init").get<std::string>();
      if (name == "full_power") {
        c.gp.init = GpInit::kFullPower;
      } else if (name == "given") {
        c.gp.init = GpInit::kGiven;
      } else {
        throw std::invalid_argument("config: unknown gp.init '" + name + "'");
      }
    }
  }
  c.gp.validate();
  if (j.contains("power_train")) read_train(j.at("power_train"), c.power_train, c.power_init_seed);
  if (j.contains("sched_train")) read_train(j.at("sched_train"), c.sched_train, c.sched_init_seed);
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    read(d, "power_topologies", c.dataset.power_topologies);
    read(d, "sched_topologies", c.dataset.sched_topologies);
    read(d, "val_fraction", c.dataset.val_fraction);
    read(d, "seed", c.dataset.seed);
  }
  c.power_train.validate();
  c.sched_train.validate();
  if (c.dataset.power_topologies < 2 || c.dataset.sched_topologies < 2) {
    throw std::invalid_argument("config: dataset needs at least two topologies per corpus");
  }
  if (!(c.dataset.val_fraction > 0 && c.dataset.val_fraction < 1)) {
    throw std::invalid_argument("config: dataset.val_fraction must lie in (0, 1)");
  }
  return c;
}

json RunConfig::to_json() const {
  return {{"system", system_config_to_json(system)},
          {"gp",
           {{"outer_max_iters", gp.outer_max_iters},
            {"outer_tol", gp.outer_tol},
            {"trust_factor", gp.trust_factor},
            {"inner_max_iters", gp.inner_max_iters},
            {"inner_grad_tol", gp.inner_grad_tol},
            {"p_floor_frac", gp.p_floor_frac},
            {"init", gp.init == GpInit::kFullPower ? "full_power" : "given"}}},
          {"power_train", train_json(power_train, power_init_seed)},
          {"sched_train", train_json(sched_train, sched_init_seed)},
          {"dataset",
           {{"power_topologies", dataset.power_topologies},
            {"sched_topologies", dataset.sched_topologies},
            {"val_fraction", dataset.val_fraction},
            {"seed", dataset.seed}}}};
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config '" + path + "'");
  try {
    return RunConfig::from_json(json::parse(is));
  } catch (const json::exception& e) {
    throw std::runtime_error("config '" + path + "': " + e.what());
  }
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace linksched
