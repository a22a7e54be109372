#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "linksched/linkmodel.hpp"
#include "linksched/nncore.hpp"
#include "linksched/powernet.hpp"
#include "linksched/topo.hpp"

namespace linksched {

/// Width of the pairwise-gain input block: max(600, (N + N M)^2).
int sched_gain_block_width(int n_cells, int users_per_cell);

/// Fig. 2(b) layout: raw input blocks H and W concatenated, trunk 800-800-1200
/// (ReLU), linear output with one value per schedule.
MlpSpec default_sched_spec(int n_cells, int users_per_cell);

struct SchedNetEncoding {
  Eigen::VectorXd h_block;  // standardized dB node-pair gains, zero diagonal, zero padding
  Eigen::VectorXd w_block;  // all 2 N M link weights
};

/// Off-diagonal node-pair gains in dB, row-major over the (N + N M)^2 table.
/// Diagonal entries are 0.
Eigen::VectorXd pair_gain_features_db(const Topology& topology);

SchedNetEncoding encode_topology(const Topology& topology, const FeatureStandardizer& pair_stats, int block_width);

/// One row per topology: the capped WSR that the power network achieves on
/// every schedule.
struct SchedCorpus {
  std::vector<Topology> topologies;
  Eigen::MatrixXd wsr_bps;  // schedule_count x n, raw bits/s

  Eigen::Index size() const { return wsr_bps.cols(); }
};

struct SchedCorpusSplit {
  SchedCorpus train;
  SchedCorpus validation;
};

/// WSR of the power network's allocation for every schedule of a topology.
Eigen::VectorXd power_net_schedule_values(const PowerNet& power_net, const Topology& topology);

SchedCorpusSplit make_sched_dataset(std::span<const Topology> topologies, const PowerNet& power_net,
                                    double val_fraction = 0.1);

class SchedNet {
 public:
  SchedNet() = default;
  SchedNet(MlpModel model, FeatureStandardizer pair_stats, double target_mean, double target_std, int n_cells,
           int users_per_cell);

  /// Fresh network; pair statistics and the scalar target normalization come from `corpus`.
  static SchedNet create(const SchedCorpus& corpus, std::uint64_t init_seed);

  const MlpModel& model() const { return model_; }
  MlpModel& model() { return model_; }
  int n_cells() const { return n_cells_; }
  int users_per_cell() const { return users_per_cell_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }

  Dataset to_dataset(const SchedCorpus& corpus) const;

  /// Network outputs (normalized scale), one per flat schedule index.
  Eigen::VectorXd predict_normalized(const Topology& topology) const;

  /// De-normalized WSR estimates (bits/s), index k for flat_index k.
  Eigen::VectorXd predict_values(const Topology& topology) const;
  double denormalize(double normalized) const { return target_mean_ + target_std_ * normalized; }

  /// k schedules by descending prediction, ties to the lowest flat index.
  std::vector<Schedule> top_k_schedules(const Topology& topology, int k) const;

  void save(const std::string& path) const;
  static SchedNet load(const std::string& path);

 private:
  void check_topology(const Topology& topology) const;

  MlpModel model_;
  FeatureStandardizer pair_stats_;
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
  int n_cells_ = 0;
  int users_per_cell_ = 0;
};

/// Indices of the k largest entries, descending, ties to the lower index.
std::vector<Eigen::Index> top_k_indices(const Eigen::Ref<const Eigen::VectorXd>& values, int k);

struct SchedTrainReport {
  TrainReport training;
  std::vector<double> val_mean_selected_wsr_bps;  // per checkpoint: mean true WSR of the top-1 schedule
};

SchedTrainReport train_sched_net(SchedNet& net, const SchedCorpus& train_set, const SchedCorpus& val_set,
                                 const TrainConfig& config);

}  // namespace linksched
