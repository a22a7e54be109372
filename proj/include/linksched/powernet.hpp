#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "linksched/gp.hpp"
#include "linksched/linkmodel.hpp"
#include "linksched/nncore.hpp"
#include "linksched/topo.hpp"

namespace linksched {

/// Per-feature affine standardization (x - mean) / std; features with zero
/// spread map to zero.
struct FeatureStandardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  /// Statistics over the columns of `samples` (features x n).
  static FeatureStandardizer fit(const Eigen::Ref<const Eigen::MatrixXd>& samples);
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  nlohmann::json to_json() const;
  static FeatureStandardizer from_json(const nlohmann::json& j);
};

struct PowerNetEncoding {
  Eigen::VectorXd g_block;  // standardized 10 log10 G, row-major
  Eigen::VectorXd w_block;
  Eigen::VectorXd u_block;  // 1 = downlink, 0 = uplink
};

/// Row-major 10 log10(G). Throws std::invalid_argument on a non-positive direct gain.
Eigen::VectorXd gain_features_db(const LinkProblem& problem);

PowerNetEncoding encode(const LinkProblem& problem, const FeatureStandardizer& gain_stats);

/// Fig. 2(a) layout: blocks G -> 64, w -> 32, u -> 32 (ReLU), trunk 256-128-64
/// (ReLU), sigmoid output of n_links power fractions.
MlpSpec default_power_spec(int n_links);

/// GP-labelled power-allocation samples. problems[k] is the link problem of
/// sample k and targets.col(k) its p / p_max from the GP solve.
struct PowerCorpus {
  std::vector<LinkProblem> problems;
  Eigen::MatrixXd targets;  // n_links x n
  std::vector<int> topology_id;
  std::vector<std::int64_t> schedule_index;
  std::vector<int> gp_outer_iters;
  int dropped = 0;  // samples whose GP solve failed

  Eigen::Index size() const { return targets.cols(); }
};

struct PowerCorpusSplit {
  PowerCorpus train;
  PowerCorpus validation;
};

/// Labels every (topology, schedule) pair with a GP solve. The last
/// max(1, round(val_fraction * T)) topologies form the validation set.
PowerCorpusSplit make_dataset(std::span<const Topology> topologies, const GpConfig& gp_config,
                              double val_fraction = 0.1);

class PowerNet {
 public:
  PowerNet() = default;
  PowerNet(MlpModel model, FeatureStandardizer gain_stats);

  /// Fresh network for corpus.problems' link count; gain statistics come from `corpus`.
  static PowerNet create(const PowerCorpus& corpus, std::uint64_t init_seed);

  int n_links() const { return n_links_; }
  const MlpModel& model() const { return model_; }
  MlpModel& model() { return model_; }
  const FeatureStandardizer& gain_stats() const { return gain_stats_; }

  Dataset to_dataset(const PowerCorpus& corpus) const;

  /// n_links x problems.size() power fractions in [0, 1].
  Eigen::MatrixXd predict_fractions(std::span<const LinkProblem> problems) const;

  PowerAlloc predict_powers(const LinkProblem& problem) const;
  std::vector<PowerAlloc> predict_powers(std::span<const LinkProblem> problems) const;

  void save(const std::string& path) const;
  static PowerNet load(const std::string& path);

 private:
  MlpModel model_;
  FeatureStandardizer gain_stats_;
  int n_links_ = 0;
};

struct PowerTrainReport {
  TrainReport training;
  std::vector<double> val_mean_wsr_bps;  // per checkpoint, capped WSR of predicted powers
};

PowerTrainReport train_power_net(PowerNet& net, const PowerCorpus& train_set, const PowerCorpus& val_set,
                                 const TrainConfig& config);

struct ScheduledAlloc {
  Schedule schedule;
  PowerAlloc alloc;
};

/// Max-DNN: predicts powers for every schedule in one batch and keeps the
/// highest evaluated WSR (ties to the lowest flat index).
ScheduledAlloc max_dnn_schedule(const PowerNet& net, const Topology& topology);

}  // namespace linksched
