#include "linksched/schednet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace linksched {

int sched_gain_block_width(int n_cells, int users_per_cell) {
  if (n_cells < 1 || users_per_cell < 1) throw std::invalid_argument("sched_gain_block_width: counts must be >= 1");
  const long nodes = static_cast<long>(n_cells) * (1 + users_per_cell);
  return static_cast<int>(std::max(600L, nodes * nodes));
}

MlpSpec default_sched_spec(int n_cells, int users_per_cell) {
  const std::int64_t outputs = schedule_count(n_cells, users_per_cell);
  if (outputs > std::numeric_limits<int>::max()) throw std::overflow_error("default_sched_spec: too many schedules");
  MlpSpec spec;
  spec.blocks = {{"H", sched_gain_block_width(n_cells, users_per_cell), {}},
                 {"W", 2 * n_cells * users_per_cell, {}}};
  spec.trunk = {{800, Activation::kRelu}, {800, Activation::kRelu}, {1200, Activation::kRelu}};
  spec.output = {static_cast<int>(outputs), Activation::kLinear};
  return spec;
}

Eigen::VectorXd pair_gain_features_db(const Topology& topology) {
  const Eigen::Index n = topology.gains.rows();
  Eigen::VectorXd out(n * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) out(a * n + b) = a == b ? 0.0 : 10.0 * std::log10(topology.gains(a, b));
  }
  return out;
}

SchedNetEncoding encode_topology(const Topology& topology, const FeatureStandardizer& pair_stats, int block_width) {
  const Eigen::Index n = topology.gains.rows();
  if (n * n > block_width) throw std::invalid_argument("encode_topology: gain table wider than the input block");
  SchedNetEncoding e;
  e.h_block = Eigen::VectorXd::Zero(block_width);
  e.h_block.head(n * n) = pair_stats.apply(pair_gain_features_db(topology));
  for (Eigen::Index a = 0; a < n; ++a) e.h_block(a * n + a) = 0.0;
  e.w_block = topology.weights;
  return e;
}

Eigen::VectorXd power_net_schedule_values(const PowerNet& power_net, const Topology& topology) {
  const auto schedules = enumerate_schedules(topology.config.n_cells, topology.config.users_per_cell);
  std::vector<LinkProblem> problems;
  problems.reserve(schedules.size());
  for (const auto& s : schedules) problems.push_back(build_link_problem(topology, s));
  const auto allocs = power_net.predict_powers(problems);
  Eigen::VectorXd v(static_cast<Eigen::Index>(allocs.size()));
  for (std::size_t k = 0; k < allocs.size(); ++k) v(static_cast<Eigen::Index>(k)) = allocs[k].wsr_bps;
  return v;
}

SchedCorpusSplit make_sched_dataset(std::span<const Topology> topologies, const PowerNet& power_net,
                                    double val_fraction) {
  if (topologies.size() < 2) throw std::invalid_argument("make_sched_dataset: need at least two topologies");
  if (!(val_fraction > 0 && val_fraction < 1)) {
    throw std::invalid_argument("make_sched_dataset: val_fraction must lie in (0, 1)");
  }
  const auto total = static_cast<int>(topologies.size());
  const int n_val = std::clamp(static_cast<int>(std::lround(val_fraction * total)), 1, total - 1);
  const auto& cfg = topologies.front().config;
  const auto n_sched = static_cast<Eigen::Index>(schedule_count(cfg.n_cells, cfg.users_per_cell));

  SchedCorpusSplit split;
  split.train.wsr_bps.resize(n_sched, total - n_val);
  split.validation.wsr_bps.resize(n_sched, n_val);
  for (int t = 0; t < total; ++t) {
    const Topology& topo = topologies[static_cast<std::size_t>(t)];
    if (topo.config.n_cells != cfg.n_cells || topo.config.users_per_cell != cfg.users_per_cell) {
      throw std::invalid_argument("make_sched_dataset: topologies differ in N or M");
    }
    SchedCorpus& dst = t < total - n_val ? split.train : split.validation;
    dst.wsr_bps.col(static_cast<Eigen::Index>(dst.topologies.size())) = power_net_schedule_values(power_net, topo);
    dst.topologies.push_back(topo);
  }
  return split;
}

SchedNet::SchedNet(MlpModel model, FeatureStandardizer pair_stats, double target_mean, double target_std,
                   int n_cells, int users_per_cell)
    : model_(std::move(model)),
      pair_stats_(std::move(pair_stats)),
      target_mean_(target_mean),
      target_std_(target_std),
      n_cells_(n_cells),
      users_per_cell_(users_per_cell) {
  const std::string diff = spec_difference(default_sched_spec(n_cells, users_per_cell), model_.spec());
  if (!diff.empty()) throw std::invalid_argument("SchedNet: unexpected spec: " + diff);
  const long nodes = static_cast<long>(n_cells) * (1 + users_per_cell);
  if (pair_stats_.mean.size() != nodes * nodes) throw std::invalid_argument("SchedNet: pair statistics size mismatch");
  if (!(target_std_ > 0)) throw std::invalid_argument("SchedNet: target std must be > 0");
}

SchedNet SchedNet::create(const SchedCorpus& corpus, std::uint64_t init_seed) {
  if (corpus.topologies.empty()) throw std::invalid_argument("SchedNet::create: empty corpus");
  const auto& cfg = corpus.topologies.front().config;
  const Eigen::Index n = cfg.n_nodes();
  Eigen::MatrixXd feats(n * n, static_cast<Eigen::Index>(corpus.topologies.size()));
  for (std::size_t t = 0; t < corpus.topologies.size(); ++t) {
    feats.col(static_cast<Eigen::Index>(t)) = pair_gain_features_db(corpus.topologies[t]);
  }
  const double mean = corpus.wsr_bps.mean();
  const double var = (corpus.wsr_bps.array() - mean).square().mean();
  const double stddev = var > 0 ? std::sqrt(var) : 1.0;
  return SchedNet(MlpModel(default_sched_spec(cfg.n_cells, cfg.users_per_cell), init_seed),
                  FeatureStandardizer::fit(feats), mean, stddev, cfg.n_cells, cfg.users_per_cell);
}

void SchedNet::check_topology(const Topology& topology) const {
  if (topology.config.n_cells != n_cells_ || topology.config.users_per_cell != users_per_cell_) {
    throw std::invalid_argument("SchedNet: topology has N=" + std::to_string(topology.config.n_cells) +
                                ", M=" + std::to_string(topology.config.users_per_cell) + "; model expects N=" +
                                std::to_string(n_cells_) + ", M=" + std::to_string(users_per_cell_));
  }
}

Dataset SchedNet::to_dataset(const SchedCorpus& corpus) const {
  const int width = model_.spec().blocks[0].width;
  const auto n = static_cast<Eigen::Index>(corpus.topologies.size());
  Dataset d;
  d.inputs = {Eigen::MatrixXd(width, n), Eigen::MatrixXd(2 * n_cells_ * users_per_cell_, n)};
  for (Eigen::Index t = 0; t < n; ++t) {
    const Topology& topo = corpus.topologies[static_cast<std::size_t>(t)];
    check_topology(topo);
    const SchedNetEncoding e = encode_topology(topo, pair_stats_, width);
    d.inputs[0].col(t) = e.h_block;
    d.inputs[1].col(t) = e.w_block;
  }
  d.targets = (corpus.wsr_bps.array() - target_mean_) / target_std_;
  return d;
}

Eigen::VectorXd SchedNet::predict_normalized(const Topology& topology) const {
  check_topology(topology);
  const SchedNetEncoding e = encode_topology(topology, pair_stats_, model_.spec().blocks[0].width);
  const std::vector<Eigen::MatrixXd> blocks{e.h_block, e.w_block};
  return forward<double>(model_, blocks).col(0);
}

Eigen::VectorXd SchedNet::predict_values(const Topology& topology) const {
  return predict_normalized(topology).unaryExpr([this](double v) { return denormalize(v); });
}

std::vector<Eigen::Index> top_k_indices(const Eigen::Ref<const Eigen::VectorXd>& values, int k) {
  if (k < 1 || k > values.size()) {
    throw std::out_of_range("top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(values.size()) + "]");
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values(a) > values(b) || (values(a) == values(b) && a < b);
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

std::vector<Schedule> SchedNet::top_k_schedules(const Topology& topology, int k) const {
  // Ranking on the normalized outputs; de-normalization is a positive affine map.
  const auto idx = top_k_indices(predict_normalized(topology), k);
  std::vector<Schedule> out;
  out.reserve(idx.size());
  for (const Eigen::Index i : idx) out.push_back(schedule_from_index(i, n_cells_, users_per_cell_));
  return out;
}

void SchedNet::save(const std::string& path) const {
  save_model(model_, path,
             {{"kind", "sched"},
              {"n_cells", n_cells_},
              {"users_per_cell", users_per_cell_},
              {"target_mean", target_mean_},
              {"target_std", target_std_},
              {"pair_stats", pair_stats_.to_json()}});
}

SchedNet SchedNet::load(const std::string& path) {
  LoadedModel m = load_model(path);
  const auto& md = m.metadata;
  if (md.value("kind", std::string()) != "sched") {
    throw std::runtime_error("SchedNet::load: '" + path + "' is not a schedule-value model");
  }
  const int n = md.at("n_cells").get<int>();
  const int users = md.at("users_per_cell").get<int>();
  const std::string diff = spec_difference(default_sched_spec(n, users), m.model.spec());
  if (!diff.empty()) throw std::runtime_error("SchedNet::load: spec mismatch: " + diff);
  return SchedNet(std::move(m.model), FeatureStandardizer::from_json(md.at("pair_stats")),
                  md.at("target_mean").get<double>(), md.at("target_std").get<double>(), n, users);
}

SchedTrainReport train_sched_net(SchedNet& net, const SchedCorpus& train_set, const SchedCorpus& val_set,
                                 const TrainConfig& config) {
  SchedTrainReport report;
  const Dataset train_data = net.to_dataset(train_set);
  const Dataset val_data = net.to_dataset(val_set);
  const auto track = [&](int, const MlpModel& model) {
    // Batched (GEMM) forward is fine here: only the argmax per topology is used.
    const Eigen::MatrixXd pred = forward_trace<double>(model, val_data.inputs).outputs.back();
    double sum = 0.0;
    for (Eigen::Index t = 0; t < pred.cols(); ++t) {
      Eigen::Index best = 0;
      pred.col(t).maxCoeff(&best);
      sum += val_set.wsr_bps(best, t);
    }
    report.val_mean_selected_wsr_bps.push_back(sum / static_cast<double>(pred.cols()));
  };
  report.training = train<double>(net.model(), train_data, val_data, config, track);
  return report;
}

}  // namespace linksched
