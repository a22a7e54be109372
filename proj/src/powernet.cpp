#include "linksched/powernet.hpp"

#include <cmath>
#include <iostream>

namespace linksched {

using nlohmann::json;

FeatureStandardizer FeatureStandardizer::fit(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  if (samples.cols() == 0) throw std::invalid_argument("FeatureStandardizer: no samples");
  FeatureStandardizer s;
  s.mean = samples.rowwise().mean();
  s.stddev = ((samples.colwise() - s.mean).array().square().rowwise().sum() / static_cast<double>(samples.cols()))
                 .sqrt()
                 .matrix();
  return s;
}

Eigen::VectorXd FeatureStandardizer::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("FeatureStandardizer: feature count mismatch");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out(i) = stddev(i) > 0 ? (x(i) - mean(i)) / stddev(i) : 0.0;
  }
  return out;
}

json FeatureStandardizer::to_json() const {
  return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
          {"std", std::vector<double>(stddev.data(), stddev.data() + stddev.size())}};
}

FeatureStandardizer FeatureStandardizer::from_json(const json& j) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("std").get<std::vector<double>>();
  if (m.size() != s.size()) throw std::runtime_error("FeatureStandardizer: mean/std length mismatch");
  FeatureStandardizer out;
  out.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  out.stddev = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return out;
}

Eigen::VectorXd gain_features_db(const LinkProblem& problem) {
  const Eigen::Index n = problem.gain.rows();
  Eigen::VectorXd out(n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(problem.gain(i, i) > 0)) throw std::invalid_argument("encode: non-positive direct gain");
    for (Eigen::Index j = 0; j < n; ++j) {
      // Zero cross gains are floored at -400 dB rather than -inf.
      out(i * n + j) = problem.gain(i, j) > 0 ? 10.0 * std::log10(problem.gain(i, j)) : -400.0;
    }
  }
  return out;
}

PowerNetEncoding encode(const LinkProblem& problem, const FeatureStandardizer& gain_stats) {
  return {gain_stats.apply(gain_features_db(problem)), problem.weights, problem.downlink.cast<double>()};
}

MlpSpec default_power_spec(int n_links) {
  if (n_links < 1) throw std::invalid_argument("default_power_spec: n_links must be >= 1");
  MlpSpec spec;
  spec.blocks = {{"G", n_links * n_links, {{64, Activation::kRelu}}},
                 {"w", n_links, {{32, Activation::kRelu}}},
                 {"u", n_links, {{32, Activation::kRelu}}}};
  spec.trunk = {{256, Activation::kRelu}, {128, Activation::kRelu}, {64, Activation::kRelu}};
  spec.output = {n_links, Activation::kSigmoid};
  return spec;
}

namespace {

void append(PowerCorpus& dst, PowerCorpus&& src) {
  const Eigen::Index old = dst.size();
  for (auto& p : src.problems) dst.problems.push_back(std::move(p));
  dst.topology_id.insert(dst.topology_id.end(), src.topology_id.begin(), src.topology_id.end());
  dst.schedule_index.insert(dst.schedule_index.end(), src.schedule_index.begin(), src.schedule_index.end());
  dst.gp_outer_iters.insert(dst.gp_outer_iters.end(), src.gp_outer_iters.begin(), src.gp_outer_iters.end());
  dst.dropped += src.dropped;
  Eigen::MatrixXd t(src.targets.rows(), old + src.size());
  if (old > 0) t.leftCols(old) = dst.targets;
  t.rightCols(src.size()) = src.targets;
  dst.targets = std::move(t);
}

PowerCorpus label_topology(const Topology& topology, int topology_id, const GpConfig& gp_config) {
  const auto schedules = enumerate_schedules(topology.config.n_cells, topology.config.users_per_cell);
  PowerCorpus c;
  std::vector<Eigen::VectorXd> targets;
  for (const auto& s : schedules) {
    LinkProblem problem = build_link_problem(topology, s);
    try {
      const GpResult r = wsr_maximize(problem, gp_config);
      targets.push_back(r.alloc.powers_w.cwiseQuotient(problem.p_max_w).cwiseMin(1.0).cwiseMax(0.0));
      c.problems.push_back(std::move(problem));
      c.topology_id.push_back(topology_id);
      c.schedule_index.push_back(s.flat_index);
      c.gp_outer_iters.push_back(r.outer_iters);
    } catch (const std::exception&) {
      ++c.dropped;
    }
  }
  c.targets.resize(topology.config.n_cells, static_cast<Eigen::Index>(targets.size()));
  for (std::size_t k = 0; k < targets.size(); ++k) c.targets.col(static_cast<Eigen::Index>(k)) = targets[k];
  return c;
}

}  // namespace

PowerCorpusSplit make_dataset(std::span<const Topology> topologies, const GpConfig& gp_config, double val_fraction) {
  if (topologies.size() < 2) throw std::invalid_argument("make_dataset: need at least two topologies");
  if (!(val_fraction > 0 && val_fraction < 1)) throw std::invalid_argument("make_dataset: val_fraction must lie in (0, 1)");
  const auto total = static_cast<int>(topologies.size());
  const int n_val = std::clamp(static_cast<int>(std::lround(val_fraction * total)), 1, total - 1);
  PowerCorpusSplit split;
  for (int t = 0; t < total; ++t) {
    append(t < total - n_val ? split.train : split.validation,
           label_topology(topologies[static_cast<std::size_t>(t)], t, gp_config));
  }
  const int dropped = split.train.dropped + split.validation.dropped;
  if (dropped > 0) std::clog << "make_dataset: dropped " << dropped << " samples after GP failures\n";
  return split;
}

PowerNet::PowerNet(MlpModel model, FeatureStandardizer gain_stats)
    : model_(std::move(model)), gain_stats_(std::move(gain_stats)), n_links_(model_.spec().output.width) {
  const std::string diff = spec_difference(default_power_spec(n_links_), model_.spec());
  if (!diff.empty()) throw std::invalid_argument("PowerNet: unexpected spec: " + diff);
  if (gain_stats_.mean.size() != n_links_ * n_links_) {
    throw std::invalid_argument("PowerNet: gain statistics do not match the link count");
  }
}

PowerNet PowerNet::create(const PowerCorpus& corpus, std::uint64_t init_seed) {
  if (corpus.problems.empty()) throw std::invalid_argument("PowerNet::create: empty corpus");
  const int n = corpus.problems.front().n_links();
  Eigen::MatrixXd feats(n * n, static_cast<Eigen::Index>(corpus.problems.size()));
  for (std::size_t k = 0; k < corpus.problems.size(); ++k) {
    feats.col(static_cast<Eigen::Index>(k)) = gain_features_db(corpus.problems[k]);
  }
  return PowerNet(MlpModel(default_power_spec(n), init_seed), FeatureStandardizer::fit(feats));
}

namespace {

std::vector<Eigen::MatrixXd> encode_batch(std::span<const LinkProblem> problems, int n_links,
                                          const FeatureStandardizer& stats) {
  const auto batch = static_cast<Eigen::Index>(problems.size());
  std::vector<Eigen::MatrixXd> blocks{Eigen::MatrixXd(n_links * n_links, batch), Eigen::MatrixXd(n_links, batch),
                                      Eigen::MatrixXd(n_links, batch)};
  for (Eigen::Index k = 0; k < batch; ++k) {
    const LinkProblem& p = problems[static_cast<std::size_t>(k)];
    if (p.n_links() != n_links) {
      throw std::invalid_argument("PowerNet: problem has " + std::to_string(p.n_links()) + " links, model expects " +
                                  std::to_string(n_links));
    }
    const PowerNetEncoding e = encode(p, stats);
    blocks[0].col(k) = e.g_block;
    blocks[1].col(k) = e.w_block;
    blocks[2].col(k) = e.u_block;
  }
  return blocks;
}

}  // namespace

Dataset PowerNet::to_dataset(const PowerCorpus& corpus) const {
  Dataset d;
  d.inputs = encode_batch(corpus.problems, n_links_, gain_stats_);
  d.targets = corpus.targets;
  return d;
}

Eigen::MatrixXd PowerNet::predict_fractions(std::span<const LinkProblem> problems) const {
  const auto blocks = encode_batch(problems, n_links_, gain_stats_);
  return forward<double>(model_, blocks).cwiseMax(0.0).cwiseMin(1.0);
}

std::vector<PowerAlloc> PowerNet::predict_powers(std::span<const LinkProblem> problems) const {
  const Eigen::MatrixXd frac = predict_fractions(problems);
  std::vector<PowerAlloc> out;
  out.reserve(problems.size());
  for (std::size_t k = 0; k < problems.size(); ++k) {
    const Eigen::VectorXd p = frac.col(static_cast<Eigen::Index>(k)).cwiseProduct(problems[k].p_max_w);
    out.push_back(evaluate(problems[k], p));
  }
  return out;
}

PowerAlloc PowerNet::predict_powers(const LinkProblem& problem) const {
  return std::move(predict_powers(std::span<const LinkProblem>(&problem, 1)).front());
}

void PowerNet::save(const std::string& path) const {
  save_model(model_, path, {{"kind", "power"}, {"n_links", n_links_}, {"gain_stats", gain_stats_.to_json()}});
}

PowerNet PowerNet::load(const std::string& path) {
  LoadedModel m = load_model(path);
  if (m.metadata.value("kind", std::string()) != "power") {
    throw std::runtime_error("PowerNet::load: '" + path + "' is not a power-allocation model");
  }
  const int n = m.metadata.at("n_links").get<int>();
  const std::string diff = spec_difference(default_power_spec(n), m.model.spec());
  if (!diff.empty()) throw std::runtime_error("PowerNet::load: spec mismatch: " + diff);
  return PowerNet(std::move(m.model), FeatureStandardizer::from_json(m.metadata.at("gain_stats")));
}

PowerTrainReport train_power_net(PowerNet& net, const PowerCorpus& train_set, const PowerCorpus& val_set,
                                 const TrainConfig& config) {
  PowerTrainReport report;
  const Dataset train_data = net.to_dataset(train_set);
  const Dataset val_data = net.to_dataset(val_set);
  const auto track = [&](int, const MlpModel& model) {
    const PowerNet snapshot(model, net.gain_stats());
    double sum = 0.0;
    for (const auto& a : snapshot.predict_powers(val_set.problems)) sum += a.wsr_bps;
    report.val_mean_wsr_bps.push_back(sum / static_cast<double>(val_set.problems.size()));
  };
  report.training = train<double>(net.model(), train_data, val_data, config, track);
  return report;
}

ScheduledAlloc max_dnn_schedule(const PowerNet& net, const Topology& topology) {
  const auto schedules = enumerate_schedules(topology.config.n_cells, topology.config.users_per_cell);
  std::vector<LinkProblem> problems;
  problems.reserve(schedules.size());
  for (const auto& s : schedules) problems.push_back(build_link_problem(topology, s));
  std::vector<PowerAlloc> allocs = net.predict_powers(problems);
  std::size_t best = 0;
  for (std::size_t k = 1; k < allocs.size(); ++k) {
    if (allocs[k].wsr_bps > allocs[best].wsr_bps) best = k;
  }
  return {schedules[best], std::move(allocs[best])};
}

}  // namespace linksched
