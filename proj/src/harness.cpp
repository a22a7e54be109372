#include "linksched/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

namespace linksched {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

ScheduledAlloc best_of_power_net(const PowerNet& net, const Topology& topology, std::span<const Schedule> candidates) {
  std::vector<LinkProblem> problems;
  problems.reserve(candidates.size());
  for (const auto& s : candidates) problems.push_back(build_link_problem(topology, s));
  std::vector<PowerAlloc> allocs = net.predict_powers(problems);
  std::size_t best = 0;
  for (std::size_t k = 1; k < allocs.size(); ++k) {
    const bool better = allocs[k].wsr_bps > allocs[best].wsr_bps ||
                        (allocs[k].wsr_bps == allocs[best].wsr_bps &&
                         candidates[k].flat_index < candidates[best].flat_index);
    if (better) best = k;
  }
  return {candidates[best], std::move(allocs[best])};
}

void gp_on(const Topology& topology, const Schedule& schedule, const GpConfig& gp_config, MethodOutcome& out) {
  const GpResult r = wsr_maximize(build_link_problem(topology, schedule), gp_config);
  out.schedule = schedule;
  out.alloc = r.alloc;
  out.gp_outer_iters = r.outer_iters;
}

}  // namespace

std::string MethodId::name() const {
  switch (kind) {
    case MethodKind::kExhaustiveGp:
      return "Exhaustive-GP";
    case MethodKind::kMaxDnn:
      return "Max-DNN";
    case MethodKind::kDqnGp:
      return "DQN-GP";
    case MethodKind::kDqnDnn:
      return "DQN-DNN";
    case MethodKind::kDqnDnnK:
      return "DQN-DNN-" + std::to_string(k);
    case MethodKind::kGreedyGp:
      return "Greedy-GP";
    case MethodKind::kGreedyMp:
      return "Greedy-MP";
    case MethodKind::kRandomGp:
      return "Random-GP";
  }
  return "?";
}

MethodId MethodId::parse(const std::string& text) {
  const std::string t = lower(text);
  if (t == "exhaustive-gp") return {MethodKind::kExhaustiveGp};
  if (t == "max-dnn") return {MethodKind::kMaxDnn};
  if (t == "dqn-gp") return {MethodKind::kDqnGp};
  if (t == "dqn-dnn") return {MethodKind::kDqnDnn};
  if (t == "greedy-gp") return {MethodKind::kGreedyGp};
  if (t == "greedy-mp") return {MethodKind::kGreedyMp};
  if (t == "random-gp") return {MethodKind::kRandomGp};
  const std::string prefix = "dqn-dnn-";
  if (t.rfind(prefix, 0) == 0 && t.size() > prefix.size()) {
    const std::string digits = t.substr(prefix.size());
    if (std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); }) &&
        digits.size() < 10) {
      const int k = std::stoi(digits);
      if (k >= 1) return {MethodKind::kDqnDnnK, k};
    }
  }
  throw std::invalid_argument("unknown method '" + text + "'");
}

bool MethodId::needs_power_net() const {
  return kind == MethodKind::kMaxDnn || kind == MethodKind::kDqnDnn || kind == MethodKind::kDqnDnnK;
}

bool MethodId::needs_sched_net() const {
  return kind == MethodKind::kDqnGp || kind == MethodKind::kDqnDnn || kind == MethodKind::kDqnDnnK;
}

bool MethodId::uses_gp() const {
  return kind == MethodKind::kExhaustiveGp || kind == MethodKind::kDqnGp || kind == MethodKind::kGreedyGp ||
         kind == MethodKind::kRandomGp;
}

Schedule greedy_schedule(const Topology& topology) {
  const auto& cfg = topology.config;
  std::vector<LinkChoice> choices(static_cast<std::size_t>(cfg.n_cells));
  for (int c = 0; c < cfg.n_cells; ++c) {
    int best_code = 0;
    double best_w = -1.0;
    for (int code = 0; code < 2 * cfg.users_per_cell; ++code) {
      const double w = topology.weights(2 * topology.ue_index(c, code / 2) + code % 2);
      if (w > best_w) {
        best_w = w;
        best_code = code;
      }
    }
    choices[static_cast<std::size_t>(c)] = {best_code / 2, static_cast<Direction>(best_code % 2)};
  }
  Schedule s;
  s.flat_index = schedule_index(choices, cfg.users_per_cell);
  s.choices = std::move(choices);
  return s;
}

MethodOutcome run_method(const MethodId& method, const Topology& topology, const Models& models,
                         const GpConfig& gp_config, std::uint64_t random_seed) {
  if (method.needs_power_net() && models.power == nullptr) {
    throw ConfigurationError(method.name() + " needs a power-allocation model");
  }
  if (method.needs_sched_net() && models.sched == nullptr) {
    throw ConfigurationError(method.name() + " needs a schedule-value model");
  }
  if (method.kind == MethodKind::kDqnDnnK && method.k < 1) throw std::invalid_argument("DQN-DNN-k needs k >= 1");
  const int n = topology.config.n_cells;
  const int m = topology.config.users_per_cell;

  MethodOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  switch (method.kind) {
    case MethodKind::kExhaustiveGp: {
      bool first = true;
      const std::int64_t total = schedule_count(n, m);
      for (std::int64_t k = 0; k < total; ++k) {
        const Schedule s = schedule_from_index(k, n, m);
        const GpResult r = wsr_maximize(build_link_problem(topology, s), gp_config);
        if (first || r.alloc.wsr_bps > out.alloc.wsr_bps) {
          out.schedule = s;
          out.alloc = r.alloc;
          out.gp_outer_iters = r.outer_iters;
          first = false;
        }
      }
      break;
    }
    case MethodKind::kMaxDnn: {
      ScheduledAlloc r = max_dnn_schedule(*models.power, topology);
      out.schedule = std::move(r.schedule);
      out.alloc = std::move(r.alloc);
      break;
    }
    case MethodKind::kDqnGp:
      gp_on(topology, models.sched->top_k_schedules(topology, 1).front(), gp_config, out);
      break;
    case MethodKind::kDqnDnn:
    case MethodKind::kDqnDnnK: {
      const int k = method.kind == MethodKind::kDqnDnn
                        ? 1
                        : static_cast<int>(std::min<std::int64_t>(method.k, schedule_count(n, m)));
      const auto candidates = models.sched->top_k_schedules(topology, k);
      ScheduledAlloc r = best_of_power_net(*models.power, topology, candidates);
      out.schedule = std::move(r.schedule);
      out.alloc = std::move(r.alloc);
      break;
    }
    case MethodKind::kGreedyGp:
      gp_on(topology, greedy_schedule(topology), gp_config, out);
      break;
    case MethodKind::kGreedyMp: {
      out.schedule = greedy_schedule(topology);
      const LinkProblem p = build_link_problem(topology, out.schedule);
      out.alloc = evaluate(p, p.p_max_w);
      break;
    }
    case MethodKind::kRandomGp: {
      std::mt19937_64 rng(random_seed);
      std::uniform_int_distribution<std::int64_t> pick(0, schedule_count(n, m) - 1);
      gp_on(topology, schedule_from_index(pick(rng), n, m), gp_config, out);
      break;
    }
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1) + 0xbf58476d1ce4e5b9ULL * stream;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RunReport benchmark(std::span<const MethodId> methods, int n_topologies, const SystemConfig& system,
                    const GpConfig& gp_config, const Models& models, std::uint64_t seed) {
  if (n_topologies < 1) throw std::invalid_argument("benchmark: need at least one topology");
  std::vector<Topology> topologies;
  topologies.reserve(static_cast<std::size_t>(n_topologies));
  for (int t = 0; t < n_topologies; ++t) {
    topologies.push_back(generate_topology(system, derive_seed(seed, static_cast<std::uint64_t>(t))));
  }
  return benchmark(methods, topologies, models, gp_config, seed);
}

RunReport benchmark(std::span<const MethodId> methods, std::span<const Topology> topologies, const Models& models,
                    const GpConfig& gp_config, std::uint64_t seed) {
  if (topologies.empty()) throw std::invalid_argument("benchmark: need at least one topology");
  if (methods.empty()) throw std::invalid_argument("benchmark: no methods");
  for (const auto& method : methods) {
    (void)run_method(method, topologies.front(), models, gp_config, derive_seed(seed, 0, 1));
  }
  std::vector<RunRecord> records;
  records.reserve(topologies.size() * methods.size());
  for (std::size_t t = 0; t < topologies.size(); ++t) {
    const std::uint64_t random_seed = derive_seed(seed, t, 1);
    for (const auto& method : methods) {
      const MethodOutcome o = run_method(method, topologies[t], models, gp_config, random_seed);
      records.push_back({method, static_cast<int>(t), o.schedule.flat_index, o.alloc.wsr_bps, o.wall_time_s,
                         o.gp_outer_iters});
    }
  }
  return summarize({methods.begin(), methods.end()}, std::move(records));
}

RunReport summarize(std::vector<MethodId> methods, std::vector<RunRecord> records) {
  RunReport report;
  report.methods = std::move(methods);
  report.records = std::move(records);
  std::optional<double> reference;
  for (const auto& method : report.methods) {
    MethodSummary s;
    s.method = method;
    double iters = 0.0;
    int iter_count = 0;
    for (const auto& r : report.records) {
      if (!(r.method == method)) continue;
      ++s.count;
      s.mean_wsr_bps += r.wsr_bps;
      s.mean_time_s += r.wall_time_s;
      if (r.gp_outer_iters >= 0) {
        iters += r.gp_outer_iters;
        ++iter_count;
      }
    }
    if (s.count > 0) {
      s.mean_wsr_bps /= s.count;
      s.mean_time_s /= s.count;
    }
    if (iter_count > 0) s.mean_gp_iters = iters / iter_count;
    if (method.kind == MethodKind::kExhaustiveGp) reference = s.mean_wsr_bps;
    report.summary.push_back(s);
  }
  if (reference && *reference > 0) {
    for (auto& s : report.summary) s.loss_vs_reference = (*reference - s.mean_wsr_bps) / *reference;
  }
  return report;
}

std::vector<double> RunReport::wsr_of(const MethodId& method) const {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.method == method) out.push_back(r.wsr_bps);
  }
  return out;
}

std::vector<std::pair<double, double>> RunReport::cdf(const MethodId& method) const {
  std::vector<double> w = wsr_of(method);
  std::sort(w.begin(), w.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out.emplace_back(w[i], static_cast<double>(i + 1) / static_cast<double>(w.size()));
  }
  return out;
}

const MethodSummary& RunReport::summary_of(const MethodId& method) const {
  for (const auto& s : summary) {
    if (s.method == method) return s;
  }
  throw std::out_of_range("RunReport: no summary for " + method.name());
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os.precision(17);
  return os;
}

}  // namespace

void export_report(const RunReport& report, const std::filesystem::path& out_dir) {
  if (report.records.empty()) throw std::invalid_argument("export_report: empty report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + out_dir.string() + "': " + ec.message());

  {
    auto os = open_csv(out_dir / "summary.csv");
    os << "method,mean_wsr_mbps,mean_cpu_time_s,wsr_loss_percent\n";
    for (const auto& s : report.summary) {
      os << s.method.name() << ',' << s.mean_wsr_bps / 1e6 << ',' << s.mean_time_s << ',';
      if (s.loss_vs_reference) os << 100.0 * *s.loss_vs_reference;
      os << '\n';
    }
  }
  {
    auto os = open_csv(out_dir / "records.csv");
    os << "method,topology,schedule,wsr_bps,wall_time_s,gp_outer_iters\n";
    for (const auto& r : report.records) {
      os << r.method.name() << ',' << r.topology << ',' << r.schedule << ',' << r.wsr_bps << ',' << r.wall_time_s
         << ',' << r.gp_outer_iters << '\n';
    }
  }
  for (const auto& method : report.methods) {
    auto os = open_csv(out_dir / ("cdf_" + method.name() + ".csv"));
    os << "wsr_mbps,probability\n";
    for (const auto& [w, p] : report.cdf(method)) os << w / 1e6 << ',' << p << '\n';
  }
  {
    auto os = open_csv(out_dir / "gp_iterations.csv");
    os << "method,mean_gp_outer_iters,samples\n";
    for (const auto& s : report.summary) {
      if (!s.mean_gp_iters) continue;
      os << s.method.name() << ',' << *s.mean_gp_iters << ',' << s.count << '\n';
    }
  }
}

void export_training_curve(const TrainReport& report, std::span<const double> val_mean_wsr,
                           const std::filesystem::path& path) {
  auto os = open_csv(path);
  os << "epoch,wall_s,train_mse,val_mse,val_mean_wsr_bps\n";
  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    const auto& e = report.epochs[i];
    os << e.epoch << ',' << e.wall_s << ',' << e.train_mse << ',' << e.val_mse << ',';
    if (i < val_mean_wsr.size()) os << val_mean_wsr[i];
    os << '\n';
  }
}

}  // namespace linksched
