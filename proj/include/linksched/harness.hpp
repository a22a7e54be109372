#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linksched/gp.hpp"
#include "linksched/linkmodel.hpp"
#include "linksched/powernet.hpp"
#include "linksched/schednet.hpp"
#include "linksched/topo.hpp"

namespace linksched {

enum class MethodKind { kExhaustiveGp, kMaxDnn, kDqnGp, kDqnDnn, kDqnDnnK, kGreedyGp, kGreedyMp, kRandomGp };

struct MethodId {
  MethodKind kind = MethodKind::kExhaustiveGp;
  int k = 1;  // candidate count for kDqnDnnK

  /// "Exhaustive-GP", "Max-DNN", "DQN-GP", "DQN-DNN", "DQN-DNN-<k>", "Greedy-GP", "Greedy-MP", "Random-GP".
  std::string name() const;
  /// Accepts name() spellings, case-insensitive.
  static MethodId parse(const std::string& text);

  bool needs_power_net() const;
  bool needs_sched_net() const;
  bool uses_gp() const;

  friend bool operator==(const MethodId&, const MethodId&) = default;
};

/// Non-owning access to trained networks; null when unavailable.
struct Models {
  const PowerNet* power = nullptr;
  const SchedNet* sched = nullptr;
};

struct MethodOutcome {
  Schedule schedule;
  PowerAlloc alloc;
  double wall_time_s = 0.0;
  int gp_outer_iters = -1;  // -1 when no GP solve selects the powers
};

/// Thrown when a method needs a model that was not supplied.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per cell, the scheduled link with the largest weight (ties to the lower link index).
Schedule greedy_schedule(const Topology& topology);

/// Runs one method on one topology. The timing covers scheduling and power
/// allocation only. `random_seed` feeds the Random-GP schedule draw.
MethodOutcome run_method(const MethodId& method, const Topology& topology, const Models& models,
                         const GpConfig& gp_config, std::uint64_t random_seed = 0);

struct RunRecord {
  MethodId method;
  int topology = 0;
  std::int64_t schedule = 0;
  double wsr_bps = 0.0;
  double wall_time_s = 0.0;
  int gp_outer_iters = -1;
};

struct MethodSummary {
  MethodId method;
  int count = 0;
  double mean_wsr_bps = 0.0;
  double mean_time_s = 0.0;
  std::optional<double> loss_vs_reference;  // (ref - mean) / ref against Exhaustive-GP
  std::optional<double> mean_gp_iters;
};

struct RunReport {
  std::vector<MethodId> methods;
  std::vector<RunRecord> records;  // topology-major, methods in the order given
  std::vector<MethodSummary> summary;

  std::vector<double> wsr_of(const MethodId& method) const;  // per topology, in topology order
  /// Ascending WSR with empirical probabilities (i + 1) / n.
  std::vector<std::pair<double, double>> cdf(const MethodId& method) const;
  const MethodSummary& summary_of(const MethodId& method) const;
};

/// Deterministic per-topology seed derivation (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream = 0);

/// Generates n topologies from `seed`, runs every method on every topology
/// (methods see identical topologies) and aggregates. One untimed warm-up run
/// per method precedes the measurements.
RunReport benchmark(std::span<const MethodId> methods, int n_topologies, const SystemConfig& system,
                    const GpConfig& gp_config, const Models& models, std::uint64_t seed);

/// Same as above on caller-provided topologies.
RunReport benchmark(std::span<const MethodId> methods, std::span<const Topology> topologies, const Models& models,
                    const GpConfig& gp_config, std::uint64_t seed);

RunReport summarize(std::vector<MethodId> methods, std::vector<RunRecord> records);

/// Writes summary.csv (method, mean WSR, mean CPU time, % loss), records.csv,
/// cdf_<method>.csv per method and gp_iterations.csv into out_dir.
void export_report(const RunReport& report, const std::filesystem::path& out_dir);

/// Per-checkpoint training curve CSV: epoch, wall_s, train_mse, val_mse, val_mean_wsr_bps.
void export_training_curve(const TrainReport& report, std::span<const double> val_mean_wsr,
                           const std::filesystem::path& path);

}  // namespace linksched
