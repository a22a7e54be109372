#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "linksched/powernet.hpp"
#include "linksched/topo.hpp"

namespace linksched {

/// Topology document:
///   { "format": "linksched-topology", "version": 1, "config": {...SystemConfig...},
///     "nodes": [ { "id", "kind": "BS"|"UE", "x", "y", "cell", "max_power_w", "noise_figure_db" } ],
///     "gains": { "rows": n, "cols": n, "data": [row-major linear gains, tx row, rx column] },
///     "weights": [2 N M link weights] }
nlohmann::json topology_to_json(const Topology& topology);
Topology topology_from_json(const nlohmann::json& j);

void write_topologies(const std::string& path, std::span<const Topology> topologies);
std::vector<Topology> read_topologies(const std::string& path);

/// Power dataset CSV. Header:
///   topology,schedule,gp_iters,g0..g{N^2-1},w0..,u0..,noise0..,pmax0..,target0..
/// g* are 10 log10 of the link gain matrix (row-major), u* are 1 for downlink,
/// noise*/pmax* in watts and target* the GP power fractions.
void write_power_corpus(const std::string& path, const PowerCorpus& corpus);

/// Bandwidth and spectral-efficiency cap are taken from `system`.
PowerCorpus read_power_corpus(const std::string& path, const SystemConfig& system);

}  // namespace linksched
