#include "linksched/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "linksched/config.hpp"

namespace linksched {

using nlohmann::json;

json topology_to_json(const Topology& topology) {
  json nodes = json::array();
  for (const auto& n : topology.nodes) {
    nodes.push_back({{"id", n.id},
                     {"kind", n.kind == NodeKind::kBs ? "BS" : "UE"},
                     {"x", n.position.x()},
                     {"y", n.position.y()},
                     {"cell", n.cell},
                     {"max_power_w", n.max_power_w},
                     {"noise_figure_db", n.noise_figure_db}});
  }
  const Eigen::Index n = topology.gains.rows();
  std::vector<double> gains(static_cast<std::size_t>(n * n));
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) gains[static_cast<std::size_t>(a * n + b)] = topology.gains(a, b);
  }
  return {{"format", "linksched-topology"},
          {"version", 1},
          {"config", system_config_to_json(topology.config)},
          {"nodes", nodes},
          {"gains", {{"rows", n}, {"cols", n}, {"data", gains}}},
          {"weights", std::vector<double>(topology.weights.data(), topology.weights.data() + topology.weights.size())}};
}

Topology topology_from_json(const json& j) {
  if (j.value("format", std::string()) != "linksched-topology" || j.value("version", 0) != 1) {
    throw std::runtime_error("topology: unsupported document format");
  }
  Topology t;
  t.config = system_config_from_json(j.at("config"));
  for (const auto& n : j.at("nodes")) {
    Node node;
    node.id = n.at("id").get<int>();
    const auto kind = n.at("kind").get<std::string>();
    if (kind != "BS" && kind != "UE") throw std::runtime_error("topology: unknown node kind '" + kind + "'");
    node.kind = kind == "BS" ? NodeKind::kBs : NodeKind::kUe;
    node.position = {n.at("x").get<double>(), n.at("y").get<double>()};
    node.cell = n.at("cell").get<int>();
    node.max_power_w = n.at("max_power_w").get<double>();
    node.noise_figure_db = n.at("noise_figure_db").get<double>();
    t.nodes.push_back(node);
  }
  const auto n = static_cast<Eigen::Index>(t.nodes.size());
  if (n != t.config.n_nodes()) throw std::runtime_error("topology: node count does not match config");
  const auto& g = j.at("gains");
  const auto data = g.at("data").get<std::vector<double>>();
  if (g.at("rows").get<Eigen::Index>() != n || g.at("cols").get<Eigen::Index>() != n ||
      static_cast<Eigen::Index>(data.size()) != n * n) {
    throw std::runtime_error("topology: gain table shape mismatch");
  }
  t.gains = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), n, n);
  const auto w = j.at("weights").get<std::vector<double>>();
  if (static_cast<int>(w.size()) != t.config.n_weights()) throw std::runtime_error("topology: weight count mismatch");
  t.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return t;
}

void write_topologies(const std::string& path, std::span<const Topology> topologies) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  json arr = json::array();
  for (const auto& t : topologies) arr.push_back(topology_to_json(t));
  os << arr.dump() << '\n';
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<Topology> read_topologies(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  try {
    const json arr = json::parse(is);
    std::vector<Topology> out;
    for (const auto& t : arr) out.push_back(topology_from_json(t));
    return out;
  } catch (const json::exception& e) {
    throw std::runtime_error("'" + path + "': " + e.what());
  }
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  os << ',' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
}

}  // namespace

void write_power_corpus(const std::string& path, const PowerCorpus& corpus) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  const int n = corpus.problems.empty() ? 0 : corpus.problems.front().n_links();
  os << "topology,schedule,gp_iters";
  for (const char* prefix : {"g", "w", "u", "noise", "pmax", "target"}) {
    const int count = std::string_view(prefix) == "g" ? n * n : n;
    for (int i = 0; i < count; ++i) os << ',' << prefix << i;
  }
  os << '\n';
  for (std::size_t k = 0; k < corpus.problems.size(); ++k) {
    const LinkProblem& p = corpus.problems[k];
    os << corpus.topology_id[k] << ',' << corpus.schedule_index[k] << ',' << corpus.gp_outer_iters[k];
    const Eigen::VectorXd g = gain_features_db(p);
    for (Eigen::Index i = 0; i < g.size(); ++i) put(os, g(i));
    for (Eigen::Index i = 0; i < n; ++i) put(os, p.weights(i));
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << p.downlink(i);
    for (Eigen::Index i = 0; i < n; ++i) put(os, p.noise_w(i));
    for (Eigen::Index i = 0; i < n; ++i) put(os, p.p_max_w(i));
    for (Eigen::Index i = 0; i < n; ++i) put(os, corpus.targets(i, static_cast<Eigen::Index>(k)));
    os << '\n';
  }
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

PowerCorpus read_power_corpus(const std::string& path, const SystemConfig& system) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("'" + path + "': empty file");
  const auto columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  // 3 + N^2 + 5N columns.
  int n = 0;
  while (3 + n * n + 5 * n < columns) ++n;
  if (n == 0 || 3 + n * n + 5 * n != columns) throw std::runtime_error("'" + path + "': unrecognized header");

  PowerCorpus c;
  std::vector<Eigen::VectorXd> targets;
  std::vector<double> row(static_cast<std::size_t>(columns));
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    for (int col = 0; col < columns; ++col) {
      const auto r = std::from_chars(cur, end, row[static_cast<std::size_t>(col)]);
      if (r.ec != std::errc() || (col + 1 < columns && (r.ptr == end || *r.ptr != ','))) {
        throw std::runtime_error("'" + path + "': malformed line " + std::to_string(line_no));
      }
      cur = r.ptr + 1;
    }
    auto at = [&](int i) { return row[static_cast<std::size_t>(i)]; };
    LinkProblem p;
    p.gain.resize(n, n);
    p.weights.resize(n);
    p.downlink.resize(n);
    p.noise_w.resize(n);
    p.p_max_w.resize(n);
    p.bandwidth_hz = system.bandwidth_hz;
    p.se_cap_bps_hz = system.se_cap_bps_hz;
    int col = 3;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) p.gain(i, j) = std::pow(10.0, at(col++) / 10.0);
    }
    for (int i = 0; i < n; ++i) p.weights(i) = at(col++);
    for (int i = 0; i < n; ++i) p.downlink(i) = static_cast<int>(at(col++));
    for (int i = 0; i < n; ++i) p.noise_w(i) = at(col++);
    for (int i = 0; i < n; ++i) p.p_max_w(i) = at(col++);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) t(i) = at(col++);
    p.validate();
    c.problems.push_back(std::move(p));
    targets.push_back(std::move(t));
    c.topology_id.push_back(static_cast<int>(at(0)));
    c.schedule_index.push_back(static_cast<std::int64_t>(at(1)));
    c.gp_outer_iters.push_back(static_cast<int>(at(2)));
  }
  c.targets.resize(n, static_cast<Eigen::Index>(targets.size()));
  for (std::size_t k = 0; k < targets.size(); ++k) c.targets.col(static_cast<Eigen::Index>(k)) = targets[k];
  return c;
}

}  // namespace linksched
