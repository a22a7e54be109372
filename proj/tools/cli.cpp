#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "linksched/config.hpp"
#include "linksched/harness.hpp"
#include "linksched/io.hpp"
#include "linksched/powernet.hpp"
#include "linksched/schednet.hpp"

namespace linksched::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& path, const std::string& command, const RunConfig& config, const json& seeds,
                    const json& extra = json::object()) {
  const json cfg = config.to_json();
  json m = {{"tool", "linksched"},
            {"version", kVersion},
            {"command", command},
            {"created_utc", utc_now()},
            {"config", cfg},
            {"config_hash", config_hash(cfg)},
            {"seeds", seeds}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << m.dump(2) << '\n';
}

std::vector<Topology> make_topologies(const SystemConfig& system, std::uint64_t seed, int count,
                                      std::uint64_t stream) {
  std::vector<Topology> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(generate_topology(system, derive_seed(seed, static_cast<std::uint64_t>(i), stream)));
  }
  return out;
}

std::vector<MethodId> parse_methods(const std::string& list) {
  std::vector<MethodId> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(MethodId::parse(item));
  }
  if (out.empty()) throw std::invalid_argument("no methods given");
  return out;
}

void print_summary(const RunReport& report) {
  std::printf("%-16s %14s %14s %10s %10s\n", "method", "MWSR (Mbit/s)", "time (s)", "loss (%)", "GP iters");
  for (const auto& s : report.summary) {
    std::printf("%-16s %14.3f %14.6f ", s.method.name().c_str(), s.mean_wsr_bps / 1e6, s.mean_time_s);
    if (s.loss_vs_reference) {
      std::printf("%10.2f ", 100.0 * *s.loss_vs_reference);
    } else {
      std::printf("%10s ", "-");
    }
    if (s.mean_gp_iters) {
      std::printf("%10.2f\n", *s.mean_gp_iters);
    } else {
      std::printf("%10s\n", "-");
    }
  }
}

int cmd_gen_topo(const std::string& config_path, std::uint64_t seed, int count, const std::string& out) {
  const RunConfig cfg = config_or_default(config_path);
  ensure_dir(out);
  const auto topologies = make_topologies(cfg.system, seed, count, 0);
  for (std::size_t i = 0; i < topologies.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "topology_%05zu.json", i);
    std::ofstream os(fs::path(out) / name);
    if (!os) throw std::runtime_error("cannot write topology file");
    os << topology_to_json(topologies[i]).dump() << '\n';
  }
  write_manifest(fs::path(out) / "manifest.json", "gen-topo", cfg, {{"seed", seed}, {"count", count}});
  std::cout << "wrote " << count << " topologies to " << out << '\n';
  return 0;
}

int cmd_gen_dataset(const std::string& config_path, const std::string& out) {
  const RunConfig cfg = config_or_default(config_path);
  ensure_dir(out);
  const auto power_topos = make_topologies(cfg.system, cfg.dataset.seed, cfg.dataset.power_topologies, 0);
  const PowerCorpusSplit split = make_dataset(power_topos, cfg.gp, cfg.dataset.val_fraction);
  write_power_corpus((fs::path(out) / "power_train.csv").string(), split.train);
  write_power_corpus((fs::path(out) / "power_val.csv").string(), split.validation);

  const auto sched_topos = make_topologies(cfg.system, cfg.dataset.seed, cfg.dataset.sched_topologies, 1);
  const auto n_val = static_cast<std::size_t>(
      std::clamp<long>(std::lround(cfg.dataset.val_fraction * static_cast<double>(sched_topos.size())), 1L,
                       static_cast<long>(sched_topos.size()) - 1));
  const std::span<const Topology> all(sched_topos);
  write_topologies((fs::path(out) / "sched_train_topologies.json").string(), all.first(all.size() - n_val));
  write_topologies((fs::path(out) / "sched_val_topologies.json").string(), all.last(n_val));

  write_manifest(fs::path(out) / "manifest.json", "gen-dataset", cfg,
                 {{"dataset_seed", cfg.dataset.seed}},
                 {{"power_train_samples", split.train.size()},
                  {"power_val_samples", split.validation.size()},
                  {"gp_dropped", split.train.dropped + split.validation.dropped}});
  std::cout << "power samples: " << split.train.size() << " train, " << split.validation.size()
            << " validation; schedule topologies: " << sched_topos.size() - n_val << " train, " << n_val
            << " validation\n";
  return 0;
}

int cmd_train_power(const std::string& config_path, const std::string& data, const std::string& out) {
  const RunConfig cfg = config_or_default(config_path);
  const PowerCorpus train_set = read_power_corpus((fs::path(data) / "power_train.csv").string(), cfg.system);
  const PowerCorpus val_set = read_power_corpus((fs::path(data) / "power_val.csv").string(), cfg.system);
  PowerNet net = PowerNet::create(train_set, cfg.power_init_seed);
  const PowerTrainReport report = train_power_net(net, train_set, val_set, cfg.power_train);
  net.save(out);
  export_training_curve(report.training, report.val_mean_wsr_bps, out + ".curve.csv");
  const auto& first = report.training.epochs.front();
  const auto& last = report.training.epochs.back();
  std::cout << "val MSE " << first.val_mse << " -> " << last.val_mse << ", val mean WSR "
            << report.val_mean_wsr_bps.front() / 1e6 << " -> " << report.val_mean_wsr_bps.back() / 1e6
            << " Mbit/s; best epoch " << report.training.best_epoch << "; model written to " << out << '\n';
  return 0;
}

int cmd_train_sched(const std::string& config_path, const std::string& power_model, const std::string& data,
                    const std::string& out) {
  const RunConfig cfg = config_or_default(config_path);
  const PowerNet power = PowerNet::load(power_model);
  const auto train_topos = read_topologies((fs::path(data) / "sched_train_topologies.json").string());
  const auto val_topos = read_topologies((fs::path(data) / "sched_val_topologies.json").string());
  SchedCorpus train_set;
  SchedCorpus val_set;
  for (const auto& pair : {std::pair{&train_topos, &train_set}, std::pair{&val_topos, &val_set}}) {
    const auto& topos = *pair.first;
    SchedCorpus& corpus = *pair.second;
    if (topos.empty()) throw std::runtime_error("train-sched: empty topology file");
    corpus.topologies = topos;
    corpus.wsr_bps.resize(schedule_count(topos.front().config.n_cells, topos.front().config.users_per_cell),
                          static_cast<Eigen::Index>(topos.size()));
    for (std::size_t t = 0; t < topos.size(); ++t) {
      corpus.wsr_bps.col(static_cast<Eigen::Index>(t)) = power_net_schedule_values(power, topos[t]);
    }
  }
  SchedNet net = SchedNet::create(train_set, cfg.sched_init_seed);
  const SchedTrainReport report = train_sched_net(net, train_set, val_set, cfg.sched_train);
  net.save(out);
  export_training_curve(report.training, report.val_mean_selected_wsr_bps, out + ".curve.csv");
  const auto& first = report.training.epochs.front();
  const auto& last = report.training.epochs.back();
  std::cout << "val MSE " << first.val_mse << " -> " << last.val_mse << ", val mean selected WSR "
            << report.val_mean_selected_wsr_bps.front() / 1e6 << " -> "
            << report.val_mean_selected_wsr_bps.back() / 1e6 << " Mbit/s; model written to " << out << '\n';
  return 0;
}

struct LoadedModels {
  std::optional<PowerNet> power;
  std::optional<SchedNet> sched;
  Models view() const { return {power ? &*power : nullptr, sched ? &*sched : nullptr}; }
};

LoadedModels load_models(const std::string& power_model, const std::string& sched_model) {
  LoadedModels m;
  if (!power_model.empty()) m.power = PowerNet::load(power_model);
  if (!sched_model.empty()) m.sched = SchedNet::load(sched_model);
  return m;
}

int finish_report(const RunReport& report, const std::string& out, const std::string& command,
                  const RunConfig& cfg, const json& seeds) {
  print_summary(report);
  if (!out.empty()) {
    export_report(report, out);
    write_manifest(fs::path(out) / "manifest.json", command, cfg, seeds);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Link scheduling and power allocation: GP baselines, neural approximators, benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  std::string out;
  std::string data;
  std::string power_model;
  std::string sched_model;
  std::string methods = "exhaustive-gp,max-dnn,dqn-gp,dqn-dnn-5,dqn-dnn,greedy-gp,greedy-mp,random-gp";
  std::string topologies_path;
  std::uint64_t seed = 1;
  int count = 1;
  int n = 100;

  auto* gen_topo = app.add_subcommand("gen-topo", "Generate random topologies as JSON files");
  gen_topo->add_option("--config", config_path, "Run configuration (JSON)");
  gen_topo->add_option("--seed", seed, "Base seed")->required();
  gen_topo->add_option("--count", count, "Number of topologies")->check(CLI::PositiveNumber);
  gen_topo->add_option("--out", out, "Output directory")->required();

  auto* gen_dataset = app.add_subcommand("gen-dataset", "GP-label power samples and draw schedule-net topologies");
  gen_dataset->add_option("--config", config_path, "Run configuration (JSON)");
  gen_dataset->add_option("--out", out, "Output directory")->required();

  auto* train_power = app.add_subcommand("train-power", "Train the power-allocation network");
  train_power->add_option("--config", config_path, "Run configuration (JSON)");
  train_power->add_option("--data", data, "Dataset directory from gen-dataset")->required();
  train_power->add_option("--out", out, "Model file to write")->required();

  auto* train_sched = app.add_subcommand("train-sched", "Train the schedule-value network");
  train_sched->add_option("--config", config_path, "Run configuration (JSON)");
  train_sched->add_option("--power-model", power_model, "Trained power model")->required();
  train_sched->add_option("--data", data, "Dataset directory from gen-dataset")->required();
  train_sched->add_option("--out", out, "Model file to write")->required();

  auto* bench = app.add_subcommand("bench", "Benchmark methods on freshly drawn topologies");
  bench->add_option("--methods", methods, "Comma-separated method list");
  bench->add_option("--n", n, "Number of topologies")->check(CLI::PositiveNumber);
  bench->add_option("--config", config_path, "Run configuration (JSON)");
  bench->add_option("--power-model", power_model, "Trained power model");
  bench->add_option("--sched-model", sched_model, "Trained schedule model");
  bench->add_option("--seed", seed, "Benchmark seed");
  bench->add_option("--out", out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate methods on topologies read from a file");
  eval->add_option("--topologies", topologies_path, "JSON array or single topology document")->required();
  eval->add_option("--methods", methods, "Comma-separated method list");
  eval->add_option("--config", config_path, "Run configuration (JSON)");
  eval->add_option("--power-model", power_model, "Trained power model");
  eval->add_option("--sched-model", sched_model, "Trained schedule model");
  eval->add_option("--seed", seed, "Seed for Random-GP draws");
  eval->add_option("--out", out, "Output directory (optional)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_topo->parsed()) return cmd_gen_topo(config_path, seed, count, out);
    if (gen_dataset->parsed()) return cmd_gen_dataset(config_path, out);
    if (train_power->parsed()) return cmd_train_power(config_path, data, out);
    if (train_sched->parsed()) return cmd_train_sched(config_path, power_model, data, out);
    if (bench->parsed()) {
      const RunConfig cfg = config_or_default(config_path);
      const auto method_list = parse_methods(methods);
      const LoadedModels models = load_models(power_model, sched_model);
      const RunReport report = benchmark(method_list, n, cfg.system, cfg.gp, models.view(), seed);
      return finish_report(report, out, "bench", cfg, {{"bench_seed", seed}, {"n", n}});
    }
    if (eval->parsed()) {
      const RunConfig cfg = config_or_default(config_path);
      const auto method_list = parse_methods(methods);
      const LoadedModels models = load_models(power_model, sched_model);
      std::ifstream is(topologies_path);
      if (!is) throw std::runtime_error("cannot open '" + topologies_path + "'");
      const json doc = json::parse(is);
      std::vector<Topology> topos;
      if (doc.is_array()) {
        for (const auto& t : doc) topos.push_back(topology_from_json(t));
      } else {
        topos.push_back(topology_from_json(doc));
      }
      const RunReport report = benchmark(method_list, topos, models.view(), cfg.gp, seed);
      return finish_report(report, out, "eval", cfg, {{"random_seed", seed}});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace linksched::cli
