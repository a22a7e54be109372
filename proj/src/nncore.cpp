#include "linksched/nncore.hpp"

#include <fstream>
#include <sstream>

namespace linksched {

using nlohmann::json;

const char* to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kLinear:
      return "linear";
  }
  return "?";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "linear") return Activation::kLinear;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (blocks.empty()) throw std::invalid_argument("MlpSpec: at least one input block required");
  auto check = [](const LayerSpec& l, const std::string& where) {
    if (l.width < 1) throw std::invalid_argument("MlpSpec: " + where + " has width < 1");
  };
  for (const auto& b : blocks) {
    if (b.width < 1) throw std::invalid_argument("MlpSpec: block '" + b.name + "' has width < 1");
    for (const auto& l : b.layers) check(l, "layer of block '" + b.name + "'");
  }
  for (const auto& l : trunk) check(l, "trunk layer");
  check(output, "output layer");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate >= 0)) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (early_stop_patience < 0) throw std::invalid_argument("TrainConfig: early_stop_patience must be >= 0");
}

namespace {

json layer_spec_json(const LayerSpec& l) { return {{"width", l.width}, {"activation", to_string(l.activation)}}; }

LayerSpec layer_spec_from(const json& j) {
  return {j.at("width").get<int>(), activation_from_string(j.at("activation").get<std::string>())};
}

std::string describe(const LayerSpec& l) {
  return std::to_string(l.width) + "/" + to_string(l.activation);
}

}  // namespace

json spec_to_json(const MlpSpec& spec) {
  json blocks = json::array();
  for (const auto& b : spec.blocks) {
    json layers = json::array();
    for (const auto& l : b.layers) layers.push_back(layer_spec_json(l));
    blocks.push_back({{"name", b.name}, {"width", b.width}, {"layers", layers}});
  }
  json trunk = json::array();
  for (const auto& l : spec.trunk) trunk.push_back(layer_spec_json(l));
  return {{"blocks", blocks}, {"trunk", trunk}, {"output", layer_spec_json(spec.output)}};
}

MlpSpec spec_from_json(const json& j) {
  MlpSpec spec;
  for (const auto& b : j.at("blocks")) {
    InputBlockSpec block{b.at("name").get<std::string>(), b.at("width").get<int>(), {}};
    for (const auto& l : b.at("layers")) block.layers.push_back(layer_spec_from(l));
    spec.blocks.push_back(std::move(block));
  }
  for (const auto& l : j.at("trunk")) spec.trunk.push_back(layer_spec_from(l));
  spec.output = layer_spec_from(j.at("output"));
  spec.validate();
  return spec;
}

std::string spec_difference(const MlpSpec& expected, const MlpSpec& actual) {
  if (expected.blocks.size() != actual.blocks.size()) {
    return "block count " + std::to_string(actual.blocks.size()) + " != " + std::to_string(expected.blocks.size());
  }
  for (std::size_t b = 0; b < expected.blocks.size(); ++b) {
    const auto& e = expected.blocks[b];
    const auto& a = actual.blocks[b];
    if (e.name != a.name || e.width != a.width) {
      return "input block " + std::to_string(b) + " ('" + a.name + "', width " + std::to_string(a.width) +
             ") != expected ('" + e.name + "', width " + std::to_string(e.width) + ")";
    }
    if (e.layers.size() != a.layers.size()) return "block '" + e.name + "' layer count differs";
    for (std::size_t k = 0; k < e.layers.size(); ++k) {
      if (!(e.layers[k] == a.layers[k])) {
        return "block '" + e.name + "' layer " + std::to_string(k) + " is " + describe(a.layers[k]) +
               ", expected " + describe(e.layers[k]);
      }
    }
  }
  if (expected.trunk.size() != actual.trunk.size()) return "trunk layer count differs";
  for (std::size_t k = 0; k < expected.trunk.size(); ++k) {
    if (!(expected.trunk[k] == actual.trunk[k])) {
      return "trunk layer " + std::to_string(k) + " is " + describe(actual.trunk[k]) + ", expected " +
             describe(expected.trunk[k]);
    }
  }
  if (!(expected.output == actual.output)) {
    return "output layer is " + describe(actual.output) + ", expected " + describe(expected.output);
  }
  return {};
}

json model_to_json(const MlpModel& model, const json& metadata) {
  json layers = json::array();
  for (const auto& l : model.layers()) {
    std::vector<double> w(static_cast<std::size_t>(l.weight.size()));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), l.weight.rows(),
                                                                                       l.weight.cols()) = l.weight;
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"activation", to_string(l.activation)},
                      {"weight", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"format", "linksched-mlp"},
          {"version", kModelFormatVersion},
          {"spec", spec_to_json(model.spec())},
          {"init_seed", model.init_seed()},
          {"layers", layers},
          {"metadata", metadata}};
}

LoadedModel model_from_json(const json& j) {
  if (j.value("format", std::string()) != "linksched-mlp") throw std::runtime_error("model: not a linksched model file");
  if (j.at("version").get<int>() != kModelFormatVersion) {
    throw std::runtime_error("model: unsupported format version " + std::to_string(j.at("version").get<int>()));
  }
  LoadedModel out;
  out.model = MlpModel(spec_from_json(j.at("spec")), j.at("init_seed").get<std::uint64_t>());
  auto& layers = out.model.layers();
  const auto& stored = j.at("layers");
  if (stored.size() != layers.size()) {
    throw std::runtime_error("model: file has " + std::to_string(stored.size()) + " layers, spec implies " +
                             std::to_string(layers.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& s = stored[i];
    auto& l = layers[i];
    const auto w = s.at("weight").get<std::vector<double>>();
    const auto b = s.at("bias").get<std::vector<double>>();
    if (s.at("rows").get<Eigen::Index>() != l.weight.rows() || s.at("cols").get<Eigen::Index>() != l.weight.cols() ||
        static_cast<Eigen::Index>(w.size()) != l.weight.size() || static_cast<Eigen::Index>(b.size()) != l.bias.size()) {
      throw std::runtime_error("model: layer " + std::to_string(i) + " shape does not match its spec");
    }
    l.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.data(), l.weight.rows(), l.weight.cols());
    l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), l.bias.size());
  }
  if (!out.model.all_finite()) throw std::runtime_error("model: non-finite parameters");
  out.metadata = j.value("metadata", json::object());
  return out;
}

void save_model(const MlpModel& model, const std::string& path, const json& metadata) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_model: cannot open '" + path + "' for writing");
  os << model_to_json(model, metadata).dump() << '\n';
  if (!os) throw std::runtime_error("save_model: write to '" + path + "' failed");
}

LoadedModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_model: cannot open '" + path + "'");
  json j;
  try {
    is >> j;
    return model_from_json(j);
  } catch (const json::exception& e) {
    throw std::runtime_error("load_model: '" + path + "' is corrupted: " + e.what());
  }
}

LoadedModel load_model(const std::string& path, const MlpSpec& expected) {
  LoadedModel m = load_model(path);
  const std::string diff = spec_difference(expected, m.model.spec());
  if (!diff.empty()) throw std::runtime_error("load_model: spec mismatch in '" + path + "': " + diff);
  return m;
}

}  // namespace linksched
