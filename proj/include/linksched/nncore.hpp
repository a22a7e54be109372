#pragma once

// Dense multilayer perceptron with named input blocks.
//
// Each input block runs through its own stack of dense layers (possibly
// empty), the block outputs are concatenated, and a trunk of dense layers
// followed by an output layer produces the prediction. Batches are
// column-major: one column per sample, one matrix per input block.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace linksched {

enum class Activation { kRelu, kSigmoid, kLinear };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct LayerSpec {
  int width = 1;
  Activation activation = Activation::kRelu;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct InputBlockSpec {
  std::string name;
  int width = 1;
  std::vector<LayerSpec> layers;
  friend bool operator==(const InputBlockSpec&, const InputBlockSpec&) = default;
};

struct MlpSpec {
  std::vector<InputBlockSpec> blocks;
  std::vector<LayerSpec> trunk;
  LayerSpec output;

  void validate() const;
  int output_width() const { return output.width; }
  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

nlohmann::json spec_to_json(const MlpSpec& spec);
MlpSpec spec_from_json(const nlohmann::json& j);

template <typename Scalar>
struct DenseLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weight;  // out x in
  Vector bias;
  Activation activation = Activation::kLinear;
};

template <typename Scalar>
struct LayerGradient {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weight;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;
};

template <typename Scalar>
using Gradients = std::vector<LayerGradient<Scalar>>;

template <typename Scalar>
class BasicMlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Layer = DenseLayer<Scalar>;

  BasicMlp() = default;

  /// Uniform He-style fan-in initialization: U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
  explicit BasicMlp(MlpSpec spec, std::uint64_t init_seed = 0) : spec_(std::move(spec)), init_seed_(init_seed) {
    spec_.validate();
    std::mt19937_64 rng(init_seed);
    auto add = [&](int in, const LayerSpec& ls) {
      Layer layer;
      layer.activation = ls.activation;
      const double limit = std::sqrt(6.0 / in);
      std::uniform_real_distribution<double> dist(-limit, limit);
      layer.weight = Matrix::NullaryExpr(ls.width, in, [&]() { return Scalar(dist(rng)); });
      layer.bias = Vector::Zero(ls.width);
      layers_.push_back(std::move(layer));
    };
    int concat = 0;
    for (const auto& block : spec_.blocks) {
      int in = block.width;
      for (const auto& ls : block.layers) {
        add(in, ls);
        in = ls.width;
      }
      concat += in;
    }
    int in = concat;
    for (const auto& ls : spec_.trunk) {
      add(in, ls);
      in = ls.width;
    }
    add(in, spec_.output);
  }

  const MlpSpec& spec() const { return spec_; }
  std::uint64_t init_seed() const { return init_seed_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Layers in flat order: every block's stack in block order, the trunk, then the output layer.
  std::size_t block_layer_offset(std::size_t block) const {
    std::size_t off = 0;
    for (std::size_t b = 0; b < block; ++b) off += spec_.blocks[b].layers.size();
    return off;
  }
  std::size_t trunk_offset() const { return block_layer_offset(spec_.blocks.size()); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  bool all_finite() const {
    return std::all_of(layers_.begin(), layers_.end(),
                       [](const Layer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
  }

  template <typename Other>
  BasicMlp<Other> cast() const {
    BasicMlp<Other> out;
    out.spec_ = spec_;
    out.init_seed_ = init_seed_;
    for (const auto& l : layers_) {
      out.layers_.push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>(), l.activation});
    }
    return out;
  }

  /// Throws std::invalid_argument naming the first block whose width or batch size is wrong.
  void check_inputs(std::span<const Matrix> inputs) const {
    if (inputs.size() != spec_.blocks.size()) {
      throw std::invalid_argument("mlp: expected " + std::to_string(spec_.blocks.size()) + " input blocks, got " +
                                  std::to_string(inputs.size()));
    }
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      if (inputs[b].rows() != spec_.blocks[b].width) {
        throw std::invalid_argument("mlp: input block '" + spec_.blocks[b].name + "' has width " +
                                    std::to_string(inputs[b].rows()) + ", expected " +
                                    std::to_string(spec_.blocks[b].width));
      }
      if (inputs[b].cols() != inputs[0].cols()) {
        throw std::invalid_argument("mlp: input block '" + spec_.blocks[b].name + "' has a different batch size");
      }
    }
  }

 private:
  template <typename>
  friend class BasicMlp;

  MlpSpec spec_;
  std::uint64_t init_seed_ = 0;
  std::vector<Layer> layers_;
};

using MlpModel = BasicMlp<double>;

namespace detail {

template <typename Derived>
void activate_inplace(Eigen::MatrixBase<Derived>& z, Activation a) {
  using Scalar = typename Derived::Scalar;
  switch (a) {
    case Activation::kRelu:
      z = z.cwiseMax(Scalar(0));
      break;
    case Activation::kSigmoid:
      z = (Scalar(1) + (-z.array()).exp()).inverse().matrix();
      break;
    case Activation::kLinear:
      break;
  }
}

// Multiplies the upstream gradient by the activation derivative, expressed in terms of the activation output.
template <typename Derived, typename OutDerived>
void activation_backward(Eigen::MatrixBase<Derived>& grad, const Eigen::MatrixBase<OutDerived>& out,
                         Activation a) {
  using Scalar = typename Derived::Scalar;
  switch (a) {
    case Activation::kRelu:
      grad = (out.array() > Scalar(0)).select(grad, Scalar(0));
      break;
    case Activation::kSigmoid:
      grad = grad.cwiseProduct((out.array() * (Scalar(1) - out.array())).matrix());
      break;
    case Activation::kLinear:
      break;
  }
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense_forward(
    const DenseLayer<Scalar>& layer, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& in) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> z = layer.weight * in;
  z.colwise() += layer.bias;
  activate_inplace(z, layer.activation);
  return z;
}

}  // namespace detail

/// Activations of every layer in flat order, plus the concatenated trunk input.
template <typename Scalar>
struct ForwardTrace {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<Matrix> outputs;  // one per layer, flat order
  Matrix concat;
};

template <typename Scalar>
ForwardTrace<Scalar> forward_trace(const BasicMlp<Scalar>& model,
                                   std::span<const typename BasicMlp<Scalar>::Matrix> inputs) {
  using Matrix = typename BasicMlp<Scalar>::Matrix;
  model.check_inputs(inputs);
  const auto& spec = model.spec();
  const auto& layers = model.layers();
  ForwardTrace<Scalar> trace;
  trace.outputs.resize(layers.size());
  const Eigen::Index batch = inputs.empty() ? 0 : inputs[0].cols();

  std::vector<const Matrix*> block_out(spec.blocks.size());
  Eigen::Index concat_rows = 0;
  std::size_t li = 0;
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    const Matrix* cur = &inputs[b];
    for (std::size_t k = 0; k < spec.blocks[b].layers.size(); ++k, ++li) {
      trace.outputs[li] = detail::dense_forward(layers[li], *cur);
      cur = &trace.outputs[li];
    }
    block_out[b] = cur;
    concat_rows += cur->rows();
  }
  trace.concat.resize(concat_rows, batch);
  Eigen::Index row = 0;
  for (const Matrix* m : block_out) {
    trace.concat.middleRows(row, m->rows()) = *m;
    row += m->rows();
  }
  const Matrix* cur = &trace.concat;
  for (; li < layers.size(); ++li) {
    trace.outputs[li] = detail::dense_forward(layers[li], *cur);
    cur = &trace.outputs[li];
  }
  return trace;
}

/// Inference forward pass; returns output_width x batch. Every column goes
/// through the same matrix-vector kernel, so a sample's output is
/// bit-identical whatever batch it is evaluated in.
template <typename Scalar>
typename BasicMlp<Scalar>::Matrix forward(const BasicMlp<Scalar>& model,
                                          std::span<const typename BasicMlp<Scalar>::Matrix> inputs) {
  using Matrix = typename BasicMlp<Scalar>::Matrix;
  using Vector = typename BasicMlp<Scalar>::Vector;
  model.check_inputs(inputs);
  const auto& spec = model.spec();
  const auto& layers = model.layers();
  const Eigen::Index batch = inputs[0].cols();
  auto apply = [](const DenseLayer<Scalar>& layer, const Vector& in) {
    Vector z = layer.bias;
    z.noalias() += layer.weight * in;
    detail::activate_inplace(z, layer.activation);
    return z;
  };
  Eigen::Index concat_rows = 0;
  for (const auto& b : spec.blocks) concat_rows += b.layers.empty() ? b.width : b.layers.back().width;

  Matrix out(spec.output.width, batch);
  Vector concat(concat_rows);
  for (Eigen::Index col = 0; col < batch; ++col) {
    std::size_t li = 0;
    Eigen::Index row = 0;
    for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
      Vector cur = inputs[b].col(col);
      for (std::size_t k = 0; k < spec.blocks[b].layers.size(); ++k, ++li) cur = apply(layers[li], cur);
      concat.segment(row, cur.size()) = cur;
      row += cur.size();
    }
    Vector cur = concat;
    for (; li < layers.size(); ++li) cur = apply(layers[li], cur);
    out.col(col) = cur;
  }
  return out;
}

/// Mean over batch and output dimensions of the squared error.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar mse(const Eigen::MatrixBase<DerivedA>& predicted, const Eigen::MatrixBase<DerivedB>& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
    throw std::invalid_argument("mse: shape mismatch");
  }
  if (predicted.size() == 0) throw std::invalid_argument("mse: empty batch");
  return (predicted - target).squaredNorm() / static_cast<typename DerivedA::Scalar>(predicted.size());
}

template <typename Scalar>
struct LossAndGradients {
  Scalar loss = 0;
  Gradients<Scalar> grads;
};

/// Exact reverse-mode gradients of the batch MSE with respect to every parameter.
template <typename Scalar>
LossAndGradients<Scalar> backward(const BasicMlp<Scalar>& model,
                                  std::span<const typename BasicMlp<Scalar>::Matrix> inputs,
                                  const typename BasicMlp<Scalar>::Matrix& target) {
  using Matrix = typename BasicMlp<Scalar>::Matrix;
  const ForwardTrace<Scalar> trace = forward_trace(model, inputs);
  const auto& spec = model.spec();
  const auto& layers = model.layers();
  const Matrix& pred = trace.outputs.back();

  LossAndGradients<Scalar> out;
  out.loss = mse(pred, target);
  out.grads.resize(layers.size());

  Matrix delta = (pred - target) * (Scalar(2) / static_cast<Scalar>(pred.size()));
  const std::size_t trunk0 = model.trunk_offset();
  for (std::size_t li = layers.size(); li-- > trunk0;) {
    detail::activation_backward(delta, trace.outputs[li], layers[li].activation);
    const Matrix& in = li == trunk0 ? trace.concat : trace.outputs[li - 1];
    out.grads[li].weight = delta * in.transpose();
    out.grads[li].bias = delta.rowwise().sum();
    delta = layers[li].weight.transpose() * delta;
  }
  // delta now holds d loss / d concat.
  Eigen::Index row = 0;
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    const std::size_t first = model.block_layer_offset(b);
    const std::size_t count = spec.blocks[b].layers.size();
    const Eigen::Index rows = count == 0 ? spec.blocks[b].width : spec.blocks[b].layers.back().width;
    Matrix d = delta.middleRows(row, rows);
    row += rows;
    for (std::size_t k = count; k-- > 0;) {
      const std::size_t li = first + k;
      detail::activation_backward(d, trace.outputs[li], layers[li].activation);
      const Matrix& in = k == 0 ? inputs[b] : trace.outputs[li - 1];
      out.grads[li].weight = d * in.transpose();
      out.grads[li].bias = d.rowwise().sum();
      if (k > 0) d = layers[li].weight.transpose() * d;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

enum class OptimizerKind { kSgd, kAdam };

struct TrainConfig {
  int batch_size = 256;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 50;
  std::uint64_t shuffle_seed = 1;
  int early_stop_patience = 10;  // 0 disables early stopping

  void validate() const;
};

template <typename Scalar>
struct BasicDataset {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<Matrix> inputs;  // per block, width x n
  Matrix targets;              // output_width x n

  Eigen::Index size() const { return targets.cols(); }

  BasicDataset subset(std::span<const Eigen::Index> columns) const {
    BasicDataset out;
    for (const auto& m : inputs) out.inputs.push_back(m(Eigen::all, std::vector<Eigen::Index>(columns.begin(), columns.end())));
    out.targets = targets(Eigen::all, std::vector<Eigen::Index>(columns.begin(), columns.end()));
    return out;
  }
};

using Dataset = BasicDataset<double>;

struct EpochRecord {
  int epoch = 0;  // 0 is the untrained checkpoint
  double train_mse = 0.0;
  double val_mse = 0.0;
  double wall_s = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool stopped_early = false;
};

template <typename Scalar>
Scalar dataset_mse(const BasicMlp<Scalar>& model, const BasicDataset<Scalar>& data, Eigen::Index chunk = 4096) {
  if (data.size() == 0) throw std::invalid_argument("dataset_mse: empty dataset");
  Scalar total = 0;
  std::vector<typename BasicMlp<Scalar>::Matrix> blocks(data.inputs.size());
  for (Eigen::Index start = 0; start < data.size(); start += chunk) {
    const Eigen::Index n = std::min(chunk, data.size() - start);
    for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b] = data.inputs[b].middleCols(start, n);
    const auto pred = std::move(forward_trace<Scalar>(model, blocks).outputs.back());
    total += (pred - data.targets.middleCols(start, n)).squaredNorm();
  }
  return total / static_cast<Scalar>(data.targets.size());
}

/// Called after every checkpoint (epoch 0 = before any update) with the current parameters.
template <typename Scalar>
using EpochCallback = std::function<void(int epoch, const BasicMlp<Scalar>& model)>;

/// Minibatch training on MSE. Deterministic for fixed seeds. With
/// early_stop_patience > 0 the parameters of the epoch with the lowest
/// validation MSE are restored at the end. Throws std::runtime_error on a
/// non-finite loss.
template <typename Scalar>
TrainReport train(BasicMlp<Scalar>& model, const BasicDataset<Scalar>& train_set,
                  const BasicDataset<Scalar>& val_set, const TrainConfig& cfg,
                  const EpochCallback<Scalar>& on_epoch = {}) {
  using Matrix = typename BasicMlp<Scalar>::Matrix;
  cfg.validate();
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  if (val_set.size() == 0) throw std::invalid_argument("train: empty validation set");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  TrainReport report;
  auto checkpoint = [&](int epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = static_cast<double>(dataset_mse(model, train_set));
    rec.val_mse = static_cast<double>(dataset_mse(model, val_set));
    rec.wall_s = elapsed();
    if (!std::isfinite(rec.train_mse) || !std::isfinite(rec.val_mse)) {
      throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(epoch, model);
  };
  checkpoint(0);

  auto& layers = model.layers();
  std::vector<LayerGradient<Scalar>> m1(layers.size());
  std::vector<LayerGradient<Scalar>> m2(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    m1[i].weight = m2[i].weight = Matrix::Zero(layers[i].weight.rows(), layers[i].weight.cols());
    m1[i].bias = m2[i].bias = BasicMlp<Scalar>::Vector::Zero(layers[i].bias.size());
  }
  std::vector<typename BasicMlp<Scalar>::Layer> best = layers;
  double best_val = report.epochs.front().val_mse;
  int since_best = 0;
  long step = 0;

  std::mt19937_64 rng(cfg.shuffle_seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<Matrix> blocks(train_set.inputs.size());
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  const auto eps = static_cast<Scalar>(cfg.epsilon);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      const std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(start + n));
      for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b] = train_set.inputs[b](Eigen::all, idx);
      const Matrix target = train_set.targets(Eigen::all, idx);
      const auto lg = backward<Scalar>(model, blocks, target);
      if (!std::isfinite(static_cast<double>(lg.loss))) {
        throw std::runtime_error("train: non-finite minibatch loss at epoch " + std::to_string(epoch) +
                                 ", offset " + std::to_string(start));
      }
      ++step;
      for (std::size_t i = 0; i < layers.size(); ++i) {
        if (cfg.optimizer == OptimizerKind::kSgd) {
          layers[i].weight -= lr * lg.grads[i].weight;
          layers[i].bias -= lr * lg.grads[i].bias;
          continue;
        }
        const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(cfg.beta1, static_cast<double>(step)));
        const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(cfg.beta2, static_cast<double>(step)));
        auto adam = [&](auto& param, auto& mom, auto& var, const auto& grad) {
          mom = b1 * mom + (Scalar(1) - b1) * grad;
          var = b2 * var + (Scalar(1) - b2) * grad.cwiseAbs2();
          param.array() -= lr * (mom.array() / c1) / ((var.array() / c2).sqrt() + eps);
        };
        adam(layers[i].weight, m1[i].weight, m2[i].weight, lg.grads[i].weight);
        adam(layers[i].bias, m1[i].bias, m2[i].bias, lg.grads[i].bias);
      }
    }
    checkpoint(epoch);
    const double val = report.epochs.back().val_mse;
    if (val < best_val) {
      best_val = val;
      best = layers;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (cfg.early_stop_patience > 0 && ++since_best >= cfg.early_stop_patience) {
      report.stopped_early = true;
      break;
    }
  }
  if (cfg.early_stop_patience > 0) layers = best;
  return report;
}

// ---------------------------------------------------------------------------
// Persistence. Parameters are stored as JSON numbers, which round-trip doubles exactly.

inline constexpr int kModelFormatVersion = 1;

struct LoadedModel {
  MlpModel model;
  nlohmann::json metadata;
};

nlohmann::json model_to_json(const MlpModel& model, const nlohmann::json& metadata = nlohmann::json::object());
LoadedModel model_from_json(const nlohmann::json& j);

void save_model(const MlpModel& model, const std::string& path,
                const nlohmann::json& metadata = nlohmann::json::object());

/// Throws std::runtime_error on unreadable/corrupted files or version mismatch.
LoadedModel load_model(const std::string& path);

/// Like load_model, but additionally requires the stored spec to equal `expected`;
/// the error names the first differing block or layer.
LoadedModel load_model(const std::string& path, const MlpSpec& expected);

/// Describes the first difference between two specs, or returns an empty string.
std::string spec_difference(const MlpSpec& expected, const MlpSpec& actual);

}  // namespace linksched
