#pragma once

// Fully connected networks with optional batch normalization, exact
// backpropagation, MSE, and Adam. Shared by the WGAN, the CKM and PPO.
//
// Layer order inside a DenseLayer: affine -> [batch norm] -> activation.
// Matrices are row-major with one sample per row.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "uavckm/rng.hpp"

namespace uavckm {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { identity, relu, tanh, sigmoid };
enum class Mode { train, infer };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation: " + s);
}

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct LayerSpec {
  std::size_t units{0};
  Activation activation{Activation::relu};
  bool batch_norm{false};
};

struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
  Activation activation{Activation::identity};
  bool batch_norm{false};
  Matrix gamma;  // 1 x out, batch-norm scale
  Matrix beta;   // 1 x out, batch-norm shift
  Matrix running_mean;
  Matrix running_var;

  std::size_t in() const { return static_cast<std::size_t>(weight.rows()); }
  std::size_t out() const { return static_cast<std::size_t>(weight.cols()); }
};

struct LayerCache {
  Matrix input;
  bool batch_statistics{false};  // batch norm used batch (train) rather than running stats
  Matrix normalized;  // batch-norm x_hat
  Matrix inv_std;     // 1 x out
  Matrix batch_mean;
  Matrix batch_var;
  Matrix pre_activation;
  Matrix output;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
};

struct LayerGrads {
  Matrix weight;
  Matrix bias;
  Matrix gamma;
  Matrix beta;
};

struct Gradients {
  std::vector<LayerGrads> layers;
  Matrix input;  // d loss / d network input

  /// Same order as Network::parameters().
  std::vector<const Matrix*> tensors() const {
    std::vector<const Matrix*> out;
    for (const auto& l : layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
      if (l.gamma.size() > 0) {
        out.push_back(&l.gamma);
        out.push_back(&l.beta);
      }
    }
    return out;
  }
  std::vector<Matrix*> tensors() {
    std::vector<Matrix*> out;
    for (auto& l : layers) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
      if (l.gamma.size() > 0) {
        out.push_back(&l.gamma);
        out.push_back(&l.beta);
      }
    }
    return out;
  }
  void accumulate(const Gradients& other) {
    auto mine = tensors();
    const auto theirs = other.tensors();
    for (std::size_t i = 0; i < mine.size(); ++i) *mine[i] += *theirs[i];
  }
};

namespace detail {

inline Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::sigmoid: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }
  return z;
}

/// d output / d pre-activation, expressed through z and y = f(z).
inline Matrix activation_derivative(const Matrix& z, const Matrix& y, Activation a) {
  switch (a) {
    case Activation::identity: return Matrix::Ones(z.rows(), z.cols());
    case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: return (1.0 - y.array().square()).matrix();
    case Activation::sigmoid: return (y.array() * (1.0 - y.array())).matrix();
  }
  return Matrix::Ones(z.rows(), z.cols());
}

}  // namespace detail

class Network {
 public:
  Network() = default;

  /// Kaiming-style uniform init scaled by fan-in; zero biases; BN scale 1,
  /// shift 0, running mean 0, running var 1.
  static Network build(std::size_t input_dim, const std::vector<LayerSpec>& specs, Rng& rng) {
    if (input_dim == 0) throw std::invalid_argument("network: input dimension must be positive");
    Network net;
    std::size_t fan_in = input_dim;
    for (const auto& spec : specs) {
      if (spec.units == 0) throw std::invalid_argument("network: layer with zero units");
      DenseLayer layer;
      const double gain = spec.activation == Activation::relu ? 6.0 : 3.0;
      const double limit = std::sqrt(gain / static_cast<double>(fan_in));
      layer.weight.resize(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(spec.units));
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = rng.uniform(-limit, limit);
      layer.bias = Matrix::Zero(1, static_cast<Eigen::Index>(spec.units));
      layer.activation = spec.activation;
      layer.batch_norm = spec.batch_norm;
      if (spec.batch_norm) {
        const auto n = static_cast<Eigen::Index>(spec.units);
        layer.gamma = Matrix::Ones(1, n);
        layer.beta = Matrix::Zero(1, n);
        layer.running_mean = Matrix::Zero(1, n);
        layer.running_var = Matrix::Ones(1, n);
      }
      net.layers_.push_back(std::move(layer));
      fan_in = spec.units;
    }
    return net;
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  bool empty() const { return layers_.empty(); }

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in(); }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out(); }

  /// In train mode batch statistics are used and, when `cache` is given,
  /// every intermediate needed by backward() is recorded. Running
  /// statistics are only changed by absorb_batch_statistics().
  Matrix forward(const Matrix& x, Mode mode = Mode::infer, ForwardCache* cache = nullptr) const {
    if (cache) cache->layers.assign(layers_.size(), {});
    Matrix h = x;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const auto& layer = layers_[li];
      if (static_cast<std::size_t>(h.cols()) != layer.in()) {
        throw std::invalid_argument("network: layer " + std::to_string(li) + " expects " +
                                    std::to_string(layer.in()) + " inputs, got " + std::to_string(h.cols()));
      }
      LayerCache* lc = cache ? &cache->layers[li] : nullptr;
      if (lc) lc->input = h;
      Matrix z = h * layer.weight;
      z.rowwise() += layer.bias.row(0);
      if (layer.batch_norm) {
        Matrix mean, var;
        if (mode == Mode::train) {
          mean = z.colwise().mean();
          var = (z.rowwise() - mean.row(0)).array().square().colwise().mean().matrix();
        } else {
          mean = layer.running_mean;
          var = layer.running_var;
        }
        const Matrix inv_std = (var.array() + kBatchNormEps).rsqrt().matrix();
        Matrix xhat = (z.rowwise() - mean.row(0)).array().rowwise() * inv_std.row(0).array();
        z = (xhat.array().rowwise() * layer.gamma.row(0).array()).matrix();
        z.rowwise() += layer.beta.row(0);
        if (lc) {
          lc->batch_statistics = mode == Mode::train;
          lc->normalized = std::move(xhat);
          lc->inv_std = inv_std;
          lc->batch_mean = std::move(mean);
          lc->batch_var = std::move(var);
        }
      }
      h = detail::activate(z, layer.activation);
      if (lc) {
        lc->pre_activation = std::move(z);
        lc->output = h;
      }
    }
    return h;
  }

  /// Exact gradients for the forward pass recorded in `cache` (either mode;
  /// in infer mode batch norm is a fixed per-feature affine map).
  Gradients backward(const ForwardCache& cache, const Matrix& grad_output) const {
    if (cache.layers.size() != layers_.size()) throw std::invalid_argument("network: cache does not match");
    Gradients g;
    g.layers.resize(layers_.size());
    Matrix grad = grad_output;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const auto& layer = layers_[k];
      const auto& lc = cache.layers[k];
      grad = (grad.array() * detail::activation_derivative(lc.pre_activation, lc.output, layer.activation).array())
                 .matrix();
      auto& lg = g.layers[k];
      if (layer.batch_norm && !lc.batch_statistics) {
        lg.gamma = (grad.array() * lc.normalized.array()).colwise().sum().matrix();
        lg.beta = grad.colwise().sum();
        grad = (grad.array().rowwise() * (layer.gamma.row(0).array() * lc.inv_std.row(0).array())).matrix();
      } else if (layer.batch_norm) {
        const double m = static_cast<double>(grad.rows());
        lg.gamma = (grad.array() * lc.normalized.array()).colwise().sum().matrix();
        lg.beta = grad.colwise().sum();
        const Matrix dxhat = (grad.array().rowwise() * layer.gamma.row(0).array()).matrix();
        const Matrix sum_dxhat = dxhat.colwise().sum();
        const Matrix sum_dxhat_xhat = (dxhat.array() * lc.normalized.array()).colwise().sum().matrix();
        Matrix dz = (dxhat * m).rowwise() - sum_dxhat.row(0);
        dz -= (lc.normalized.array().rowwise() * sum_dxhat_xhat.row(0).array()).matrix();
        dz = (dz.array().rowwise() * (lc.inv_std.row(0).array() / m)).matrix();
        grad = std::move(dz);
      }
      lg.weight = lc.input.transpose() * grad;
      lg.bias = grad.colwise().sum();
      grad = grad * layer.weight.transpose();
    }
    g.input = std::move(grad);
    return g;
  }

  void absorb_batch_statistics(const ForwardCache& cache, double momentum = kBatchNormMomentum) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      auto& layer = layers_[k];
      if (!layer.batch_norm) continue;
      const auto& lc = cache.layers[k];
      if (!lc.batch_statistics) continue;
      layer.running_mean = momentum * layer.running_mean + (1.0 - momentum) * lc.batch_mean;
      layer.running_var = momentum * layer.running_var + (1.0 - momentum) * lc.batch_var;
    }
  }

  std::vector<Matrix*> parameters() {
    std::vector<Matrix*> out;
    for (auto& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
      if (l.batch_norm) {
        out.push_back(&l.gamma);
        out.push_back(&l.beta);
      }
    }
    return out;
  }
  std::vector<const Matrix*> parameters() const {
    std::vector<const Matrix*> out;
    for (const auto& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
      if (l.batch_norm) {
        out.push_back(&l.gamma);
        out.push_back(&l.beta);
      }
    }
    return out;
  }

  /// Weight matrices only (L2 decay applies to these, not biases / BN).
  std::vector<bool> decay_mask() const {
    std::vector<bool> out;
    for (const auto& l : layers_) {
      out.push_back(true);
      out.push_back(false);
      if (l.batch_norm) {
        out.push_back(false);
        out.push_back(false);
      }
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += static_cast<std::size_t>(p->size());
    return n;
  }

  void set_zero() {
    for (auto* p : parameters()) p->setZero();
  }

  bool operator==(const Network& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& a = layers_[k];
      const auto& b = other.layers_[k];
      if (a.activation != b.activation || a.batch_norm != b.batch_norm || a.weight != b.weight ||
          a.bias != b.bias) {
        return false;
      }
      if (a.batch_norm && (a.gamma != b.gamma || a.beta != b.beta || a.running_mean != b.running_mean ||
                           a.running_var != b.running_var)) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<DenseLayer> layers_;
};

/// Zero gradients shaped like the network's parameters.
inline Gradients zero_gradients(const Network& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    LayerGrads lg;
    lg.weight = Matrix::Zero(l.weight.rows(), l.weight.cols());
    lg.bias = Matrix::Zero(1, l.bias.cols());
    if (l.batch_norm) {
      lg.gamma = Matrix::Zero(1, l.gamma.cols());
      lg.beta = Matrix::Zero(1, l.beta.cols());
    }
    g.layers.push_back(std::move(lg));
  }
  return g;
}

inline double mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("mse: shape mismatch");
  }
  if (pred.size() == 0) return 0.0;
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

inline Matrix mse_gradient(const Matrix& pred, const Matrix& target) {
  return (pred - target) * (2.0 / static_cast<double>(pred.size()));
}

/// Bias-corrected Adam over an arbitrary list of parameter tensors.
struct AdamState {
  double lr{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
  long long step_count{0};
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  AdamState() = default;
  explicit AdamState(double learning_rate) : lr(learning_rate) {}
};

/// One Adam update. Throws std::domain_error on a non-finite gradient.
/// `weight_decay` adds an L2 term to tensors flagged in `decay_mask`.
inline void adam_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
                      AdamState& state, double weight_decay = 0.0, const std::vector<bool>& decay_mask = {}) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam: state built for other parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i]->rows() != params[i]->rows() || grads[i]->cols() != params[i]->cols()) {
      throw std::invalid_argument("adam: gradient shape mismatch at tensor " + std::to_string(i));
    }
    if (!grads[i]->allFinite()) throw std::domain_error("adam: non-finite gradient at tensor " + std::to_string(i));
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix g = *grads[i];
    if (weight_decay > 0.0 && i < decay_mask.size() && decay_mask[i]) g += weight_decay * *params[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseProduct(g);
    const auto m_hat = state.m[i].array() / c1;
    const auto v_hat = state.v[i].array() / c2;
    params[i]->array() -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
  }
}

inline void adam_step(Network& net, const Gradients& grads, AdamState& state, double weight_decay = 0.0) {
  adam_step(net.parameters(), grads.tensors(), state, weight_decay, net.decay_mask());
}

// Checkpoints

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()},
                        {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw std::invalid_argument("matrix: size mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

inline nlohmann::json network_to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    nlohmann::json jl = {{"units", l.out()},
                         {"activation", to_string(l.activation)},
                         {"batch_norm", l.batch_norm},
                         {"weight", matrix_to_json(l.weight)},
                         {"bias", matrix_to_json(l.bias)}};
    if (l.batch_norm) {
      jl["gamma"] = matrix_to_json(l.gamma);
      jl["beta"] = matrix_to_json(l.beta);
      jl["running_mean"] = matrix_to_json(l.running_mean);
      jl["running_var"] = matrix_to_json(l.running_var);
    }
    layers.push_back(std::move(jl));
  }
  return {{"format", "uavckm-network"}, {"version", kCheckpointVersion}, {"input_dim", net.input_dim()},
          {"layers", layers}};
}

inline Network network_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "uavckm-network") throw std::invalid_argument("checkpoint: not a network");
  if (j.at("version").get<int>() != kCheckpointVersion) throw std::invalid_argument("checkpoint: unsupported version");
  Network net;
  std::size_t fan_in = j.at("input_dim").get<std::size_t>();
  for (const auto& jl : j.at("layers")) {
    DenseLayer l;
    l.activation = activation_from_string(jl.at("activation").get<std::string>());
    l.batch_norm = jl.at("batch_norm").get<bool>();
    l.weight = matrix_from_json(jl.at("weight"));
    l.bias = matrix_from_json(jl.at("bias"));
    if (static_cast<std::size_t>(l.weight.rows()) != fan_in || l.bias.cols() != l.weight.cols()) {
      throw std::invalid_argument("checkpoint: inconsistent layer dimensions");
    }
    if (l.batch_norm) {
      l.gamma = matrix_from_json(jl.at("gamma"));
      l.beta = matrix_from_json(jl.at("beta"));
      l.running_mean = matrix_from_json(jl.at("running_mean"));
      l.running_var = matrix_from_json(jl.at("running_var"));
    }
    fan_in = l.out();
    net.layers().push_back(std::move(l));
  }
  return net;
}

}  // namespace uavckm
