#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"

namespace scenemotion::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw Error(ErrorKind::kConfig, "unknown activation '" + std::string(s) + "'");
}

/// Affine map followed by an activation: y = act(x W + b). `weights` is
/// inputs x outputs; a batch is one sample per row.
struct DenseLayer {
  Matrix weights;
  RowVector bias;
  Activation activation = Activation::kIdentity;

  Eigen::Index inputs() const { return weights.rows(); }
  Eigen::Index outputs() const { return weights.cols(); }
};

/// He-scaled normal weights for relu layers, Glorot-style otherwise; zero bias.
inline DenseLayer make_dense(int inputs, int outputs, Activation act, Rng& rng) {
  if (inputs < 1 || outputs < 1) throw Error(ErrorKind::kDimension, "dense layer needs positive sizes");
  DenseLayer layer{Matrix(inputs, outputs), RowVector::Zero(outputs), act};
  double scale = act == Activation::kRelu ? std::sqrt(2.0 / inputs) : std::sqrt(1.0 / inputs);
  for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = scale * rng.normal();
  }
  return layer;
}

/// Intermediates of one forward pass, needed by `mlp_backward`.
struct MlpCache {
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> activations;  // output of each layer
  const DenseLayer* owner = nullptr;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
};

namespace detail {

inline void apply_activation(Activation act, Matrix& m) {
  switch (act) {
    case Activation::kIdentity: break;
    case Activation::kRelu: m = m.cwiseMax(0.0); break;
    case Activation::kTanh: m = m.array().tanh().matrix(); break;
    case Activation::kSigmoid: m = (1.0 / (1.0 + (-m.array()).exp())).matrix(); break;
  }
}

/// Multiplies `grad` by the activation derivative, expressed via the output.
inline void activation_backward(Activation act, const Matrix& output, Matrix& grad) {
  switch (act) {
    case Activation::kIdentity: break;
    case Activation::kRelu: grad = (output.array() > 0.0).select(grad, 0.0); break;
    case Activation::kTanh: grad.array() *= 1.0 - output.array().square(); break;
    case Activation::kSigmoid: grad.array() *= output.array() * (1.0 - output.array()); break;
  }
}

}  // namespace detail

inline Matrix mlp_forward(const std::vector<DenseLayer>& layers, const Matrix& x, MlpCache* cache = nullptr) {
  if (layers.empty()) throw Error(ErrorKind::kDimension, "empty network");
  if (x.cols() != layers.front().inputs()) {
    throw Error(ErrorKind::kDimension, "input width " + std::to_string(x.cols()) + " does not match layer rows " +
                                           std::to_string(layers.front().inputs()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->activations.clear();
    cache->shapes.clear();
    cache->owner = layers.data();
  }
  Matrix h = x;
  for (const DenseLayer& layer : layers) {
    if (h.cols() != layer.inputs()) throw Error(ErrorKind::kDimension, "layer widths do not chain");
    Matrix out = (h * layer.weights).rowwise() + layer.bias;
    detail::apply_activation(layer.activation, out);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->activations.push_back(out);
      cache->shapes.emplace_back(layer.weights.rows(), layer.weights.cols());
    }
    h = std::move(out);
  }
  return h;
}

inline std::vector<double> mlp_forward(const std::vector<DenseLayer>& layers, std::span<const double> x) {
  Matrix in(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) in(0, static_cast<Eigen::Index>(i)) = x[i];
  Matrix out = mlp_forward(layers, in);
  return {out.data(), out.data() + out.size()};
}

struct LayerGradient {
  Matrix weights;
  RowVector bias;
};

struct MlpGradients {
  std::vector<LayerGradient> layers;
  Matrix input;
};

/// Reverse-mode gradients of the forward pass recorded in `cache`, given the
/// gradient of the loss with respect to the network output.
inline MlpGradients mlp_backward(const std::vector<DenseLayer>& layers, const MlpCache& cache, const Matrix& upstream) {
  bool matches = cache.owner == layers.data() && cache.shapes.size() == layers.size() &&
                 cache.inputs.size() == layers.size();
  for (std::size_t l = 0; matches && l < layers.size(); ++l) {
    matches = cache.shapes[l] == std::pair{layers[l].weights.rows(), layers[l].weights.cols()};
  }
  if (!matches) throw Error(ErrorKind::kDimension, "stale or mismatched forward cache");
  const Matrix& last = cache.activations.back();
  if (upstream.rows() != last.rows() || upstream.cols() != last.cols()) {
    throw Error(ErrorKind::kDimension, "upstream gradient shape does not match network output");
  }

  MlpGradients grads;
  grads.layers.resize(layers.size());
  Matrix g = upstream;
  for (std::size_t l = layers.size(); l-- > 0;) {
    detail::activation_backward(layers[l].activation, cache.activations[l], g);
    grads.layers[l].weights = cache.inputs[l].transpose() * g;
    grads.layers[l].bias = g.colwise().sum();
    g = g * layers[l].weights.transpose();
  }
  grads.input = std::move(g);
  return grads;
}

}  // namespace scenemotion::nn
