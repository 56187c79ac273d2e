#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scenemotion/core/error.hpp"
#include "scenemotion/core/random.hpp"
#include "scenemotion/nn/adam.hpp"
#include "scenemotion/nn/dense.hpp"

namespace scenemotion::nn {

inline constexpr int kDefaultLatentDim = 32;
inline constexpr int kDefaultHiddenWidth = 256;

inline double kl_standard_normal(std::span<const double> mu, std::span<const double> log_sigma) {
  if (mu.size() != log_sigma.size()) throw Error(ErrorKind::kDimension, "kl: mu and log_sigma lengths differ");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    kl += mu[i] * mu[i] + std::exp(2.0 * log_sigma[i]) - 1.0 - 2.0 * log_sigma[i];
  }
  return 0.5 * kl;
}

/// Gradient of `kl_standard_normal` with respect to mu and log_sigma.
inline std::pair<std::vector<double>, std::vector<double>> kl_gradient(std::span<const double> mu,
                                                                       std::span<const double> log_sigma) {
  if (mu.size() != log_sigma.size()) throw Error(ErrorKind::kDimension, "kl: mu and log_sigma lengths differ");
  std::vector<double> gm(mu.begin(), mu.end()), gs(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) gs[i] = std::exp(2.0 * log_sigma[i]) - 1.0;
  return {gm, gs};
}

inline std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> log_sigma,
                                          std::span<const double> epsilon) {
  if (mu.size() != log_sigma.size() || mu.size() != epsilon.size()) {
    throw Error(ErrorKind::kDimension, "reparameterize: length mismatch");
  }
  std::vector<double> z(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) z[i] = mu[i] + std::exp(log_sigma[i]) * epsilon[i];
  return z;
}

struct CvaeShape {
  int input_dim = 0;
  int condition_dim = 0;
  int latent_dim = kDefaultLatentDim;
  int hidden = kDefaultHiddenWidth;
  std::vector<int> condition_hidden{};  // empty: the raw condition feeds both networks
};

/// Conditional VAE. The condition passes through `condition_encoder` (may be
/// empty) and the resulting feature is appended to the encoder input [x, c']
/// and to the decoder input [z, c']. The encoder emits mu then log sigma.
struct CvaeModel {
  std::string kind;  // "pose", "refiner", "mapper" or free-form
  std::vector<DenseLayer> condition_encoder;
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
  int input_dim = 0;
  int condition_dim = 0;
  int latent_dim = kDefaultLatentDim;
  std::optional<std::uint64_t> basis_seed;  // set for models that consume BPS features
  std::size_t basis_size = 0;

  int condition_feature_dim() const {
    return condition_encoder.empty() ? condition_dim : static_cast<int>(condition_encoder.back().outputs());
  }

  void validate() const {
    auto chain = [](const std::vector<DenseLayer>& layers, const char* name) {
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& L = layers[l];
        if (L.weights.rows() < 1 || L.weights.cols() < 1 || L.bias.size() != L.weights.cols()) {
          throw Error(ErrorKind::kDimension, std::string(name) + ": malformed layer " + std::to_string(l));
        }
        if (!L.weights.allFinite() || !L.bias.allFinite()) {
          throw Error(ErrorKind::kTraining, std::string(name) + ": non-finite parameters in layer " + std::to_string(l));
        }
        if (l > 0 && layers[l - 1].outputs() != L.inputs()) {
          throw Error(ErrorKind::kDimension, std::string(name) + ": layer widths do not chain at " + std::to_string(l));
        }
      }
    };
    chain(condition_encoder, "condition_encoder");
    chain(encoder, "encoder");
    chain(decoder, "decoder");
    if (encoder.empty() || decoder.empty()) throw Error(ErrorKind::kDimension, "cvae: empty encoder or decoder");
    if (latent_dim < 1) throw Error(ErrorKind::kDimension, "cvae: latent dimension must be positive");
    if (!condition_encoder.empty() && condition_encoder.front().inputs() != condition_dim) {
      throw Error(ErrorKind::kDimension, "cvae: condition encoder input width mismatch");
    }
    const int cf = condition_feature_dim();
    if (encoder.front().inputs() != input_dim + cf) throw Error(ErrorKind::kDimension, "cvae: encoder input width mismatch");
    if (encoder.back().outputs() != 2 * latent_dim) {
      throw Error(ErrorKind::kDimension, "cvae: encoder output width must be 2*latent_dim");
    }
    if (decoder.front().inputs() != latent_dim + cf) throw Error(ErrorKind::kDimension, "cvae: decoder input width mismatch");
    if (decoder.back().outputs() != input_dim) throw Error(ErrorKind::kDimension, "cvae: decoder output width mismatch");
  }
};

/// Two relu hidden layers of width `hidden` in encoder and decoder, identity outputs.
inline CvaeModel make_cvae(const CvaeShape& shape, std::uint64_t seed, std::string kind = {}) {
  if (shape.input_dim < 1 || shape.condition_dim < 1 || shape.latent_dim < 1 || shape.hidden < 1) {
    throw Error(ErrorKind::kDimension, "cvae: sizes must be positive");
  }
  Rng rng(seed);
  CvaeModel m;
  m.kind = std::move(kind);
  m.input_dim = shape.input_dim;
  m.condition_dim = shape.condition_dim;
  m.latent_dim = shape.latent_dim;
  int width = shape.condition_dim;
  for (int h : shape.condition_hidden) {
    m.condition_encoder.push_back(make_dense(width, h, Activation::kRelu, rng));
    width = h;
  }
  const int cf = width;
  m.encoder.push_back(make_dense(shape.input_dim + cf, shape.hidden, Activation::kRelu, rng));
  m.encoder.push_back(make_dense(shape.hidden, shape.hidden, Activation::kRelu, rng));
  m.encoder.push_back(make_dense(shape.hidden, 2 * shape.latent_dim, Activation::kIdentity, rng));
  m.decoder.push_back(make_dense(shape.latent_dim + cf, shape.hidden, Activation::kRelu, rng));
  m.decoder.push_back(make_dense(shape.hidden, shape.hidden, Activation::kRelu, rng));
  m.decoder.push_back(make_dense(shape.hidden, shape.input_dim, Activation::kIdentity, rng));
  return m;
}

inline Matrix condition_features(const CvaeModel& model, const Matrix& conditions, MlpCache* cache = nullptr) {
  if (conditions.cols() != model.condition_dim) {
    throw Error(ErrorKind::kDimension, "condition width " + std::to_string(conditions.cols()) + " != model condition dim " +
                                           std::to_string(model.condition_dim));
  }
  if (model.condition_encoder.empty()) return conditions;
  return mlp_forward(model.condition_encoder, conditions, cache);
}

inline Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

/// Decoder output for a batch of latents given precomputed condition features.
inline Matrix decode_features(const CvaeModel& model, const Matrix& z, const Matrix& features) {
  if (z.cols() != model.latent_dim) throw Error(ErrorKind::kDimension, "latent width mismatch");
  if (z.rows() != features.rows()) throw Error(ErrorKind::kDimension, "latent/condition batch size mismatch");
  return mlp_forward(model.decoder, hcat(z, features));
}

inline Matrix decode(const CvaeModel& model, const Matrix& z, const Matrix& conditions) {
  return decode_features(model, z, condition_features(model, conditions));
}

inline std::vector<double> decode(const CvaeModel& model, std::span<const double> z, std::span<const double> condition) {
  Matrix zm = Eigen::Map<const RowVector>(z.data(), static_cast<Eigen::Index>(z.size()));
  Matrix cm = Eigen::Map<const RowVector>(condition.data(), static_cast<Eigen::Index>(condition.size()));
  Matrix out = decode(model, zm, cm);
  return {out.data(), out.data() + out.size()};
}

/// A standard-normal latent of the model's width drawn from `rng`.
inline std::vector<double> sample_latent(const CvaeModel& model, Rng& rng) {
  std::vector<double> z(static_cast<std::size_t>(model.latent_dim));
  for (double& v : z) v = rng.normal();
  return z;
}

struct CvaeGradients {
  std::vector<LayerGradient> condition_encoder;
  std::vector<LayerGradient> encoder;
  std::vector<LayerGradient> decoder;
};

struct CvaeLoss {
  double total = 0.0;
  double reconstruction = 0.0;  // batch mean of squared L2 error
  double kl = 0.0;              // batch mean KL to N(0, I)
  CvaeGradients gradients;      // filled when requested
  std::vector<std::uint8_t> relu_pattern;  // sign pattern of every relu pre-activation, when requested
};

namespace detail {

inline void append_relu_pattern(const std::vector<DenseLayer>& layers, const MlpCache& cache,
                                std::vector<std::uint8_t>& out) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].activation != Activation::kRelu) continue;
    const Matrix& a = cache.activations[l];
    for (Eigen::Index i = 0; i < a.size(); ++i) out.push_back(a.data()[i] > 0.0 ? 1 : 0);
  }
}

}  // namespace detail

/// Loss = mean ||decoder(z, c') - x||^2 + kl_weight * mean KL, with
/// z = mu + exp(log_sigma) * epsilon. One sample per row in x, c and epsilon.
inline CvaeLoss cvae_loss(const CvaeModel& model, const Matrix& x, const Matrix& conditions, const Matrix& epsilon,
                          double kl_weight, bool want_gradients = true, bool want_pattern = false) {
  const Eigen::Index n = x.rows();
  if (n < 1) throw Error(ErrorKind::kDimension, "cvae: empty batch");
  if (x.cols() != model.input_dim) throw Error(ErrorKind::kDimension, "cvae: input width mismatch");
  if (conditions.rows() != n || epsilon.rows() != n) throw Error(ErrorKind::kDimension, "cvae: batch size mismatch");
  if (epsilon.cols() != model.latent_dim) throw Error(ErrorKind::kDimension, "cvae: epsilon width mismatch");

  MlpCache cond_cache, enc_cache, dec_cache;
  Matrix cf = condition_features(model, conditions, &cond_cache);
  Matrix stats = mlp_forward(model.encoder, hcat(x, cf), &enc_cache);
  const int d = model.latent_dim;
  Matrix mu = stats.leftCols(d);
  Matrix log_sigma = stats.rightCols(d);
  Matrix sigma = log_sigma.array().exp().matrix();
  Matrix z = mu + sigma.cwiseProduct(epsilon);
  Matrix y = mlp_forward(model.decoder, hcat(z, cf), &dec_cache);

  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix diff = y - x;
  CvaeLoss out;
  out.reconstruction = diff.squaredNorm() * inv_n;
  out.kl = 0.5 * (mu.array().square() + sigma.array().square() - 1.0 - 2.0 * log_sigma.array()).sum() * inv_n;
  out.total = out.reconstruction + kl_weight * out.kl;

  if (want_pattern) {
    if (!model.condition_encoder.empty()) detail::append_relu_pattern(model.condition_encoder, cond_cache, out.relu_pattern);
    detail::append_relu_pattern(model.encoder, enc_cache, out.relu_pattern);
    detail::append_relu_pattern(model.decoder, dec_cache, out.relu_pattern);
  }
  if (!want_gradients) return out;

  MlpGradients dec = mlp_backward(model.decoder, dec_cache, 2.0 * inv_n * diff);
  Matrix g_z = dec.input.leftCols(d);
  Matrix g_cf = dec.input.rightCols(cf.cols());
  Matrix g_mu = g_z + kl_weight * inv_n * mu;
  Matrix g_ls = g_z.cwiseProduct(sigma).cwiseProduct(epsilon) +
                kl_weight * inv_n * (sigma.array().square() - 1.0).matrix();
  Matrix g_stats(n, 2 * d);
  g_stats << g_mu, g_ls;
  MlpGradients enc = mlp_backward(model.encoder, enc_cache, g_stats);
  g_cf += enc.input.rightCols(cf.cols());

  out.gradients.encoder = std::move(enc.layers);
  out.gradients.decoder = std::move(dec.layers);
  if (!model.condition_encoder.empty()) {
    out.gradients.condition_encoder = mlp_backward(model.condition_encoder, cond_cache, g_cf).layers;
  }
  return out;
}

/// Views of every parameter tensor: condition encoder, encoder, decoder; weights then bias per layer.
inline std::vector<std::span<double>> parameter_views(CvaeModel& model) {
  std::vector<std::span<double>> views;
  for (auto* net : {&model.condition_encoder, &model.encoder, &model.decoder}) {
    for (DenseLayer& L : *net) {
      views.emplace_back(L.weights.data(), static_cast<std::size_t>(L.weights.size()));
      views.emplace_back(L.bias.data(), static_cast<std::size_t>(L.bias.size()));
    }
  }
  return views;
}

/// Gradient views in the same order as `parameter_views`.
inline std::vector<std::span<const double>> gradient_views(const CvaeGradients& grads) {
  std::vector<std::span<const double>> views;
  for (const auto* net : {&grads.condition_encoder, &grads.encoder, &grads.decoder}) {
    for (const LayerGradient& g : *net) {
      views.emplace_back(g.weights.data(), static_cast<std::size_t>(g.weights.size()));
      views.emplace_back(g.bias.data(), static_cast<std::size_t>(g.bias.size()));
    }
  }
  return views;
}

struct TrainOptions {
  int epochs = 40;
  int batch_size = 8;
  double learning_rate = 1e-4;
  double kl_weight = 1e-3;
  double warmup_fraction = 0.1;  // KL weight ramps linearly from 0 over this share of all steps
  std::uint64_t seed = 0;
};

struct EpochStats {
  double loss = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

struct TrainResult {
  CvaeModel model;
  std::vector<EpochStats> trace;
};

/// Minibatch Adam on `cvae_loss`. Shuffles and epsilon draws come from `seed`
/// only, so equal inputs give bit-identical results.
inline TrainResult train_cvae(CvaeModel model, const Matrix& inputs, const Matrix& conditions,
                              const TrainOptions& opt) {
  model.validate();
  const Eigen::Index n = inputs.rows();
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "training set is empty");
  if (inputs.cols() != model.input_dim || conditions.cols() != model.condition_dim || conditions.rows() != n) {
    throw Error(ErrorKind::kDimension, "training data does not match model dimensions");
  }
  if (opt.epochs < 1 || opt.batch_size < 1) throw Error(ErrorKind::kConfig, "epochs and batch size must be positive");
  if (!inputs.allFinite() || !conditions.allFinite()) throw Error(ErrorKind::kTraining, "training data is not finite");

  AdamState adam;
  adam.learning_rate = opt.learning_rate;
  const std::int64_t batches_per_epoch = (n + opt.batch_size - 1) / opt.batch_size;
  const double total_steps = static_cast<double>(batches_per_epoch) * opt.epochs;
  const double warmup_steps = std::max(1.0, opt.warmup_fraction * total_steps);

  Rng shuffle_rng(mix_seed(opt.seed, 1, 0));
  Rng noise_rng(mix_seed(opt.seed, 2, 0));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  TrainResult result;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    EpochStats stats;
    for (Eigen::Index start = 0; start < n; start += opt.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(opt.batch_size, n - start);
      Matrix xb(b, inputs.cols()), cb(b, conditions.cols()), eb(b, model.latent_dim);
      for (Eigen::Index r = 0; r < b; ++r) {
        xb.row(r) = inputs.row(order[static_cast<std::size_t>(start + r)]);
        cb.row(r) = conditions.row(order[static_cast<std::size_t>(start + r)]);
        for (Eigen::Index c = 0; c < eb.cols(); ++c) eb(r, c) = noise_rng.normal();
      }
      const double beta = opt.kl_weight * std::min(1.0, static_cast<double>(step) / warmup_steps);
      CvaeLoss loss = cvae_loss(model, xb, cb, eb, beta);
      if (!std::isfinite(loss.total)) {
        throw Error(ErrorKind::kTraining, "non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                              std::to_string(step) + " (reconstruction " +
                                              std::to_string(loss.reconstruction) + ", kl " + std::to_string(loss.kl) + ")");
      }
      auto params = parameter_views(model);
      auto grads = gradient_views(loss.gradients);
      adam_step(params, grads, adam);
      stats.loss += loss.total * static_cast<double>(b);
      stats.reconstruction += loss.reconstruction * static_cast<double>(b);
      stats.kl += loss.kl * static_cast<double>(b);
      ++step;
    }
    stats.loss /= static_cast<double>(n);
    stats.reconstruction /= static_cast<double>(n);
    stats.kl /= static_cast<double>(n);
    result.trace.push_back(stats);
  }
  model.validate();
  result.model = std::move(model);
  return result;
}

}  // namespace scenemotion::nn
