#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "qtomo/quantum_core.hpp"
#include "qtomo/sampler.hpp"

namespace qtomo {

struct LayerParams {
  RealMatrix w;  // out x in
  RealVector b;  // out
};

/// Feed-forward denoiser d^2 -> 400 -> 200 -> d^2: ReLU after the hidden
/// layers, inverted dropout after the first hidden layer, softmax output.
struct NetworkParams {
  std::vector<LayerParams> layers;
  double dropout_p = 0.2;

  int input_dim() const { return static_cast<int>(layers.front().w.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().w.rows()); }

  /// He-style uniform fan-in initialization, biases zero.
  static NetworkParams init(int input_dim, std::uint64_t seed,
                            std::vector<int> hidden = {400, 200}, double dropout_p = 0.2) {
    if (input_dim < 1) throw ValidationError("NetworkParams: input_dim must be positive");
    Rng rng(seed);
    NetworkParams params;
    params.dropout_p = dropout_p;
    std::vector<int> dims;
    dims.push_back(input_dim);
    for (int h : hidden) dims.push_back(h);
    dims.push_back(input_dim);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const int in = dims[l];
      const int out = dims[l + 1];
      const double limit = std::sqrt(6.0 / in);
      std::uniform_real_distribution<double> uniform(-limit, limit);
      LayerParams layer;
      layer.w.resize(out, in);
      for (int i = 0; i < out; ++i)
        for (int j = 0; j < in; ++j) layer.w(i, j) = uniform(rng);
      layer.b = RealVector::Zero(out);
      params.layers.push_back(std::move(layer));
    }
    return params;
  }
};

struct Gradients {
  std::vector<LayerParams> layers;

  static Gradients like(const NetworkParams& params) {
    Gradients g;
    for (const auto& layer : params.layers)
      g.layers.push_back({RealMatrix::Zero(layer.w.rows(), layer.w.cols()),
                          RealVector::Zero(layer.b.size())});
    return g;
  }
};

/// RMSprop running averages: v <- alpha v + (1 - alpha) g^2,
/// theta <- theta - eta g / (sqrt(v) + epsilon).
struct OptimizerState {
  std::vector<LayerParams> v;
  double alpha = 0.1;
  double eta = 1e-3;
  double epsilon = 1e-8;

  static OptimizerState like(const NetworkParams& params, double eta = 1e-3,
                             double alpha = 0.1) {
    OptimizerState s;
    s.eta = eta;
    s.alpha = alpha;
    for (const auto& layer : params.layers)
      s.v.push_back({RealMatrix::Zero(layer.w.rows(), layer.w.cols()),
                     RealVector::Zero(layer.b.size())});
    return s;
  }
};

struct TrainConfig {
  int batch_size = 40;
  int patience_epochs = 100;
  int max_epochs = 2000;
  std::array<int, 3> split = {7000, 1500, 2000};  // train / validation / test
  std::uint64_t seed = 0;
  double eta = 1e-3;
  double alpha = 0.1;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  int stopped_epoch = 0;
  double best_val_loss = 0.0;
  bool hit_max_epochs = false;  // ran out of epochs instead of early-stopping
};

enum class ForwardMode { train, infer };

// ---------------------------------------------------------------------------
// batch machinery (columns are samples)

struct BatchTrace {
  RealMatrix x;     // in x B
  RealMatrix z1;    // pre-activation of hidden 1
  RealMatrix mask;  // dropout mask, entries 0 or 1/(1-p)
  RealMatrix h1d;   // dropped ReLU(z1)
  RealMatrix z2;
  RealMatrix h2;
  RealMatrix logp;  // out x B log-softmax
};

namespace detail {

inline void log_softmax_inplace(RealMatrix& z) {
  for (int c = 0; c < z.cols(); ++c) {
    auto col = z.col(c).array();
    col -= col.maxCoeff();
    col -= std::log(col.exp().sum());
  }
}

}  // namespace detail

inline RealMatrix make_dropout_mask(int rows, int cols, double p, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double scale = 1.0 / (1.0 - p);
  RealMatrix mask(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) mask(r, c) = uniform(rng) < p ? 0.0 : scale;
  return mask;
}

/// Train-mode forward pass with an imposed dropout mask (gradient checks fix
/// the mask; training draws a fresh one per batch).
inline void forward_train_into(const NetworkParams& params, const RealMatrix& x,
                               const RealMatrix& mask, BatchTrace& trace) {
  const auto& l1 = params.layers[0];
  const auto& l2 = params.layers[1];
  const auto& l3 = params.layers[2];
  trace.x = x;
  trace.mask = mask;
  trace.z1.noalias() = l1.w * x;
  trace.z1.colwise() += l1.b;
  trace.h1d = trace.z1.cwiseMax(0.0).cwiseProduct(mask);
  trace.z2.noalias() = l2.w * trace.h1d;
  trace.z2.colwise() += l2.b;
  trace.h2 = trace.z2.cwiseMax(0.0);
  trace.logp.noalias() = l3.w * trace.h2;
  trace.logp.colwise() += l3.b;
  detail::log_softmax_inplace(trace.logp);
}

inline BatchTrace forward_train_batch(const NetworkParams& params, const RealMatrix& x,
                                      Rng& rng) {
  BatchTrace trace;
  const RealMatrix mask = make_dropout_mask(static_cast<int>(params.layers[0].w.rows()),
                                            static_cast<int>(x.cols()), params.dropout_p, rng);
  forward_train_into(params, x, mask, trace);
  return trace;
}

/// Inference forward pass (no dropout), returns log-probabilities out x B.
inline RealMatrix forward_infer_batch(const NetworkParams& params, const RealMatrix& x) {
  const auto& l1 = params.layers[0];
  const auto& l2 = params.layers[1];
  const auto& l3 = params.layers[2];
  RealMatrix h1 = (l1.w * x).colwise() + l1.b;
  h1 = h1.cwiseMax(0.0);
  RealMatrix h2 = (l2.w * h1).colwise() + l2.b;
  h2 = h2.cwiseMax(0.0);
  RealMatrix z3 = (l3.w * h2).colwise() + l3.b;
  detail::log_softmax_inplace(z3);
  return z3;
}

/// Mean over the batch of sum_gamma y log(y / p), from log-probabilities.
inline double mean_batch_kl(const RealMatrix& logp, const RealMatrix& targets) {
  if (logp.rows() != targets.rows() || logp.cols() != targets.cols())
    throw ValidationError("mean_batch_kl: shape mismatch");
  double acc = 0.0;
  for (int c = 0; c < logp.cols(); ++c)
    for (int r = 0; r < logp.rows(); ++r) {
      const double y = targets(r, c);
      if (y > 0.0) acc += y * (std::log(y) - logp(r, c));
    }
  return acc / logp.cols();
}

/// Analytic gradient of the mean batch KL loss; the softmax output layer
/// reduces to (p - y) / B per sample.
inline void backward_into(const NetworkParams& params, const BatchTrace& trace,
                          const RealMatrix& targets, Gradients& grads) {
  const auto& l2 = params.layers[1];
  const auto& l3 = params.layers[2];
  const double inv_b = 1.0 / trace.x.cols();

  RealMatrix d3 = (trace.logp.array().exp().matrix() - targets) * inv_b;
  grads.layers[2].w.noalias() = d3 * trace.h2.transpose();
  grads.layers[2].b = d3.rowwise().sum();

  RealMatrix d2 = (l3.w.transpose() * d3).cwiseProduct(
      (trace.z2.array() > 0.0).cast<double>().matrix());
  grads.layers[1].w.noalias() = d2 * trace.h1d.transpose();
  grads.layers[1].b = d2.rowwise().sum();

  RealMatrix d1 = (l2.w.transpose() * d2).cwiseProduct(trace.mask).cwiseProduct(
      (trace.z1.array() > 0.0).cast<double>().matrix());
  grads.layers[0].w.noalias() = d1 * trace.x.transpose();
  grads.layers[0].b = d1.rowwise().sum();
}

inline Gradients backward(const NetworkParams& params, const BatchTrace& trace,
                          const RealMatrix& targets) {
  Gradients grads = Gradients::like(params);
  backward_into(params, trace, targets, grads);
  return grads;
}

inline void rmsprop_step(NetworkParams& params, const Gradients& grads, OptimizerState& state) {
  if (grads.layers.size() != params.layers.size() || state.v.size() != params.layers.size())
    throw ValidationError("rmsprop_step: shape mismatch");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& v = state.v[l];
    const auto& g = grads.layers[l];
    v.w = state.alpha * v.w + (1.0 - state.alpha) * g.w.cwiseProduct(g.w);
    v.b = state.alpha * v.b + (1.0 - state.alpha) * g.b.cwiseProduct(g.b);
    params.layers[l].w -=
        state.eta * g.w.cwiseQuotient(v.w.cwiseSqrt().array().matrix() +
                                       RealMatrix::Constant(v.w.rows(), v.w.cols(), state.epsilon));
    params.layers[l].b -= state.eta * g.b.cwiseQuotient(
        v.b.cwiseSqrt() + RealVector::Constant(v.b.size(), state.epsilon));
  }
}

// ---------------------------------------------------------------------------
// spec-level single-sample operations

/// Single-sample forward pass. Train mode draws a dropout mask from rng;
/// infer mode is deterministic.
inline ProbDistribution forward(const NetworkParams& params, const RealVector& input,
                                ForwardMode mode, Rng& rng) {
  if (input.size() != params.input_dim())
    throw ValidationError("forward: input length does not match the network");
  if (input.minCoeff() < 0.0) throw ValidationError("forward: input entries must be >= 0");
  RealMatrix x = input;
  RealMatrix logp;
  if (mode == ForwardMode::train) {
    BatchTrace trace = forward_train_batch(params, x, rng);
    logp = trace.logp;
  } else {
    logp = forward_infer_batch(params, x);
  }
  return ProbDistribution(logp.col(0).array().exp().matrix());
}

/// KL divergence sum_gamma target log(target / predicted), with
/// 0 log(0/p) = 0. A zero prediction against positive target mass is an
/// infinite divergence and is reported as an error.
inline double kl_loss(const ProbDistribution& target, const ProbDistribution& predicted) {
  if (target.size() != predicted.size()) throw ValidationError("kl_loss: length mismatch");
  double acc = 0.0;
  for (int k = 0; k < target.size(); ++k) {
    if (target[k] <= 0.0) continue;
    if (predicted[k] <= 0.0)
      throw NumericalError("kl_loss: divergence-infinite, predicted mass vanishes where the "
                           "target is positive");
    acc += target[k] * std::log(target[k] / predicted[k]);
  }
  return std::max(acc, 0.0);
}

// ---------------------------------------------------------------------------
// training

namespace detail {

inline RealMatrix columns_from(const Dataset& records, std::size_t begin, std::size_t end,
                               bool targets) {
  const int dim = static_cast<int>(records.at(begin).ideal_probs.size());
  RealMatrix m(dim, static_cast<int>(end - begin));
  for (std::size_t i = begin; i < end; ++i)
    m.col(static_cast<int>(i - begin)) =
        targets ? records[i].ideal_probs : records[i].noisy_freqs;
  return m;
}

}  // namespace detail

/// Mini-batch RMSprop over the shuffled training split, validation loss every
/// epoch, early stopping after `patience_epochs` without a new best, restore
/// of the best-epoch weights. Inputs are the noisy frequencies, targets the
/// ideal probabilities.
inline std::pair<NetworkParams, TrainHistory> train(const Dataset& dataset,
                                                    const TrainConfig& config) {
  const int n_train = config.split[0];
  const int n_val = config.split[1];
  if (config.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (n_train < 1 || n_val < 1) throw ValidationError("train: empty train or validation split");
  if (static_cast<std::size_t>(n_train + n_val + config.split[2]) != dataset.size())
    throw ValidationError("train: split does not sum to the dataset size");

  const RealMatrix x_train = detail::columns_from(dataset, 0, static_cast<std::size_t>(n_train), false);
  const RealMatrix y_train = detail::columns_from(dataset, 0, static_cast<std::size_t>(n_train), true);
  const RealMatrix x_val = detail::columns_from(dataset, static_cast<std::size_t>(n_train),
                                                static_cast<std::size_t>(n_train + n_val), false);
  const RealMatrix y_val = detail::columns_from(dataset, static_cast<std::size_t>(n_train),
                                                static_cast<std::size_t>(n_train + n_val), true);

  const int dim = static_cast<int>(x_train.rows());
  NetworkParams params =
      NetworkParams::init(dim, derive_seed(config.seed, stream::weight_init));
  OptimizerState opt = OptimizerState::like(params, config.eta, config.alpha);
  Rng dropout_rng(derive_seed(config.seed, stream::dropout));

  NetworkParams best_params = params;
  TrainHistory history;
  history.best_val_loss = std::numeric_limits<double>::infinity();

  std::vector<int> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);
  BatchTrace trace;
  Gradients grads = Gradients::like(params);
  RealMatrix xb, yb;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, stream::shuffle, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double train_loss_acc = 0.0;
    for (int start = 0; start < n_train; start += config.batch_size) {
      const int b = std::min(config.batch_size, n_train - start);
      xb.resize(dim, b);
      yb.resize(dim, b);
      for (int j = 0; j < b; ++j) {
        xb.col(j) = x_train.col(order[static_cast<std::size_t>(start + j)]);
        yb.col(j) = y_train.col(order[static_cast<std::size_t>(start + j)]);
      }
      const RealMatrix mask = make_dropout_mask(
          static_cast<int>(params.layers[0].w.rows()), b, params.dropout_p, dropout_rng);
      forward_train_into(params, xb, mask, trace);
      train_loss_acc += mean_batch_kl(trace.logp, yb) * b;
      backward_into(params, trace, yb, grads);
      rmsprop_step(params, grads, opt);
    }

    EpochStats stats;
    stats.train_loss = train_loss_acc / n_train;
    stats.val_loss = mean_batch_kl(forward_infer_batch(params, x_val), y_val);
    history.epochs.push_back(stats);
    history.stopped_epoch = epoch;

    if (stats.val_loss < history.best_val_loss) {
      history.best_val_loss = stats.val_loss;
      history.best_epoch = epoch;
      best_params = params;
    }
    if (epoch - history.best_epoch >= config.patience_epochs) break;
  }
  history.hit_max_epochs = (history.stopped_epoch == config.max_epochs - 1) &&
                           (history.stopped_epoch - history.best_epoch < config.patience_epochs);
  return {std::move(best_params), std::move(history)};
}

/// Deterministic inference over a list of records, order preserved.
inline std::vector<ProbDistribution> predict_batch(const NetworkParams& params,
                                                   const Dataset& records) {
  std::vector<ProbDistribution> out;
  if (records.empty()) return out;
  const RealMatrix x = detail::columns_from(records, 0, records.size(), false);
  const RealMatrix logp = forward_infer_batch(params, x);
  out.reserve(records.size());
  for (int c = 0; c < logp.cols(); ++c)
    out.emplace_back(logp.col(c).array().exp().matrix());
  return out;
}

}  // namespace qtomo
