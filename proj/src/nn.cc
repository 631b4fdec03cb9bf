/*
 * Copyright 2026 The fairfuse Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairfuse/nn.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fairfuse/errors.h"
#include "fairfuse/random.h"

namespace fairfuse {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

void CheckArchitecture(std::span<const int> architecture) {
  if (architecture.size() < 2) {
    throw std::invalid_argument("architecture needs input and output widths");
  }
  for (int width : architecture) {
    if (width <= 0) throw std::invalid_argument("layer widths must be positive");
  }
  if (architecture.back() != 1) {
    throw std::invalid_argument("output layer must have a single logit");
  }
}

}  // namespace

std::array<int, 4> PredictorArchitecture(int inputs) {
  return {inputs, kHiddenUnits, kHiddenUnits, 1};
}

std::vector<int> MlpParams::Architecture() const {
  std::vector<int> widths;
  if (layers.empty()) return widths;
  widths.push_back(static_cast<int>(layers.front().weights.rows()));
  for (const auto& layer : layers) {
    widths.push_back(static_cast<int>(layer.weights.cols()));
  }
  return widths;
}

Eigen::Index MlpParams::NumParams() const {
  Eigen::Index total = 0;
  for (const auto& layer : layers) {
    total += layer.weights.size() + layer.bias.size();
  }
  return total;
}

bool MlpParams::AllFinite() const {
  for (const auto& layer : layers) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

Eigen::VectorXd MlpParams::Flatten() const {
  Eigen::VectorXd flat(NumParams());
  Eigen::Index offset = 0;
  for (const auto& layer : layers) {
    flat.segment(offset, layer.weights.size()) =
        Eigen::Map<const Eigen::VectorXd>(layer.weights.data(),
                                          layer.weights.size());
    offset += layer.weights.size();
    flat.segment(offset, layer.bias.size()) = layer.bias;
    offset += layer.bias.size();
  }
  return flat;
}

void MlpParams::Unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != NumParams()) {
    throw std::invalid_argument("flat parameter vector has wrong length");
  }
  Eigen::Index offset = 0;
  for (auto& layer : layers) {
    Eigen::Map<Eigen::VectorXd>(layer.weights.data(), layer.weights.size()) =
        flat.segment(offset, layer.weights.size());
    offset += layer.weights.size();
    layer.bias = flat.segment(offset, layer.bias.size());
    offset += layer.bias.size();
  }
}

MlpParams MlpParams::ZerosLike(const MlpParams& like) {
  MlpParams zeros;
  zeros.layers.reserve(like.layers.size());
  for (const auto& layer : like.layers) {
    zeros.layers.push_back(
        {Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
         Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return zeros;
}

MlpParams InitParams(std::uint64_t seed, std::span<const int> architecture) {
  CheckArchitecture(architecture);
  Rng rng(seed);
  MlpParams params;
  for (std::size_t k = 0; k + 1 < architecture.size(); ++k) {
    const int fan_in = architecture[k];
    const int fan_out = architecture[k + 1];
    const double scale = std::sqrt(2.0 / fan_in);
    DenseLayer layer{Eigen::MatrixXd(fan_in, fan_out),
                     Eigen::VectorXd::Zero(fan_out)};
    for (Eigen::Index j = 0; j < fan_out; ++j) {
      for (Eigen::Index i = 0; i < fan_in; ++i) {
        layer.weights(i, j) = scale * rng.Normal();
      }
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ForwardCache ForwardWithCache(const MlpParams& params,
                              const Eigen::MatrixXd& x) {
  if (params.layers.empty()) throw std::invalid_argument("empty network");
  if (x.cols() != params.layers.front().weights.rows()) {
    throw std::invalid_argument(
        "input has " + std::to_string(x.cols()) + " columns, network expects " +
        std::to_string(params.layers.front().weights.rows()));
  }
  ForwardCache cache;
  cache.activations.reserve(params.layers.size());
  cache.activations.push_back(x);
  for (std::size_t k = 0; k + 1 < params.layers.size(); ++k) {
    const DenseLayer& layer = params.layers[k];
    Eigen::MatrixXd h = cache.activations.back() * layer.weights;
    h.rowwise() += layer.bias.transpose();
    cache.activations.push_back(h.cwiseMax(0.0));
  }
  const DenseLayer& out = params.layers.back();
  cache.logits = cache.activations.back() * out.weights.col(0);
  cache.logits.array() += out.bias(0);
  return cache;
}

Eigen::VectorXd Forward(const MlpParams& params, const Eigen::MatrixXd& x) {
  return ForwardWithCache(params, x).logits;
}

MlpParams Backward(const MlpParams& params, const ForwardCache& cache,
                   const Eigen::VectorXd& logit_grad) {
  const std::size_t num_layers = params.layers.size();
  MlpParams grads;
  grads.layers.resize(num_layers);

  // Gradient w.r.t. the pre-activation of the current layer, one row per
  // sample.
  Eigen::MatrixXd delta = logit_grad;
  for (std::size_t k = num_layers; k-- > 0;) {
    const Eigen::MatrixXd& input = cache.activations[k];
    grads.layers[k].weights.noalias() = input.transpose() * delta;
    grads.layers[k].bias = delta.colwise().sum().transpose();
    if (k == 0) break;
    Eigen::MatrixXd upstream = delta * params.layers[k].weights.transpose();
    // relu'(pre) is 1 exactly where the stored activation is positive.
    delta = (input.array() > 0.0).select(upstream, 0.0);
  }
  return grads;
}

Eigen::VectorXd Sigmoid(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) { return Sigmoid(v); });
}

double SigmoidCrossEntropy(const Eigen::VectorXd& logits,
                           const Eigen::VectorXd& targets) {
  if (logits.size() != targets.size() || logits.size() == 0) {
    throw std::invalid_argument("logits and targets must be equal, non-empty");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double z = logits(i);
    total += std::max(z, 0.0) - z * targets(i) + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(logits.size());
}

Eigen::VectorXd SigmoidCrossEntropyGrad(const Eigen::VectorXd& logits,
                                        const Eigen::VectorXd& targets) {
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  return (Sigmoid(logits) - targets) * inv_n;
}

LossAndGradient ComputeLossAndGradient(const MlpParams& params,
                                       const Eigen::MatrixXd& x,
                                       const Eigen::VectorXd& targets) {
  ForwardCache cache = ForwardWithCache(params, x);
  LossAndGradient out;
  out.loss = SigmoidCrossEntropy(cache.logits, targets);
  out.grads =
      Backward(params, cache, SigmoidCrossEntropyGrad(cache.logits, targets));
  out.logits = std::move(cache.logits);
  return out;
}

void TrainConfig::Validate() const {
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

AdamState AdamState::For(const MlpParams& params) {
  return {MlpParams::ZerosLike(params), MlpParams::ZerosLike(params), 0};
}

void AdamStep(MlpParams& params, AdamState& state, const MlpParams& grads,
              const TrainConfig& cfg) {
  ++state.step;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    AdamUpdate(params.layers[k].weights, state.first_moment.layers[k].weights,
               state.second_moment.layers[k].weights, grads.layers[k].weights,
               cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
               state.step);
    AdamUpdate(params.layers[k].bias, state.first_moment.layers[k].bias,
               state.second_moment.layers[k].bias, grads.layers[k].bias,
               cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon,
               state.step);
  }
}

BatchSampler::BatchSampler(std::size_t rows, std::size_t batch_size,
                           std::uint64_t seed)
    : order_(rows), batch_size_(batch_size), seed_(seed) {
  if (rows == 0 || batch_size == 0) {
    throw std::invalid_argument("batch sampler needs rows and a batch size");
  }
  for (std::size_t i = 0; i < rows; ++i) order_[i] = i;
}

void BatchSampler::Shuffle() {
  order_ = Permutation(order_.size(), DeriveSeed(seed_, epoch_++));
}

std::size_t BatchSampler::NumBatches() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::span<const std::size_t> BatchSampler::Batch(std::size_t b) const {
  const std::size_t begin = b * batch_size_;
  const std::size_t end = std::min(begin + batch_size_, order_.size());
  return std::span<const std::size_t>(order_).subspan(begin, end - begin);
}

std::uint64_t InitSeed(const TrainConfig& cfg) {
  return DeriveSeed(cfg.seed, kInitStream);
}

std::uint64_t ShuffleSeed(const TrainConfig& cfg) {
  return DeriveSeed(cfg.seed, kShuffleStream);
}

Eigen::MatrixXd GatherRows(const Eigen::MatrixXd& x,
                           std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out(static_cast<Eigen::Index>(i), j) =
          x(static_cast<Eigen::Index>(rows[i]), j);
    }
  }
  return out;
}

Eigen::VectorXd GatherRows(const Eigen::VectorXd& y,
                           std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Eigen::VectorXd ToVector(std::span<const std::uint8_t> values) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = values[i];
  }
  return out;
}

MlpParams TrainClassifier(const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& targets,
                          const TrainConfig& cfg,
                          std::span<const int> architecture,
                          const EpochCallback& on_epoch) {
  cfg.Validate();
  if (x.rows() != targets.size() || x.rows() == 0) {
    throw std::invalid_argument("features and targets must be equal, non-empty");
  }
  MlpParams params = InitParams(InitSeed(cfg), architecture);
  AdamState adam = AdamState::For(params);
  BatchSampler sampler(static_cast<std::size_t>(x.rows()),
                       static_cast<std::size_t>(cfg.batch_size),
                       ShuffleSeed(cfg));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    sampler.Shuffle();
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < sampler.NumBatches(); ++b) {
      const auto rows = sampler.Batch(b);
      LossAndGradient step = ComputeLossAndGradient(
          params, GatherRows(x, rows), GatherRows(targets, rows));
      if (!std::isfinite(step.loss)) {
        throw NumericError("non-finite training loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      }
      loss_sum += step.loss;
      AdamStep(params, adam, step.grads, cfg);
    }
    if (on_epoch) {
      on_epoch(epoch, loss_sum / static_cast<double>(sampler.NumBatches()));
    }
  }
  return params;
}

MlpParams TrainBaseline(const Dataset& train, const TrainConfig& cfg,
                        const EpochCallback& on_epoch) {
  return TrainClassifier(
      train.features, ToVector(train.labels), cfg,
      PredictorArchitecture(static_cast<int>(train.features.cols())), on_epoch);
}

Eigen::VectorXd PredictProbabilities(const MlpParams& params,
                                     const Eigen::MatrixXd& x) {
  return Sigmoid(Forward(params, x));
}

std::vector<std::uint8_t> ThresholdScores(const Eigen::VectorXd& scores,
                                          double threshold) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    out[static_cast<std::size_t>(i)] = scores(i) > threshold ? 1 : 0;
  }
  return out;
}

}  // namespace fairfuse
