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

#ifndef FAIRFUSE_NN_H_
#define FAIRFUSE_NN_H_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fairfuse/data.h"

namespace fairfuse {

inline constexpr int kHiddenUnits = 200;

// Input width, two hidden relu layers of 200 units, one logit.
inline constexpr std::array<int, 4> kPredictorArchitecture = {
    static_cast<int>(kNumFeatures), kHiddenUnits, kHiddenUnits, 1};

// kPredictorArchitecture with a different input width.
std::array<int, 4> PredictorArchitecture(int inputs);

// Fully connected layer computing x * weights + bias for row-vector inputs.
struct DenseLayer {
  Eigen::MatrixXd weights;  // fan_in x fan_out
  Eigen::VectorXd bias;     // fan_out

  bool operator==(const DenseLayer& other) const {
    return weights == other.weights && bias == other.bias;
  }
};

// Weights of a relu MLP with a single sigmoid output. Hidden layers use relu;
// the last layer is linear and produces logits.
struct MlpParams {
  std::vector<DenseLayer> layers;

  std::vector<int> Architecture() const;
  Eigen::Index NumParams() const;
  bool AllFinite() const;

  // Concatenation of W1, b1, W2, b2, ... with matrices in column-major order.
  Eigen::VectorXd Flatten() const;
  // Inverse of Flatten onto the current shapes.
  void Unflatten(const Eigen::VectorXd& flat);

  static MlpParams ZerosLike(const MlpParams& like);

  bool operator==(const MlpParams& other) const {
    return layers == other.layers;
  }
};

// He-normal weights (variance 2 / fan_in), zero biases. Deterministic in seed.
MlpParams InitParams(std::uint64_t seed,
                     std::span<const int> architecture = kPredictorArchitecture);

struct ForwardCache {
  // activations[0] is the input; activations[k] the output of hidden layer k.
  std::vector<Eigen::MatrixXd> activations;
  Eigen::VectorXd logits;
};

ForwardCache ForwardWithCache(const MlpParams& params, const Eigen::MatrixXd& x);
Eigen::VectorXd Forward(const MlpParams& params, const Eigen::MatrixXd& x);

// Reverse pass for an arbitrary upstream gradient dL/dlogits.
MlpParams Backward(const MlpParams& params, const ForwardCache& cache,
                   const Eigen::VectorXd& logit_grad);

inline double Sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                  : std::exp(z) / (1.0 + std::exp(z));
}
Eigen::VectorXd Sigmoid(const Eigen::VectorXd& z);

// Mean of max(z,0) - z*y + log1p(exp(-|z|)); never evaluates log(0).
double SigmoidCrossEntropy(const Eigen::VectorXd& logits,
                           const Eigen::VectorXd& targets);
// d SigmoidCrossEntropy / d logits = (sigmoid(z) - y) / n.
Eigen::VectorXd SigmoidCrossEntropyGrad(const Eigen::VectorXd& logits,
                                        const Eigen::VectorXd& targets);

struct LossAndGradient {
  double loss = 0.0;
  MlpParams grads;
  Eigen::VectorXd logits;
};

LossAndGradient ComputeLossAndGradient(const MlpParams& params,
                                       const Eigen::MatrixXd& x,
                                       const Eigen::VectorXd& targets);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 128;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Throws std::invalid_argument unless every field is positive and the
  // betas lie in [0, 1).
  void Validate() const;
};

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  std::int64_t step = 0;

  static AdamState For(const MlpParams& params);
};

// Bias-corrected Adam update of one tensor at step t (t >= 1).
template <typename Tensor, typename Grad>
void AdamUpdate(Tensor& param, Tensor& m, Tensor& v, const Grad& grad,
                double learning_rate, double beta1, double beta2,
                double epsilon, std::int64_t t) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double m_correction = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double v_correction = 1.0 - std::pow(beta2, static_cast<double>(t));
  param.array() -= learning_rate * (m.array() / m_correction) /
                   ((v.array() / v_correction).sqrt() + epsilon);
}

// One Adam step over every layer; increments state.step first.
void AdamStep(MlpParams& params, AdamState& state, const MlpParams& grads,
              const TrainConfig& cfg);

// Reshuffles row indices each epoch and hands out consecutive batches; the
// final batch may be partial.
class BatchSampler {
 public:
  BatchSampler(std::size_t rows, std::size_t batch_size, std::uint64_t seed);

  void Shuffle();
  std::size_t NumBatches() const;
  std::span<const std::size_t> Batch(std::size_t b) const;

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
};

// Seeds consumed by training for weight init and batch order.
std::uint64_t InitSeed(const TrainConfig& cfg);
std::uint64_t ShuffleSeed(const TrainConfig& cfg);

Eigen::MatrixXd GatherRows(const Eigen::MatrixXd& x,
                           std::span<const std::size_t> rows);
Eigen::VectorXd GatherRows(const Eigen::VectorXd& y,
                           std::span<const std::size_t> rows);

Eigen::VectorXd ToVector(std::span<const std::uint8_t> values);

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// Mini-batch Adam on sigmoid cross-entropy for exactly
// epochs * ceil(n / batch_size) steps. Throws NumericError on a non-finite
// loss.
MlpParams TrainClassifier(const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& targets,
                          const TrainConfig& cfg,
                          std::span<const int> architecture,
                          const EpochCallback& on_epoch = {});

// Trains the income predictor on already-normalized features; the input
// width follows the feature matrix.
MlpParams TrainBaseline(const Dataset& train, const TrainConfig& cfg,
                        const EpochCallback& on_epoch = {});

Eigen::VectorXd PredictProbabilities(const MlpParams& params,
                                     const Eigen::MatrixXd& x);

// 1 where probability > threshold.
std::vector<std::uint8_t> ThresholdScores(const Eigen::VectorXd& scores,
                                          double threshold = 0.5);

}  // namespace fairfuse

#endif  // FAIRFUSE_NN_H_
