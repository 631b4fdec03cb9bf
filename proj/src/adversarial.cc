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

#include "fairfuse/adversarial.h"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fairfuse/errors.h"

namespace fairfuse {
namespace {

constexpr double kMinProjectionNorm = 1e-12;

// Adam over the two adversary parameters.
class AdversaryOptimizer {
 public:
  AdversaryOptimizer(const TrainConfig& cfg, double learning_rate)
      : cfg_(cfg), learning_rate_(learning_rate) {}

  void Step(AdversaryParams& adversary, double weight_grad, double bias_grad) {
    Eigen::Vector2d params(adversary.weight, adversary.bias);
    const Eigen::Vector2d grad(weight_grad, bias_grad);
    AdamUpdate(params, m_, v_, grad, learning_rate_, cfg_.beta1, cfg_.beta2,
               cfg_.epsilon, ++t_);
    adversary.weight = params(0);
    adversary.bias = params(1);
  }

 private:
  TrainConfig cfg_;
  double learning_rate_;
  Eigen::Vector2d m_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d v_ = Eigen::Vector2d::Zero();
  std::int64_t t_ = 0;
};

}  // namespace

void AdvConfig::Validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(adversary_learning_rate > 0.0)) {
    throw std::invalid_argument("adversary learning rate must be positive");
  }
}

Eigen::VectorXd Project(const Eigen::VectorXd& h, const Eigen::VectorXd& g) {
  if (h.size() != g.size()) {
    throw std::invalid_argument("projection operands differ in length");
  }
  const double g_norm_sq = g.squaredNorm();
  if (std::sqrt(g_norm_sq) < kMinProjectionNorm) {
    return Eigen::VectorXd::Zero(g.size());
  }
  return (h.dot(g) / g_norm_sq) * g;
}

Eigen::VectorXd CombinedGradient(const Eigen::VectorXd& predictor_grad,
                                 const Eigen::VectorXd& adversary_grad,
                                 double alpha, ProjectionSign sign) {
  const Eigen::VectorXd projection = Project(predictor_grad, adversary_grad);
  if (sign == ProjectionSign::kSubtract) {
    return predictor_grad - projection - alpha * adversary_grad;
  }
  return predictor_grad + projection - alpha * adversary_grad;
}

AdversaryStep AdversaryLossAndGradient(const AdversaryParams& adversary,
                                       const Eigen::VectorXd& predictor_logits,
                                       const Eigen::VectorXd& groups) {
  const Eigen::VectorXd y_hat = Sigmoid(predictor_logits);
  const Eigen::VectorXd adv_logits =
      (adversary.weight * y_hat).array() + adversary.bias;
  const Eigen::VectorXd d_adv = SigmoidCrossEntropyGrad(adv_logits, groups);
  AdversaryStep step;
  step.loss = SigmoidCrossEntropy(adv_logits, groups);
  step.weight_grad = d_adv.dot(y_hat);
  step.bias_grad = d_adv.sum();
  // Chain through y_hat = sigmoid(z).
  step.logit_grad = adversary.weight *
                    (d_adv.array() * y_hat.array() * (1.0 - y_hat.array())).matrix();
  return step;
}

PredictorGradients ComputePredictorGradients(const MlpParams& predictor,
                                             const AdversaryParams& adversary,
                                             const Eigen::MatrixXd& x,
                                             const Eigen::VectorXd& labels,
                                             const Eigen::VectorXd& groups) {
  const ForwardCache cache = ForwardWithCache(predictor, x);
  const AdversaryStep adv = AdversaryLossAndGradient(adversary, cache.logits, groups);
  PredictorGradients out;
  out.predictor_loss = SigmoidCrossEntropy(cache.logits, labels);
  out.adversary_loss = adv.loss;
  out.predictor_grad =
      Backward(predictor, cache, SigmoidCrossEntropyGrad(cache.logits, labels))
          .Flatten();
  out.adversary_grad = Backward(predictor, cache, adv.logit_grad).Flatten();
  return out;
}

AdversarialModel AdversarialTrain(const Dataset& train, const TrainConfig& cfg,
                                  const AdvConfig& adv,
                                  const EpochCallback& on_epoch) {
  cfg.Validate();
  adv.Validate();
  train.Validate();
  const Eigen::VectorXd labels = ToVector(train.labels);
  const Eigen::VectorXd groups = ToVector(train.groups);

  AdversarialModel model{
      InitParams(InitSeed(cfg), PredictorArchitecture(
                                    static_cast<int>(train.features.cols()))),
      {}};
  AdamState adam = AdamState::For(model.predictor);
  AdversaryOptimizer adversary_opt(cfg, adv.adversary_learning_rate);
  BatchSampler sampler(train.size(), static_cast<std::size_t>(cfg.batch_size),
                       ShuffleSeed(cfg));
  MlpParams combined = MlpParams::ZerosLike(model.predictor);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    sampler.Shuffle();
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < sampler.NumBatches(); ++b) {
      const auto rows = sampler.Batch(b);
      const Eigen::MatrixXd xb = GatherRows(train.features, rows);
      const Eigen::VectorXd yb = GatherRows(labels, rows);
      const Eigen::VectorXd zb = GatherRows(groups, rows);

      const ForwardCache cache = ForwardWithCache(model.predictor, xb);
      const double predictor_loss = SigmoidCrossEntropy(cache.logits, yb);
      const AdversaryStep adv_step =
          AdversaryLossAndGradient(model.adversary, cache.logits, zb);
      if (!std::isfinite(predictor_loss) || !std::isfinite(adv_step.loss)) {
        throw NumericError("non-finite loss in adversarial training at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      }
      loss_sum += predictor_loss;

      if (!adv.freeze_adversary) {
        adversary_opt.Step(model.adversary, adv_step.weight_grad,
                           adv_step.bias_grad);
      }

      const Eigen::VectorXd predictor_grad =
          Backward(model.predictor, cache,
                   SigmoidCrossEntropyGrad(cache.logits, yb))
              .Flatten();
      const Eigen::VectorXd adversary_grad =
          Backward(model.predictor, cache, adv_step.logit_grad).Flatten();
      double alpha = adv.alpha;
      if (adv.schedule == AlphaSchedule::kInverseSqrt) {
        alpha /= std::sqrt(static_cast<double>(adam.step + 1));
      }
      combined.Unflatten(
          CombinedGradient(predictor_grad, adversary_grad, alpha, adv.sign));
      AdamStep(model.predictor, adam, combined, cfg);
    }
    if (on_epoch) {
      on_epoch(epoch, loss_sum / static_cast<double>(sampler.NumBatches()));
    }
  }
  return model;
}

AdversaryParams TrainAdversary(const Eigen::VectorXd& predictor_logits,
                               const Eigen::VectorXd& groups,
                               const TrainConfig& cfg,
                               double adversary_learning_rate) {
  cfg.Validate();
  if (predictor_logits.size() != groups.size() || groups.size() == 0) {
    throw std::invalid_argument("logits and groups must be equal, non-empty");
  }
  AdversaryParams adversary;
  AdversaryOptimizer opt(cfg, adversary_learning_rate);
  BatchSampler sampler(static_cast<std::size_t>(groups.size()),
                       static_cast<std::size_t>(cfg.batch_size),
                       ShuffleSeed(cfg));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    sampler.Shuffle();
    for (std::size_t b = 0; b < sampler.NumBatches(); ++b) {
      const auto rows = sampler.Batch(b);
      const AdversaryStep step = AdversaryLossAndGradient(
          adversary, GatherRows(predictor_logits, rows), GatherRows(groups, rows));
      opt.Step(adversary, step.weight_grad, step.bias_grad);
    }
  }
  return adversary;
}

}  // namespace fairfuse
