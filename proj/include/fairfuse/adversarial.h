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

#ifndef FAIRFUSE_ADVERSARIAL_H_
#define FAIRFUSE_ADVERSARIAL_H_

#include <cstdint>

#include <Eigen/Dense>

#include "fairfuse/data.h"
#include "fairfuse/nn.h"

namespace fairfuse {

// How the projection of the predictor gradient onto the adversary gradient
// enters the update. kSubtract removes the component that would help the
// adversary; kAddAsPrinted adds it instead.
enum class ProjectionSign { kSubtract, kAddAsPrinted };

enum class AlphaSchedule {
  kConstant,     // alpha at every step
  kInverseSqrt,  // alpha / sqrt(t) at Adam step t
};

struct AdvConfig {
  double alpha = 0.1;
  double adversary_learning_rate = 0.001;
  ProjectionSign sign = ProjectionSign::kSubtract;
  AlphaSchedule schedule = AlphaSchedule::kConstant;
  // Keeps the adversary at its initial (zero) parameters.
  bool freeze_adversary = false;

  void Validate() const;
  bool operator==(const AdvConfig&) const = default;
};

// Logistic unit on the predictor's output probability:
// P(male | y_hat) = sigmoid(weight * y_hat + bias), y_hat = sigmoid(logit).
struct AdversaryParams {
  double weight = 0.0;
  double bias = 0.0;

  bool operator==(const AdversaryParams&) const = default;
};

// (h . g / |g|^2) g, or zeros when |g| < 1e-12.
Eigen::VectorXd Project(const Eigen::VectorXd& h, const Eigen::VectorXd& g);

// grad_p -/+ proj_{grad_a}(grad_p) - alpha * grad_a, all over the flattened
// predictor parameters.
Eigen::VectorXd CombinedGradient(const Eigen::VectorXd& predictor_grad,
                                 const Eigen::VectorXd& adversary_grad,
                                 double alpha,
                                 ProjectionSign sign = ProjectionSign::kSubtract);

struct AdversaryStep {
  double loss = 0.0;
  double weight_grad = 0.0;
  double bias_grad = 0.0;
  Eigen::VectorXd logit_grad;  // d loss / d predictor logits
};

// Sigmoid cross-entropy of the adversary against the protected attribute
// and its gradients, including the chain through y_hat to the predictor
// logits.
AdversaryStep AdversaryLossAndGradient(const AdversaryParams& adversary,
                                       const Eigen::VectorXd& predictor_logits,
                                       const Eigen::VectorXd& groups);

// Gradient of the predictor loss (grad_p) and of the adversary loss through
// the predictor (grad_a) for one batch, both flattened.
struct PredictorGradients {
  double predictor_loss = 0.0;
  double adversary_loss = 0.0;
  Eigen::VectorXd predictor_grad;
  Eigen::VectorXd adversary_grad;
};

PredictorGradients ComputePredictorGradients(const MlpParams& predictor,
                                             const AdversaryParams& adversary,
                                             const Eigen::MatrixXd& x,
                                             const Eigen::VectorXd& labels,
                                             const Eigen::VectorXd& groups);

struct AdversarialModel {
  MlpParams predictor;
  AdversaryParams adversary;
};

// Trains the predictor against an adversary that reads its output. Per batch
// the adversary takes one Adam step on its own loss, then the predictor
// takes one Adam step on CombinedGradient. Both gradients come from the
// same forward pass, i.e. from the adversary before its update. Init, batch
// order and step count match TrainBaseline for the same TrainConfig.
AdversarialModel AdversarialTrain(const Dataset& train, const TrainConfig& cfg,
                                  const AdvConfig& adv,
                                  const EpochCallback& on_epoch = {});

// Fits only the adversary on fixed predictor logits.
AdversaryParams TrainAdversary(const Eigen::VectorXd& predictor_logits,
                               const Eigen::VectorXd& groups,
                               const TrainConfig& cfg,
                               double adversary_learning_rate);

}  // namespace fairfuse

#endif  // FAIRFUSE_ADVERSARIAL_H_
