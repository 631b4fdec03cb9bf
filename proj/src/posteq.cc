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

#include "fairfuse/posteq.h"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "fairfuse/random.h"

namespace fairfuse {
namespace {

struct ConditionalMeans {
  double positives_miss = 0.0;  // sum of (1 - score) where label == 1
  double negatives_hit = 0.0;   // sum of score where label == 0
  std::size_t num_positives = 0;
  std::size_t num_negatives = 0;
};

ConditionalMeans Accumulate(std::span<const double> scores,
                            std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  ConditionalMeans acc;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
      throw std::invalid_argument("scores must lie in [0, 1]");
    }
    if (labels[i] == 1) {
      acc.positives_miss += 1.0 - scores[i];
      ++acc.num_positives;
    } else {
      acc.negatives_hit += scores[i];
      ++acc.num_negatives;
    }
  }
  return acc;
}

}  // namespace

CostMode ParseCostMode(std::string_view token) {
  if (token == "fnr") return CostMode::kFalseNegative;
  if (token == "fpr") return CostMode::kFalsePositive;
  if (token == "weighted") return CostMode::kWeighted;
  throw std::invalid_argument("unknown cost mode '" + std::string(token) +
                              "' (expected fnr, fpr or weighted)");
}

std::string_view CostModeName(CostMode mode) {
  switch (mode) {
    case CostMode::kFalseNegative:
      return "fnr";
    case CostMode::kFalsePositive:
      return "fpr";
    case CostMode::kWeighted:
      return "weighted";
  }
  return "fnr";
}

double GeneralizedCost(std::span<const double> scores,
                       std::span<const std::uint8_t> labels, CostMode mode) {
  const ConditionalMeans acc = Accumulate(scores, labels);
  const bool need_pos = mode != CostMode::kFalsePositive;
  const bool need_neg = mode != CostMode::kFalseNegative;
  if ((need_pos && acc.num_positives == 0) ||
      (need_neg && acc.num_negatives == 0)) {
    throw std::invalid_argument("generalized cost: empty conditioning set");
  }
  const double fnr_cost =
      need_pos ? acc.positives_miss / static_cast<double>(acc.num_positives) : 0.0;
  const double fpr_cost =
      need_neg ? acc.negatives_hit / static_cast<double>(acc.num_negatives) : 0.0;
  switch (mode) {
    case CostMode::kFalseNegative:
      return fnr_cost;
    case CostMode::kFalsePositive:
      return fpr_cost;
    case CostMode::kWeighted:
      return kFalseNegativeWeight * fnr_cost +
             (1.0 - kFalseNegativeWeight) * fpr_cost;
  }
  return fnr_cost;
}

double CalEqAdjustment::ExpectedTargetCost() const {
  return (1.0 - mixing_rate) * target_cost + mixing_rate * trivial_cost;
}

CalEqAdjustment FitCalEq(std::span<const double> scores,
                         std::span<const std::uint8_t> labels,
                         std::span<const std::uint8_t> groups,
                         CostMode mode) {
  if (scores.size() != groups.size() || labels.size() != groups.size()) {
    throw std::invalid_argument("scores, labels and groups differ in length");
  }
  std::vector<double> group_scores[2];
  std::vector<std::uint8_t> group_labels[2];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int g = groups[i] == 1 ? 1 : 0;
    group_scores[g].push_back(scores[i]);
    group_labels[g].push_back(labels[i]);
  }
  const double female_cost = GeneralizedCost(group_scores[0], group_labels[0], mode);
  const double male_cost = GeneralizedCost(group_scores[1], group_labels[1], mode);

  CalEqAdjustment adj;
  adj.cost_mode = mode;
  adj.target_group = male_cost < female_cost ? Group::kMale : Group::kFemale;
  const int t = static_cast<int>(adj.target_group);
  adj.target_cost = t == 1 ? male_cost : female_cost;
  adj.other_cost = t == 1 ? female_cost : male_cost;

  std::size_t positives = 0;
  for (std::uint8_t y : group_labels[t]) positives += y;
  adj.base_rate = static_cast<double>(positives) /
                  static_cast<double>(group_labels[t].size());
  const std::vector<double> trivial(group_labels[t].size(), adj.base_rate);
  adj.trivial_cost = GeneralizedCost(trivial, group_labels[t], mode);

  if (adj.trivial_cost == adj.target_cost) {
    adj.mixing_rate = 0.0;
  } else {
    const double rate = (adj.other_cost - adj.target_cost) /
                        (adj.trivial_cost - adj.target_cost);
    adj.mixing_rate = std::clamp(rate, 0.0, 1.0);
  }
  return adj;
}

std::vector<double> ApplyCalEq(const CalEqAdjustment& adjustment,
                               std::span<const double> scores,
                               std::span<const std::uint8_t> groups,
                               std::uint64_t seed) {
  if (scores.size() != groups.size()) {
    throw std::invalid_argument("scores and groups differ in length");
  }
  std::vector<double> out(scores.begin(), scores.end());
  Rng rng(seed);
  const auto target = static_cast<std::uint8_t>(adjustment.target_group);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (groups[i] != target) continue;
    if (rng.Bernoulli(adjustment.mixing_rate)) out[i] = adjustment.base_rate;
  }
  return out;
}

}  // namespace fairfuse
