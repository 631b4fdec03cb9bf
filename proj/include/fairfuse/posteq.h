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

#ifndef FAIRFUSE_POSTEQ_H_
#define FAIRFUSE_POSTEQ_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fairfuse/data.h"

namespace fairfuse {

enum class CostMode {
  kFalseNegative,  // mean(1 - score) over positives
  kFalsePositive,  // mean(score) over negatives
  kWeighted,       // kFalseNegativeWeight * fnr cost + rest * fpr cost
};

inline constexpr double kFalseNegativeWeight = 0.5;

// "fnr", "fpr" or "weighted"; throws std::invalid_argument otherwise.
CostMode ParseCostMode(std::string_view token);
std::string_view CostModeName(CostMode mode);

// Generalized cost of calibrated scores. Throws std::invalid_argument when
// the conditioning set (positives, negatives, or both) is empty.
double GeneralizedCost(std::span<const double> scores,
                       std::span<const std::uint8_t> labels, CostMode mode);

// Randomized suppression for calibrated equalized odds: rows of the
// lower-cost target group are replaced with probability mixing_rate by the
// group's base rate.
struct CalEqAdjustment {
  Group target_group = Group::kFemale;
  double mixing_rate = 0.0;
  double base_rate = 0.0;
  CostMode cost_mode = CostMode::kFalseNegative;

  // Per-group costs observed at fit time, kept for inspection.
  double target_cost = 0.0;
  double other_cost = 0.0;
  double trivial_cost = 0.0;

  // (1 - mixing_rate) * target_cost + mixing_rate * trivial_cost.
  double ExpectedTargetCost() const;
};

// Fits the mix on held-out scores. The target group is the one with the
// lower cost; the mixing rate solves
//   (1 - r) * target_cost + r * trivial_cost = other_cost
// clamped to [0, 1], where trivial_cost is the cost of always predicting the
// target group's base rate. Equal costs give r = 0.
CalEqAdjustment FitCalEq(std::span<const double> scores,
                         std::span<const std::uint8_t> labels,
                         std::span<const std::uint8_t> groups,
                         CostMode mode = CostMode::kFalseNegative);

// Independently for each target-group row, with probability mixing_rate
// replaces the score by base_rate. Other rows are copied bit for bit.
std::vector<double> ApplyCalEq(const CalEqAdjustment& adjustment,
                               std::span<const double> scores,
                               std::span<const std::uint8_t> groups,
                               std::uint64_t seed);

}  // namespace fairfuse

#endif  // FAIRFUSE_POSTEQ_H_
