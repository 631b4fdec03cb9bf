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

#ifndef FAIRFUSE_METRICS_H_
#define FAIRFUSE_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "fairfuse/data.h"
#include "fairfuse/nn.h"

namespace fairfuse {

// Confusion counts of one protected group.
struct GroupCounts {
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tp = 0;

  std::size_t count() const { return tn + fp + fn + tp; }
  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return tn + fp; }

  double base_rate() const;       // P(Y=1 | g)
  double selection_rate() const;  // P(Yhat=1 | g)
  // Undefined when the group has no positives (TPR) or no negatives (FPR).
  std::optional<double> tpr() const;
  std::optional<double> fpr() const;

  bool operator==(const GroupCounts&) const = default;
};

struct GroupRates {
  GroupCounts female;
  GroupCounts male;

  bool operator==(const GroupRates&) const = default;
};

// Group metrics, all differences taken female minus male.
struct MetricsReport {
  double accuracy = 0.0;
  double spd = 0.0;
  std::optional<double> eod;
  std::optional<double> aod;
  std::optional<double> di;  // undefined when the male selection rate is 0
  GroupRates rates;

  bool operator==(const MetricsReport&) const = default;
};

// A difference metric is fair inside [-0.1, 0.1]; disparate impact when
// >= 0.8.
inline constexpr double kFairDifferenceBound = 0.1;
inline constexpr double kFairDisparateImpact = 0.8;
bool IsFairDifference(double value);
bool IsFairDisparateImpact(double value);

// Throws std::invalid_argument on length mismatch, non-binary values, or a
// protected group with no rows.
GroupRates ComputeGroupRates(std::span<const std::uint8_t> labels,
                             std::span<const std::uint8_t> predictions,
                             std::span<const std::uint8_t> groups);

MetricsReport FairnessReport(std::span<const std::uint8_t> labels,
                             std::span<const std::uint8_t> predictions,
                             std::span<const std::uint8_t> groups);

// Balanced error rate 0.5 * (FPR + FNR) for predicting group membership,
// with male as the positive class.
double BalancedErrorRate(std::span<const std::uint8_t> groups,
                         std::span<const std::uint8_t> predicted_groups);

// How predictable the protected attribute is from the features: fits a
// logistic model (no hidden layers) on a seeded 70% of the rows and returns
// the balanced error rate on the held-out 30%. Values near 0.5 mean the
// attribute cannot be recovered. Features are z-scored with statistics of
// the fitting part. Throws std::invalid_argument when either part lacks a
// group.
double ProtectedBer(const Dataset& data, std::uint64_t seed,
                    const TrainConfig& cfg = {});

}  // namespace fairfuse

#endif  // FAIRFUSE_METRICS_H_
