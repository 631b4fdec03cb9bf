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

#ifndef FAIRFUSE_REPAIR_H_
#define FAIRFUSE_REPAIR_H_

#include <cstddef>
#include <span>
#include <vector>

#include "fairfuse/data.h"

namespace fairfuse {

// Empirical quantile function of one sample. The i-th order statistic
// (1-based, m values) sits at plotting position u_i = (i - 0.5) / m; values
// in between are linearly interpolated and u outside [u_1, u_m] clamps to
// the min/max.
class QuantileFunction {
 public:
  // Throws std::invalid_argument when values is empty or non-finite.
  explicit QuantileFunction(std::vector<double> values);

  double Evaluate(double u) const;

  // Inverse lookup: the percentile of x within the sample. Tied values get
  // the midpoint of their tied-rank range, values strictly between two
  // sample values are interpolated between their percentiles, and values
  // outside the sample range clamp to 0 or 1.
  double Percentile(double x) const;

  std::span<const double> sorted_values() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
  std::vector<double> distinct_;     // unique sorted values
  std::vector<double> distinct_u_;   // tie-midpoint percentile of each
};

// Per feature: both groups' quantile functions. The target distribution is
// the pointwise median of the group quantile functions (for two groups,
// their mean).
struct FeatureRepair {
  QuantileFunction female;
  QuantileFunction male;

  double MedianQuantile(double u) const;
};

struct RepairMap {
  std::vector<FeatureRepair> features;
  double level = 1.0;  // 0 leaves data untouched, 1 is full repair
};

// Builds the quantile functions from the (raw) features of `train`.
// Throws std::invalid_argument when level is outside [0, 1] or a group is
// missing.
RepairMap FitRepair(const Dataset& train, double level);

// Each value x of a row in group g becomes
//   (1 - level) * Q_g(u) + level * Q_median(u),  u = Q_g.Percentile(x).
// Labels and groups are copied unchanged. Throws std::invalid_argument on a
// feature count mismatch.
Dataset ApplyRepair(const RepairMap& map, const Dataset& data);

}  // namespace fairfuse

#endif  // FAIRFUSE_REPAIR_H_
