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

#include "fairfuse/repair.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fairfuse {

QuantileFunction::QuantileFunction(std::vector<double> values)
    : sorted_(std::move(values)) {
  if (sorted_.empty()) {
    throw std::invalid_argument("quantile function needs at least one value");
  }
  for (double v : sorted_) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
  }
  std::sort(sorted_.begin(), sorted_.end());

  const double m = static_cast<double>(sorted_.size());
  std::size_t lo = 0;
  while (lo < sorted_.size()) {
    std::size_t hi = lo;
    while (hi + 1 < sorted_.size() && sorted_[hi + 1] == sorted_[lo]) ++hi;
    // 1-based ranks lo+1 .. hi+1; midpoint rank r gives u = (r - 0.5) / m.
    const double mid_rank = 0.5 * static_cast<double>(lo + hi + 2);
    distinct_.push_back(sorted_[lo]);
    distinct_u_.push_back((mid_rank - 0.5) / m);
    lo = hi + 1;
  }
}

double QuantileFunction::Evaluate(double u) const {
  const std::size_t m = sorted_.size();
  // Fractional 1-based position of u among the plotting positions.
  double pos = u * static_cast<double>(m) + 0.5;
  // Snap rounding noise so Evaluate(u_i) is exactly the i-th order statistic.
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9) pos = nearest;
  if (!(pos > 1.0)) return sorted_.front();
  if (pos >= static_cast<double>(m)) return sorted_.back();
  const std::size_t i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  const double lower = sorted_[i - 1];
  const double upper = sorted_[i];
  return lower + frac * (upper - lower);
}

double QuantileFunction::Percentile(double x) const {
  if (x < distinct_.front()) return 0.0;
  if (x > distinct_.back()) return 1.0;
  const auto it = std::lower_bound(distinct_.begin(), distinct_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - distinct_.begin());
  if (*it == x) return distinct_u_[k];
  // distinct_[k-1] < x < distinct_[k]
  const double t = (x - distinct_[k - 1]) / (distinct_[k] - distinct_[k - 1]);
  return distinct_u_[k - 1] + t * (distinct_u_[k] - distinct_u_[k - 1]);
}

double FeatureRepair::MedianQuantile(double u) const {
  // Median of two values is their mean.
  return 0.5 * (female.Evaluate(u) + male.Evaluate(u));
}

RepairMap FitRepair(const Dataset& train, double level) {
  if (!(level >= 0.0 && level <= 1.0)) {
    throw std::invalid_argument("repair level must lie in [0, 1]");
  }
  train.Validate();
  RepairMap map;
  map.level = level;
  for (Eigen::Index j = 0; j < train.features.cols(); ++j) {
    std::vector<double> female, male;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double x = train.features(static_cast<Eigen::Index>(i), j);
      (train.groups[i] == 1 ? male : female).push_back(x);
    }
    map.features.push_back(
        {QuantileFunction(std::move(female)), QuantileFunction(std::move(male))});
  }
  return map;
}

Dataset ApplyRepair(const RepairMap& map, const Dataset& data) {
  if (static_cast<std::size_t>(data.features.cols()) != map.features.size()) {
    throw std::invalid_argument("repair map was fitted on " +
                                std::to_string(map.features.size()) +
                                " features, data has " +
                                std::to_string(data.features.cols()));
  }
  Dataset out = data;
  const double level = map.level;
  for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
    const FeatureRepair& feature = map.features[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const QuantileFunction& own =
          data.groups[i] == 1 ? feature.male : feature.female;
      const double u = own.Percentile(data.features(row, j));
      out.features(row, j) =
          (1.0 - level) * own.Evaluate(u) + level * feature.MedianQuantile(u);
    }
  }
  return out;
}

}  // namespace fairfuse
