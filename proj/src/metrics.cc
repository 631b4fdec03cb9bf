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

#include "fairfuse/metrics.h"

#include <array>
#include <stdexcept>
#include <vector>

#include "fairfuse/random.h"

namespace fairfuse {
namespace {

double Ratio(std::size_t num, std::size_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

constexpr std::uint64_t kBerSplitStream = 11;

}  // namespace

double GroupCounts::base_rate() const {
  return count() == 0 ? 0.0 : Ratio(positives(), count());
}

double GroupCounts::selection_rate() const {
  return count() == 0 ? 0.0 : Ratio(tp + fp, count());
}

std::optional<double> GroupCounts::tpr() const {
  if (positives() == 0) return std::nullopt;
  return Ratio(tp, positives());
}

std::optional<double> GroupCounts::fpr() const {
  if (negatives() == 0) return std::nullopt;
  return Ratio(fp, negatives());
}

bool IsFairDifference(double value) {
  return value >= -kFairDifferenceBound && value <= kFairDifferenceBound;
}

bool IsFairDisparateImpact(double value) {
  return value >= kFairDisparateImpact;
}

GroupRates ComputeGroupRates(std::span<const std::uint8_t> labels,
                             std::span<const std::uint8_t> predictions,
                             std::span<const std::uint8_t> groups) {
  if (labels.size() != predictions.size() || labels.size() != groups.size()) {
    throw std::invalid_argument("labels, predictions and groups differ in length");
  }
  GroupRates rates;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1 || predictions[i] > 1 || groups[i] > 1) {
      throw std::invalid_argument("metric inputs must be 0/1");
    }
    GroupCounts& g = groups[i] == 1 ? rates.male : rates.female;
    if (labels[i] == 1) {
      (predictions[i] == 1 ? g.tp : g.fn)++;
    } else {
      (predictions[i] == 1 ? g.fp : g.tn)++;
    }
  }
  if (rates.female.count() == 0 || rates.male.count() == 0) {
    throw std::invalid_argument("a protected group has no rows");
  }
  return rates;
}

MetricsReport FairnessReport(std::span<const std::uint8_t> labels,
                             std::span<const std::uint8_t> predictions,
                             std::span<const std::uint8_t> groups) {
  MetricsReport report;
  report.rates = ComputeGroupRates(labels, predictions, groups);
  const GroupCounts& f = report.rates.female;
  const GroupCounts& m = report.rates.male;

  report.accuracy = Ratio(f.tp + f.tn + m.tp + m.tn, labels.size());
  report.spd = f.selection_rate() - m.selection_rate();
  if (m.selection_rate() > 0.0) {
    report.di = f.selection_rate() / m.selection_rate();
  }
  const auto tpr_f = f.tpr(), tpr_m = m.tpr();
  const auto fpr_f = f.fpr(), fpr_m = m.fpr();
  if (tpr_f && tpr_m) {
    report.eod = *tpr_f - *tpr_m;
    if (fpr_f && fpr_m) {
      report.aod = 0.5 * ((*fpr_f - *fpr_m) + (*tpr_f - *tpr_m));
    }
  }
  return report;
}

double BalancedErrorRate(std::span<const std::uint8_t> groups,
                         std::span<const std::uint8_t> predicted_groups) {
  // Male is the positive class, so the group's TPR/FPR are read off the
  // counts with labels = groups.
  const GroupCounts c = [&] {
    GroupCounts counts;
    if (groups.size() != predicted_groups.size()) {
      throw std::invalid_argument("group vectors differ in length");
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i] == 1) {
        (predicted_groups[i] == 1 ? counts.tp : counts.fn)++;
      } else {
        (predicted_groups[i] == 1 ? counts.fp : counts.tn)++;
      }
    }
    return counts;
  }();
  if (c.positives() == 0 || c.negatives() == 0) {
    throw std::invalid_argument("balanced error rate needs both groups");
  }
  const double fnr = 1.0 - *c.tpr();
  return 0.5 * (*c.fpr() + fnr);
}

double ProtectedBer(const Dataset& data, std::uint64_t seed,
                    const TrainConfig& cfg) {
  data.Validate();
  const std::size_t n = data.size();
  const std::vector<std::size_t> order =
      Permutation(n, DeriveSeed(seed, kBerSplitStream));
  const std::size_t n_fit = n * 70 / 100;
  const std::span<const std::size_t> all(order);
  const Dataset fit = data.Subset(all.first(n_fit));
  const Dataset held_out = data.Subset(all.subspan(n_fit));
  for (const Dataset* part : {&fit, &held_out}) {
    try {
      part->Validate();
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument(
          "degenerate BER split: a protected group is absent from one part");
    }
  }

  const Normalizer nz = Normalizer::Fit(fit);
  TrainConfig logistic_cfg = cfg;
  logistic_cfg.seed = seed;
  const std::array<int, 2> logistic = {
      static_cast<int>(data.features.cols()), 1};
  const MlpParams model = TrainClassifier(
      nz.Apply(fit.features), ToVector(fit.groups), logistic_cfg, logistic);
  const auto predicted = ThresholdScores(
      PredictProbabilities(model, nz.Apply(held_out.features)));
  return BalancedErrorRate(held_out.groups, predicted);
}

}  // namespace fairfuse
