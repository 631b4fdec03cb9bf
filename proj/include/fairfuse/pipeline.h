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

#ifndef FAIRFUSE_PIPELINE_H_
#define FAIRFUSE_PIPELINE_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairfuse/adversarial.h"
#include "fairfuse/data.h"
#include "fairfuse/metrics.h"
#include "fairfuse/nn.h"
#include "fairfuse/posteq.h"

namespace fairfuse {

// Which of the three mitigation stages are enabled.
struct PlanFlags {
  bool pre = false;
  bool in = false;
  bool post = false;

  bool operator==(const PlanFlags&) const = default;
};

// The eight combinations in report order: None, Pre, In, Post, Pre + In,
// Pre + Post, In + Post, Pre + In + Post.
const std::array<PlanFlags, 8>& AllPlanFlags();

// Display name, e.g. "Pre + In + Post" or "None".
std::string PlanName(PlanFlags flags);
// Compact token, e.g. "pre,in,post" or "none".
std::string PlanToken(PlanFlags flags);

// Accepts display names ("Pre + Post") and compact tokens ("pre,post"),
// case-insensitively. Throws std::invalid_argument naming the bad input.
PlanFlags ParsePlanName(std::string_view text);

struct MitigationPlan {
  std::optional<double> repair_level;      // pre-processing
  std::optional<AdvConfig> adversarial;    // in-processing
  std::optional<CostMode> post;            // post-processing

  PlanFlags Flags() const;
  std::string Name() const { return PlanName(Flags()); }
};

struct PlanSettings {
  double repair_level = 1.0;
  AdvConfig adversarial;
  CostMode cost_mode = CostMode::kFalseNegative;
};

MitigationPlan MakePlan(PlanFlags flags, const PlanSettings& settings = {});

// What the predictor sees. kFeaturesOnly keeps the protected attribute out
// of the model entirely. kFeaturesAndProtected appends it as a 0/1 input
// column after repair and normalization (repair never touches it); the
// Dataset values themselves still never carry it.
enum class ModelInput { kFeaturesOnly, kFeaturesAndProtected };

// "features" or "features+protected".
ModelInput ParseModelInput(std::string_view token);
std::string_view ModelInputName(ModelInput input);

// Copy of `data` with the protected attribute appended as the last feature
// column, named "sex".
Dataset WithProtectedInput(const Dataset& data);

// One seeded run: split(seed) -> [repair fit on train, applied to all
// splits] -> normalizer fit on train -> [adversarial | baseline] training
// with TrainConfig::seed = seed -> scores on validation and test ->
// [calibrated equalized odds fit on validation, applied to test] ->
// threshold 0.5 -> metrics on test.
MetricsReport RunOnce(const Dataset& data, const MitigationPlan& plan,
                      std::uint64_t seed, const TrainConfig& train = {},
                      ModelInput input = ModelInput::kFeaturesOnly);

// Predictor scores of a trained model on the validation and test rows.
struct ScoredSplits {
  Eigen::VectorXd validation_scores;
  Eigen::VectorXd test_scores;
  std::vector<std::uint8_t> validation_labels;
  std::vector<std::uint8_t> validation_groups;
  std::vector<std::uint8_t> test_labels;
  std::vector<std::uint8_t> test_groups;
};

// The tail of a run: [calibrated equalized odds fit on validation, applied
// to test with PostProcessingSeed(seed)] -> threshold 0.5 -> metrics on test.
MetricsReport EvaluateScores(const ScoredSplits& scored,
                             const std::optional<CostMode>& post,
                             std::uint64_t seed);

// Seed of the post-processing sampler for a run seed.
std::uint64_t PostProcessingSeed(std::uint64_t seed);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single run
  double min = 0.0;
  double max = 0.0;
  std::size_t runs = 0;  // runs where the metric was defined
};

struct PlanSummary {
  std::string name;
  PlanFlags flags;
  std::vector<MetricsReport> runs;  // in seed order
  std::optional<MetricSummary> accuracy;
  std::optional<MetricSummary> spd;
  std::optional<MetricSummary> eod;
  std::optional<MetricSummary> aod;
  std::optional<MetricSummary> di;
};

struct ExperimentOptions {
  TrainConfig train;
  ModelInput input = ModelInput::kFeaturesOnly;
  int jobs = 1;
};

struct ExperimentSummary {
  std::vector<PlanSummary> plans;  // report order
  std::vector<std::uint64_t> seeds;
  ExperimentOptions options;

  // Throws std::out_of_range when the plan was not part of the experiment.
  const PlanSummary& Find(PlanFlags flags) const;
};

std::optional<MetricSummary> Summarize(std::span<const std::optional<double>> values);

using RunLogger = std::function<void(const std::string& plan,
                                     std::uint64_t seed,
                                     const MetricsReport& report)>;

// Runs every (plan, seed) pair on up to `options.jobs` threads. Plans that differ
// only in post-processing share the trained model of a seed; the result is
// identical to calling RunOnce for each pair. A failing run aborts the
// experiment with an exception naming the plan and seed. Duplicate plan
// names are rejected.
ExperimentSummary RunExperiment(const Dataset& data,
                                std::span<const MitigationPlan> plans,
                                std::span<const std::uint64_t> seeds,
                                const ExperimentOptions& options = {},
                                const RunLogger& logger = {});

enum class ReportFormat { kCsv, kTable };

// "csv" or "table".
ReportFormat ParseReportFormat(std::string_view token);

// CSV columns, in order:
//   plan,runs,accuracy_mean,accuracy_std,spd_mean,spd_std,eod_mean,eod_std,
//   aod_mean,aod_std,di_mean,di_std,spd_fair,eod_fair,aod_fair,di_fair
// Numbers use 6 decimals, undefined metrics are "NA", fairness flags are
// "yes"/"no"/"NA" on the means. The table format shows mean±std with 4
// decimals. Rows follow report order.
std::string EmitReport(const ExperimentSummary& summary, ReportFormat format);

}  // namespace fairfuse

#endif  // FAIRFUSE_PIPELINE_H_
