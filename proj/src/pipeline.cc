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

#include "fairfuse/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "fairfuse/errors.h"
#include "fairfuse/random.h"
#include "fairfuse/repair.h"

namespace fairfuse {
namespace {

constexpr std::uint64_t kPostStream = 3;

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t ReportIndex(PlanFlags flags) {
  const auto& all = AllPlanFlags();
  return static_cast<std::size_t>(std::find(all.begin(), all.end(), flags) -
                                  all.begin());
}

ScoredSplits RunTrainingStage(const Dataset& data,
                              const std::optional<double>& repair_level,
                              const std::optional<AdvConfig>& adversarial,
                              std::uint64_t seed, const TrainConfig& train_cfg,
                              ModelInput input) {
  Splits splits = SplitDataset(data, seed);
  Dataset train = std::move(splits.train);
  Dataset validation = std::move(splits.validation);
  Dataset test = std::move(splits.test);

  if (repair_level) {
    const RepairMap map = FitRepair(train, *repair_level);
    train = ApplyRepair(map, train);
    validation = ApplyRepair(map, validation);
    test = ApplyRepair(map, test);
  }
  const Normalizer nz = Normalizer::Fit(train);
  train = nz.Apply(train);
  validation = nz.Apply(validation);
  test = nz.Apply(test);
  if (input == ModelInput::kFeaturesAndProtected) {
    train = WithProtectedInput(train);
    validation = WithProtectedInput(validation);
    test = WithProtectedInput(test);
  }

  TrainConfig cfg = train_cfg;
  cfg.seed = seed;
  const MlpParams params =
      adversarial ? AdversarialTrain(train, cfg, *adversarial).predictor
                  : TrainBaseline(train, cfg);

  ScoredSplits stage;
  stage.validation_scores = PredictProbabilities(params, validation.features);
  stage.test_scores = PredictProbabilities(params, test.features);
  stage.validation_labels = std::move(validation.labels);
  stage.validation_groups = std::move(validation.groups);
  stage.test_labels = std::move(test.labels);
  stage.test_groups = std::move(test.groups);
  return stage;
}

[[noreturn]] void RethrowWithContext(std::exception_ptr error,
                                     const std::string& context) {
  try {
    std::rethrow_exception(error);
  } catch (const NumericError& e) {
    throw NumericError(context + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(context + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(context + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(context + ": " + e.what());
  }
}

std::string FormatNumber(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string s(buf);
  // Avoid "-0.000000" so that tiny negatives and zero print alike.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

std::string FairFlag(const std::optional<MetricSummary>& m, bool disparate_impact) {
  if (!m) return "NA";
  const bool fair = disparate_impact ? IsFairDisparateImpact(m->mean)
                                     : IsFairDifference(m->mean);
  return fair ? "yes" : "no";
}

std::string EmitCsv(const ExperimentSummary& summary) {
  std::string out =
      "plan,runs,accuracy_mean,accuracy_std,spd_mean,spd_std,eod_mean,eod_std,"
      "aod_mean,aod_std,di_mean,di_std,spd_fair,eod_fair,aod_fair,di_fair\n";
  for (const PlanSummary& p : summary.plans) {
    out += p.name + "," + std::to_string(p.runs.size());
    for (const auto* m : {&p.accuracy, &p.spd, &p.eod, &p.aod, &p.di}) {
      if (*m) {
        out += "," + FormatNumber((*m)->mean, 6) + "," + FormatNumber((*m)->stddev, 6);
      } else {
        out += ",NA,NA";
      }
    }
    out += "," + FairFlag(p.spd, false) + "," + FairFlag(p.eod, false) + "," +
           FairFlag(p.aod, false) + "," + FairFlag(p.di, true) + "\n";
  }
  return out;
}

std::string Pad(std::string s, std::size_t width) {
  // "±" is two bytes but one column.
  std::size_t columns = 0;
  for (unsigned char c : s) columns += (c & 0xC0) != 0x80;
  if (columns < width) s.append(width - columns, ' ');
  return s;
}

std::string EmitTable(const ExperimentSummary& summary) {
  std::string out;
  const TrainConfig& train = summary.options.train;
  out += "# runs per plan: " + std::to_string(summary.seeds.size()) +
         ", epochs " + std::to_string(train.epochs) + ", batch " +
         std::to_string(train.batch_size) + ", lr " +
         FormatNumber(train.learning_rate, 6) + ", model input " +
         std::string(ModelInputName(summary.options.input)) + "\n";
  const std::size_t name_width = 17;
  const std::size_t cell_width = 18;
  out += Pad("plan", name_width);
  for (const char* h : {"accuracy", "spd", "eod", "aod", "di"}) {
    out += Pad(h, cell_width);
  }
  out += "fair(spd/eod/aod/di)\n";
  for (const PlanSummary& p : summary.plans) {
    out += Pad(p.name, name_width);
    for (const auto* m : {&p.accuracy, &p.spd, &p.eod, &p.aod, &p.di}) {
      const std::string cell =
          *m ? FormatNumber((*m)->mean, 4) + "±" + FormatNumber((*m)->stddev, 4)
             : std::string("NA");
      out += Pad(cell, cell_width);
    }
    out += FairFlag(p.spd, false) + "/" + FairFlag(p.eod, false) + "/" +
           FairFlag(p.aod, false) + "/" + FairFlag(p.di, true) + "\n";
  }
  return out;
}

}  // namespace

MetricsReport EvaluateScores(const ScoredSplits& stage,
                             const std::optional<CostMode>& post,
                             std::uint64_t seed) {
  std::vector<double> scores(stage.test_scores.data(),
                             stage.test_scores.data() + stage.test_scores.size());
  if (post) {
    const std::span<const double> val_scores(stage.validation_scores.data(),
                                             static_cast<std::size_t>(stage.validation_scores.size()));
    const CalEqAdjustment adj = FitCalEq(val_scores, stage.validation_labels,
                                         stage.validation_groups, *post);
    scores = ApplyCalEq(adj, scores, stage.test_groups, PostProcessingSeed(seed));
  }
  const Eigen::Map<const Eigen::VectorXd> mapped(
      scores.data(), static_cast<Eigen::Index>(scores.size()));
  const auto predictions = ThresholdScores(mapped);
  return FairnessReport(stage.test_labels, predictions, stage.test_groups);
}

const std::array<PlanFlags, 8>& AllPlanFlags() {
  static const std::array<PlanFlags, 8> kPlans = {{
      {false, false, false},
      {true, false, false},
      {false, true, false},
      {false, false, true},
      {true, true, false},
      {true, false, true},
      {false, true, true},
      {true, true, true},
  }};
  return kPlans;
}

std::string PlanName(PlanFlags flags) {
  std::vector<std::string> parts;
  if (flags.pre) parts.push_back("Pre");
  if (flags.in) parts.push_back("In");
  if (flags.post) parts.push_back("Post");
  if (parts.empty()) return "None";
  std::string name = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) name += " + " + parts[i];
  return name;
}

std::string PlanToken(PlanFlags flags) {
  std::string token;
  for (const auto& [on, part] : {std::pair{flags.pre, "pre"},
                                 std::pair{flags.in, "in"},
                                 std::pair{flags.post, "post"}}) {
    if (!on) continue;
    if (!token.empty()) token += ",";
    token += part;
  }
  return token.empty() ? "none" : token;
}

PlanFlags ParsePlanName(std::string_view text) {
  for (PlanFlags flags : AllPlanFlags()) {
    if (Lower(text) == Lower(PlanName(flags)) || Lower(text) == PlanToken(flags)) {
      return flags;
    }
  }
  throw std::invalid_argument("unknown plan '" + std::string(text) + "'");
}

PlanFlags MitigationPlan::Flags() const {
  return {repair_level.has_value(), adversarial.has_value(), post.has_value()};
}

MitigationPlan MakePlan(PlanFlags flags, const PlanSettings& settings) {
  MitigationPlan plan;
  if (flags.pre) plan.repair_level = settings.repair_level;
  if (flags.in) plan.adversarial = settings.adversarial;
  if (flags.post) plan.post = settings.cost_mode;
  return plan;
}

ModelInput ParseModelInput(std::string_view token) {
  if (token == "features") return ModelInput::kFeaturesOnly;
  if (token == "features+protected") return ModelInput::kFeaturesAndProtected;
  throw std::invalid_argument("unknown model input '" + std::string(token) +
                              "' (expected features or features+protected)");
}

std::string_view ModelInputName(ModelInput input) {
  return input == ModelInput::kFeaturesOnly ? "features" : "features+protected";
}

Dataset WithProtectedInput(const Dataset& data) {
  Dataset out = data;
  out.features.conservativeResize(Eigen::NoChange, data.features.cols() + 1);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.features(static_cast<Eigen::Index>(i), data.features.cols()) =
        data.groups[i];
  }
  out.feature_names.push_back("sex");
  return out;
}

std::uint64_t PostProcessingSeed(std::uint64_t seed) {
  return DeriveSeed(seed, kPostStream);
}

MetricsReport RunOnce(const Dataset& data, const MitigationPlan& plan,
                      std::uint64_t seed, const TrainConfig& train,
                      ModelInput input) {
  const ScoredSplits stage = RunTrainingStage(data, plan.repair_level,
                                              plan.adversarial, seed, train, input);
  return EvaluateScores(stage, plan.post, seed);
}

std::optional<MetricSummary> Summarize(
    std::span<const std::optional<double>> values) {
  std::vector<double> defined;
  for (const auto& v : values) {
    if (v) defined.push_back(*v);
  }
  if (defined.empty()) return std::nullopt;
  MetricSummary s;
  s.runs = defined.size();
  double sum = 0.0;
  for (double v : defined) sum += v;
  s.mean = sum / static_cast<double>(defined.size());
  double sq = 0.0;
  for (double v : defined) sq += (v - s.mean) * (v - s.mean);
  s.stddev = defined.size() > 1
                 ? std::sqrt(sq / static_cast<double>(defined.size() - 1))
                 : 0.0;
  const auto [lo, hi] = std::minmax_element(defined.begin(), defined.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

const PlanSummary& ExperimentSummary::Find(PlanFlags flags) const {
  for (const PlanSummary& p : plans) {
    if (p.flags == flags) return p;
  }
  throw std::out_of_range("plan '" + PlanName(flags) + "' not in experiment");
}

ExperimentSummary RunExperiment(const Dataset& data,
                                std::span<const MitigationPlan> plans,
                                std::span<const std::uint64_t> seeds,
                                const ExperimentOptions& options,
                                const RunLogger& logger) {
  if (plans.empty()) throw std::invalid_argument("experiment needs a plan");
  if (seeds.empty()) throw std::invalid_argument("experiment needs a seed");
  if (options.jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  options.train.Validate();
  data.Validate();

  std::vector<MitigationPlan> ordered(plans.begin(), plans.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const MitigationPlan& a, const MitigationPlan& b) {
                     return ReportIndex(a.Flags()) < ReportIndex(b.Flags());
                   });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i].Flags() == ordered[i - 1].Flags()) {
      throw std::invalid_argument("plan '" + ordered[i].Name() +
                                  "' listed twice");
    }
  }

  // Plans with identical pre/in settings share training.
  struct Stage {
    std::optional<double> repair_level;
    std::optional<AdvConfig> adversarial;
    std::vector<std::size_t> plans;
  };
  std::vector<Stage> stages;
  for (std::size_t p = 0; p < ordered.size(); ++p) {
    auto it = std::find_if(stages.begin(), stages.end(), [&](const Stage& s) {
      return s.repair_level == ordered[p].repair_level &&
             s.adversarial == ordered[p].adversarial;
    });
    if (it == stages.end()) {
      stages.push_back({ordered[p].repair_level, ordered[p].adversarial, {}});
      it = stages.end() - 1;
    }
    it->plans.push_back(p);
  }

  const std::size_t num_tasks = stages.size() * seeds.size();
  // results[p][s] for plan p, seed s.
  std::vector<std::vector<MetricsReport>> results(
      ordered.size(), std::vector<MetricsReport>(seeds.size()));
  std::atomic<std::size_t> next_task{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t first_error_task = 0;
  std::string first_error_plan;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t task = next_task.fetch_add(1);
      if (task >= num_tasks) return;
      const std::size_t s = task % seeds.size();
      const Stage& stage = stages[task / seeds.size()];
      std::string current_plan = ordered[stage.plans.front()].Name();
      try {
        const ScoredSplits trained = RunTrainingStage(
            data, stage.repair_level, stage.adversarial, seeds[s],
            options.train, options.input);
        for (std::size_t p : stage.plans) {
          current_plan = ordered[p].Name();
          results[p][s] = EvaluateScores(trained, ordered[p].post, seeds[s]);
          if (logger) {
            std::lock_guard<std::mutex> lock(mu);
            logger(current_plan, seeds[s], results[p][s]);
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error || task < first_error_task) {
          first_error = std::current_exception();
          first_error_task = task;
          first_error_plan = current_plan;
        }
        failed.store(true);
      }
    }
  };

  const std::size_t num_threads =
      std::min<std::size_t>(static_cast<std::size_t>(options.jobs), num_tasks);
  if (num_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < num_threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) {
    RethrowWithContext(first_error,
                       "run failed for plan '" + first_error_plan + "', seed " +
                           std::to_string(seeds[first_error_task % seeds.size()]));
  }

  ExperimentSummary summary;
  summary.seeds.assign(seeds.begin(), seeds.end());
  summary.options = options;
  for (std::size_t p = 0; p < ordered.size(); ++p) {
    PlanSummary ps;
    ps.flags = ordered[p].Flags();
    ps.name = ordered[p].Name();
    ps.runs = std::move(results[p]);
    std::vector<std::optional<double>> acc, spd, eod, aod, di;
    for (const MetricsReport& r : ps.runs) {
      acc.push_back(r.accuracy);
      spd.push_back(r.spd);
      eod.push_back(r.eod);
      aod.push_back(r.aod);
      di.push_back(r.di);
    }
    ps.accuracy = Summarize(acc);
    ps.spd = Summarize(spd);
    ps.eod = Summarize(eod);
    ps.aod = Summarize(aod);
    ps.di = Summarize(di);
    summary.plans.push_back(std::move(ps));
  }
  return summary;
}

ReportFormat ParseReportFormat(std::string_view token) {
  if (token == "csv") return ReportFormat::kCsv;
  if (token == "table") return ReportFormat::kTable;
  throw std::invalid_argument("unsupported report format '" +
                              std::string(token) + "' (expected csv or table)");
}

std::string EmitReport(const ExperimentSummary& summary, ReportFormat format) {
  return format == ReportFormat::kCsv ? EmitCsv(summary) : EmitTable(summary);
}

}  // namespace fairfuse
