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

#include <sstream>

#include <gtest/gtest.h>

#include "test_util.h"

namespace fairfuse {
namespace {

TrainConfig FastTrain() {
  TrainConfig cfg;
  cfg.epochs = 2;
  return cfg;
}

const Dataset& SmallData() {
  static const Dataset data = testing::SyntheticDataset(800, 11);
  return data;
}

std::vector<MitigationPlan> AllPlans() {
  std::vector<MitigationPlan> plans;
  for (PlanFlags flags : AllPlanFlags()) plans.push_back(MakePlan(flags));
  return plans;
}

TEST(PlanTest, NamesAndTokens) {
  std::vector<std::string> names;
  for (PlanFlags flags : AllPlanFlags()) names.push_back(PlanName(flags));
  EXPECT_EQ(names, (std::vector<std::string>{"None", "Pre", "In", "Post", "Pre + In",
                                             "Pre + Post", "In + Post",
                                             "Pre + In + Post"}));
  EXPECT_EQ(PlanToken({true, false, true}), "pre,post");
  EXPECT_EQ(PlanToken({}), "none");
  for (PlanFlags flags : AllPlanFlags()) {
    EXPECT_EQ(ParsePlanName(PlanName(flags)), flags);
    EXPECT_EQ(ParsePlanName(PlanToken(flags)), flags);
  }
  EXPECT_EQ(ParsePlanName("pre + in + POST"), (PlanFlags{true, true, true}));
  try {
    ParsePlanName("Nope");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("Nope"), std::string::npos);
  }
  const MitigationPlan plan = MakePlan({true, false, true});
  EXPECT_EQ(plan.Name(), "Pre + Post");
  EXPECT_EQ(*plan.repair_level, 1.0);
  EXPECT_EQ(*plan.post, CostMode::kFalseNegative);
  EXPECT_FALSE(plan.adversarial.has_value());
}

TEST(ModelInputTest, ParseAndAppend) {
  EXPECT_EQ(ParseModelInput("features"), ModelInput::kFeaturesOnly);
  EXPECT_EQ(ParseModelInput("features+protected"), ModelInput::kFeaturesAndProtected);
  EXPECT_THROW(ParseModelInput("sex"), std::invalid_argument);
  const Dataset d = testing::SyntheticDataset(30, 1);
  const Dataset aware = WithProtectedInput(d);
  ASSERT_EQ(aware.features.cols(), 6);
  EXPECT_EQ(aware.feature_names.back(), "sex");
  EXPECT_EQ(aware.features.leftCols(5), d.features);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(aware.features(static_cast<Eigen::Index>(i), 5), d.groups[i]);
  }
}

TEST(RunOnceTest, NonePlanIsPlainComposition) {
  const std::uint64_t seed = 4;
  const Dataset& data = SmallData();
  const MetricsReport report = RunOnce(data, MakePlan({}), seed, FastTrain());

  const Splits splits = SplitDataset(data, seed);
  const Normalizer nz = Normalizer::Fit(splits.train);
  TrainConfig cfg = FastTrain();
  cfg.seed = seed;
  const MlpParams params = TrainBaseline(nz.Apply(splits.train), cfg);
  const auto predictions =
      ThresholdScores(PredictProbabilities(params, nz.Apply(splits.test.features)));
  EXPECT_EQ(report, FairnessReport(splits.test.labels, predictions, splits.test.groups));
}

TEST(RunOnceTest, Deterministic) {
  const MitigationPlan plan = MakePlan({true, true, true});
  EXPECT_EQ(RunOnce(SmallData(), plan, 2, FastTrain()),
            RunOnce(SmallData(), plan, 2, FastTrain()));
  EXPECT_EQ(RunOnce(SmallData(), plan, 2, FastTrain(), ModelInput::kFeaturesAndProtected),
            RunOnce(SmallData(), plan, 2, FastTrain(), ModelInput::kFeaturesAndProtected));
}

TEST(EvaluateScoresTest, EqualValidationCostsLeaveTestScores) {
  ScoredSplits scored;
  scored.validation_scores = Eigen::VectorXd(4);
  scored.validation_scores << 0.8, 0.2, 0.8, 0.2;
  scored.validation_labels = {1, 0, 1, 0};
  scored.validation_groups = {0, 0, 1, 1};
  scored.test_scores = Eigen::VectorXd(6);
  scored.test_scores << 0.9, 0.4, 0.6, 0.1, 0.7, 0.3;
  scored.test_labels = {1, 0, 0, 0, 1, 1};
  scored.test_groups = {0, 0, 0, 1, 1, 1};
  EXPECT_EQ(EvaluateScores(scored, CostMode::kFalseNegative, 1),
            EvaluateScores(scored, std::nullopt, 1));
}

TEST(SummarizeTest, Aggregation) {
  const std::vector<std::optional<double>> one = {0.25};
  const auto s1 = Summarize(one);
  ASSERT_TRUE(s1);
  EXPECT_EQ(s1->stddev, 0.0);
  EXPECT_EQ(s1->mean, 0.25);

  const std::vector<std::optional<double>> values = {1.0, std::nullopt, 2.0, 4.0};
  const auto s = Summarize(values);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->runs, 3u);
  EXPECT_NEAR(s->mean, 7.0 / 3.0, 1e-12);
  // Sample variance: ((4/3)^2 + (1/3)^2 + (5/3)^2) / 2 = 7/3.
  EXPECT_NEAR(s->stddev, std::sqrt(7.0 / 3.0), 1e-12);
  EXPECT_EQ(s->min, 1.0);
  EXPECT_EQ(s->max, 4.0);

  const std::vector<std::optional<double>> none = {std::nullopt};
  EXPECT_FALSE(Summarize(none));
}

class ExperimentTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto plans = AllPlans();
    ExperimentOptions options;
    options.train = FastTrain();
    serial_ = new ExperimentSummary(RunExperiment(SmallData(), plans, kSeeds, options));
    options.jobs = 3;
    parallel_ = new ExperimentSummary(RunExperiment(SmallData(), plans, kSeeds, options));
  }
  static void TearDownTestSuite() {
    delete serial_;
    delete parallel_;
  }
  static constexpr std::array<std::uint64_t, 3> kSeeds = {0, 1, 5};
  static ExperimentSummary* serial_;
  static ExperimentSummary* parallel_;
};

ExperimentSummary* ExperimentTest::serial_ = nullptr;
ExperimentSummary* ExperimentTest::parallel_ = nullptr;

TEST_F(ExperimentTest, EveryPlanAndSeedMatchesRunOnce) {
  ASSERT_EQ(serial_->plans.size(), 8u);
  for (std::size_t p = 0; p < 8; ++p) {
    const PlanSummary& plan = serial_->plans[p];
    EXPECT_EQ(plan.flags, AllPlanFlags()[p]);
    ASSERT_EQ(plan.runs.size(), kSeeds.size());
    for (std::size_t s = 0; s < kSeeds.size(); ++s) {
      EXPECT_EQ(plan.runs[s], RunOnce(SmallData(), MakePlan(plan.flags), kSeeds[s], FastTrain()))
          << plan.name << " seed " << kSeeds[s];
    }
  }
}

TEST_F(ExperimentTest, ThreadCountDoesNotChangeResults) {
  EXPECT_EQ(EmitReport(*serial_, ReportFormat::kCsv),
            EmitReport(*parallel_, ReportFormat::kCsv));
  for (std::size_t p = 0; p < 8; ++p) {
    EXPECT_EQ(serial_->plans[p].runs, parallel_->plans[p].runs);
  }
}

TEST_F(ExperimentTest, SummariesAggregateRuns) {
  for (const PlanSummary& plan : serial_->plans) {
    double sum = 0.0, lo = 1.0, hi = 0.0;
    for (const MetricsReport& r : plan.runs) {
      sum += r.accuracy;
      lo = std::min(lo, r.accuracy);
      hi = std::max(hi, r.accuracy);
    }
    ASSERT_TRUE(plan.accuracy);
    EXPECT_NEAR(plan.accuracy->mean, sum / 3.0, 1e-12);
    EXPECT_GE(plan.accuracy->mean, lo);
    EXPECT_LE(plan.accuracy->mean, hi);
    EXPECT_EQ(plan.accuracy->runs, 3u);
    ASSERT_TRUE(plan.spd);
    EXPECT_GE(plan.spd->mean, plan.spd->min);
    EXPECT_LE(plan.spd->mean, plan.spd->max);
  }
  EXPECT_EQ(serial_->seeds, std::vector<std::uint64_t>(kSeeds.begin(), kSeeds.end()));
  EXPECT_EQ(&serial_->Find({false, true, false}), &serial_->plans[2]);
}

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

TEST_F(ExperimentTest, CsvReportParsesBack) {
  const std::string csv = EmitReport(*serial_, ReportFormat::kCsv);
  std::stringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "plan,runs,accuracy_mean,accuracy_std,spd_mean,spd_std,eod_mean,eod_std,"
            "aod_mean,aod_std,di_mean,di_std,spd_fair,eod_fair,aod_fair,di_fair");
  for (const PlanSummary& plan : serial_->plans) {
    ASSERT_TRUE(std::getline(in, line));
    const auto cells = SplitLine(line);
    ASSERT_EQ(cells.size(), 16u);
    EXPECT_EQ(cells[0], plan.name);
    EXPECT_EQ(cells[1], "3");
    EXPECT_NEAR(std::stod(cells[2]), plan.accuracy->mean, 1e-6);
    EXPECT_NEAR(std::stod(cells[3]), plan.accuracy->stddev, 1e-6);
    EXPECT_NEAR(std::stod(cells[4]), plan.spd->mean, 1e-6);
    EXPECT_EQ(cells[12], IsFairDifference(plan.spd->mean) ? "yes" : "no");
  }
  EXPECT_FALSE(std::getline(in, line));
}

TEST_F(ExperimentTest, TableReportListsPlansInOrder) {
  const std::string table = EmitReport(*serial_, ReportFormat::kTable);
  std::size_t pos = table.find("model input features");
  ASSERT_NE(pos, std::string::npos);
  for (PlanFlags flags : AllPlanFlags()) {
    const std::string row = "\n" + PlanName(flags) + " ";
    const std::size_t at = table.find(row, pos);
    ASSERT_NE(at, std::string::npos) << PlanName(flags);
    pos = at + 1;
  }
}

TEST(ReportTest, SingleRunAndUndefinedCells) {
  ExperimentSummary summary;
  summary.seeds = {0};
  PlanSummary plan;
  plan.flags = {};
  plan.name = "None";
  MetricsReport r;
  r.accuracy = 0.8;
  r.spd = -0.05;
  plan.runs = {r};
  const std::vector<std::optional<double>> acc = {0.8}, spd = {-0.05}, undefined = {std::nullopt};
  plan.accuracy = Summarize(acc);
  plan.spd = Summarize(spd);
  plan.eod = Summarize(undefined);
  plan.aod = Summarize(undefined);
  plan.di = Summarize(undefined);
  summary.plans = {plan};
  EXPECT_EQ(EmitReport(summary, ReportFormat::kCsv),
            "plan,runs,accuracy_mean,accuracy_std,spd_mean,spd_std,eod_mean,eod_std,"
            "aod_mean,aod_std,di_mean,di_std,spd_fair,eod_fair,aod_fair,di_fair\n"
            "None,1,0.800000,0.000000,-0.050000,0.000000,NA,NA,NA,NA,NA,NA,yes,NA,NA,NA\n");
  const std::string table = EmitReport(summary, ReportFormat::kTable);
  EXPECT_NE(table.find("0.8000±0.0000"), std::string::npos);
  EXPECT_NE(table.find("-0.0500±0.0000"), std::string::npos);
  EXPECT_THROW(ParseReportFormat("json"), std::invalid_argument);
}

TEST(RunExperimentTest, FailureNamesPlanAndSeed) {
  // No female positives: calibrated equalized odds cannot be fitted, so only
  // the post-processing plan fails.
  Dataset data = testing::SyntheticDataset(400, 12);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.groups[i] == 0) data.labels[i] = 0;
  }
  const std::vector<MitigationPlan> plans = {MakePlan({}), MakePlan({false, false, true})};
  const std::vector<std::uint64_t> seeds = {7, 8};
  ExperimentOptions options;
  options.train = FastTrain();
  options.train.epochs = 1;
  try {
    RunExperiment(data, plans, seeds, options);
    FAIL() << "expected failure";
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("plan 'Post'"), std::string::npos) << what;
    EXPECT_NE(what.find("seed 7"), std::string::npos) << what;
  }
}

TEST(RunExperimentTest, RejectsBadArguments) {
  const std::vector<MitigationPlan> twice = {MakePlan({}), MakePlan({})};
  const std::vector<std::uint64_t> seeds = {0};
  EXPECT_THROW(RunExperiment(SmallData(), twice, seeds), std::invalid_argument);
  const std::vector<MitigationPlan> one = {MakePlan({})};
  EXPECT_THROW(RunExperiment(SmallData(), one, std::vector<std::uint64_t>{}),
               std::invalid_argument);
  ExperimentOptions options;
  options.jobs = 0;
  EXPECT_THROW(RunExperiment(SmallData(), one, seeds, options), std::invalid_argument);
}

TEST(RunExperimentTest, SortsPlansAndLogsEveryRun) {
  const std::vector<MitigationPlan> plans = {MakePlan({false, false, true}), MakePlan({})};
  const std::vector<std::uint64_t> seeds = {3};
  ExperimentOptions options;
  options.train = FastTrain();
  std::vector<std::string> logged;
  const ExperimentSummary summary = RunExperiment(
      SmallData(), plans, seeds, options,
      [&](const std::string& plan, std::uint64_t seed, const MetricsReport&) {
        logged.push_back(plan + "/" + std::to_string(seed));
      });
  ASSERT_EQ(summary.plans.size(), 2u);
  EXPECT_EQ(summary.plans[0].name, "None");
  EXPECT_EQ(summary.plans[1].name, "Post");
  EXPECT_EQ(logged.size(), 2u);
}

TEST(RunOnceTest, TestLabelsAndGroupsAreNotMutated) {
  const Dataset& data = SmallData();
  const Dataset copy = data;
  RunOnce(data, MakePlan({true, true, true}), 1, FastTrain());
  EXPECT_EQ(data, copy);
  const MetricsReport r = RunOnce(data, MakePlan({true, true, true}), 1, FastTrain());
  const Splits splits = SplitDataset(data, 1);
  EXPECT_EQ(r.rates.female.count() + r.rates.male.count(), splits.test.size());
  EXPECT_EQ(r.rates.female.positives() + r.rates.male.positives(),
            static_cast<std::size_t>(std::count(splits.test.labels.begin(),
                                                splits.test.labels.end(), 1)));
}

}  // namespace
}  // namespace fairfuse
