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

#include <cstring>

#include <gtest/gtest.h>

#include "fairfuse/random.h"

namespace fairfuse {
namespace {

using Bytes = std::vector<std::uint8_t>;
using Scores = std::vector<double>;

TEST(GeneralizedCostTest, HandExamples) {
  const Bytes y = {1, 0, 1, 0};
  const Scores perfect = {1, 0, 1, 0};
  EXPECT_EQ(GeneralizedCost(perfect, y, CostMode::kFalseNegative), 0.0);
  EXPECT_EQ(GeneralizedCost(perfect, y, CostMode::kFalsePositive), 0.0);
  EXPECT_EQ(GeneralizedCost(Scores(4, 0.5), y, CostMode::kFalseNegative), 0.5);
  EXPECT_NEAR(GeneralizedCost(Scores{0.9, 0.7}, Bytes{1, 1}, CostMode::kFalseNegative),
              0.2, 1e-15);
  // Weighted: 0.5 * mean(1 - {0.9}) + 0.5 * mean({0.4}).
  EXPECT_NEAR(GeneralizedCost(Scores{0.9, 0.4}, Bytes{1, 0}, CostMode::kWeighted),
              0.5 * 0.1 + 0.5 * 0.4, 1e-15);
}

TEST(GeneralizedCostTest, EmptyConditioningSet) {
  EXPECT_THROW(GeneralizedCost(Scores{0.3}, Bytes{0}, CostMode::kFalseNegative),
               std::invalid_argument);
  EXPECT_THROW(GeneralizedCost(Scores{0.3}, Bytes{1}, CostMode::kFalsePositive),
               std::invalid_argument);
  EXPECT_THROW(GeneralizedCost(Scores{0.3}, Bytes{1}, CostMode::kWeighted),
               std::invalid_argument);
}

TEST(CostModeTest, Parse) {
  EXPECT_EQ(ParseCostMode("fnr"), CostMode::kFalseNegative);
  EXPECT_EQ(ParseCostMode("fpr"), CostMode::kFalsePositive);
  EXPECT_EQ(ParseCostMode("weighted"), CostMode::kWeighted);
  EXPECT_EQ(CostModeName(CostMode::kFalsePositive), "fpr");
  EXPECT_THROW(ParseCostMode("tpr"), std::invalid_argument);
}

TEST(FitCalEqTest, EqualCostsGiveIdentity) {
  const Scores s = {0.8, 0.2, 0.8, 0.2};
  const Bytes y = {1, 0, 1, 0};
  const Bytes g = {0, 0, 1, 1};
  const CalEqAdjustment adj = FitCalEq(s, y, g);
  EXPECT_EQ(adj.mixing_rate, 0.0);
  EXPECT_EQ(ApplyCalEq(adj, s, g, 1), s);
}

TEST(FitCalEqTest, ExactHalfWithDyadicValues) {
  // Female positives cost 0.375, male positives cost 0.25 -> male is the
  // target; male base rate 0.5 -> trivial cost 0.5; r = 0.125 / 0.25.
  const Scores s = {0.625, 0.625, 0.1, 0.75, 0.75, 0.3, 0.2};
  const Bytes y = {1, 1, 0, 1, 1, 0, 0};
  const Bytes g = {0, 0, 0, 1, 1, 1, 1};
  const CalEqAdjustment adj = FitCalEq(s, y, g);
  EXPECT_EQ(adj.target_group, Group::kMale);
  EXPECT_EQ(adj.base_rate, 0.5);
  EXPECT_EQ(adj.target_cost, 0.25);
  EXPECT_EQ(adj.other_cost, 0.375);
  EXPECT_EQ(adj.trivial_cost, 0.5);
  EXPECT_EQ(adj.mixing_rate, 0.5);
}

TEST(FitCalEqTest, HandSolvedMixingRate) {
  // Female (target): positives {0.9, 0.7} -> 0.2, base rate 0.5 -> 0.5.
  // Male: positives {0.65, 0.65} -> 0.35. r = 0.15 / 0.3.
  const Scores s = {0.9, 0.7, 0.1, 0.2, 0.65, 0.65, 0.4};
  const Bytes y = {1, 1, 0, 0, 1, 1, 0};
  const Bytes g = {0, 0, 0, 0, 1, 1, 1};
  const CalEqAdjustment adj = FitCalEq(s, y, g);
  EXPECT_EQ(adj.target_group, Group::kFemale);
  EXPECT_NEAR(adj.target_cost, 0.2, 1e-15);
  EXPECT_NEAR(adj.other_cost, 0.35, 1e-15);
  EXPECT_NEAR(adj.trivial_cost, 0.5, 1e-15);
  EXPECT_NEAR(adj.mixing_rate, 0.5, 1e-12);
  EXPECT_NEAR(adj.ExpectedTargetCost(), adj.other_cost, 1e-9);
}

TEST(FitCalEqTest, ClampsWhenTrivialCannotReachParity) {
  const Scores s = {0.05, 0.1, 0.9, 0.2};
  const Bytes y = {1, 0, 1, 0};
  const Bytes g = {0, 0, 1, 1};
  const CalEqAdjustment adj = FitCalEq(s, y, g);
  EXPECT_EQ(adj.target_group, Group::kMale);
  EXPECT_EQ(adj.mixing_rate, 1.0);
  // Expected cost stops at the trivial predictor's cost.
  EXPECT_EQ(adj.ExpectedTargetCost(), adj.trivial_cost);
  const Scores out = ApplyCalEq(adj, s, g, 3);
  EXPECT_EQ(out[2], 0.5);
  EXPECT_EQ(out[3], 0.5);
}

TEST(FitCalEqTest, Errors) {
  EXPECT_THROW(FitCalEq(Scores{0.5, 0.5}, Bytes{0, 1}, Bytes{0, 1}), std::invalid_argument);
  EXPECT_THROW(FitCalEq(Scores{0.5}, Bytes{0, 1}, Bytes{0, 1}), std::invalid_argument);
}

struct Validation {
  Scores scores;
  Bytes labels, groups;
};

// Female scores are sharper than male ones, so the groups' costs differ.
Validation SyntheticValidation(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Validation v;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t g = i % 2;
    const std::uint8_t y = rng.Bernoulli(g ? 0.45 : 0.35);
    const double spread = g ? 0.25 : 0.4;
    const double center = y ? 0.5 + spread : 0.5 - spread;
    v.scores.push_back(std::clamp(center + 0.1 * rng.Normal(), 0.0, 1.0));
    v.labels.push_back(y);
    v.groups.push_back(g);
  }
  return v;
}

TEST(ApplyCalEqTest, NonTargetRowsAreBitwiseUnchanged) {
  const Validation v = SyntheticValidation(2000, 1);
  const CalEqAdjustment adj = FitCalEq(v.scores, v.labels, v.groups);
  ASSERT_GT(adj.mixing_rate, 0.0);
  const Scores out = ApplyCalEq(adj, v.scores, v.groups, 7);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (v.groups[i] != static_cast<std::uint8_t>(adj.target_group)) {
      EXPECT_EQ(std::memcmp(&out[i], &v.scores[i], sizeof(double)), 0);
    } else {
      changed += out[i] != v.scores[i];
    }
  }
  EXPECT_GT(changed, 0u);
  EXPECT_EQ(out, ApplyCalEq(adj, v.scores, v.groups, 7));
}

TEST(ApplyCalEqTest, ExtremeRates) {
  const Validation v = SyntheticValidation(200, 2);
  CalEqAdjustment adj = FitCalEq(v.scores, v.labels, v.groups);
  adj.mixing_rate = 0.0;
  EXPECT_EQ(ApplyCalEq(adj, v.scores, v.groups, 1), v.scores);
  adj.mixing_rate = 1.0;
  const Scores all = ApplyCalEq(adj, v.scores, v.groups, 1);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (v.groups[i] == static_cast<std::uint8_t>(adj.target_group)) {
      EXPECT_EQ(all[i], adj.base_rate);
    }
  }
}

TEST(ApplyCalEqTest, AnalyticAndSampledParity) {
  // About 2,000+ positives per group.
  const Validation v = SyntheticValidation(12000, 3);
  const CalEqAdjustment adj = FitCalEq(v.scores, v.labels, v.groups);
  ASSERT_GT(adj.mixing_rate, 0.0);
  ASSERT_LT(adj.mixing_rate, 1.0);
  EXPECT_NEAR(adj.ExpectedTargetCost(), adj.other_cost, 1e-9);

  const auto target = static_cast<std::uint8_t>(adj.target_group);
  Scores ts;
  Bytes ty;
  for (std::size_t i = 0; i < v.scores.size(); ++i) {
    if (v.groups[i] == target) {
      ty.push_back(v.labels[i]);
    }
  }
  ASSERT_GE(std::count(ty.begin(), ty.end(), 1), 2000);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Scores out = ApplyCalEq(adj, v.scores, v.groups, seed);
    ts.clear();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (v.groups[i] == target) ts.push_back(out[i]);
    }
    EXPECT_NEAR(GeneralizedCost(ts, ty, CostMode::kFalseNegative),
                adj.ExpectedTargetCost(), 0.03);
  }
}

TEST(ApplyCalEqTest, ExpectedCostLinearInRate) {
  const Validation v = SyntheticValidation(1000, 4);
  CalEqAdjustment adj = FitCalEq(v.scores, v.labels, v.groups);
  double prev = adj.target_cost;
  for (int k = 0; k <= 10; ++k) {
    adj.mixing_rate = k / 10.0;
    const double cost = adj.ExpectedTargetCost();
    EXPECT_NEAR(cost, adj.target_cost + adj.mixing_rate * (adj.trivial_cost - adj.target_cost),
                1e-15);
    EXPECT_GE(cost, prev - 1e-15);
    prev = cost;
  }
}

}  // namespace
}  // namespace fairfuse
