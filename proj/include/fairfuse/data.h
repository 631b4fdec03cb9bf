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

#ifndef FAIRFUSE_DATA_H_
#define FAIRFUSE_DATA_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fairfuse {

inline constexpr std::size_t kNumFeatures = 5;

// Feature columns in order. Sex is the protected attribute and is never a
// feature column.
inline const std::array<std::string, kNumFeatures> kAdultFeatureNames = {
    "age", "education-num", "capital-gain", "capital-loss", "hours-per-week"};

// Protected attribute encoding: 1 is male (privileged), 0 is female.
enum class Group : std::uint8_t { kFemale = 0, kMale = 1 };

// Feature matrix with binary labels and the binary protected attribute.
struct Dataset {
  Eigen::MatrixXd features;           // n x kNumFeatures
  std::vector<std::uint8_t> labels;   // 1 <=> income >50K
  std::vector<std::uint8_t> groups;   // see Group
  std::vector<std::string> feature_names;

  std::size_t size() const { return labels.size(); }

  // Rows selected by index, in the given order.
  Dataset Subset(std::span<const std::size_t> rows) const;

  // Throws std::invalid_argument when an invariant does not hold: equal
  // non-zero row counts, {0,1} labels and groups, both groups present.
  void Validate() const;

  bool operator==(const Dataset&) const = default;
};

// Reads UCI Adult comma-separated files (adult.data / adult.test layout) and
// concatenates them in argument order. Rows with a missing value ("?") in any
// used column are dropped. Blank lines and the "|1x3 Cross validator" header
// of adult.test are skipped. Throws DataError on unreadable files, rows that
// do not have 15 fields, or unrecognized sex/income tokens.
Dataset LoadAdult(std::span<const std::filesystem::path> paths);

struct Splits {
  Dataset train;
  Dataset test;
  Dataset validation;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::vector<std::size_t> validation_rows;
  std::uint64_t seed = 0;
};

// Seeded 70/15/15 partition: rows are permuted, then train takes
// floor(0.70 n), test floor(0.15 n) and validation the remainder.
// Requires n >= 20.
Splits SplitDataset(const Dataset& data, std::uint64_t seed);

// Per-column z-scoring with train statistics. Standard deviation uses the
// population (1/n) form; constant columns get sigma = 1.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  static Normalizer Fit(const Dataset& train);
  Dataset Apply(const Dataset& data) const;
  Eigen::MatrixXd Apply(const Eigen::MatrixXd& features) const;
};

}  // namespace fairfuse

#endif  // FAIRFUSE_DATA_H_
