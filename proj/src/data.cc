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

#include "fairfuse/data.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string_view>

#include "fairfuse/errors.h"
#include "fairfuse/random.h"

namespace fairfuse {
namespace {

constexpr std::size_t kAdultColumns = 15;
constexpr std::size_t kAgeColumn = 0;
constexpr std::size_t kEducationNumColumn = 4;
constexpr std::size_t kSexColumn = 9;
constexpr std::size_t kCapitalGainColumn = 10;
constexpr std::size_t kCapitalLossColumn = 11;
constexpr std::size_t kHoursColumn = 12;
constexpr std::size_t kIncomeColumn = 14;

constexpr std::array<std::size_t, kNumFeatures> kFeatureColumns = {
    kAgeColumn, kEducationNumColumn, kCapitalGainColumn, kCapitalLossColumn,
    kHoursColumn};

std::string_view Trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(Trim(line.substr(start)));
      break;
    }
    fields.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::string Where(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

double ParseNumber(std::string_view token, const std::filesystem::path& path,
                   std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      !std::isfinite(value)) {
    throw DataError(Where(path, line_no) + ": invalid numeric field '" +
                    std::string(token) + "'");
  }
  return value;
}

std::uint8_t ParseSex(std::string_view token, const std::filesystem::path& path,
                      std::size_t line_no) {
  if (!token.empty() && token.back() == '.') token.remove_suffix(1);
  if (token == "Male") return static_cast<std::uint8_t>(Group::kMale);
  if (token == "Female") return static_cast<std::uint8_t>(Group::kFemale);
  throw DataError(Where(path, line_no) + ": unrecognized sex token '" +
                  std::string(token) + "'");
}

std::uint8_t ParseIncome(std::string_view token,
                         const std::filesystem::path& path,
                         std::size_t line_no) {
  // adult.test labels carry a trailing period.
  if (!token.empty() && token.back() == '.') token.remove_suffix(1);
  if (token == ">50K") return 1;
  if (token == "<=50K") return 0;
  throw DataError(Where(path, line_no) + ": unrecognized income token '" +
                  std::string(token) + "'");
}

}  // namespace

Dataset Dataset::Subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.groups.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
    out.groups.push_back(groups[rows[i]]);
  }
  out.feature_names = feature_names;
  return out;
}

void Dataset::Validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw std::invalid_argument("dataset is empty");
  if (groups.size() != n || static_cast<std::size_t>(features.rows()) != n) {
    throw std::invalid_argument("dataset columns have mismatched row counts");
  }
  if (feature_names.size() != static_cast<std::size_t>(features.cols())) {
    throw std::invalid_argument("feature_names does not match feature columns");
  }
  bool has_female = false;
  bool has_male = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 1) throw std::invalid_argument("label outside {0,1}");
    if (groups[i] > 1) throw std::invalid_argument("group outside {0,1}");
    (groups[i] == 1 ? has_male : has_female) = true;
  }
  if (!has_female || !has_male) {
    throw std::invalid_argument("both protected groups must be present");
  }
}

Dataset LoadAdult(std::span<const std::filesystem::path> paths) {
  if (paths.empty()) throw DataError("no Adult data files given");
  std::vector<std::array<double, kNumFeatures>> rows;
  Dataset out;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string_view trimmed = Trim(line);
      if (trimmed.empty() || trimmed.front() == '|') continue;
      const auto fields = SplitFields(trimmed);
      if (fields.size() != kAdultColumns) {
        throw DataError(Where(path, line_no) + ": expected 15 fields, found " +
                        std::to_string(fields.size()));
      }
      bool missing = fields[kSexColumn] == "?" || fields[kIncomeColumn] == "?";
      for (std::size_t column : kFeatureColumns) missing |= fields[column] == "?";
      if (missing) continue;

      std::array<double, kNumFeatures> row{};
      for (std::size_t j = 0; j < kNumFeatures; ++j) {
        row[j] = ParseNumber(fields[kFeatureColumns[j]], path, line_no);
      }
      out.groups.push_back(ParseSex(fields[kSexColumn], path, line_no));
      out.labels.push_back(ParseIncome(fields[kIncomeColumn], path, line_no));
      rows.push_back(row);
    }
    if (in.bad()) throw DataError("error while reading " + path.string());
  }

  out.features.resize(static_cast<Eigen::Index>(rows.size()), kNumFeatures);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  out.feature_names.assign(kAdultFeatureNames.begin(), kAdultFeatureNames.end());
  try {
    out.Validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("loaded data is unusable: ") + e.what());
  }
  return out;
}

Splits SplitDataset(const Dataset& data, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 20) {
    throw std::invalid_argument("need at least 20 rows to split, got " +
                                std::to_string(n));
  }
  const std::vector<std::size_t> order = Permutation(n, seed);
  const std::size_t n_train = n * 70 / 100;
  const std::size_t n_test = n * 15 / 100;

  Splits out;
  out.seed = seed;
  out.train_rows.assign(order.begin(), order.begin() + n_train);
  out.test_rows.assign(order.begin() + n_train,
                       order.begin() + n_train + n_test);
  out.validation_rows.assign(order.begin() + n_train + n_test, order.end());
  out.train = data.Subset(out.train_rows);
  out.test = data.Subset(out.test_rows);
  out.validation = data.Subset(out.validation_rows);
  return out;
}

Normalizer Normalizer::Fit(const Dataset& train) {
  if (train.size() == 0) throw std::invalid_argument("cannot fit on empty data");
  const Eigen::MatrixXd& x = train.features;
  Normalizer nz;
  nz.mean = x.colwise().mean().transpose();
  nz.stddev.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var =
        (x.col(j).array() - nz.mean(j)).square().sum() / static_cast<double>(x.rows());
    const double sd = std::sqrt(var);
    nz.stddev(j) = sd > 0.0 ? sd : 1.0;
  }
  return nz;
}

Eigen::MatrixXd Normalizer::Apply(const Eigen::MatrixXd& features) const {
  if (features.cols() != mean.size()) {
    throw std::invalid_argument("normalizer feature count mismatch");
  }
  Eigen::MatrixXd z(features.rows(), features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    z.col(j) = (features.col(j).array() - mean(j)) / stddev(j);
  }
  return z;
}

Dataset Normalizer::Apply(const Dataset& data) const {
  Dataset out = data;
  out.features = Apply(data.features);
  return out;
}

}  // namespace fairfuse
