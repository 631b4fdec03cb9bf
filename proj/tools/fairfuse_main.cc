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

// Command-line driver: trains the income classifier under the requested
// mitigation plans and writes a CSV or table report.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairfuse/data.h"
#include "fairfuse/errors.h"
#include "fairfuse/pipeline.h"

namespace {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 1,
  kDataError = 2,
  kRuntimeError = 3,
};

struct CliConfig {
  std::vector<std::string> data_paths;
  std::vector<std::string> plans = {"all"};
  std::string seeds = "10";
  double repair_level = 1.0;
  double alpha = 0.1;
  double adversary_lr = 0.001;
  std::string sign = "subtract";
  std::string cost = "fnr";
  int epochs = 50;
  int batch = 128;
  double lr = 0.001;
  int jobs = 1;
  std::string out;
  std::string format = "csv";
  std::string model_input = "features";
  bool quiet = false;
};

// "n" means seeds 0..n-1; a comma-separated list is taken literally.
std::vector<std::uint64_t> ParseSeeds(const std::string& text) {
  auto parse_one = [&](std::string_view token) {
    std::uint64_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw std::invalid_argument("invalid seed value '" + std::string(token) + "'");
    }
    return value;
  };
  std::vector<std::uint64_t> seeds;
  if (text.find(',') == std::string::npos) {
    const std::uint64_t count = parse_one(text);
    if (count == 0) throw std::invalid_argument("--seeds count must be positive");
    for (std::uint64_t s = 0; s < count; ++s) seeds.push_back(s);
    return seeds;
  }
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view token = rest.substr(0, comma);
    if (!token.empty()) seeds.push_back(parse_one(token));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (seeds.empty()) throw std::invalid_argument("--seeds list is empty");
  return seeds;
}

std::vector<fairfuse::PlanFlags> ParsePlans(const std::vector<std::string>& specs) {
  std::vector<fairfuse::PlanFlags> flags;
  for (const std::string& spec : specs) {
    if (spec == "all") {
      for (auto f : fairfuse::AllPlanFlags()) flags.push_back(f);
    } else {
      flags.push_back(fairfuse::ParsePlanName(spec));
    }
  }
  return flags;
}

void WriteAtomically(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw fairfuse::DataError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw fairfuse::DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

int Run(const CliConfig& cli) {
  // Validate everything before loading data or training.
  const auto plan_flags = ParsePlans(cli.plans);
  const auto seeds = ParseSeeds(cli.seeds);
  const auto format = fairfuse::ParseReportFormat(cli.format);

  fairfuse::PlanSettings settings;
  settings.repair_level = cli.repair_level;
  settings.cost_mode = fairfuse::ParseCostMode(cli.cost);
  settings.adversarial.alpha = cli.alpha;
  settings.adversarial.adversary_learning_rate = cli.adversary_lr;
  if (cli.sign == "subtract") {
    settings.adversarial.sign = fairfuse::ProjectionSign::kSubtract;
  } else if (cli.sign == "add") {
    settings.adversarial.sign = fairfuse::ProjectionSign::kAddAsPrinted;
  } else {
    throw std::invalid_argument("--sign must be subtract or add");
  }
  settings.adversarial.Validate();
  if (!(cli.repair_level >= 0.0 && cli.repair_level <= 1.0)) {
    throw std::invalid_argument("--lambda must lie in [0, 1]");
  }

  fairfuse::ExperimentOptions options;
  options.train.epochs = cli.epochs;
  options.train.batch_size = cli.batch;
  options.train.learning_rate = cli.lr;
  options.train.Validate();
  options.input = fairfuse::ParseModelInput(cli.model_input);
  if (cli.jobs < 1) throw std::invalid_argument("--jobs must be at least 1");
  options.jobs = cli.jobs;

  std::vector<fairfuse::MitigationPlan> plans;
  for (auto f : plan_flags) plans.push_back(fairfuse::MakePlan(f, settings));

  std::vector<std::filesystem::path> paths(cli.data_paths.begin(),
                                           cli.data_paths.end());
  for (const auto& p : paths) {
    if (!std::filesystem::exists(p)) {
      throw fairfuse::DataError("data file not found: " + p.string());
    }
  }
  const fairfuse::Dataset data = fairfuse::LoadAdult(paths);

  fairfuse::RunLogger logger;
  if (!cli.quiet) {
    logger = [](const std::string& plan, std::uint64_t seed,
                const fairfuse::MetricsReport& r) {
      std::fprintf(stderr, "[%s] seed=%llu accuracy=%.4f spd=%.4f\n",
                   plan.c_str(), static_cast<unsigned long long>(seed),
                   r.accuracy, r.spd);
    };
  }
  // Arguments are valid at this point, so any failure inside a run is a
  // runtime error rather than a usage error.
  const auto summary = [&] {
    try {
      return fairfuse::RunExperiment(data, plans, seeds, options, logger);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(e.what());
    }
  }();
  const std::string report = fairfuse::EmitReport(summary, format);
  if (cli.out.empty()) {
    std::cout << report;
  } else {
    WriteAtomically(cli.out, report);
  }
  return kSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CliConfig cli;
  CLI::App app{
      "Train the Adult income classifier under pre-, in- and post-processing "
      "bias mitigation and report accuracy and group fairness metrics."};
  app.add_option("--data", cli.data_paths,
                 "Adult data files (adult.data and/or adult.test)")
      ->required()
      ->expected(1, 2);
  app.add_option("--plans", cli.plans,
                 "Plans to run: 'all', display names such as \"Pre + In\", or "
                 "compact tokens such as none, pre, in, post, pre,in,post")
      ->expected(1, -1)
      ->capture_default_str();
  app.add_option("--seeds", cli.seeds,
                 "Seed count n (seeds 0..n-1) or an explicit comma list, e.g. 3,7,")
      ->capture_default_str();
  app.add_option("--lambda", cli.repair_level, "Repair level in [0, 1]")
      ->capture_default_str();
  app.add_option("--alpha", cli.alpha, "Adversary weight alpha > 0")
      ->capture_default_str();
  app.add_option("--adv-lr", cli.adversary_lr, "Adversary learning rate")
      ->capture_default_str();
  app.add_option("--sign", cli.sign,
                 "Projection term sign: subtract or add")
      ->capture_default_str();
  app.add_option("--cost", cli.cost, "Post-processing cost: fnr, fpr or weighted")
      ->capture_default_str();
  app.add_option("--epochs", cli.epochs, "Training epochs")->capture_default_str();
  app.add_option("--batch", cli.batch, "Mini-batch size")->capture_default_str();
  app.add_option("--lr", cli.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--jobs", cli.jobs, "Worker threads")->capture_default_str();
  app.add_option("--out", cli.out, "Report path (stdout when omitted)");
  app.add_option("--format", cli.format, "Report format: csv or table")
      ->capture_default_str();
  app.add_option("--model-input", cli.model_input,
                 "Predictor inputs: features (sex excluded) or "
                 "features+protected (sex appended as an input column)")
      ->capture_default_str();
  app.add_flag("--quiet", cli.quiet, "Suppress the per-run log lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  }

  try {
    return Run(cli);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const fairfuse::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
}
