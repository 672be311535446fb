// Copyright 2026 The fedsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// fedsim: generate synthetic cohorts, train the three regimes, compare runs.
//
//   fedsim gen-data --config cfg.json --out-dir data/
//   fedsim train --mode fadl --config cfg.json --data-dir data/ --out-dir runs/fadl
//   fedsim compare runs/*/run.json [--recompute --data-dir data/]
//   fedsim print-config [--config cfg.json]
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 training failure.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "experiment.h"
#include "fedsim/errors.h"

namespace {

namespace fs = std::filesystem;
namespace ex = fedsim::experiment;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;

struct CommonOptions {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::size_t> threads;
};

ex::ExperimentConfig ResolveConfig(const CommonOptions& opts) {
  ex::ExperimentConfig config = opts.config_path.empty()
                                    ? ex::ExperimentConfig{}
                                    : ex::LoadConfig(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  if (opts.threads) config.threads = *opts.threads;
  // Round-trip so command-line overrides go through the same validation.
  return ex::ConfigFromJson(ex::ConfigToJson(config));
}

void AddCommon(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Master seed (overrides the config)");
  cmd->add_option("--threads", opts.threads,
                  "Worker threads for per-silo training")
      ->check(CLI::PositiveNumber);
}

int Run(int argc, char** argv) {
  CLI::App app{"Federated learning simulator"};
  app.require_subcommand(1);

  CommonOptions gen_opts;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic cohort");
  AddCommon(gen, gen_opts);
  gen->add_option("--out-dir", gen_out, "Dataset directory")->required();

  CommonOptions train_opts;
  std::string mode_name;
  std::string train_data;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Train one regime and evaluate it");
  AddCommon(train, train_opts);
  train->add_option("--mode", mode_name, "central, fedavg or fadl")
      ->required();
  train->add_option("--data-dir", train_data, "Dataset directory")
      ->required();
  train->add_option("--out-dir", train_out, "Run directory")->required();

  std::vector<std::string> manifests;
  std::string compare_data;
  std::string compare_json;
  bool recompute = false;
  auto* compare = app.add_subcommand("compare", "Tabulate finished runs");
  compare->add_option("manifests", manifests, "run.json files")->required();
  compare->add_flag("--recompute", recompute,
                    "Re-score every persisted model and require identical "
                    "metrics (needs --data-dir)");
  compare->add_option("--data-dir", compare_data, "Dataset directory");
  compare->add_option("--out", compare_json, "Also write the table as JSON");

  CommonOptions print_opts;
  auto* print = app.add_subcommand("print-config",
                                   "Print the effective config as JSON");
  AddCommon(print, print_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*gen) {
    const auto config = ResolveConfig(gen_opts);
    const auto info = ex::GenerateDataset(config, gen_out);
    std::cout << "wrote " << info.silo_ids.size() << " silos to " << gen_out
              << "\nfingerprint " << info.fingerprint << "\n";
  } else if (*train) {
    const ex::Mode mode = ex::ParseMode(mode_name);
    const auto config = ResolveConfig(train_opts);
    const auto run = ex::Train(mode, config, train_data, train_out);
    for (const auto& w : run.split_warnings) {
      std::cerr << "warning: " << w << "\n";
    }
    std::cout << "run " << run.run_id << "\n"
              << fedsim::FormatEvalReport(run.pooled);
  } else if (*compare) {
    if (recompute && compare_data.empty()) {
      throw fedsim::ConfigError("--recompute needs --data-dir");
    }
    std::vector<fs::path> paths(manifests.begin(), manifests.end());
    std::optional<fs::path> recompute_from;
    if (recompute) recompute_from = compare_data;
    const auto table = ex::Compare(paths, recompute_from);
    std::cout << table.ToText();
    if (!compare_json.empty()) {
      std::ofstream out(compare_json, std::ios::trunc);
      out << table.ToJson().dump(2) << "\n";
      if (!out) throw std::runtime_error("cannot write " + compare_json);
    }
  } else if (*print) {
    std::cout << ex::ConfigToJson(ResolveConfig(print_opts)).dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const fedsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ex::TrainingError& e) {
    std::cerr << "training failed: " << e.what() << "\n";
    return kExitTraining;
  } catch (const fedsim::StaleDataError& e) {
    std::cerr << "stale data: " << e.what() << "\n";
    return kExitData;
  } catch (const fedsim::InvalidComparisonError& e) {
    std::cerr << "invalid comparison: " << e.what() << "\n";
    return kExitData;
  } catch (const fedsim::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTraining;
  }
}
