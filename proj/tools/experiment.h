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

#ifndef FEDSIM_TOOLS_EXPERIMENT_H_
#define FEDSIM_TOOLS_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fedsim/data.h"
#include "fedsim/metrics.h"

namespace fedsim::experiment {

// Raised when a regime fails after its inputs were loaded successfully.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a run needs. Defaults are the published configuration:
// 58 silos, 1400 binary features, a 500-100-1 network, lambda 0.01,
// batch 100, 30 centralized epochs, 20 x 5 federated, 10 x 5 + 50 FADL.
struct ExperimentConfig {
  uint64_t seed = 1;  // master seed for initialization and shuffling
  std::size_t threads = 1;

  GenSpec data;
  SplitRatios split;
  uint64_t split_seed = 7;

  std::vector<std::size_t> hidden_dims{500, 100};

  double learning_rate = 0.01;
  std::size_t batch_size = 100;
  double lambda = 0.01;

  std::size_t central_epochs = 30;

  std::size_t fedavg_cycles = 20;
  std::size_t fedavg_local_epochs = 5;

  std::size_t fadl_stage1_cycles = 10;
  std::size_t fadl_stage1_local_epochs = 5;
  std::size_t fadl_stage2_epochs = 50;
  // Stage-1 master seed; unset means `seed`.
  std::optional<uint64_t> fadl_seed;
  bool fadl_fallback_to_shared = false;
};

// Missing keys keep their defaults; unknown keys, wrong types and invalid
// values throw ConfigError.
ExperimentConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::json ConfigToJson(const ExperimentConfig& config);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

enum class Mode { kCentral, kFedAvg, kFadl };
Mode ParseMode(std::string_view name);  // "central" | "fedavg" | "fadl"
std::string ModeName(Mode mode);

// ---- gen-data --------------------------------------------------------------

struct DatasetInfo {
  std::string fingerprint;  // 16 hex digits
  std::size_t feature_dim = 0;
  std::vector<std::string> silo_ids;
  std::vector<std::filesystem::path> files;
};

// Writes <out_dir>/<silo_id>.csv per silo and <out_dir>/dataset.json.
DatasetInfo GenerateDataset(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir);

// Content hash over the silo files listed in the manifest. Throws ParseError
// if the manifest is missing or malformed.
std::string ComputeFingerprint(const std::filesystem::path& data_dir);

// Loads and verifies a dataset directory: StaleDataError if the files no
// longer hash to the recorded fingerprint.
struct LoadedDataset {
  DatasetInfo info;
  std::vector<SiloDataset> silos;  // ascending id, unsplit
};
LoadedDataset LoadDataset(const std::filesystem::path& data_dir);

// ---- train -----------------------------------------------------------------

struct SiloEval {
  std::string silo_id;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<double> auc_roc;  // unset when the silo's test split is
  std::optional<double> auc_pr;   // single-class
};

struct RunManifest {
  std::string run_id;
  Mode mode = Mode::kCentral;
  nlohmann::json config;
  std::string fingerprint;
  EvalReport pooled;
  std::vector<SiloEval> per_silo;
  std::vector<std::string> split_warnings;
  uint64_t cross_silo_accesses = 0;
  double duration_seconds = 0.0;
  std::filesystem::path run_dir;
};

// Trains `mode` on the dataset in data_dir and writes to out_dir:
//   model.fadl (central, fedavg) or ensemble/ (fadl)
//   trace.jsonl (fedavg, and fadl's stage 1)
//   metrics.txt    pooled test EvalReport
//   per_silo.tsv   per-silo test metrics
//   run.json       the manifest
// Everything except run.json's duration is a deterministic function of the
// config, the seed and the dataset (the thread count does not matter).
RunManifest Train(Mode mode, const ExperimentConfig& config,
                  const std::filesystem::path& data_dir,
                  const std::filesystem::path& out_dir);

RunManifest ReadRunManifest(const std::filesystem::path& run_json);

// Re-scores the persisted model(s) of a run against its dataset's test split.
struct Evaluation {
  EvalReport pooled;
  std::vector<SiloEval> per_silo;
};
Evaluation EvaluateRun(const RunManifest& run,
                       const std::filesystem::path& data_dir);

// ---- compare ---------------------------------------------------------------

struct ComparisonRow {
  std::string regime;
  std::string run_id;
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  std::optional<double> delta_auc_roc;  // vs the centralized row
  std::optional<double> delta_auc_pr;
};

struct Comparison {
  std::string fingerprint;
  std::vector<ComparisonRow> rows;

  std::string ToText() const;
  nlohmann::json ToJson() const;
};

// Rows ordered central, fedavg, fadl (then by run id). Deltas are filled when
// there is more than one row and a centralized run is present. Throws
// InvalidComparisonError if the runs used different datasets. With
// `recompute_from`, every run is re-evaluated from its persisted models and
// must reproduce its recorded metrics bit-exactly (InvalidComparisonError
// otherwise).
Comparison Compare(const std::vector<std::filesystem::path>& run_manifests,
                   const std::optional<std::filesystem::path>& recompute_from);

}  // namespace fedsim::experiment

#endif  // FEDSIM_TOOLS_EXPERIMENT_H_
