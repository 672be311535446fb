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

#ifndef FEDSIM_DATA_H_
#define FEDSIM_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/matrix.h"

namespace fedsim {

enum class Split : uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

struct LabeledData {
  BinaryFeatures features;
  std::vector<uint8_t> labels;
};

// One silo's private admissions: binary indicator features, binary labels
// (1 = positive/deceased) and a train/val/test tag per sample.
//
// features(), labels() and Select() are the raw-sample accessors and report
// every call to the audit layer (see audit.h). Counts and tags are metadata
// and are not audited.
class SiloDataset {
 public:
  // All samples start tagged kTrain. Throws std::invalid_argument if the
  // label count differs from the row count or a label is not 0/1.
  SiloDataset(std::string silo_id, BinaryFeatures features,
              std::vector<uint8_t> labels);

  const std::string& silo_id() const { return silo_id_; }
  std::size_t num_samples() const { return labels_.size(); }
  std::size_t feature_dim() const { return features_.cols(); }

  const std::vector<Split>& split_tags() const { return split_; }
  std::size_t CountInSplit(Split split) const;
  // Set when StratifiedSplit() had to fall back to all-train.
  const std::optional<std::string>& split_warning() const {
    return split_warning_;
  }

  const BinaryFeatures& features() const;
  const std::vector<uint8_t>& labels() const;
  LabeledData Select(Split split) const;

  // Copy with new split tags. Throws std::invalid_argument on a length
  // mismatch.
  SiloDataset WithSplit(std::vector<Split> tags,
                        std::optional<std::string> warning = {}) const;

  // Same id, samples and labels (tags ignored).
  bool SameSamples(const SiloDataset& other) const;

 private:
  std::string silo_id_;
  BinaryFeatures features_;
  std::vector<uint8_t> labels_;
  std::vector<Split> split_;
  std::optional<std::string> split_warning_;
};

// Synthetic cohort generator. Each silo i gets
//
//   feature prevalence  p_i = (1 - h) * g + h * s_i
//   label coefficients  b_i = (1 - h) * c + h * d_i
//
// where g, c are shared across silos, s_i, d_i are private to the silo and h
// is `heterogeneity`. Each sample's features are independent Bernoulli(p_i)
// draws; its label is Bernoulli(sigmoid(a_i + x . b_i)), with the intercept
// a_i solved by bisection so the silo's expected prevalence equals
// `target_prevalence`, or with `prevalence_log_sd` = v > 0, the silo's own
// rate target * exp(v * z_i - v^2 / 2), z_i ~ N(0, 1), clipped to
// [1e-4, 0.5]. Prevalence vectors are log-uniform, rescaled so a
// sample has `mean_active_features` ones on average; coefficients are
// N(0, signal_scale^2).
struct GenSpec {
  std::size_t n_silos = 58;
  std::size_t feature_dim = 1400;
  // 0 draws each silo's size from a log-normal clipped to
  // [min_silo_size, max_silo_size].
  std::size_t samples_per_silo = 0;
  double size_log_mean = 7.6;  // median ~2000 admissions
  double size_log_sd = 0.8;
  std::size_t min_silo_size = 200;
  std::size_t max_silo_size = 20000;
  double heterogeneity = 0.5;
  double target_prevalence = 0.055;
  double prevalence_log_sd = 0.0;
  double mean_active_features = 12.9;
  double signal_scale = 0.6;
  uint64_t seed = 1;

  // Throws std::invalid_argument describing the first bad field.
  void Validate() const;
};

// Generating parameters alongside the data, for inspection and tests.
struct GeneratedCohort {
  std::vector<SiloDataset> silos;
  std::vector<std::vector<double>> feature_prevalence;  // per silo
  std::vector<std::vector<double>> label_coefficients;  // per silo
  std::vector<double> intercepts;                       // per silo
};

GeneratedCohort GenerateCohort(const GenSpec& spec);
std::vector<SiloDataset> Generate(const GenSpec& spec);

// "h001", "h002", ...
std::string SiloIdForIndex(std::size_t index, std::size_t n_silos);

struct SplitRatios {
  double train = 0.70;
  double val = 0.10;
  double test = 0.20;
};

// Stratified by label: within each label stratum the samples are shuffled
// (seeded by `seed` and the silo id) and the first round(train * n) go to
// train, the next round(val * n) to val, the rest to test. If either stratum
// is empty every sample is tagged train and split_warning() is set.
// Throws std::invalid_argument for negative ratios, ratios not summing to 1,
// or an empty dataset.
SiloDataset StratifiedSplit(const SiloDataset& dataset, SplitRatios ratios,
                            uint64_t seed);

// Sparse admissions CSV:
//
//   silo_id,label,features
//   h001,1,3;17;902
//   h002,0,
//
// features lists the indices of the active indicators separated by ';'.
// Rows for a silo need not be contiguous; silos are returned sorted by id
// with rows in file order. feature_dim, when given, bounds the indices;
// otherwise it is max index + 1 over the whole file. Throws ParseError (with
// the 1-based line number) on malformed rows, duplicate indices, or indices
// out of range.
std::vector<SiloDataset> ReadCsv(std::istream& in,
                                 std::optional<std::size_t> feature_dim = {});
std::vector<SiloDataset> LoadCsv(const std::filesystem::path& path,
                                 std::optional<std::size_t> feature_dim = {});

void WriteCsv(std::span<const SiloDataset> silos, std::ostream& out);
void SaveCsv(std::span<const SiloDataset> silos,
             const std::filesystem::path& path);

}  // namespace fedsim

#endif  // FEDSIM_DATA_H_
