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

#include "fedsim/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "fedsim/audit.h"
#include "fedsim/errors.h"
#include "fedsim/nn.h"
#include "fedsim/rng.h"

namespace fedsim {

// ---------------------------------------------------------------------------
// SiloDataset

SiloDataset::SiloDataset(std::string silo_id, BinaryFeatures features,
                         std::vector<uint8_t> labels)
    : silo_id_(std::move(silo_id)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      split_(labels_.size(), Split::kTrain) {
  if (silo_id_.empty() ||
      silo_id_.find_first_of(",\r\n") != std::string::npos) {
    throw std::invalid_argument("SiloDataset: silo id '" + silo_id_ +
                                "' is empty or contains ',' or a newline");
  }
  if (labels_.size() != features_.rows()) {
    throw std::invalid_argument("SiloDataset " + silo_id_ + ": " +
                                std::to_string(labels_.size()) +
                                " labels for " +
                                std::to_string(features_.rows()) + " rows");
  }
  for (uint8_t y : labels_) {
    if (y > 1) {
      throw std::invalid_argument("SiloDataset " + silo_id_ +
                                  ": label is not 0/1");
    }
  }
}

std::size_t SiloDataset::CountInSplit(Split split) const {
  return static_cast<std::size_t>(std::count(split_.begin(), split_.end(), split));
}

const BinaryFeatures& SiloDataset::features() const {
  audit::RecordAccess(silo_id_);
  return features_;
}

const std::vector<uint8_t>& SiloDataset::labels() const {
  audit::RecordAccess(silo_id_);
  return labels_;
}

LabeledData SiloDataset::Select(Split split) const {
  audit::RecordAccess(silo_id_);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < split_.size(); ++i) {
    if (split_[i] == split) rows.push_back(i);
  }
  LabeledData out{features_.SelectRows(rows), {}};
  out.labels.reserve(rows.size());
  for (std::size_t i : rows) out.labels.push_back(labels_[i]);
  return out;
}

SiloDataset SiloDataset::WithSplit(std::vector<Split> tags,
                                   std::optional<std::string> warning) const {
  if (tags.size() != labels_.size()) {
    throw std::invalid_argument("WithSplit: tag count mismatch");
  }
  SiloDataset out = *this;
  out.split_ = std::move(tags);
  out.split_warning_ = std::move(warning);
  return out;
}

bool SiloDataset::SameSamples(const SiloDataset& other) const {
  return silo_id_ == other.silo_id_ && features_ == other.features_ &&
         labels_ == other.labels_;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

constexpr uint64_t kSharedStreamSalt = 0x5eed'0000'0000'0001ULL;

std::vector<double> DrawPrevalence(Rng& rng, std::size_t dim,
                                   double mean_active) {
  // Log-uniform over [1e-3, 1], then rescaled to the requested row density.
  std::vector<double> p(dim);
  for (double& v : p) v = std::exp(rng.Uniform(std::log(1e-3), 0.0));
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  const double scale = mean_active / total;
  for (double& v : p) v = std::min(v * scale, 0.9);
  return p;
}

std::vector<double> DrawCoefficients(Rng& rng, std::size_t dim, double sd) {
  std::vector<double> c(dim);
  for (double& v : c) v = sd * rng.Normal();
  return c;
}

std::vector<double> Blend(const std::vector<double>& shared,
                          const std::vector<double>& own, double h) {
  std::vector<double> out(shared.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = (1.0 - h) * shared[j] + h * own[j];
  }
  return out;
}

// Intercept a with mean_k sigmoid(a + logits[k]) == target.
double SolveIntercept(const std::vector<double>& logits, double target) {
  auto mean_prob = [&](double a) {
    double s = 0.0;
    for (double z : logits) s += Sigmoid(a + z);
    return s / static_cast<double>(logits.size());
  };
  double lo = -60.0;
  double hi = 60.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_prob(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void GenSpec::Validate() const {
  if (n_silos < 1) throw std::invalid_argument("GenSpec: n_silos must be >= 1");
  if (feature_dim < 1) {
    throw std::invalid_argument("GenSpec: feature_dim must be >= 1");
  }
  if (!(heterogeneity >= 0.0 && heterogeneity <= 1.0)) {
    throw std::invalid_argument("GenSpec: heterogeneity must be in [0, 1]");
  }
  if (!(target_prevalence > 0.0 && target_prevalence < 1.0)) {
    throw std::invalid_argument(
        "GenSpec: target_prevalence must be in (0, 1)");
  }
  if (!(mean_active_features > 0.0) ||
      mean_active_features > static_cast<double>(feature_dim)) {
    throw std::invalid_argument(
        "GenSpec: mean_active_features must be in (0, feature_dim]");
  }
  if (!(signal_scale >= 0.0) || !std::isfinite(signal_scale)) {
    throw std::invalid_argument("GenSpec: signal_scale must be >= 0");
  }
  if (!(prevalence_log_sd >= 0.0) || !std::isfinite(prevalence_log_sd)) {
    throw std::invalid_argument("GenSpec: prevalence_log_sd must be >= 0");
  }
  if (samples_per_silo == 0) {
    if (min_silo_size < 1 || min_silo_size > max_silo_size) {
      throw std::invalid_argument(
          "GenSpec: need 1 <= min_silo_size <= max_silo_size");
    }
    if (!(size_log_sd >= 0.0) || !std::isfinite(size_log_mean)) {
      throw std::invalid_argument("GenSpec: bad log-normal size parameters");
    }
  }
}

std::string SiloIdForIndex(std::size_t index, std::size_t n_silos) {
  const std::size_t width =
      std::max<std::size_t>(3, std::to_string(n_silos).size());
  std::string digits = std::to_string(index + 1);
  return "h" + std::string(width - std::min(width, digits.size()), '0') +
         digits;
}

GeneratedCohort GenerateCohort(const GenSpec& spec) {
  spec.Validate();
  const double h = spec.heterogeneity;

  Rng shared(DeriveSeed(spec.seed, kSharedStreamSalt));
  const auto shared_prev =
      DrawPrevalence(shared, spec.feature_dim, spec.mean_active_features);
  const auto shared_coef =
      DrawCoefficients(shared, spec.feature_dim, spec.signal_scale);
  std::vector<std::size_t> sizes(spec.n_silos, spec.samples_per_silo);
  if (spec.samples_per_silo == 0) {
    for (auto& n : sizes) {
      const double draw =
          std::exp(spec.size_log_mean + spec.size_log_sd * shared.Normal());
      n = static_cast<std::size_t>(std::clamp(
          std::round(draw), static_cast<double>(spec.min_silo_size),
          static_cast<double>(spec.max_silo_size)));
    }
  }

  GeneratedCohort cohort;
  for (std::size_t i = 0; i < spec.n_silos; ++i) {
    Rng rng(DeriveSeed(spec.seed, i + 1));
    const auto own_prev =
        DrawPrevalence(rng, spec.feature_dim, spec.mean_active_features);
    const auto own_coef =
        DrawCoefficients(rng, spec.feature_dim, spec.signal_scale);
    double silo_prevalence = spec.target_prevalence;
    if (spec.prevalence_log_sd > 0.0) {
      const double sd = spec.prevalence_log_sd;
      silo_prevalence = std::clamp(
          spec.target_prevalence * std::exp(sd * rng.Normal() - 0.5 * sd * sd),
          1e-4, 0.5);
    }
    auto prev = Blend(shared_prev, own_prev, h);
    auto coef = Blend(shared_coef, own_coef, h);

    BinaryFeatures features(spec.feature_dim);
    std::vector<double> logits(sizes[i]);
    std::vector<uint32_t> active;
    for (std::size_t k = 0; k < sizes[i]; ++k) {
      active.clear();
      double z = 0.0;
      for (std::size_t j = 0; j < spec.feature_dim; ++j) {
        if (rng.Bernoulli(prev[j])) {
          active.push_back(static_cast<uint32_t>(j));
          z += coef[j];
        }
      }
      features.AppendRow(active);
      logits[k] = z;
    }
    const double intercept = SolveIntercept(logits, silo_prevalence);
    std::vector<uint8_t> labels(sizes[i]);
    for (std::size_t k = 0; k < sizes[i]; ++k) {
      labels[k] = rng.Bernoulli(Sigmoid(intercept + logits[k])) ? 1 : 0;
    }
    cohort.silos.emplace_back(SiloIdForIndex(i, spec.n_silos),
                              std::move(features), std::move(labels));
    cohort.feature_prevalence.push_back(std::move(prev));
    cohort.label_coefficients.push_back(std::move(coef));
    cohort.intercepts.push_back(intercept);
  }
  return cohort;
}

std::vector<SiloDataset> Generate(const GenSpec& spec) {
  return GenerateCohort(spec).silos;
}

// ---------------------------------------------------------------------------
// Splitting

SiloDataset StratifiedSplit(const SiloDataset& dataset, SplitRatios ratios,
                            uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
    throw std::invalid_argument("StratifiedSplit: negative ratio");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("StratifiedSplit: ratios must sum to 1");
  }
  if (dataset.num_samples() == 0) {
    throw std::invalid_argument("StratifiedSplit: empty dataset " +
                                dataset.silo_id());
  }
  const auto& labels = dataset.labels();
  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < labels.size(); ++i) strata[labels[i]].push_back(i);

  const std::size_t n = dataset.num_samples();
  if (strata[0].empty() || strata[1].empty()) {
    return dataset.WithSplit(
        std::vector<Split>(n, Split::kTrain),
        "silo " + dataset.silo_id() + " has an empty label stratum (" +
            std::to_string(strata[1].size()) + " positive, " +
            std::to_string(strata[0].size()) +
            " negative); all samples assigned to train");
  }

  Rng rng(DeriveSeed(seed, HashString(dataset.silo_id())));
  std::vector<Split> tags(n, Split::kTest);
  for (auto& stratum : strata) {
    Shuffle(stratum, rng);
    const std::size_t m = stratum.size();
    const auto n_train = std::min<std::size_t>(
        m, static_cast<std::size_t>(std::llround(ratios.train * m)));
    const auto n_val = std::min<std::size_t>(
        m - n_train, static_cast<std::size_t>(std::llround(ratios.val * m)));
    for (std::size_t k = 0; k < m; ++k) {
      tags[stratum[k]] = k < n_train           ? Split::kTrain
                         : k < n_train + n_val ? Split::kVal
                                               : Split::kTest;
    }
  }
  return dataset.WithSplit(std::move(tags));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view kCsvHeader = "silo_id,label,features";

struct PendingSilo {
  std::vector<std::vector<uint32_t>> rows;
  std::vector<uint8_t> labels;
};

uint32_t ParseIndex(std::string_view token, std::size_t line) {
  uint32_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("bad feature index '" + std::string(token) + "'", line);
  }
  return v;
}

}  // namespace

std::vector<SiloDataset> ReadCsv(std::istream& in,
                                 std::optional<std::size_t> feature_dim) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line()) throw ParseError("empty file (missing header)", 1);
  if (line != kCsvHeader) {
    throw ParseError("expected header '" + std::string(kCsvHeader) + "'",
                     line_no);
  }

  std::map<std::string, PendingSilo> silos;
  std::size_t max_index_plus_one = 0;
  while (next_line()) {
    if (line.empty()) continue;
    const std::string_view row(line);
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos ||
        row.find(',', c2 + 1) != std::string_view::npos) {
      throw ParseError("expected 3 comma-separated fields", line_no);
    }
    const std::string_view id = row.substr(0, c1);
    const std::string_view label = row.substr(c1 + 1, c2 - c1 - 1);
    std::string_view feats = row.substr(c2 + 1);
    if (id.empty()) throw ParseError("empty silo_id", line_no);
    if (label != "0" && label != "1") {
      throw ParseError("label must be 0 or 1, got '" + std::string(label) + "'",
                       line_no);
    }

    std::vector<uint32_t> active;
    while (!feats.empty()) {
      const auto semi = feats.find(';');
      active.push_back(ParseIndex(feats.substr(0, semi), line_no));
      if (semi == std::string_view::npos) break;
      feats.remove_prefix(semi + 1);
      if (feats.empty()) throw ParseError("trailing ';'", line_no);
    }
    std::sort(active.begin(), active.end());
    if (std::adjacent_find(active.begin(), active.end()) != active.end()) {
      throw ParseError("duplicate feature index", line_no);
    }
    if (!active.empty()) {
      if (feature_dim && active.back() >= *feature_dim) {
        throw ParseError("feature index " + std::to_string(active.back()) +
                             " >= feature_dim " + std::to_string(*feature_dim),
                         line_no);
      }
      max_index_plus_one =
          std::max<std::size_t>(max_index_plus_one, active.back() + 1);
    }
    PendingSilo& silo = silos[std::string(id)];
    silo.rows.push_back(std::move(active));
    silo.labels.push_back(label == "1" ? 1 : 0);
  }

  const std::size_t dim = feature_dim.value_or(max_index_plus_one);
  std::vector<SiloDataset> out;
  out.reserve(silos.size());
  for (auto& [id, pending] : silos) {
    BinaryFeatures features(dim);
    for (const auto& r : pending.rows) features.AppendRow(r);
    out.emplace_back(id, std::move(features), std::move(pending.labels));
  }
  return out;
}

std::vector<SiloDataset> LoadCsv(const std::filesystem::path& path,
                                 std::optional<std::size_t> feature_dim) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return ReadCsv(in, feature_dim);
}

void WriteCsv(std::span<const SiloDataset> silos, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const SiloDataset& silo : silos) {
    const auto& features = silo.features();
    const auto& labels = silo.labels();
    for (std::size_t r = 0; r < labels.size(); ++r) {
      out << silo.silo_id() << ',' << static_cast<int>(labels[r]) << ',';
      bool first = true;
      for (uint32_t c : features.row(r)) {
        if (!first) out << ';';
        out << c;
        first = false;
      }
      out << '\n';
    }
  }
}

void SaveCsv(std::span<const SiloDataset> silos,
             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  WriteCsv(silos, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace fedsim
