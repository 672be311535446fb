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

#ifndef FEDSIM_METRICS_H_
#define FEDSIM_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fedsim {

// Area under the ROC curve as the Mann-Whitney statistic,
// P(score_pos > score_neg) + 0.5 * P(tie), using midranks. O(n log n).
// Throws UndefinedMetricError unless both classes are present, and
// std::invalid_argument on length mismatch, non-0/1 labels or NaN scores.
double AucRoc(std::span<const double> scores, std::span<const uint8_t> labels);

// Average precision: sum over distinct score thresholds, highest first, of
// precision(threshold) * (recall gained at that threshold). Samples sharing
// a score enter together, so the result does not depend on input order.
// A constant scorer yields exactly the positive prevalence.
// Throws UndefinedMetricError when there are no positives.
double AucPr(std::span<const double> scores, std::span<const uint8_t> labels);

struct EvalReport {
  std::string regime;
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Both AUCs plus class counts. Throws UndefinedMetricError unless both
// classes are present.
EvalReport Evaluate(std::string regime, std::span<const double> scores,
                    std::span<const uint8_t> labels);

// key=value lines in a fixed order:
//   regime=fadl
//   auc_roc=0.80123...
//   auc_pr=...
//   n_pos=...
//   n_neg=...
// Reals use the shortest representation that round-trips, so parsing a
// formatted report gives back identical doubles.
std::string FormatEvalReport(const EvalReport& report);
// Throws ParseError on unknown or missing keys and malformed values.
EvalReport ParseEvalReport(std::string_view text);

}  // namespace fedsim

#endif  // FEDSIM_METRICS_H_
