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

#include "fedsim/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "fedsim/errors.h"

namespace fedsim {
namespace {

struct ClassCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts CheckInputs(std::span<const double> scores,
                        std::span<const uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("metric: " + std::to_string(scores.size()) +
                                " scores vs " + std::to_string(labels.size()) +
                                " labels");
  }
  ClassCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw std::invalid_argument("metric: label not 0/1");
    if (std::isnan(scores[i])) throw std::invalid_argument("metric: NaN score");
    (labels[i] ? c.pos : c.neg) += 1;
  }
  return c;
}

// Indices sorted by score, ascending.
std::vector<std::size_t> ArgSort(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  return order;
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

double AucRoc(std::span<const double> scores, std::span<const uint8_t> labels) {
  const ClassCounts c = CheckInputs(scores, labels);
  if (c.pos == 0 || c.neg == 0) {
    throw UndefinedMetricError("AUCROC needs both positive and negative labels");
  }
  const auto order = ArgSort(scores);
  // Sum of (1-based) midranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in_group += labels[order[j]];
      ++j;
    }
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double p = static_cast<double>(c.pos);
  const double n = static_cast<double>(c.neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double AucPr(std::span<const double> scores, std::span<const uint8_t> labels) {
  const ClassCounts c = CheckInputs(scores, labels);
  if (c.pos == 0) throw UndefinedMetricError("AUCPR needs a positive label");
  const auto order = ArgSort(scores);
  const double total_pos = static_cast<double>(c.pos);
  std::size_t tp = 0;
  std::size_t seen = 0;
  double ap = 0.0;
  // Walk thresholds from the highest score down.
  for (std::size_t end = order.size(); end > 0;) {
    std::size_t begin = end;
    std::size_t pos_in_group = 0;
    while (begin > 0 && scores[order[begin - 1]] == scores[order[end - 1]]) {
      --begin;
      pos_in_group += labels[order[begin]];
    }
    tp += pos_in_group;
    seen += end - begin;
    if (pos_in_group > 0) {
      const double precision =
          static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * (static_cast<double>(pos_in_group) / total_pos);
    }
    end = begin;
  }
  return ap;
}

EvalReport Evaluate(std::string regime, std::span<const double> scores,
                    std::span<const uint8_t> labels) {
  const ClassCounts c = CheckInputs(scores, labels);
  EvalReport r;
  r.regime = std::move(regime);
  r.auc_roc = AucRoc(scores, labels);
  r.auc_pr = AucPr(scores, labels);
  r.n_pos = c.pos;
  r.n_neg = c.neg;
  return r;
}

std::string FormatEvalReport(const EvalReport& report) {
  return "regime=" + report.regime + "\n" +
         "auc_roc=" + FormatDouble(report.auc_roc) + "\n" +
         "auc_pr=" + FormatDouble(report.auc_pr) + "\n" +
         "n_pos=" + std::to_string(report.n_pos) + "\n" +
         "n_neg=" + std::to_string(report.n_neg) + "\n";
}

EvalReport ParseEvalReport(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{}
                                        : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected key=value", line_no);
    }
    const std::string key(line.substr(0, eq));
    if (key != "regime" && key != "auc_roc" && key != "auc_pr" &&
        key != "n_pos" && key != "n_neg") {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
    if (!kv.emplace(key, std::string(line.substr(eq + 1))).second) {
      throw ParseError("duplicate key '" + key + "'", line_no);
    }
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(std::string("missing key ") + key, 0);
    return it->second;
  };
  auto parse_double = [&](const char* key) {
    const std::string& s = get(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ParseError(std::string("bad value for ") + key, 0);
    }
    return v;
  };
  auto parse_count = [&](const char* key) {
    const std::string& s = get(key);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw ParseError(std::string("bad value for ") + key, 0);
    }
    return v;
  };
  EvalReport r;
  r.regime = get("regime");
  r.auc_roc = parse_double("auc_roc");
  r.auc_pr = parse_double("auc_pr");
  r.n_pos = parse_count("n_pos");
  r.n_neg = parse_count("n_neg");
  return r;
}

}  // namespace fedsim
