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

#include "experiment.h"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <utility>

#include "fedsim/audit.h"
#include "fedsim/errors.h"
#include "fedsim/fadl.h"
#include "fedsim/federated.h"
#include "fedsim/model_io.h"
#include "fedsim/nn.h"
#include "fedsim/rng.h"
#include "fedsim/training.h"

namespace fedsim::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kDatasetFormat[] = "fedsim-dataset/1";
constexpr char kRunFormat[] = "fedsim-run/1";
constexpr char kDatasetManifest[] = "dataset.json";
constexpr uint64_t kInitSalt = 0x1417;

std::string Hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFile(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

json ReadJsonFile(const fs::path& path) {
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

// Strict reader for one config object: remembers which keys were consumed
// and rejects the rest.
class Section {
 public:
  Section(const json& parent, std::string name) : name_(std::move(name)) {
    const json* obj = &parent;
    if (!name_.empty()) {
      const auto it = parent.find(name_);
      obj = it == parent.end() ? &kEmpty : &*it;
    }
    if (!obj->is_object()) throw ConfigError(Label() + " must be an object");
    obj_ = obj;
  }

  template <typename T>
  void Get(const char* key, T& out) {
    used_.insert(key);
    const auto it = obj_->find(key);
    if (it == obj_->end() || it->is_null()) return;
    const std::string where = Label() + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(where + " must be a boolean");
      out = it->get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_unsigned()) {
        throw ConfigError(where + " must be a non-negative integer");
      }
      out = it->get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(where + " must be a number");
      out = it->get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(where + " must be a string");
      out = it->get<std::string>();
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      if (!it->is_array()) throw ConfigError(where + " must be an array");
      out.clear();
      for (const auto& v : *it) {
        if (!v.is_number_unsigned()) {
          throw ConfigError(where + " entries must be non-negative integers");
        }
        out.push_back(v.get<std::size_t>());
      }
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

  void Finish(const std::set<std::string>& also_allowed = {}) const {
    for (const auto& [key, value] : obj_->items()) {
      if (!used_.count(key) && !also_allowed.count(key)) {
        throw ConfigError("unknown config key " + Label() + "." + key);
      }
    }
  }

 private:
  std::string Label() const { return name_.empty() ? "<root>" : name_; }

  static inline const json kEmpty = json::object();
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> used_;
};

void ValidateConfig(const ExperimentConfig& c) {
  try {
    c.data.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.split.train < 0 || c.split.val < 0 || c.split.test < 0 ||
      std::abs(c.split.train + c.split.val + c.split.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  for (std::size_t d : c.hidden_dims) {
    if (d == 0) throw ConfigError("model.hidden_dims entries must be >= 1");
  }
  if (!(c.learning_rate > 0.0)) {
    throw ConfigError("train.learning_rate must be > 0");
  }
  if (c.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(c.lambda >= 0.0)) throw ConfigError("train.lambda must be >= 0");
  if (c.fedavg_cycles < 1 || c.fedavg_local_epochs < 1) {
    throw ConfigError("fedavg.global_cycles and local_epochs must be >= 1");
  }
  if (c.fadl_stage1_cycles < 1 || c.fadl_stage1_local_epochs < 1) {
    throw ConfigError("fadl.stage1_cycles and stage1_local_epochs must be >= 1");
  }
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
}

std::vector<SiloDataset> SplitAll(const std::vector<SiloDataset>& silos,
                                  const ExperimentConfig& config,
                                  std::vector<std::string>* warnings) {
  std::vector<SiloDataset> out;
  out.reserve(silos.size());
  for (const auto& s : silos) {
    out.push_back(StratifiedSplit(s, config.split, config.split_seed));
    if (warnings && out.back().split_warning()) {
      warnings->push_back(*out.back().split_warning());
    }
  }
  return out;
}

std::vector<std::size_t> LayerDims(const ExperimentConfig& config,
                                   std::size_t feature_dim) {
  std::vector<std::size_t> dims{feature_dim};
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(1);
  return dims;
}

uint64_t InitSeed(uint64_t master) { return DeriveSeed(master, kInitSalt); }

// The pooled dataset is treated as one silo whose id joins the member ids,
// so a single-silo centralized run shuffles exactly like that silo does
// under federated training.
std::string PooledSiloId(const std::vector<SiloDataset>& silos) {
  std::vector<std::string> ids;
  for (const auto& s : silos) ids.push_back(s.silo_id());
  std::sort(ids.begin(), ids.end());
  std::string joined;
  for (const auto& id : ids) joined += (joined.empty() ? "" : "+") + id;
  return joined;
}

using Scorer =
    std::function<std::vector<double>(const std::string&, const Matrix&)>;

// Scores every silo's test split inside that silo's audit scope.
Evaluation ScoreTestSplits(Mode mode, const std::vector<SiloDataset>& silos,
                           const Scorer& scorer) {
  Evaluation ev;
  std::vector<double> pooled_scores;
  std::vector<uint8_t> pooled_labels;
  audit::RunScope run_scope;
  for (const SiloDataset& silo : silos) {
    audit::SiloScope silo_scope(silo.silo_id());
    const LabeledData test = silo.Select(Split::kTest);
    SiloEval se;
    se.silo_id = silo.silo_id();
    if (!test.labels.empty()) {
      const auto scores = scorer(silo.silo_id(), test.features.ToDense());
      for (uint8_t y : test.labels) (y ? se.n_pos : se.n_neg) += 1;
      if (se.n_pos > 0 && se.n_neg > 0) {
        se.auc_roc = AucRoc(scores, test.labels);
        se.auc_pr = AucPr(scores, test.labels);
      }
      pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
      pooled_labels.insert(pooled_labels.end(), test.labels.begin(),
                           test.labels.end());
    }
    ev.per_silo.push_back(std::move(se));
  }
  try {
    ev.pooled = Evaluate(ModeName(mode), pooled_scores, pooled_labels);
  } catch (const UndefinedMetricError& e) {
    throw TrainingError(std::string("pooled test split: ") + e.what());
  }
  return ev;
}

std::string FormatReal(double v) {
  // Same shortest round-trip form as metrics.txt.
  const std::string rec = FormatEvalReport({"", v, 0.0, 0, 0});
  const auto start = rec.find("auc_roc=") + 8;
  return rec.substr(start, rec.find('\n', start) - start);
}

std::string PerSiloTsv(const std::vector<SiloEval>& per_silo) {
  std::string out = "silo_id\tn_pos\tn_neg\tauc_roc\tauc_pr\n";
  for (const auto& s : per_silo) {
    out += s.silo_id + "\t" + std::to_string(s.n_pos) + "\t" +
           std::to_string(s.n_neg) + "\t" +
           (s.auc_roc ? FormatReal(*s.auc_roc) : "NA") + "\t" +
           (s.auc_pr ? FormatReal(*s.auc_pr) : "NA") + "\n";
  }
  return out;
}

json PerSiloMean(const std::vector<SiloEval>& per_silo) {
  double roc = 0.0;
  double pr = 0.0;
  std::size_t n = 0;
  for (const auto& s : per_silo) {
    if (!s.auc_roc) continue;
    roc += *s.auc_roc;
    pr += *s.auc_pr;
    ++n;
  }
  if (n == 0) return {{"n_silos", 0}, {"auc_roc", nullptr}, {"auc_pr", nullptr}};
  return {{"n_silos", n},
          {"auc_roc", roc / static_cast<double>(n)},
          {"auc_pr", pr / static_cast<double>(n)}};
}

std::string RunId(Mode mode, const json& config, const std::string& fp) {
  json c = config;
  c.erase("threads");
  return ModeName(mode) + "-" + Hex64(HashString(c.dump() + fp)).substr(0, 8);
}

int RegimeOrder(const std::string& regime) {
  if (regime == "central") return 0;
  if (regime == "fedavg") return 1;
  if (regime == "fadl") return 2;
  return 3;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ConfigFromJson(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  Section root(j, "");
  root.Get("seed", c.seed);
  root.Get("threads", c.threads);
  root.Finish({"data", "split", "model", "train", "central", "fedavg", "fadl"});

  Section data(j, "data");
  data.Get("n_silos", c.data.n_silos);
  data.Get("feature_dim", c.data.feature_dim);
  data.Get("samples_per_silo", c.data.samples_per_silo);
  data.Get("size_log_mean", c.data.size_log_mean);
  data.Get("size_log_sd", c.data.size_log_sd);
  data.Get("min_silo_size", c.data.min_silo_size);
  data.Get("max_silo_size", c.data.max_silo_size);
  data.Get("heterogeneity", c.data.heterogeneity);
  data.Get("target_prevalence", c.data.target_prevalence);
  data.Get("prevalence_log_sd", c.data.prevalence_log_sd);
  data.Get("mean_active_features", c.data.mean_active_features);
  data.Get("signal_scale", c.data.signal_scale);
  data.Get("seed", c.data.seed);
  data.Finish();

  Section split(j, "split");
  split.Get("train", c.split.train);
  split.Get("val", c.split.val);
  split.Get("test", c.split.test);
  split.Get("seed", c.split_seed);
  split.Finish();

  Section model(j, "model");
  model.Get("hidden_dims", c.hidden_dims);
  model.Finish();

  Section train(j, "train");
  train.Get("learning_rate", c.learning_rate);
  train.Get("batch_size", c.batch_size);
  train.Get("lambda", c.lambda);
  train.Finish();

  Section central(j, "central");
  central.Get("epochs", c.central_epochs);
  central.Finish();

  Section fedavg(j, "fedavg");
  fedavg.Get("global_cycles", c.fedavg_cycles);
  fedavg.Get("local_epochs", c.fedavg_local_epochs);
  fedavg.Finish();

  Section fadl(j, "fadl");
  fadl.Get("stage1_cycles", c.fadl_stage1_cycles);
  fadl.Get("stage1_local_epochs", c.fadl_stage1_local_epochs);
  fadl.Get("stage2_epochs", c.fadl_stage2_epochs);
  uint64_t fadl_seed = 0;
  const auto fadl_it = j.find("fadl");
  if (fadl_it != j.end() && fadl_it->is_object() && fadl_it->contains("seed") &&
      !(*fadl_it)["seed"].is_null()) {
    fadl.Get("seed", fadl_seed);
    c.fadl_seed = fadl_seed;
  } else {
    fadl.Get("seed", fadl_seed);
  }
  std::string unknown = "error";
  fadl.Get("unknown_silo", unknown);
  if (unknown != "error" && unknown != "fallback") {
    throw ConfigError("fadl.unknown_silo must be \"error\" or \"fallback\"");
  }
  c.fadl_fallback_to_shared = unknown == "fallback";
  fadl.Finish();

  ValidateConfig(c);
  return c;
}

json ConfigToJson(const ExperimentConfig& c) {
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"data",
       {{"n_silos", c.data.n_silos},
        {"feature_dim", c.data.feature_dim},
        {"samples_per_silo", c.data.samples_per_silo},
        {"size_log_mean", c.data.size_log_mean},
        {"size_log_sd", c.data.size_log_sd},
        {"min_silo_size", c.data.min_silo_size},
        {"max_silo_size", c.data.max_silo_size},
        {"heterogeneity", c.data.heterogeneity},
        {"target_prevalence", c.data.target_prevalence},
        {"prevalence_log_sd", c.data.prevalence_log_sd},
        {"mean_active_features", c.data.mean_active_features},
        {"signal_scale", c.data.signal_scale},
        {"seed", c.data.seed}}},
      {"split",
       {{"train", c.split.train},
        {"val", c.split.val},
        {"test", c.split.test},
        {"seed", c.split_seed}}},
      {"model", {{"hidden_dims", c.hidden_dims}}},
      {"train",
       {{"learning_rate", c.learning_rate},
        {"batch_size", c.batch_size},
        {"lambda", c.lambda}}},
      {"central", {{"epochs", c.central_epochs}}},
      {"fedavg",
       {{"global_cycles", c.fedavg_cycles},
        {"local_epochs", c.fedavg_local_epochs}}},
      {"fadl",
       {{"stage1_cycles", c.fadl_stage1_cycles},
        {"stage1_local_epochs", c.fadl_stage1_local_epochs},
        {"stage2_epochs", c.fadl_stage2_epochs},
        {"seed", c.fadl_seed ? json(*c.fadl_seed) : json(nullptr)},
        {"unknown_silo", c.fadl_fallback_to_shared ? "fallback" : "error"}}},
  };
}

ExperimentConfig LoadConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return ConfigFromJson(j);
}

Mode ParseMode(std::string_view name) {
  if (name == "central") return Mode::kCentral;
  if (name == "fedavg") return Mode::kFedAvg;
  if (name == "fadl") return Mode::kFadl;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected central, fedavg or fadl)");
}

std::string ModeName(Mode mode) {
  switch (mode) {
    case Mode::kCentral:
      return "central";
    case Mode::kFedAvg:
      return "fedavg";
    case Mode::kFadl:
      return "fadl";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Datasets

std::string ComputeFingerprint(const fs::path& data_dir) {
  const json manifest = ReadJsonFile(data_dir / kDatasetManifest);
  try {
    uint64_t h = HashString(manifest.at("format").get<std::string>());
    const std::string dim =
        std::to_string(manifest.at("feature_dim").get<std::size_t>());
    h = HashBytes({reinterpret_cast<const unsigned char*>(dim.data()),
                   dim.size()},
                  h);
    for (const auto& silo : manifest.at("silos")) {
      const std::string name = silo.at("file").get<std::string>() + '\0';
      h = HashBytes({reinterpret_cast<const unsigned char*>(name.data()),
                     name.size()},
                    h);
      const std::string bytes = ReadFile(data_dir / silo.at("file").get<std::string>());
      h = HashBytes({reinterpret_cast<const unsigned char*>(bytes.data()),
                     bytes.size()},
                    h);
    }
    return Hex64(h);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad dataset manifest: ") + e.what(), 0);
  }
}

DatasetInfo GenerateDataset(const ExperimentConfig& config,
                            const fs::path& out_dir) {
  ValidateConfig(config);
  const std::vector<SiloDataset> silos = Generate(config.data);
  fs::create_directories(out_dir);
  DatasetInfo info;
  info.feature_dim = config.data.feature_dim;
  json manifest = {{"format", kDatasetFormat},
                   {"feature_dim", info.feature_dim},
                   {"generator", ConfigToJson(config)["data"]},
                   {"silos", json::array()}};
  for (const SiloDataset& silo : silos) {
    const fs::path file = silo.silo_id() + ".csv";
    SaveCsv(std::span(&silo, 1), out_dir / file);
    manifest["silos"].push_back({{"id", silo.silo_id()},
                                 {"file", file.string()},
                                 {"samples", silo.num_samples()}});
    info.silo_ids.push_back(silo.silo_id());
    info.files.push_back(out_dir / file);
  }
  WriteFile(out_dir / kDatasetManifest, manifest.dump(2) + "\n");
  info.fingerprint = ComputeFingerprint(out_dir);
  manifest["fingerprint"] = info.fingerprint;
  WriteFile(out_dir / kDatasetManifest, manifest.dump(2) + "\n");
  return info;
}

LoadedDataset LoadDataset(const fs::path& data_dir) {
  const json manifest = ReadJsonFile(data_dir / kDatasetManifest);
  LoadedDataset out;
  try {
    if (manifest.at("format").get<std::string>() != kDatasetFormat) {
      throw ParseError("unsupported dataset format", 0);
    }
    out.info.fingerprint = manifest.at("fingerprint").get<std::string>();
    out.info.feature_dim = manifest.at("feature_dim").get<std::size_t>();
    for (const auto& silo : manifest.at("silos")) {
      out.info.silo_ids.push_back(silo.at("id").get<std::string>());
      out.info.files.push_back(data_dir / silo.at("file").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad dataset manifest: ") + e.what(), 0);
  }
  const std::string actual = ComputeFingerprint(data_dir);
  if (actual != out.info.fingerprint) {
    throw StaleDataError("dataset in " + data_dir.string() +
                         " has fingerprint " + actual + ", manifest says " +
                         out.info.fingerprint);
  }
  for (std::size_t i = 0; i < out.info.files.size(); ++i) {
    auto silos = LoadCsv(out.info.files[i], out.info.feature_dim);
    if (silos.size() != 1 || silos[0].silo_id() != out.info.silo_ids[i]) {
      throw ParseError(out.info.files[i].string() +
                           ": expected exactly the rows of silo " +
                           out.info.silo_ids[i],
                       0);
    }
    out.silos.push_back(std::move(silos[0]));
  }
  std::sort(out.silos.begin(), out.silos.end(),
            [](const SiloDataset& a, const SiloDataset& b) {
              return a.silo_id() < b.silo_id();
            });
  return out;
}

// ---------------------------------------------------------------------------
// Train

RunManifest Train(Mode mode, const ExperimentConfig& config,
                  const fs::path& data_dir, const fs::path& out_dir) {
  ValidateConfig(config);
  const auto start = std::chrono::steady_clock::now();
  LoadedDataset dataset = LoadDataset(data_dir);

  RunManifest run;
  run.mode = mode;
  run.config = ConfigToJson(config);
  run.fingerprint = dataset.info.fingerprint;
  run.run_id = RunId(mode, run.config, run.fingerprint);
  run.run_dir = out_dir;

  const std::vector<SiloDataset> silos =
      SplitAll(dataset.silos, config, &run.split_warnings);
  const Model init =
      InitModel(LayerDims(config, dataset.info.feature_dim), InitSeed(config.seed));

  fs::create_directories(out_dir);
  audit::ResetCounters();

  FedConfig fed;
  fed.batch_size = config.batch_size;
  fed.learning_rate = config.learning_rate;
  fed.lambda = config.lambda;
  fed.num_threads = config.threads;

  json artifacts = {{"metrics", "metrics.txt"}, {"per_silo", "per_silo.tsv"}};
  Scorer scorer;
  std::optional<Model> single;
  std::optional<SpecializedEnsemble> ensemble;
  try {
    switch (mode) {
      case Mode::kCentral: {
        TrainSpec spec;
        spec.epochs = config.central_epochs;
        spec.batch_size = config.batch_size;
        spec.learning_rate = config.learning_rate;
        spec.lambda = config.lambda;
        spec.shuffle_seed = SiloSeed(config.seed, PooledSiloId(silos));
        single = TrainCentralized(silos, init, spec);
        break;
      }
      case Mode::kFedAvg: {
        fed.global_cycles = config.fedavg_cycles;
        fed.local_epochs = config.fedavg_local_epochs;
        fed.master_seed = config.seed;
        FederatedResult result = RunFederated(silos, init, fed);
        std::ostringstream trace;
        WriteTraceJsonl(result.trace, trace);
        WriteFile(out_dir / "trace.jsonl", trace.str());
        artifacts["trace"] = "trace.jsonl";
        single = std::move(result.model);
        break;
      }
      case Mode::kFadl: {
        FadlConfig fadl;
        fadl.stage1 = fed;
        fadl.stage1.global_cycles = config.fadl_stage1_cycles;
        fadl.stage1.local_epochs = config.fadl_stage1_local_epochs;
        fadl.stage1.master_seed = config.fadl_seed.value_or(config.seed);
        fadl.stage2_epochs = config.fadl_stage2_epochs;
        FadlResult result = RunFadl(silos, init, fadl);
        std::ostringstream trace;
        WriteTraceJsonl(result.stage1_trace, trace);
        WriteFile(out_dir / "trace.jsonl", trace.str());
        artifacts["trace"] = "trace.jsonl";
        ensemble = std::move(result.ensemble);
        break;
      }
    }
  } catch (const std::exception& e) {
    throw TrainingError(ModeName(mode) + " training failed: " + e.what());
  }

  if (single) {
    SaveModel(*single, out_dir / "model.fadl");
    artifacts["model"] = "model.fadl";
    scorer = [&](const std::string&, const Matrix& x) {
      return Predict(*single, x);
    };
  } else {
    SaveEnsemble(*ensemble, out_dir / "ensemble");
    artifacts["ensemble"] = "ensemble";
    const auto policy = config.fadl_fallback_to_shared
                            ? UnknownSiloPolicy::kFallbackToShared
                            : UnknownSiloPolicy::kError;
    scorer = [&, policy](const std::string& id, const Matrix& x) {
      return PredictRouted(*ensemble, id, x, policy);
    };
  }

  Evaluation ev = ScoreTestSplits(mode, silos, scorer);
  run.pooled = ev.pooled;
  run.per_silo = std::move(ev.per_silo);
  run.cross_silo_accesses = audit::CrossSiloAccessCount();
  run.duration_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();

  WriteFile(out_dir / "metrics.txt", FormatEvalReport(run.pooled));
  WriteFile(out_dir / "per_silo.tsv", PerSiloTsv(run.per_silo));

  const json manifest = {
      {"format", kRunFormat},
      {"run_id", run.run_id},
      {"regime", ModeName(mode)},
      {"config", run.config},
      {"seeds",
       {{"master", config.seed},
        {"init", InitSeed(config.seed)},
        {"fadl_stage1", config.fadl_seed.value_or(config.seed)},
        {"split", config.split_seed}}},
      {"dataset",
       {{"dir", fs::absolute(data_dir).lexically_normal().string()},
        {"fingerprint", run.fingerprint}}},
      {"artifacts", artifacts},
      {"eval",
       {{"auc_roc", run.pooled.auc_roc},
        {"auc_pr", run.pooled.auc_pr},
        {"n_pos", run.pooled.n_pos},
        {"n_neg", run.pooled.n_neg}}},
      {"per_silo_mean", PerSiloMean(run.per_silo)},
      {"split_warnings", run.split_warnings},
      {"audit", {{"cross_silo_accesses", run.cross_silo_accesses}}},
      {"threads", config.threads},
      {"duration_seconds", run.duration_seconds},
  };
  WriteFile(out_dir / "run.json", manifest.dump(2) + "\n");
  return run;
}

RunManifest ReadRunManifest(const fs::path& run_json) {
  const json j = ReadJsonFile(run_json);
  RunManifest run;
  try {
    if (j.at("format").get<std::string>() != kRunFormat) {
      throw ParseError(run_json.string() + ": unsupported run format", 0);
    }
    run.run_id = j.at("run_id").get<std::string>();
    run.mode = ParseMode(j.at("regime").get<std::string>());
    run.config = j.at("config");
    run.fingerprint = j.at("dataset").at("fingerprint").get<std::string>();
    run.cross_silo_accesses =
        j.at("audit").at("cross_silo_accesses").get<uint64_t>();
    run.duration_seconds = j.at("duration_seconds").get<double>();
    run.split_warnings = j.at("split_warnings").get<std::vector<std::string>>();
    run.run_dir = run_json.parent_path();
    const std::string metrics =
        j.at("artifacts").at("metrics").get<std::string>();
    run.pooled = ParseEvalReport(ReadFile(run.run_dir / metrics));
  } catch (const json::exception& e) {
    throw ParseError(run_json.string() + ": " + e.what(), 0);
  } catch (const ConfigError& e) {
    throw ParseError(run_json.string() + ": " + e.what(), 0);
  }
  return run;
}

Evaluation EvaluateRun(const RunManifest& run, const fs::path& data_dir) {
  const ExperimentConfig config = ConfigFromJson(run.config);
  LoadedDataset dataset = LoadDataset(data_dir);
  if (dataset.info.fingerprint != run.fingerprint) {
    throw StaleDataError("run " + run.run_id + " was trained on dataset " +
                         run.fingerprint + ", " + data_dir.string() + " is " +
                         dataset.info.fingerprint);
  }
  const auto silos = SplitAll(dataset.silos, config, nullptr);
  if (run.mode == Mode::kFadl) {
    const SpecializedEnsemble ensemble = LoadEnsemble(run.run_dir / "ensemble");
    const auto policy = config.fadl_fallback_to_shared
                            ? UnknownSiloPolicy::kFallbackToShared
                            : UnknownSiloPolicy::kError;
    return ScoreTestSplits(run.mode, silos,
                           [&](const std::string& id, const Matrix& x) {
                             return PredictRouted(ensemble, id, x, policy);
                           });
  }
  const Model model = LoadModel(run.run_dir / "model.fadl");
  return ScoreTestSplits(run.mode, silos,
                         [&](const std::string&, const Matrix& x) {
                           return Predict(model, x);
                         });
}

// ---------------------------------------------------------------------------
// Compare

Comparison Compare(const std::vector<fs::path>& run_manifests,
                   const std::optional<fs::path>& recompute_from) {
  if (run_manifests.empty()) {
    throw InvalidComparisonError("no runs to compare");
  }
  std::vector<RunManifest> runs;
  for (const auto& p : run_manifests) runs.push_back(ReadRunManifest(p));
  for (const auto& r : runs) {
    if (r.fingerprint != runs.front().fingerprint) {
      throw InvalidComparisonError(
          "runs use different datasets: " + runs.front().run_id + " (" +
          runs.front().fingerprint + ") vs " + r.run_id + " (" +
          r.fingerprint + ")");
    }
  }
  if (recompute_from) {
    for (const auto& r : runs) {
      const Evaluation ev = EvaluateRun(r, *recompute_from);
      if (!(ev.pooled == r.pooled)) {
        throw InvalidComparisonError("run " + r.run_id +
                                     ": recomputed metrics differ from the "
                                     "recorded ones");
      }
    }
  }

  Comparison cmp;
  cmp.fingerprint = runs.front().fingerprint;
  for (const auto& r : runs) {
    cmp.rows.push_back({r.pooled.regime, r.run_id, r.pooled.auc_roc,
                        r.pooled.auc_pr, std::nullopt, std::nullopt});
  }
  std::stable_sort(cmp.rows.begin(), cmp.rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) {
                     const int ra = RegimeOrder(a.regime);
                     const int rb = RegimeOrder(b.regime);
                     if (ra != rb) return ra < rb;
                     return a.run_id < b.run_id;
                   });
  // Same run id twice (e.g. the same run listed twice): suffix to keep rows
  // distinguishable.
  std::map<std::string, int> seen;
  for (auto& row : cmp.rows) {
    const int n = ++seen[row.run_id];
    if (n > 1) row.run_id += "#" + std::to_string(n);
  }
  if (cmp.rows.size() > 1 && cmp.rows.front().regime == "central") {
    const ComparisonRow base = cmp.rows.front();
    for (auto& row : cmp.rows) {
      row.delta_auc_roc = row.auc_roc - base.auc_roc;
      row.delta_auc_pr = row.auc_pr - base.auc_pr;
    }
  }
  return cmp;
}

std::string Comparison::ToText() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %-20s %8s %8s %9s %9s\n", "regime",
                "run_id", "AUCROC", "AUCPR", "dAUCROC", "dAUCPR");
  out << line;
  auto delta = [](const std::optional<double>& d) {
    char buf[32];
    if (!d) return std::string("-");
    std::snprintf(buf, sizeof(buf), "%+.4f", *d);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-8s %-20s %8.4f %8.4f %9s %9s\n",
                  r.regime.c_str(), r.run_id.c_str(), r.auc_roc, r.auc_pr,
                  delta(r.delta_auc_roc).c_str(), delta(r.delta_auc_pr).c_str());
    out << line;
  }
  return out.str();
}

json Comparison::ToJson() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back(
        {{"regime", r.regime},
         {"run_id", r.run_id},
         {"auc_roc", r.auc_roc},
         {"auc_pr", r.auc_pr},
         {"delta_auc_roc", r.delta_auc_roc ? json(*r.delta_auc_roc) : json()},
         {"delta_auc_pr", r.delta_auc_pr ? json(*r.delta_auc_pr) : json()}});
  }
  return {{"fingerprint", fingerprint}, {"rows", rows_json}};
}

}  // namespace fedsim::experiment
