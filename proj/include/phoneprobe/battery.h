// include/phoneprobe/battery.h

// Copyright 2026  The phoneprobe Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PHONEPROBE_BATTERY_H_
#define PHONEPROBE_BATTERY_H_

// The full experiment grid over a set of named corpora: continuous probes for
// every label and regularisation setting, re-probes on one-hot pooled k-means
// units for every k, and within-speaker ABX on continuous frames and on
// cluster ids.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "phoneprobe/abx.h"
#include "phoneprobe/dataio.h"
#include "phoneprobe/probe.h"
#include "phoneprobe/quantize.h"

namespace phoneprobe {

struct BatteryCorpus {
  std::string name;
  FeatureArchive archive;
  AlignmentTable alignments;
  // Frames the k-means models are fitted on; the corpus archive when empty.
  std::optional<FeatureArchive> fit_archive;
};

struct BatteryConfig {
  std::vector<std::optional<double>> c_grid{std::nullopt, 0.001, 0.0001};
  std::vector<int> k_list{50, 100, 200};
  double train_fraction = 0.85;
  uint64_t seed = 0;
  ProbeOptions probe;
  KMeansOptions kmeans;
  int abx_max_per_phone = 10;
  int chance_draws = 1000;

  nlohmann::json to_json() const;
};

struct BatteryCorpusResult {
  std::string name;
  int64_t n_tokens = 0;
  // Continuous probes, label-major then in c_grid order.
  std::vector<ProbeReport> probes;
  // k -> unregularised probes on one-hot pooled units, one per label.
  std::map<int, std::vector<ProbeReport>> quantized_probes;
  std::map<int, double> kmeans_inertia;
  // Empty when the corpus has no scoreable ABX cell.
  std::optional<AbxResult> abx_continuous;
  std::map<int, AbxResult> abx_onehot;

  const ProbeReport &probe(LabelKind kind, std::optional<double> c) const;
  const ProbeReport &quantized_probe(int k, LabelKind kind) const;
};

struct BatteryResult {
  BatteryConfig config;
  std::vector<BatteryCorpusResult> corpora;
};

using ProgressFn = std::function<void(const std::string &)>;

BatteryResult run_battery(const std::vector<BatteryCorpus> &corpora,
                          const BatteryConfig &config,
                          const ProgressFn &progress = {});

nlohmann::json to_json(const BatteryResult &result);

// Three tables: probe error (active features) per label and corpus for each
// c; continuous versus one-hot K-unit probe error; ABX error per corpus for
// continuous frames and each k.
std::string battery_markdown(const BatteryResult &result);

}  // namespace phoneprobe

#endif  // PHONEPROBE_BATTERY_H_
