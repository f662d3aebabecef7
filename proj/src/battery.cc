// src/battery.cc

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

#include "phoneprobe/battery.h"

#include <charconv>
#include <cstdio>

#include "phoneprobe/pooling.h"

namespace phoneprobe {

namespace {

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string c_label(std::optional<double> c) {
  if (!c) return "LogReg";
  char buf[400];
  auto res = std::to_chars(buf, buf + sizeof(buf), *c, std::chars_format::fixed);
  return "LogReg+l1 C=" + std::string(buf, res.ptr);
}

nlohmann::json c_json(std::optional<double> c) {
  return c ? nlohmann::json(*c) : nlohmann::json(nullptr);
}

std::optional<AbxResult> try_abx(const FeatureArchive &archive,
                                 const AlignmentTable &alignments, AbxMode mode,
                                 const BatteryConfig &config) {
  try {
    return score_abx(archive, alignments, mode, config.abx_max_per_phone,
                     config.seed);
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::kNoCells) throw;
    return std::nullopt;
  }
}

}  // namespace

nlohmann::json BatteryConfig::to_json() const {
  nlohmann::json j;
  j["c_grid"] = nlohmann::json::array();
  for (const auto &c : c_grid) j["c_grid"].push_back(c_json(c));
  j["k_list"] = k_list;
  j["train_fraction"] = train_fraction;
  j["seed"] = seed;
  j["probe_max_iters"] = probe.max_iters;
  j["probe_tol"] = probe.tol;
  j["kmeans_restarts"] = kmeans.n_restarts;
  j["kmeans_max_iters"] = kmeans.max_iters;
  j["kmeans_max_frames"] = kmeans.max_frames;
  j["abx_max_per_phone"] = abx_max_per_phone;
  j["chance_draws"] = chance_draws;
  return j;
}

const ProbeReport &BatteryCorpusResult::probe(LabelKind kind,
                                              std::optional<double> c) const {
  for (const ProbeReport &r : probes)
    if (r.label_kind == kind && r.c == c) return r;
  throw Error(ErrorKind::kInvalidArgument,
              "no probe for " + to_string(kind) + " at " + c_label(c));
}

const ProbeReport &BatteryCorpusResult::quantized_probe(int k,
                                                        LabelKind kind) const {
  auto it = quantized_probes.find(k);
  if (it != quantized_probes.end())
    for (const ProbeReport &r : it->second)
      if (r.label_kind == kind) return r;
  throw Error(ErrorKind::kInvalidArgument,
              "no K" + std::to_string(k) + " probe for " + to_string(kind));
}

BatteryResult run_battery(const std::vector<BatteryCorpus> &corpora,
                          const BatteryConfig &config,
                          const ProgressFn &progress) {
  if (corpora.empty())
    throw Error(ErrorKind::kInvalidArgument, "battery needs at least one corpus");
  if (config.c_grid.empty() || config.k_list.empty())
    throw Error(ErrorKind::kInvalidArgument, "empty c grid or k list");
  auto say = [&](const std::string &msg) {
    if (progress) progress(msg);
  };

  BatteryResult result;
  result.config = config;
  for (const BatteryCorpus &corpus : corpora) {
    BatteryCorpusResult out;
    out.name = corpus.name;
    PooledDataset pooled = mean_pool(corpus.archive, corpus.alignments);
    out.n_tokens = static_cast<int64_t>(pooled.size());

    for (LabelKind kind : kAllLabelKinds)
      for (const auto &c : config.c_grid) {
        say(corpus.name + ": probe " + to_string(kind) + " " + c_label(c));
        out.probes.push_back(run_probe(pooled, kind, c, config.train_fraction,
                                       config.seed, config.probe,
                                       config.chance_draws)
                                 .report);
      }

    say(corpus.name + ": ABX continuous");
    out.abx_continuous = try_abx(corpus.archive, corpus.alignments,
                                 AbxMode::kContinuous, config);

    const FeatureArchive &fit_on =
        corpus.fit_archive ? *corpus.fit_archive : corpus.archive;
    for (int k : config.k_list) {
      say(corpus.name + ": k-means K" + std::to_string(k));
      KMeansModel model = fit_kmeans(fit_on, k, config.seed, config.kmeans);
      out.kmeans_inertia[k] = model.inertia;
      ClusterAssignment ids = assign(model, corpus.archive);
      PooledDataset onehot = one_hot_pool(ids, corpus.alignments);
      for (LabelKind kind : kAllLabelKinds) {
        say(corpus.name + ": K" + std::to_string(k) + " probe " + to_string(kind));
        out.quantized_probes[k].push_back(
            run_probe(onehot, kind, std::nullopt, config.train_fraction,
                      config.seed, config.probe, config.chance_draws)
                .report);
      }
      say(corpus.name + ": ABX K" + std::to_string(k));
      auto abx = try_abx(onehot_frames(ids), corpus.alignments, AbxMode::kOneHot,
                         config);
      if (abx) out.abx_onehot.emplace(k, std::move(*abx));
    }
    result.corpora.push_back(std::move(out));
  }
  return result;
}

nlohmann::json to_json(const BatteryResult &result) {
  nlohmann::json j;
  j["config"] = result.config.to_json();
  j["corpora"] = nlohmann::json::array();
  for (const BatteryCorpusResult &c : result.corpora) {
    nlohmann::json jc;
    jc["name"] = c.name;
    jc["n_tokens"] = c.n_tokens;
    jc["probes"] = nlohmann::json::array();
    for (const ProbeReport &r : c.probes) jc["probes"].push_back(to_json(r));
    jc["quantized"] = nlohmann::json::array();
    for (const auto &[k, reports] : c.quantized_probes) {
      nlohmann::json jk;
      jk["k"] = k;
      jk["kmeans_inertia"] = c.kmeans_inertia.at(k);
      jk["probes"] = nlohmann::json::array();
      for (const ProbeReport &r : reports) jk["probes"].push_back(to_json(r));
      auto abx = c.abx_onehot.find(k);
      jk["abx"] = abx != c.abx_onehot.end() ? to_json(abx->second)
                                             : nlohmann::json(nullptr);
      jc["quantized"].push_back(std::move(jk));
    }
    jc["abx_continuous"] =
        c.abx_continuous ? to_json(*c.abx_continuous) : nlohmann::json(nullptr);
    j["corpora"].push_back(std::move(jc));
  }
  return j;
}

std::string battery_markdown(const BatteryResult &result) {
  const BatteryConfig &cfg = result.config;
  const auto &corpora = result.corpora;
  std::string md;

  auto header = [&](const std::string &first) {
    std::string line = "| " + first + " |", rule = "|---|";
    for (LabelKind kind : kAllLabelKinds)
      for (const auto &c : corpora) {
        line += " " + to_string(kind) + ": " + c.name + " |";
        rule += "---|";
      }
    md += line + "\n" + rule + "\n";
  };

  md += "## Probe error (%) on pooled continuous features, active features in "
        "parentheses\n\n";
  header("");
  for (const auto &c : cfg.c_grid) {
    md += "| " + c_label(c) + " |";
    for (LabelKind kind : kAllLabelKinds)
      for (const auto &corpus : corpora) {
        const ProbeReport &r = corpus.probe(kind, c);
        md += " " + fixed1(r.error_pct) + " (" +
              std::to_string(r.n_active_features) + ") |";
      }
    md += "\n";
  }

  md += "\n## Probe error (%) on continuous features and on one-hot pooled "
        "k-means units\n\n";
  header("");
  md += "| Continuous |";
  for (LabelKind kind : kAllLabelKinds)
    for (const auto &corpus : corpora)
      md += " " + fixed1(corpus.probe(kind, std::nullopt).error_pct) + " |";
  md += "\n";
  for (int k : cfg.k_list) {
    md += "| K" + std::to_string(k) + " |";
    for (LabelKind kind : kAllLabelKinds)
      for (const auto &corpus : corpora)
        md += " " + fixed1(corpus.quantized_probe(k, kind).error_pct) + " |";
    md += "\n";
  }

  md += "\n## Within-speaker ABX error (%)\n\n| | Continuous |";
  std::string rule = "|---|---|";
  for (int k : cfg.k_list) {
    md += " K" + std::to_string(k) + " |";
    rule += "---|";
  }
  md += "\n" + rule + "\n";
  for (const auto &corpus : corpora) {
    md += "| " + corpus.name + " | " +
          (corpus.abx_continuous ? fixed1(corpus.abx_continuous->error_pct)
                                 : std::string("n/a")) +
          " |";
    for (int k : cfg.k_list) {
      auto it = corpus.abx_onehot.find(k);
      md += " " +
            (it != corpus.abx_onehot.end() ? fixed1(it->second.error_pct)
                                           : std::string("n/a")) +
            " |";
    }
    md += "\n";
  }
  return md;
}

}  // namespace phoneprobe
