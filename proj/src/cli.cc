// src/cli.cc

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

#include "phoneprobe/cli.h"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "phoneprobe/abx.h"
#include "phoneprobe/battery.h"
#include "phoneprobe/embed2d.h"
#include "phoneprobe/pooling.h"
#include "phoneprobe/probe.h"
#include "phoneprobe/quantize.h"
#include "phoneprobe/synth.h"

namespace phoneprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string out_dir;
  uint64_t seed = 0;
};

void write_json(const fs::path &path, const json &j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Effective value of every option of `app`, given or defaulted.
// Numbers as JSON numbers, everything else as strings.
json typed_value(const std::string &text) {
  if (!text.empty()) {
    char *end = nullptr;
    errno = 0;
    long long i = std::strtoll(text.c_str(), &end, 10);
    if (*end == '\0' && errno == 0) return i;
    double d = std::strtod(text.c_str(), &end);
    if (*end == '\0' && errno == 0 && std::isfinite(d)) return d;
  }
  return text;
}

// Every option of the subcommand with its given or default value, keyed by
// the long name with dashes replaced by underscores.
json effective_params(const CLI::App *app) {
  json params = json::object();
  for (const CLI::Option *opt : app->get_options()) {
    std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    std::replace(name.begin(), name.end(), '-', '_');
    const auto &given = opt->results();
    if (opt->get_type_size() == 0) {
      params[name] = !given.empty();
    } else if (!given.empty()) {
      if (opt->get_expected_max() > 1 || given.size() > 1) {
        params[name] = json::array();
        for (const std::string &g : given) params[name].push_back(typed_value(g));
      } else {
        params[name] = typed_value(given.front());
      }
    } else {
      std::string d = opt->get_default_str();
      params[name] = d.empty() ? json(nullptr) : typed_value(d);
    }
  }
  return params;
}

std::vector<std::string> split_list(const std::string &text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_positive(const std::string &text, const std::string &what) {
  try {
    size_t used = 0;
    double v = std::stod(text, &used);
    if (used == text.size() && v > 0.0) return v;
  } catch (const std::exception &) {
  }
  throw Error(ErrorKind::kInvalidArgument,
              "bad " + what + " '" + text + "' (expected a positive number)");
}

// "none" (or "inf") means no regularisation.
std::vector<std::optional<double>> parse_c_grid(const std::string &text) {
  std::vector<std::optional<double>> out;
  for (const std::string &item : split_list(text)) {
    if (item == "none" || item == "inf")
      out.push_back(std::nullopt);
    else
      out.push_back(parse_positive(item, "C value"));
  }
  if (out.empty()) throw Error(ErrorKind::kInvalidArgument, "empty C grid");
  return out;
}

std::vector<int> parse_k_list(const std::string &text) {
  std::vector<int> out;
  for (const std::string &item : split_list(text)) {
    double v = parse_positive(item, "k");
    if (v != static_cast<int>(v))
      throw Error(ErrorKind::kInvalidArgument, "k must be an integer: " + item);
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw Error(ErrorKind::kInvalidArgument, "empty k list");
  return out;
}

json model_json(const ProbeModel &m) {
  json j;
  j["label_kind"] = to_string(m.label_kind);
  j["classes"] = m.classes;
  j["c"] = m.c ? json(*m.c) : json(nullptr);
  j["lambda"] = m.lambda;
  j["converged"] = m.converged;
  j["n_iters"] = m.n_iters;
  j["grad_norm"] = m.grad_norm;
  j["objective"] = m.objective;
  j["weights"] = json::array();
  for (int64_t r = 0; r < m.weights.rows(); ++r) {
    std::vector<double> row(m.weights.cols());
    for (int64_t c = 0; c < m.weights.cols(); ++c) row[c] = m.weights(r, c);
    j["weights"].push_back(row);
  }
  j["bias"] = std::vector<double>(m.bias.data(), m.bias.data() + m.bias.size());
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string> &args) {
  CLI::App app{"phoneprobe: probing, clustering and ABX analysis of frame-level "
               "speech representations"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  Common common;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--out-dir", common.out_dir, "Output directory")->required();
  };

  // pool
  std::string pool_archive, pool_alignments, pool_assign;
  bool pool_onehot = false;
  CLI::App *pool = app.add_subcommand("pool", "Pool frames into one vector per phone token");
  pool->add_option("--archive", pool_archive, "Feature archive directory")
      ->check(CLI::ExistingDirectory);
  pool->add_option("--alignments", pool_alignments, "Alignment CSV")
      ->required()
      ->check(CLI::ExistingFile);
  pool->add_flag("--onehot", pool_onehot, "Histogram of cluster ids instead of mean");
  pool->add_option("--assign", pool_assign, "Cluster assignment directory (with --onehot)")
      ->check(CLI::ExistingDirectory);
  add_common(pool);

  // probe
  std::string probe_pooled, probe_label, probe_c;
  double train_fraction = 0.85;
  ProbeOptions probe_opts;
  int chance_draws = 1000;
  CLI::App *probe = app.add_subcommand("probe", "Train and evaluate a logistic-regression probe");
  probe->add_option("--pooled", probe_pooled, "Pooled dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  probe->add_option("--label", probe_label, "phone_class, gender or language")->required();
  probe->add_option("--c", probe_c, "Inverse l1 strength; omit or 'none' for no penalty")
      ->default_str("none");
  probe->add_option("--train-fraction", train_fraction)->capture_default_str();
  probe->add_option("--seed", common.seed, "Split seed")->capture_default_str();
  probe->add_option("--max-iters", probe_opts.max_iters)->capture_default_str();
  probe->add_option("--tol", probe_opts.tol)->capture_default_str();
  probe->add_option("--chance-draws", chance_draws)->capture_default_str();
  add_common(probe);

  // path
  std::string path_pooled, path_label = "language",
                           path_grid = "0.0001,0.0002,0.0005,0.001,0.002,0.005,"
                                       "0.01,0.02,0.05,0.1,0.2,0.5,1";
  CLI::App *path = app.add_subcommand("path", "Accuracy and active features along a C grid");
  path->add_option("--pooled", path_pooled)->required()->check(CLI::ExistingDirectory);
  path->add_option("--label", path_label)->capture_default_str();
  path->add_option("--c-grid", path_grid, "Comma-separated ascending C values")
      ->capture_default_str();
  path->add_option("--train-fraction", train_fraction)->capture_default_str();
  path->add_option("--seed", common.seed)->capture_default_str();
  path->add_option("--max-iters", probe_opts.max_iters)->capture_default_str();
  path->add_option("--tol", probe_opts.tol)->capture_default_str();
  add_common(path);

  // quantize fit | apply
  CLI::App *quantize = app.add_subcommand("quantize", "k-means units");
  quantize->require_subcommand(1);
  std::string fit_on;
  int k = 50;
  KMeansOptions km_opts;
  CLI::App *qfit = quantize->add_subcommand("fit", "Fit k-means on frames");
  qfit->add_option("--fit-on", fit_on, "Archive whose frames are clustered")
      ->required()
      ->check(CLI::ExistingDirectory);
  qfit->add_option("--k", k)->capture_default_str();
  qfit->add_option("--seed", common.seed)->capture_default_str();
  qfit->add_option("--restarts", km_opts.n_restarts)->capture_default_str();
  qfit->add_option("--max-iters", km_opts.max_iters)->capture_default_str();
  qfit->add_option("--max-frames", km_opts.max_frames, "Reservoir sample size, 0 = all")
      ->capture_default_str();
  add_common(qfit);
  std::string apply_model, apply_archive;
  CLI::App *qapply = quantize->add_subcommand("apply", "Assign every frame to a cluster");
  qapply->add_option("--model", apply_model, "Directory written by quantize fit")
      ->required()
      ->check(CLI::ExistingDirectory);
  qapply->add_option("--archive", apply_archive)->required()->check(CLI::ExistingDirectory);
  add_common(qapply);

  // abx
  std::string abx_archive, abx_assign, abx_alignments;
  int max_per_phone = 10;
  CLI::App *abx = app.add_subcommand("abx", "Within-speaker phone ABX error");
  abx->add_option("--archive", abx_archive, "Continuous features")
      ->check(CLI::ExistingDirectory);
  abx->add_option("--assign", abx_assign, "Cluster ids (one-hot mode)")
      ->check(CLI::ExistingDirectory);
  abx->add_option("--alignments", abx_alignments)->required()->check(CLI::ExistingFile);
  abx->add_option("--max-per-phone", max_per_phone)->capture_default_str();
  abx->add_option("--seed", common.seed)->capture_default_str();
  add_common(abx);

  // tsne
  std::string tsne_pooled;
  TsneOptions tsne_opts;
  CLI::App *tsne_cmd = app.add_subcommand("tsne", "2-D t-SNE maps coloured by each label");
  tsne_cmd->add_option("--pooled", tsne_pooled)->required()->check(CLI::ExistingDirectory);
  tsne_cmd->add_option("--subset-n", tsne_opts.subset_n,
                       "Tokens embedded (clamped to the dataset size)")
      ->capture_default_str();
  tsne_cmd->add_option("--perplexity", tsne_opts.perplexity)->capture_default_str();
  tsne_cmd->add_option("--iters", tsne_opts.n_iters)->capture_default_str();
  tsne_cmd->add_option("--seed", common.seed)->capture_default_str();
  add_common(tsne_cmd);

  // synth
  std::string synth_preset, synth_profile;
  std::optional<uint64_t> synth_seed;
  CLI::App *synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  auto *preset_opt = synth->add_option(
      "--preset", synth_preset, "concentrated, diffuse, noise or identical");
  synth->add_option("--profile", synth_profile, "Profile JSON")
      ->check(CLI::ExistingFile)
      ->excludes(preset_opt);
  synth->add_option("--seed", synth_seed, "Overrides the profile seed");
  add_common(synth);

  // battery
  std::vector<std::string> corpus_specs;
  std::string c_grid = "none,0.001,0.0001", k_list = "50,100,200";
  BatteryConfig bcfg;
  CLI::App *battery = app.add_subcommand("battery", "Full probe, k-means and ABX grid");
  battery
      ->add_option("--corpus", corpus_specs,
                   "NAME:ARCHIVE:ALIGNMENTS[:FIT_ON], repeatable")
      ->required();
  battery->add_option("--c-grid", c_grid)->capture_default_str();
  battery->add_option("--k-list", k_list)->capture_default_str();
  battery->add_option("--train-fraction", bcfg.train_fraction)->capture_default_str();
  battery->add_option("--seed", bcfg.seed)->capture_default_str();
  battery->add_option("--max-iters", bcfg.probe.max_iters)->capture_default_str();
  battery->add_option("--tol", bcfg.probe.tol)->capture_default_str();
  battery->add_option("--restarts", bcfg.kmeans.n_restarts)->capture_default_str();
  battery->add_option("--kmeans-max-iters", bcfg.kmeans.max_iters)->capture_default_str();
  battery->add_option("--max-frames", bcfg.kmeans.max_frames)->capture_default_str();
  battery->add_option("--max-per-phone", bcfg.abx_max_per_phone)->capture_default_str();
  battery->add_option("--chance-draws", bcfg.chance_draws)->capture_default_str();
  add_common(battery);

  // replay
  std::string replay_run, replay_out;
  CLI::App *replay = app.add_subcommand("replay", "Re-run the command recorded in a run.json");
  replay->add_option("--run", replay_run, "run.json file")->required()->check(CLI::ExistingFile);
  replay->add_option("--out-dir", replay_out, "Output directory (default: the recorded one)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (replay->parsed()) {
      json recorded = json::parse(read_file(replay_run));
      std::vector<std::string> argv = recorded.at("argv").get<std::vector<std::string>>();
      if (!replay_out.empty())
        for (size_t i = 0; i + 1 < argv.size(); ++i)
          if (argv[i] == "--out-dir") argv[i + 1] = replay_out;
      return run_cli(argv);
    }

    const CLI::App *leaf = app.get_subcommands().front();
    if (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands().front();
    const fs::path out(common.out_dir);
    fs::create_directories(out);
    json params = effective_params(leaf);
    json extra = json::object();

    if (pool->parsed()) {
      PooledDataset data;
      if (pool_onehot) {
        if (pool_assign.empty())
          throw Error(ErrorKind::kInvalidArgument, "--onehot needs --assign");
        ClusterAssignment ids = load_assignment(pool_assign);
        data = one_hot_pool(ids, load_alignments(pool_alignments, frame_counts(ids)));
      } else {
        if (pool_archive.empty())
          throw Error(ErrorKind::kInvalidArgument, "pool needs --archive (or --onehot --assign)");
        FeatureArchive archive = load_archive(pool_archive);
        data = mean_pool(archive, load_alignments(pool_alignments, archive));
      }
      save_pooled(data, out);
      extra["n_tokens"] = data.size();
      extra["dim"] = data.dim();
    } else if (probe->parsed()) {
      LabelKind kind = parse_label_kind(probe_label);
      std::optional<double> c;
      if (!probe_c.empty() && probe_c != "none" && probe_c != "inf")
        c = parse_positive(probe_c, "C");
      PooledDataset data = load_pooled(probe_pooled);
      ProbeRun r = run_probe(data, kind, c, train_fraction, common.seed, probe_opts,
                             chance_draws);
      write_json(out / "report.json", to_json(r.report));
      write_json(out / "model.json", model_json(r.model));
      if (!r.report.converged)
        std::cerr << "phoneprobe: WARNING: probe did not converge in "
                  << r.report.n_iters << " iterations (grad norm "
                  << r.report.grad_norm << ")\n";
    } else if (path->parsed()) {
      LabelKind kind = parse_label_kind(path_label);
      std::vector<double> grid;
      for (const auto &c : parse_c_grid(path_grid)) {
        if (!c) throw Error(ErrorKind::kInvalidArgument, "path grid needs finite C values");
        grid.push_back(*c);
      }
      RegPathCurve curve = reg_path(load_pooled(path_pooled), kind, grid,
                                    train_fraction, common.seed, probe_opts);
      write_file_atomic(out / "path.csv", path_csv(curve));
      json j;
      j["label_kind"] = to_string(kind);
      j["points"] = json::array();
      for (const RegPathPoint &p : curve.points)
        j["points"].push_back({{"c", p.c},
                               {"accuracy_pct", p.accuracy_pct},
                               {"n_active_features", p.n_active_features},
                               {"converged", p.converged}});
      write_json(out / "path.json", j);
    } else if (qfit->parsed()) {
      KMeansModel model = fit_kmeans(load_archive(fit_on), k, common.seed, km_opts);
      save_kmeans(model, out);
      extra["inertia"] = model.inertia;
    } else if (qapply->parsed()) {
      KMeansModel model = load_kmeans(apply_model);
      ClusterAssignment ids = assign(model, load_archive(apply_archive));
      save_assignment(ids, out);
    } else if (abx->parsed()) {
      if (abx_archive.empty() == abx_assign.empty())
        throw Error(ErrorKind::kInvalidArgument,
                    "abx needs exactly one of --archive (continuous) or --assign (onehot)");
      FeatureArchive frames;
      AbxMode mode = AbxMode::kContinuous;
      if (!abx_assign.empty()) {
        frames = onehot_frames(load_assignment(abx_assign));
        mode = AbxMode::kOneHot;
      } else {
        frames = load_archive(abx_archive);
      }
      AlignmentTable al = load_alignments(abx_alignments, frames);
      AbxResult r = score_abx(frames, al, mode, max_per_phone, common.seed);
      write_json(out / "abx.json", to_json(r));
      write_file_atomic(out / "abx_pairs.csv", pair_csv(r));
    } else if (tsne_cmd->parsed()) {
      PooledDataset data = load_pooled(tsne_pooled);
      tsne_opts.seed = common.seed;
      if (tsne_opts.subset_n > static_cast<int64_t>(data.size()))
        tsne_opts.subset_n = static_cast<int64_t>(data.size());
      extra["subset_n_effective"] = tsne_opts.subset_n;
      Embedding2D e = tsne(data, tsne_opts);
      write_json(out / "embedding.json", to_json(e));
      write_file_atomic(out / "coords.csv", coords_csv(e, data.tokens));
      for (LabelKind kind : kAllLabelKinds)
        export_scatter(e, data.tokens, kind, out / ("scatter_" + to_string(kind)));
    } else if (synth->parsed()) {
      SynthProfile profile;
      if (!synth_profile.empty())
        profile = profile_from_json(json::parse(read_file(synth_profile)));
      else if (!synth_preset.empty())
        profile = preset_profile(synth_preset);
      else
        throw Error(ErrorKind::kInvalidArgument, "synth needs --preset or --profile");
      if (synth_seed) profile.seed = *synth_seed;
      auto [archive, al] = generate(profile);
      save_archive(archive, out / "archive");
      save_alignments(al.tokens, out / "alignments.csv");
      write_json(out / "profile.json", to_json(profile));
      extra["n_tokens"] = al.tokens.size();
      extra["n_frames"] = archive.total_frames();
    } else if (battery->parsed()) {
      bcfg.c_grid = parse_c_grid(c_grid);
      bcfg.k_list = parse_k_list(k_list);
      std::vector<BatteryCorpus> corpora;
      for (const std::string &spec : corpus_specs) {
        std::vector<std::string> parts = split_list(spec, ':');
        if (parts.size() < 3 || parts.size() > 4)
          throw Error(ErrorKind::kInvalidArgument,
                      "bad --corpus '" + spec + "' (expected NAME:ARCHIVE:ALIGNMENTS[:FIT_ON])");
        BatteryCorpus c;
        c.name = parts[0];
        c.archive = load_archive(parts[1]);
        c.alignments = load_alignments(parts[2], c.archive);
        if (parts.size() == 4) c.fit_archive = load_archive(parts[3]);
        corpora.push_back(std::move(c));
      }
      BatteryResult r = run_battery(corpora, bcfg, [](const std::string &msg) {
        std::cerr << "phoneprobe battery: " << msg << "\n";
      });
      write_json(out / "battery.json", to_json(r));
      write_file_atomic(out / "battery.md", battery_markdown(r));
    }

    json run;
    run["command"] = leaf == app.get_subcommands().front()
                         ? leaf->get_name()
                         : app.get_subcommands().front()->get_name() + " " +
                               leaf->get_name();
    run["argv"] = args;
    run["params"] = params;
    run["derived"] = extra;
    run["timestamp"] = utc_timestamp();
    write_json(out / "run.json", run);
    return 0;
  } catch (const Error &e) {
    std::cerr << "phoneprobe: ERROR: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const json::exception &e) {
    std::cerr << "phoneprobe: ERROR: malformed JSON: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "phoneprobe: ERROR: " << e.what() << "\n";
    return 2;
  }
}

int run_cli(int argc, const char *const *argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args);
}

}  // namespace phoneprobe
