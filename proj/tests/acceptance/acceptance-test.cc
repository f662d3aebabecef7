// tests/acceptance/acceptance-test.cc

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

// Acceptance suite: one PASS/FAIL line per acceptance criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "oracles.h"
#include "phoneprobe/abx.h"
#include "phoneprobe/battery.h"
#include "phoneprobe/embed2d.h"
#include "phoneprobe/pooling.h"
#include "phoneprobe/probe.h"
#include "phoneprobe/quantize.h"
#include "phoneprobe/synth.h"
#include "unit/test-util.h"

using namespace phoneprobe;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

// Corpora shared between criteria.
struct Corpora {
  FeatureArchive conc_archive;
  AlignmentTable conc_alignments;
  PooledDataset conc_pooled;
};

Corpora &shared() {
  static Corpora c = [] {
    Corpora out;
    auto [a, t] = generate(preset_profile("concentrated", 0));
    out.conc_pooled = mean_pool(a, t);
    out.conc_archive = std::move(a);
    out.conc_alignments = std::move(t);
    return out;
  }();
  return c;
}

// 1. Oracle equivalence.
void oracle_equivalence(Outcome &o) {
  auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 6);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int pair = 0; pair < 200; ++pair) {
    Eigen::MatrixXd x(len(rng), 3), y(len(rng), 3);
    for (int64_t i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    for (int64_t i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
    worst = std::max(worst, std::abs(dtw_distance(x, y) - oracle::dtw_bruteforce(x, y)));
  }
  double t_dtw = seconds_since(t0);
  o.detail << "dtw max diff " << worst << " over 200 pairs (" << fmt(t_dtw) << " s)";
  o.require(worst < 1e-9, "dtw within 1e-9");
  o.require(t_dtw < 60, "dtw suite under 60 s");

  t0 = Clock::now();
  FeatureArchive line;
  line.dim = 1;
  line.utterances["u"] = FeatureMatrix(4, 1);
  line.utterances["u"] << 0, 1, 10, 11;
  KMeansModel km = fit_kmeans(line, 2, 0);
  double t_km = seconds_since(t0);
  o.detail << "; k-means inertia " << km.inertia << " (oracle "
           << oracle::kmeans_bruteforce_1d({0, 1, 10, 11}, 2) << ", " << fmt(t_km) << " s)";
  o.require(km.inertia == 1.0, "k-means inertia exactly 1.0");
  o.require(t_km < 60, "k-means suite under 60 s");

  t0 = Clock::now();
  Eigen::MatrixXd x = oracle::symmetric_probe_features(3);
  PooledDataset d;
  d.vectors = x;
  for (int i = 0; i < 40; ++i)
    d.tokens.push_back(phoneprobe::testing::make_token(
        "t" + std::to_string(i), "u", "a", "vowel", i, i + 1, "s", "female",
        i % 2 == 0 ? "1" : "0"));
  const double c = 0.2;
  ProbeModel m = train_probe(d, LabelKind::kLanguage, c);
  double grid = oracle::grid_search_probe(x, m.lambda);
  double t_probe = seconds_since(t0);
  o.detail << "; probe objective " << fmt(m.objective, 6) << " vs grid " << fmt(grid, 6)
           << " (" << fmt(t_probe) << " s)";
  o.require(m.objective <= grid + 1e-3, "probe objective within 1e-3 of grid");
  o.require(t_probe < 60, "probe suite under 60 s");
}

// 2. Trivial limits.
void trivial_limits(Outcome &o) {
  auto [ia, it] = generate(preset_profile("identical", 0));
  double abx_identical = score_abx(ia, it, AbxMode::kContinuous).error_pct;
  o.detail << "identical ABX " << fmt(abx_identical);
  o.require(abx_identical == 0.0, "identical ABX is 0");

  auto [na, nt] = generate(preset_profile("noise", 0));
  double abx_noise = score_abx(na, nt, AbxMode::kContinuous).error_pct;
  o.detail << "; noise ABX " << fmt(abx_noise);
  o.require(std::abs(abx_noise - 50.0) <= 3.0, "noise ABX within 50 +- 3");

  PooledDataset noise = mean_pool(na, nt);
  for (LabelKind kind : kAllLabelKinds) {
    ProbeRun r = run_probe(noise, kind, std::nullopt, 0.85, 0);
    o.detail << "; noise " << to_string(kind) << " probe " << fmt(r.report.error_pct)
             << " vs chance " << fmt(r.report.chance_error_pct);
    o.require(std::abs(r.report.error_pct - r.report.chance_error_pct) <= 5.0,
              to_string(kind) + " probe within 5 points of chance");
  }

  PooledDataset zero = noise;
  zero.vectors.setZero();
  int zero_active =
      count_active_features(train_probe(zero, LabelKind::kGender, 1.0));
  int noise_active =
      count_active_features(train_probe(noise, LabelKind::kGender, 0.0001));
  o.detail << "; active features zero-signal " << zero_active << ", noise " << noise_active;
  o.require(zero_active == 0 && noise_active == 0, "no active features without signal");
}

// Best accuracy among path points using at most `budget` features.
double accuracy_at_budget(const RegPathCurve &curve, int budget, int *active) {
  double best = 0.0;
  *active = 0;
  for (const RegPathPoint &p : curve.points)
    if (p.n_active_features <= budget && p.accuracy_pct >= best) {
      best = p.accuracy_pct;
      *active = p.n_active_features;
    }
  return best;
}

// 3. Concentrated versus diffuse language code.
void concentrated_vs_diffuse(Outcome &o) {
  auto t0 = Clock::now();
  const std::vector<double> grid = {1e-4, 2e-4, 3e-4, 5e-4, 7e-4, 1e-3, 2e-3, 5e-3, 1e-2};
  const PooledDataset &conc = shared().conc_pooled;
  auto [da, dt] = generate(preset_profile("diffuse", 0));
  PooledDataset diff = mean_pool(da, dt);
  RegPathCurve pc = reg_path(conc, LabelKind::kLanguage, grid, 0.85, 0);
  RegPathCurve pd = reg_path(diff, LabelKind::kLanguage, grid, 0.85, 0);
  int ac = 0, ad = 0;
  double acc_c = accuracy_at_budget(pc, 2, &ac), acc_d = accuracy_at_budget(pd, 2, &ad);
  double t = seconds_since(t0);
  o.detail << "tokens " << conc.size() << "/" << diff.size() << ", dim " << conc.dim()
           << "; concentrated " << fmt(acc_c) << "% with " << ac
           << " features; diffuse " << fmt(acc_d) << "% with " << ad << " ("
           << fmt(t) << " s)";
  o.require(acc_c >= 85.0, "concentrated >= 85% with <= 2 features");
  o.require(acc_c - acc_d >= 15.0, "diffuse loses >= 15 points");
  o.require(t < 300, "under 5 minutes");
}

BatteryResult &battery() {
  static BatteryResult r = [] {
    Corpora &c = shared();
    BatteryCorpus corpus{"synth", c.conc_archive, c.conc_alignments, std::nullopt};
    BatteryConfig cfg;
    cfg.kmeans.n_restarts = 2;
    cfg.kmeans.max_frames = 20000;
    return run_battery({corpus}, cfg, [](const std::string &msg) {
      std::fprintf(stderr, "  battery: %s\n", msg.c_str());
    });
  }();
  return r;
}

// 4. Discretisation costs information.
void discretisation(Outcome &o) {
  const BatteryCorpusResult &r = battery().corpora.front();
  for (LabelKind kind : kAllLabelKinds) {
    double cont = r.probe(kind, std::nullopt).error_pct;
    double k50 = r.quantized_probe(50, kind).error_pct;
    o.detail << to_string(kind) << " " << fmt(cont) << " -> K50 " << fmt(k50) << "; ";
    o.require(k50 > cont, to_string(kind) + " K50 error above continuous");
  }
  double abx_c = r.abx_continuous ? r.abx_continuous->error_pct : NAN;
  double abx_k = r.abx_onehot.count(50) ? r.abx_onehot.at(50).error_pct : NAN;
  o.detail << "ABX " << fmt(abx_c) << " vs K50 " << fmt(abx_k) << "; ";
  o.require(abx_c < abx_k, "continuous ABX below one-hot ABX");
  double g50 = r.quantized_probe(50, LabelKind::kGender).error_pct;
  double g200 = r.quantized_probe(200, LabelKind::kGender).error_pct;
  double drop = g50 > 0 ? (g50 - g200) / g50 : 0.0;
  o.detail << "gender K50 " << fmt(g50) << " -> K200 " << fmt(g200) << " (relative drop "
           << fmt(100 * drop, 1) << "%)";
  o.require(drop >= 0.10, "gender error falls >= 10% from K50 to K200");
}

// 5. Invariants.
void invariants(Outcome &o) {
  auto t0 = Clock::now();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  int checks = 0;

  bool lloyd = true;
  for (int trial = 0; trial < 10; ++trial) {
    FeatureArchive a = phoneprobe::testing::random_archive(rng, 5, 4, 40);
    KMeansOptions opts;
    opts.n_restarts = 1;
    KMeansModel m = fit_kmeans(a, 3 + trial % 5, trial, opts);
    for (size_t i = 1; i < m.inertia_trace.size(); ++i)
      lloyd = lloyd && m.inertia_trace[i] <= m.inertia_trace[i - 1] * (1 + 1e-12);
    ++checks;
  }
  o.require(lloyd, "Lloyd monotonicity");

  bool prox = true;
  for (int trial = 0; trial < 10; ++trial) {
    PooledDataset d;
    d.vectors.resize(90, 5);
    for (int64_t i = 0; i < d.vectors.size(); ++i) d.vectors.data()[i] = g(rng);
    for (int i = 0; i < 90; ++i) {
      d.vectors(i, i % 3) += 1.5;
      d.tokens.push_back(phoneprobe::testing::make_token(
          "t" + std::to_string(i), "u", "a", "vowel", i, i + 1, "s", "female",
          "l" + std::to_string(i % 3)));
    }
    ProbeOptions opts;
    opts.record_trace = true;
    opts.max_iters = 500;
    std::optional<double> c;
    if (trial % 2) c = 0.05;
    ProbeModel m = train_probe(d, LabelKind::kLanguage, c, opts);
    for (size_t i = 1; i < m.objective_trace.size(); ++i)
      prox = prox && m.objective_trace[i] <= m.objective_trace[i - 1];
    ++checks;
  }
  o.require(prox, "proximal objective monotonicity");

  bool dtw = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> len(1, 12);
    Eigen::MatrixXd x(len(rng), 4), y(len(rng), 4), r(4, 4);
    for (int64_t i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    for (int64_t i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
    for (int64_t i = 0; i < r.size(); ++i) r.data()[i] = g(rng);
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(r).householderQ();
    double dxy = dtw_distance(x, y);
    dtw = dtw && std::abs(dxy - dtw_distance(y, x)) < 1e-12 &&
          std::abs(dxy - dtw_distance(x * q, y * q)) < 1e-9;
    ++checks;
  }
  o.require(dtw, "DTW symmetry and rotation invariance");

  bool equivariant = true, rowsums = true;
  for (int trial = 0; trial < 10; ++trial) {
    FeatureArchive a = phoneprobe::testing::random_archive(rng, 4, 5, 25);
    for (auto &[id, m] : a.utterances) m = (m.array() * 1024.0f).round() / 1024.0f;
    AlignmentTable t = build_alignment_table(phoneprobe::testing::random_tiling(rng, a, 6),
                                             frame_counts(a));
    Eigen::RowVectorXf shift(5);
    for (int j = 0; j < 5; ++j) shift(j) = static_cast<float>(std::round(10 * g(rng)));
    FeatureArchive b = a;
    for (auto &[id, m] : b.utterances) m.rowwise() += shift;
    Eigen::MatrixXd expected = mean_pool(a, t).vectors;
    expected.rowwise() += shift.cast<double>();
    equivariant = equivariant &&
                  (mean_pool(b, t).vectors - expected).cwiseAbs().maxCoeff() < 1e-6;
    KMeansOptions opts;
    opts.n_restarts = 1;
    KMeansModel km = fit_kmeans(a, 4, trial, opts);
    PooledDataset oh = one_hot_pool(assign(km, a), t);
    for (int64_t i = 0; i < oh.size(); ++i)
      rowsums = rowsums && std::abs(oh.vectors.row(i).sum() - 1.0) < 1e-9 &&
                oh.vectors.row(i).minCoeff() >= 0.0;
    checks += 2;
  }
  o.require(equivariant, "pooling translation equivariance");
  o.require(rowsums, "one-hot row sums");

  bool split = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> labels;
    for (int i = 0; i < 200; ++i) labels.push_back("l" + std::to_string((i * 7 + trial) % 4));
    split = split && stratified_split(labels, 0.85, trial) ==
                         stratified_split(labels, 0.85, trial);
    ++checks;
  }
  o.require(split, "stratified-split determinism");

  double worst_perp = 0.0;
  bool tsne_shift = true;
  for (int trial = 0; trial < 3; ++trial) {
    PooledDataset d;
    std::uniform_int_distribution<int> v(-256, 256);
    d.vectors.resize(60, 4);
    for (int64_t i = 0; i < d.vectors.size(); ++i) d.vectors.data()[i] = v(rng) / 32.0;
    for (int i = 0; i < 60; ++i)
      d.tokens.push_back(phoneprobe::testing::make_token("t" + std::to_string(i), "u", "a",
                                                         "vowel", i, i + 1));
    std::vector<double> achieved;
    tsne_affinities(d.vectors, 10.0, &achieved);
    for (double a : achieved) worst_perp = std::max(worst_perp, std::abs(a - 10.0));
    PooledDataset s = d;
    s.vectors.array() += 7.0;
    TsneOptions opts;
    opts.subset_n = 60;
    opts.perplexity = 10.0;
    opts.n_iters = 200;
    opts.seed = trial;
    tsne_shift = tsne_shift &&
                 (tsne(d, opts).coords - tsne(s, opts).coords).cwiseAbs().maxCoeff() < 1e-9;
    checks += 2;
  }
  o.require(worst_perp < 1e-3, "t-SNE perplexity within 1e-3");
  o.require(tsne_shift, "t-SNE translation invariance");
  o.detail << checks << " seeded property checks; worst perplexity error " << worst_perp
           << " (" << fmt(seconds_since(t0)) << " s)";
}

// 6. Experiment grid.
void experiment_grid(Outcome &o) {
  const BatteryResult &r = battery();
  const BatteryCorpusResult &c = r.corpora.front();
  o.require(c.probes.size() == 9, "3 labels x 3 settings of continuous probes");
  o.require(c.quantized_probes.size() == 3, "K50, K100, K200 re-probes");
  for (const auto &[k, v] : c.quantized_probes) o.require(v.size() == 3, "3 labels per k");
  o.require(c.abx_continuous.has_value() && c.abx_onehot.size() == 3,
            "continuous and one-hot ABX");
  std::string md = battery_markdown(r);
  for (const char *row : {"| LogReg |", "| LogReg+l1 C=0.001 |", "| LogReg+l1 C=0.0001 |", "| Continuous |",
                          "| K50 |", "| K100 |", "| K200 |",
                          "| | Continuous | K50 | K100 | K200 |", "| synth |"})
    o.require(md.find(row) != std::string::npos, std::string("row ") + row);
  for (const char *col : {"phone_class: synth", "gender: synth", "language: synth"})
    o.require(md.find(col) != std::string::npos, std::string("column ") + col);
  o.detail << c.probes.size() << " continuous probes, " << 3 * c.quantized_probes.size()
           << " quantized probes, " << 1 + c.abx_onehot.size() << " ABX runs\n" << md;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char *name;
    std::function<void(Outcome &)> run;
  };
  const Criterion criteria[] = {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "trivial limits", trivial_limits},
      {3, "concentrated vs diffuse language code", concentrated_vs_diffuse},
      {4, "discretisation degrades every factor", discretisation},
      {5, "invariant suites", invariants},
      {6, "configuration-exact experiment grid", experiment_grid},
  };
  auto t_all = Clock::now();
  int failed = 0;
  for (const Criterion &c : criteria) {
    Outcome o;
    auto t0 = Clock::now();
    try {
      c.run(o);
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s criterion %d (%s) [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", c.id,
                c.name, seconds_since(t0), o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("acceptance: %d of %zu criteria passed in %.1f s\n",
              static_cast<int>(std::size(criteria)) - failed, std::size(criteria),
              seconds_since(t_all));
  return failed == 0 ? 0 : 1;
}
