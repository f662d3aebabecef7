// include/phoneprobe/probe.h

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

#ifndef PHONEPROBE_PROBE_H_
#define PHONEPROBE_PROBE_H_

// Linear probes: multinomial logistic regression on pooled vectors, with an
// optional l1 penalty expressed through the inverse strength C.
//
// The training objective is
//   (1/n) * sum_i NLL(y_i | W x_i + b)  +  lambda * ||W||_1,
//   lambda = 1 / (C * n)   (lambda = 0 when C is absent),
// minimised by accelerated proximal gradient (soft thresholding) with a
// backtracking line search and momentum restart; accepted iterates never
// raise the objective.  The bias is never penalised, and features are probed
// unscaled.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "phoneprobe/pooling.h"

namespace phoneprobe {

struct ProbeOptions {
  int max_iters = 10000;
  // Stop once the largest parameter change of an accepted step is below tol.
  double tol = 1e-7;
  bool record_trace = false;
};

struct ProbeModel {
  Eigen::MatrixXd weights;  // n_classes x dim
  Eigen::VectorXd bias;     // n_classes
  LabelKind label_kind = LabelKind::kPhoneClass;
  std::vector<std::string> classes;  // sorted, distinct
  std::optional<double> c;
  double lambda = 0.0;
  bool converged = false;
  int n_iters = 0;
  double grad_norm = 0.0;  // norm of the final proximal gradient mapping
  double objective = 0.0;
  std::vector<double> objective_trace;  // filled when record_trace is set

  int dim() const { return static_cast<int>(weights.cols()); }
  int n_classes() const { return static_cast<int>(classes.size()); }
};

struct ProbeReport {
  LabelKind label_kind = LabelKind::kPhoneClass;
  std::optional<double> c;
  double lambda = 0.0;
  double error_pct = 0.0;
  int n_active_features = 0;
  double chance_error_pct = 0.0;
  uint64_t split_seed = 0;
  double train_fraction = 0.0;
  int64_t n_train = 0;
  int64_t n_test = 0;
  bool converged = false;
  int n_iters = 0;
  double grad_norm = 0.0;
};

nlohmann::json to_json(const ProbeReport &report);

struct RegPathPoint {
  double c = 0.0;
  double accuracy_pct = 0.0;
  int n_active_features = 0;
  bool converged = false;
};

struct RegPathCurve {
  LabelKind label_kind = LabelKind::kLanguage;
  std::vector<RegPathPoint> points;  // ascending c
};

std::string path_csv(const RegPathCurve &curve);

// Row indices of a label-stratified split.  Per label, the train count is
// floor(fraction * count); the rows left over by flooring the overall
// target round(fraction * n) go to the labels with the largest fractional
// parts (ties by sorted label order).  Rows within each side keep their
// original order.
std::pair<std::vector<int64_t>, std::vector<int64_t>> stratified_split(
    const std::vector<std::string> &labels, double train_fraction,
    uint64_t seed);

std::pair<PooledDataset, PooledDataset> split_dataset(const PooledDataset &data,
                                                      LabelKind label_kind,
                                                      double train_fraction,
                                                      uint64_t seed);

ProbeModel train_probe(const PooledDataset &train, LabelKind label_kind,
                       std::optional<double> c, const ProbeOptions &opts = {});

// Penalised objective of the given parameters on a dataset (rows whose
// label is not among `classes` are rejected).
double probe_objective(const Eigen::MatrixXd &weights,
                       const Eigen::VectorXd &bias,
                       const std::vector<std::string> &classes,
                       const PooledDataset &data, LabelKind label_kind,
                       double lambda);

// Argmax class index per row; ties go to the lowest index.
std::vector<int> predict(const ProbeModel &model, const Eigen::MatrixXd &x);

// Fills error_pct, n_active_features and the model bookkeeping fields.
ProbeReport evaluate_probe(const ProbeModel &model, const PooledDataset &test);

int count_active_features(const ProbeModel &model);

// Mean percent error of n_draws uniform random labelings drawn from the
// label values observed in `test`.
double chance_baseline(const PooledDataset &test, LabelKind label_kind,
                       uint64_t seed, int n_draws);

struct ProbeRun {
  ProbeModel model;
  ProbeReport report;
};

// Split, train, evaluate and attach the chance baseline.
ProbeRun run_probe(const PooledDataset &data, LabelKind label_kind,
                   std::optional<double> c, double train_fraction,
                   uint64_t seed, const ProbeOptions &opts = {},
                   int chance_draws = 1000);

RegPathCurve reg_path(const PooledDataset &data, LabelKind label_kind,
                      const std::vector<double> &c_grid, double train_fraction,
                      uint64_t seed, const ProbeOptions &opts = {});

}  // namespace phoneprobe

#endif  // PHONEPROBE_PROBE_H_
