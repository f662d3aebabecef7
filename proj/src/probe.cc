// src/probe.cc

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

#include "phoneprobe/probe.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace phoneprobe {

namespace {

std::vector<std::string> labels_of(const PooledDataset &data, LabelKind kind) {
  std::vector<std::string> labels;
  labels.reserve(data.tokens.size());
  for (const PhoneToken &t : data.tokens) labels.push_back(label_of(t, kind));
  return labels;
}

std::vector<int> encode_labels(const PooledDataset &data, LabelKind kind,
                               const std::vector<std::string> &classes) {
  std::vector<int> y(data.tokens.size());
  for (size_t i = 0; i < y.size(); ++i) {
    const std::string &l = label_of(data.tokens[i], kind);
    auto it = std::lower_bound(classes.begin(), classes.end(), l);
    y[i] = (it != classes.end() && *it == l)
               ? static_cast<int>(it - classes.begin())
               : -1;
  }
  return y;
}

// Class scores, one column per row of x.
Eigen::MatrixXd logits(const Eigen::MatrixXd &x, const Eigen::MatrixXd &w,
                       const Eigen::VectorXd &b) {
  Eigen::MatrixXd z = w * x.transpose();
  z.colwise() += b;
  return z;
}

// Mean multinomial negative log-likelihood of class-major logits; also the
// softmax probabilities when `probs` is non-null.
double mean_nll(const Eigen::MatrixXd &z, const std::vector<int> &y,
                Eigen::MatrixXd *probs) {
  Eigen::RowVectorXd m = z.colwise().maxCoeff();
  Eigen::MatrixXd e = (z.rowwise() - m).array().exp().matrix();
  Eigen::RowVectorXd s = e.colwise().sum();
  double total = (m.array() + s.array().log()).sum();
  for (int64_t i = 0; i < z.cols(); ++i) total -= z(y[i], i);
  if (probs) *probs = (e.array().rowwise() / s.array()).matrix();
  return total / static_cast<double>(z.cols());
}

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

nlohmann::json to_json(const ProbeReport &r) {
  nlohmann::json j;
  j["label_kind"] = to_string(r.label_kind);
  j["c"] = r.c ? nlohmann::json(*r.c) : nlohmann::json(nullptr);
  j["error_pct"] = r.error_pct;
  j["n_active_features"] = r.n_active_features;
  j["chance_error_pct"] = r.chance_error_pct;
  j["split_seed"] = r.split_seed;
  j["train_fraction"] = r.train_fraction;
  j["lambda"] = r.lambda;
  j["lambda_rule"] = "lambda = 1/(c * n_train); 0 when c is null";
  j["feature_scaling"] = "none";
  j["converged"] = r.converged;
  j["n_iters"] = r.n_iters;
  j["grad_norm"] = r.grad_norm;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  return j;
}

std::string path_csv(const RegPathCurve &curve) {
  std::string out = "c,accuracy_pct,n_active_features\n";
  for (const RegPathPoint &p : curve.points)
    out += format_double(p.c) + "," + format_double(p.accuracy_pct) + "," +
           std::to_string(p.n_active_features) + "\n";
  return out;
}

std::pair<std::vector<int64_t>, std::vector<int64_t>> stratified_split(
    const std::vector<std::string> &labels, double train_fraction,
    uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorKind::kInvalidArgument, "train_fraction must be in (0,1)");
  std::map<std::string, std::vector<int64_t>> by_label;
  for (size_t i = 0; i < labels.size(); ++i)
    by_label[labels[i]].push_back(static_cast<int64_t>(i));

  const double eps = 1e-9;  // absorbs representation error in fraction*count
  const auto n = static_cast<double>(labels.size());
  int64_t target = static_cast<int64_t>(std::floor(train_fraction * n + 0.5 + eps));
  std::vector<std::string> order;
  std::vector<int64_t> n_train;
  std::vector<double> frac;
  int64_t assigned = 0;
  for (const auto &[label, rows] : by_label) {
    double exact = train_fraction * static_cast<double>(rows.size());
    auto fl = static_cast<int64_t>(std::floor(exact + eps));
    order.push_back(label);
    n_train.push_back(fl);
    frac.push_back(std::max(0.0, exact - static_cast<double>(fl)));
    assigned += fl;
  }
  std::vector<size_t> rank(order.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](size_t a, size_t b) {
    return frac[a] > frac[b] + eps;
  });
  for (size_t r = 0; r < rank.size() && assigned < target; ++r, ++assigned)
    ++n_train[rank[r]];

  std::vector<int64_t> train, test;
  for (size_t l = 0; l < order.size(); ++l) {
    std::vector<int64_t> rows = by_label[order[l]];
    const auto count = static_cast<int64_t>(rows.size());
    if (n_train[l] < 1 || n_train[l] >= count)
      throw Error(ErrorKind::kInsufficientData,
                  "label '" + order[l] + "' has " + std::to_string(count) +
                      " tokens, too few to appear in both train and test");
    Rng rng(mix_seed(seed, order[l]));
    std::shuffle(rows.begin(), rows.end(), rng);
    train.insert(train.end(), rows.begin(), rows.begin() + n_train[l]);
    test.insert(test.end(), rows.begin() + n_train[l], rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

std::pair<PooledDataset, PooledDataset> split_dataset(const PooledDataset &data,
                                                      LabelKind label_kind,
                                                      double train_fraction,
                                                      uint64_t seed) {
  auto [train, test] =
      stratified_split(labels_of(data, label_kind), train_fraction, seed);
  return {data.subset(train), data.subset(test)};
}

double probe_objective(const Eigen::MatrixXd &weights,
                       const Eigen::VectorXd &bias,
                       const std::vector<std::string> &classes,
                       const PooledDataset &data, LabelKind label_kind,
                       double lambda) {
  std::vector<int> y = encode_labels(data, label_kind, classes);
  if (std::find(y.begin(), y.end(), -1) != y.end())
    throw Error(ErrorKind::kInvalidArgument, "dataset has labels outside classes");
  return mean_nll(logits(data.vectors, weights, bias), y, nullptr) +
         lambda * weights.cwiseAbs().sum();
}

ProbeModel train_probe(const PooledDataset &train, LabelKind label_kind,
                       std::optional<double> c, const ProbeOptions &opts) {
  if (train.size() == 0)
    throw Error(ErrorKind::kInsufficientData, "empty training set");
  if (c && !(*c > 0.0))
    throw Error(ErrorKind::kInvalidArgument, "C must be positive");

  ProbeModel model;
  model.label_kind = label_kind;
  {
    std::set<std::string> seen;
    for (const PhoneToken &t : train.tokens) seen.insert(label_of(t, label_kind));
    model.classes.assign(seen.begin(), seen.end());
  }
  if (model.classes.size() < 2)
    throw Error(ErrorKind::kInsufficientData,
                "probe needs at least 2 classes of " + to_string(label_kind) +
                    ", training set has " + std::to_string(model.classes.size()));
  const std::vector<int> y = encode_labels(train, label_kind, model.classes);
  const Eigen::MatrixXd &x = train.vectors;
  const auto n = static_cast<double>(x.rows());
  const int n_classes = model.n_classes();
  model.c = c;
  model.lambda = c ? 1.0 / (*c * n) : 0.0;
  const double lambda = model.lambda;

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n_classes, x.rows());
  for (int64_t i = 0; i < x.rows(); ++i) onehot(y[i], i) = 1.0;

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_classes, x.cols());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_classes);
  Eigen::MatrixXd z = logits(x, w, b), probs;
  double smooth = mean_nll(z, y, &probs);
  double objective = smooth;
  if (opts.record_trace) model.objective_trace.push_back(objective);

  // Accelerated proximal gradient.  The extrapolated point is dropped
  // (momentum restart) whenever the step from it would raise the objective,
  // and a plain proximal step from the current iterate is taken instead, so
  // accepted iterates never increase the objective.  Logits are affine in
  // the parameters, so those of the extrapolated point are extrapolated too.
  double step = 1.0, t = 1.0;
  bool at_iterate = true;  // extrapolated point == current iterate
  Eigen::MatrixXd w_y = w, w_prev, w_new, grad_w;
  Eigen::VectorXd b_y = b, b_prev, b_new, grad_b;
  Eigen::MatrixXd z_prev, z_new, probs_y = probs, probs_new;
  double smooth_y = smooth;
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    Eigen::MatrixXd resid = probs_y - onehot;
    grad_w.noalias() = resid * x / n;
    grad_b = resid.rowwise().sum() / n;

    double smooth_new = 0.0;
    step *= 1.25;
    while (true) {
      w_new = w_y - step * grad_w;
      if (lambda > 0.0)
        w_new = w_new.unaryExpr(
            [th = step * lambda](double v) { return soft_threshold(v, th); });
      b_new = b_y - step * grad_b;
      z_new = logits(x, w_new, b_new);
      smooth_new = mean_nll(z_new, y, &probs_new);
      Eigen::MatrixXd dw = w_new - w_y;
      Eigen::VectorXd db = b_new - b_y;
      double lin = (grad_w.cwiseProduct(dw)).sum() + grad_b.dot(db);
      double quad = (dw.squaredNorm() + db.squaredNorm()) / (2.0 * step);
      if (smooth_new <= smooth_y + lin + quad || step < 1e-20) {
        model.grad_norm =
            std::sqrt(dw.squaredNorm() + db.squaredNorm()) / step;
        break;
      }
      step *= 0.5;
    }
    double obj_new = smooth_new + lambda * w_new.cwiseAbs().sum();
    double max_change = std::max((w_new - w).cwiseAbs().maxCoeff(),
                                 (b_new - b).cwiseAbs().maxCoeff());
    if (obj_new > objective && at_iterate) {
      // Rounding noise at the optimum; keep the current iterate.
      model.converged = max_change < opts.tol;
      ++iter;
      break;
    }
    if (obj_new > objective) {
      w_y = w;
      b_y = b;
      probs_y = probs;
      smooth_y = smooth;
      t = 1.0;
      at_iterate = true;
      if (opts.record_trace) model.objective_trace.push_back(objective);
      continue;
    }
    w_prev.swap(w);
    b_prev.swap(b);
    z_prev.swap(z);
    w.swap(w_new);
    b.swap(b_new);
    z.swap(z_new);
    probs.swap(probs_new);
    smooth = smooth_new;
    objective = obj_new;
    if (opts.record_trace) model.objective_trace.push_back(objective);
    if (max_change < opts.tol) {
      model.converged = true;
      ++iter;
      break;
    }
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double beta = (t - 1.0) / t_next;
    t = t_next;
    if (beta > 0.0) {
      w_y = w + beta * (w - w_prev);
      b_y = b + beta * (b - b_prev);
      smooth_y = mean_nll(z + beta * (z - z_prev), y, &probs_y);
      at_iterate = false;
    } else {
      w_y = w;
      b_y = b;
      probs_y = probs;
      smooth_y = smooth;
      at_iterate = true;
    }
  }
  model.n_iters = iter;
  model.objective = objective;
  model.weights = std::move(w);
  model.bias = std::move(b);
  return model;
}

std::vector<int> predict(const ProbeModel &model, const Eigen::MatrixXd &x) {
  if (x.cols() != model.dim())
    throw Error(ErrorKind::kDimMismatch,
                "probe expects dim " + std::to_string(model.dim()) + ", got " +
                    std::to_string(x.cols()));
  Eigen::MatrixXd z = x * model.weights.transpose();
  z.rowwise() += model.bias.transpose();
  std::vector<int> out(x.rows());
  for (int64_t i = 0; i < z.rows(); ++i) {
    int arg = 0;
    for (int c = 1; c < z.cols(); ++c)
      if (z(i, c) > z(i, arg)) arg = c;
    out[i] = arg;
  }
  return out;
}

int count_active_features(const ProbeModel &model) {
  int active = 0;
  for (int64_t j = 0; j < model.weights.cols(); ++j)
    if ((model.weights.col(j).array() != 0.0).any()) ++active;
  return active;
}

ProbeReport evaluate_probe(const ProbeModel &model, const PooledDataset &test) {
  std::vector<int> pred = predict(model, test.vectors);
  std::vector<int> y = encode_labels(test, model.label_kind, model.classes);
  int64_t wrong = 0;
  for (size_t i = 0; i < y.size(); ++i)
    if (pred[i] != y[i]) ++wrong;
  ProbeReport r;
  r.label_kind = model.label_kind;
  r.c = model.c;
  r.lambda = model.lambda;
  r.error_pct = y.empty() ? 0.0 : 100.0 * static_cast<double>(wrong) /
                                      static_cast<double>(y.size());
  r.n_active_features = count_active_features(model);
  r.n_test = test.size();
  r.converged = model.converged;
  r.n_iters = model.n_iters;
  r.grad_norm = model.grad_norm;
  return r;
}

double chance_baseline(const PooledDataset &test, LabelKind label_kind,
                       uint64_t seed, int n_draws) {
  if (n_draws < 1) throw Error(ErrorKind::kInvalidArgument, "n_draws must be >= 1");
  if (test.size() == 0) return 0.0;
  std::vector<std::string> labels = labels_of(test, label_kind);
  std::vector<std::string> vocab = labels;
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  std::vector<int> y(labels.size());
  for (size_t i = 0; i < y.size(); ++i)
    y[i] = static_cast<int>(
        std::lower_bound(vocab.begin(), vocab.end(), labels[i]) - vocab.begin());
  Rng rng(mix_seed(seed, "chance"));
  std::uniform_int_distribution<int> draw(0, static_cast<int>(vocab.size()) - 1);
  double total = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    int64_t wrong = 0;
    for (int label : y)
      if (draw(rng) != label) ++wrong;
    total += static_cast<double>(wrong) / static_cast<double>(y.size());
  }
  return 100.0 * total / n_draws;
}

ProbeRun run_probe(const PooledDataset &data, LabelKind label_kind,
                   std::optional<double> c, double train_fraction,
                   uint64_t seed, const ProbeOptions &opts, int chance_draws) {
  auto [train, test] = split_dataset(data, label_kind, train_fraction, seed);
  ProbeRun run;
  run.model = train_probe(train, label_kind, c, opts);
  run.report = evaluate_probe(run.model, test);
  run.report.chance_error_pct = chance_baseline(test, label_kind, seed, chance_draws);
  run.report.split_seed = seed;
  run.report.train_fraction = train_fraction;
  run.report.n_train = train.size();
  return run;
}

RegPathCurve reg_path(const PooledDataset &data, LabelKind label_kind,
                      const std::vector<double> &c_grid, double train_fraction,
                      uint64_t seed, const ProbeOptions &opts) {
  if (c_grid.empty())
    throw Error(ErrorKind::kInvalidArgument, "regularisation grid is empty");
  for (size_t i = 0; i < c_grid.size(); ++i) {
    if (!(c_grid[i] > 0.0) || !std::isfinite(c_grid[i]))
      throw Error(ErrorKind::kInvalidArgument, "grid values must be positive and finite");
    if (i && c_grid[i] < c_grid[i - 1])
      throw Error(ErrorKind::kInvalidArgument, "grid must be sorted ascending");
  }
  auto [train, test] = split_dataset(data, label_kind, train_fraction, seed);
  RegPathCurve curve;
  curve.label_kind = label_kind;
  for (double c : c_grid) {
    ProbeModel model = train_probe(train, label_kind, c, opts);
    ProbeReport r = evaluate_probe(model, test);
    curve.points.push_back(
        {c, 100.0 - r.error_pct, r.n_active_features, model.converged});
  }
  return curve;
}

}  // namespace phoneprobe
