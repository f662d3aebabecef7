// src/embed2d.cc

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

#include "phoneprobe/embed2d.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "phoneprobe/csv.h"

namespace phoneprobe {

namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd &x) {
  const int64_t n = x.rows();
  // Row-major copy so each difference is computed from contiguous rows;
  // distances come from explicit differences, hence exactly translation
  // invariant whenever the translated inputs are exact.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> xr = x;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (int64_t k = 0; k < xr.cols(); ++k) {
        double diff = xr(i, k) - xr(j, k);
        s += diff * diff;
      }
      d(i, j) = d(j, i) = s;
    }
  return d;
}

// Conditional distribution of row i at precision beta; returns its entropy
// (nats).  `row` receives normalised probabilities.
double row_entropy(const Eigen::MatrixXd &d, int64_t i, double beta,
                   double dmin, std::vector<double> *row) {
  const int64_t n = d.rows();
  double sum = 0.0, weighted = 0.0;
  for (int64_t j = 0; j < n; ++j) {
    if (j == i) {
      (*row)[j] = 0.0;
      continue;
    }
    double shifted = d(i, j) - dmin;
    double p = std::exp(-beta * shifted);
    (*row)[j] = p;
    sum += p;
    weighted += shifted * p;
  }
  for (double &p : *row) p /= sum;
  return std::log(sum) + beta * weighted / sum;
}

const char *const kPalette[] = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
    "#8c6d31", "#843c39", "#7b4173", "#3182bd", "#e6550d", "#31a354",
    "#756bb1", "#636363"};

}  // namespace

Eigen::MatrixXd tsne_affinities(const Eigen::MatrixXd &x, double perplexity,
                                std::vector<double> *achieved) {
  const int64_t n = x.rows();
  Eigen::MatrixXd d = squared_distances(x);
  Eigen::MatrixXd p(n, n);
  const double target = std::log(perplexity);
  std::vector<double> row(n);
  if (achieved) achieved->assign(n, 0.0);
  for (int64_t i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, d(i, j));
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double h = row_entropy(d, i, beta, dmin, &row);
    for (int iter = 0; iter < 200 && std::abs(h - target) > 1e-9; ++iter) {
      if (h > target) {  // too flat: sharpen
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      h = row_entropy(d, i, beta, dmin, &row);
    }
    if (achieved) (*achieved)[i] = std::exp(h);
    for (int64_t j = 0; j < n; ++j) p(i, j) = row[j];
  }
  Eigen::MatrixXd joint = (p + p.transpose()) / (2.0 * static_cast<double>(n));
  return joint;
}

double tsne_kl(const Eigen::MatrixXd &p, const Eigen::MatrixXd &y) {
  const int64_t n = y.rows();
  auto kernel = [&](int64_t i, int64_t j) {
    double dx = y(i, 0) - y(j, 0), dy = y(i, 1) - y(j, 1);
    return 1.0 / (1.0 + dx * dx + dy * dy);
  };
  double z = 0.0;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = i + 1; j < n; ++j) z += 2.0 * kernel(i, j);
  double kl = 0.0;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) {
      if (i == j || p(i, j) <= 0.0) continue;
      double q = std::max(kernel(i, j) / z, 1e-300);
      kl += p(i, j) * std::log(p(i, j) / q);
    }
  return kl;
}

Embedding2D tsne(const PooledDataset &data, const TsneOptions &opts) {
  const int64_t total = data.size();
  if (opts.subset_n < 2 || opts.subset_n > total)
    throw Error(ErrorKind::kInvalidArgument,
                "t-SNE subset size " + std::to_string(opts.subset_n) +
                    " must be in [2, " + std::to_string(total) + "]");
  if (!(opts.perplexity > 0.0) ||
      opts.perplexity >= static_cast<double>(opts.subset_n) / 3.0)
    throw Error(ErrorKind::kInvalidArgument,
                "perplexity " + format_double(opts.perplexity) +
                    " infeasible for subset size " + std::to_string(opts.subset_n) +
                    " (must be below n/3)");
  if (opts.n_iters < 0)
    throw Error(ErrorKind::kInvalidArgument, "n_iters must be >= 0");

  Embedding2D out;
  out.options = opts;
  out.rows.resize(total);
  std::iota(out.rows.begin(), out.rows.end(), 0);
  if (opts.subset_n < total) {
    Rng rng(mix_seed(opts.seed, "subset"));
    for (int64_t i = 0; i < opts.subset_n; ++i) {
      std::uniform_int_distribution<int64_t> pick(i, total - 1);
      std::swap(out.rows[i], out.rows[pick(rng)]);
    }
    out.rows.resize(opts.subset_n);
    std::sort(out.rows.begin(), out.rows.end());
  }
  const int64_t n = opts.subset_n;
  Eigen::MatrixXd x(n, data.dim());
  for (int64_t i = 0; i < n; ++i) x.row(i) = data.vectors.row(out.rows[i]);

  Eigen::MatrixXd p = tsne_affinities(x, opts.perplexity, &out.perplexities);
  p = p.cwiseMax(1e-12);

  Rng rng(mix_seed(opts.seed, "init"));
  std::normal_distribution<double> normal(0.0, opts.init_sigma);
  Eigen::MatrixXd y(n, 2);
  for (int64_t i = 0; i < n; ++i) {
    y(i, 0) = normal(rng);
    y(i, 1) = normal(rng);
  }
  out.kl_initial = tsne_kl(p, y);

  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd grad(n, 2);
  for (int iter = 0; iter < opts.n_iters; ++iter) {
    const double exaggeration =
        iter < opts.exaggeration_iters ? opts.early_exaggeration : 1.0;
    const double momentum = iter < opts.momentum_switch_iter
                                ? opts.initial_momentum
                                : opts.final_momentum;
    // Two passes over pairs so no n x n kernel matrix is kept.
    double z = 0.0;
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = i + 1; j < n; ++j) {
        double dx = y(i, 0) - y(j, 0), dy = y(i, 1) - y(j, 1);
        z += 2.0 / (1.0 + dx * dx + dy * dy);
      }
    for (int64_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double dx = y(i, 0) - y(j, 0), dy = y(i, 1) - y(j, 1);
        double v = 1.0 / (1.0 + dx * dx + dy * dy);
        double mult = (exaggeration * p(i, j) - v / z) * v;
        gx += mult * dx;
        gy += mult * dy;
      }
      grad(i, 0) = 4.0 * gx;
      grad(i, 1) = 4.0 * gy;
    }
    for (int64_t i = 0; i < n; ++i)
      for (int c = 0; c < 2; ++c) {
        bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2;
        gains(i, c) = std::max(gains(i, c), 0.01);
        update(i, c) = momentum * update(i, c) -
                       opts.learning_rate * gains(i, c) * grad(i, c);
        y(i, c) += update(i, c);
      }
    y.rowwise() -= y.colwise().mean();
  }
  out.kl_final = tsne_kl(p, y);
  out.coords = std::move(y);
  return out;
}

nlohmann::json to_json(const Embedding2D &e) {
  const TsneOptions &o = e.options;
  return {{"method", "exact t-SNE"},
          {"n_points", e.coords.rows()},
          {"subset_n", o.subset_n},
          {"perplexity", o.perplexity},
          {"seed", o.seed},
          {"n_iters", o.n_iters},
          {"learning_rate", o.learning_rate},
          {"early_exaggeration", o.early_exaggeration},
          {"exaggeration_iters", o.exaggeration_iters},
          {"initial_momentum", o.initial_momentum},
          {"final_momentum", o.final_momentum},
          {"momentum_switch_iter", o.momentum_switch_iter},
          {"init_sigma", o.init_sigma},
          {"kl_initial", e.kl_initial},
          {"kl_final", e.kl_final}};
}

std::string coords_csv(const Embedding2D &e,
                       const std::vector<PhoneToken> &tokens) {
  std::string out = "token_id,x,y\n";
  for (int64_t i = 0; i < e.coords.rows(); ++i)
    out += csv_join({tokens.at(e.rows[i]).token_id, format_double(e.coords(i, 0)),
                     format_double(e.coords(i, 1))}) +
           "\n";
  return out;
}

void export_scatter(const Embedding2D &e, const std::vector<PhoneToken> &tokens,
                    LabelKind color_by, const fs::path &stem,
                    std::vector<std::string> vocabulary) {
  std::set<std::string> present;
  for (int64_t r : e.rows) present.insert(label_of(tokens.at(r), color_by));
  if (vocabulary.empty()) vocabulary.assign(present.begin(), present.end());
  std::sort(vocabulary.begin(), vocabulary.end());
  auto color_of = [&](const std::string &label) {
    auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), label);
    size_t idx = (it != vocabulary.end() && *it == label)
                     ? static_cast<size_t>(it - vocabulary.begin())
                     : vocabulary.size();
    return kPalette[idx % std::size(kPalette)];
  };

  std::string csv = "x,y,label\n";
  for (int64_t i = 0; i < e.coords.rows(); ++i)
    csv += csv_join({format_double(e.coords(i, 0)), format_double(e.coords(i, 1)),
                     label_of(tokens.at(e.rows[i]), color_by)}) +
           "\n";

  const double plot = 600.0, margin = 20.0, legend_w = 180.0;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (e.coords.rows() > 0) {
    xmin = e.coords.col(0).minCoeff();
    xmax = e.coords.col(0).maxCoeff();
    ymin = e.coords.col(1).minCoeff();
    ymax = e.coords.col(1).maxCoeff();
  }
  const double xs = xmax > xmin ? plot / (xmax - xmin) : 1.0;
  const double ys = ymax > ymin ? plot / (ymax - ymin) : 1.0;
  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << plot + 2 * margin + legend_w << "\" height=\"" << plot + 2 * margin
      << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<title>t-SNE coloured by " << to_string(color_by) << "</title>\n";
  for (int64_t i = 0; i < e.coords.rows(); ++i) {
    double cx = margin + (e.coords(i, 0) - xmin) * xs;
    double cy = margin + plot - (e.coords(i, 1) - ymin) * ys;
    svg << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"2.5\" fill=\""
        << color_of(label_of(tokens.at(e.rows[i]), color_by))
        << "\" fill-opacity=\"0.7\"/>\n";
  }
  double ly = margin + 10.0;
  for (const std::string &label : vocabulary) {
    if (!present.count(label)) continue;
    double lx = 2 * margin + plot;
    svg << "<rect x=\"" << lx << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
        << color_of(label) << "\"/>\n"
        << "<text x=\"" << lx + 16 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">";
    for (char ch : label) {
      switch (ch) {
        case '<': svg << "&lt;"; break;
        case '>': svg << "&gt;"; break;
        case '&': svg << "&amp;"; break;
        default: svg << ch;
      }
    }
    svg << "</text>\n";
    ly += 18.0;
  }
  svg << "</svg>\n";

  fs::path csv_path = stem, svg_path = stem;
  csv_path += ".csv";
  svg_path += ".svg";
  write_file_atomic(csv_path, csv);
  write_file_atomic(svg_path, svg.str());
}

}  // namespace phoneprobe
