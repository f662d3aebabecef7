// src/quantize.cc

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

#include "phoneprobe/quantize.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace phoneprobe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double sq_distance(const double *a, const double *b, int dim) {
  double s = 0.0;
  for (int j = 0; j < dim; ++j) {
    double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

inline int nearest(const RowMatrix &centroids, const double *x, double *best) {
  const int k = static_cast<int>(centroids.rows());
  const int dim = static_cast<int>(centroids.cols());
  int arg = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    double d = sq_distance(centroids.row(c).data(), x, dim);
    if (d < bd) {
      bd = d;
      arg = c;
    }
  }
  *best = bd;
  return arg;
}

RowMatrix gather_frames(const FeatureArchive &archive, int64_t max_frames,
                        uint64_t seed) {
  const int64_t total = archive.total_frames();
  std::vector<std::pair<const FeatureMatrix *, int>> refs;
  refs.reserve(total);
  for (const auto &kv : archive.utterances)
    for (int r = 0; r < kv.second.rows(); ++r) refs.emplace_back(&kv.second, r);
  if (max_frames > 0 && total > max_frames) {
    // Algorithm R, then restore archive order.
    Rng rng(mix_seed(seed, "reservoir"));
    std::vector<int64_t> keep(max_frames);
    std::iota(keep.begin(), keep.end(), 0);
    for (int64_t i = max_frames; i < total; ++i) {
      std::uniform_int_distribution<int64_t> pick(0, i);
      int64_t j = pick(rng);
      if (j < max_frames) keep[j] = i;
    }
    std::sort(keep.begin(), keep.end());
    std::vector<std::pair<const FeatureMatrix *, int>> sampled;
    sampled.reserve(max_frames);
    for (int64_t i : keep) sampled.push_back(refs[i]);
    refs.swap(sampled);
  }
  RowMatrix x(static_cast<int64_t>(refs.size()), archive.dim);
  for (size_t i = 0; i < refs.size(); ++i)
    x.row(i) = refs[i].first->row(refs[i].second).cast<double>();
  return x;
}

int64_t count_distinct_rows(const RowMatrix &x, int64_t stop_at) {
  std::vector<int64_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  const int dim = static_cast<int>(x.cols());
  auto less = [&](int64_t a, int64_t b) {
    return std::lexicographical_compare(x.row(a).data(), x.row(a).data() + dim,
                                        x.row(b).data(), x.row(b).data() + dim);
  };
  std::sort(order.begin(), order.end(), less);
  int64_t distinct = order.empty() ? 0 : 1;
  for (size_t i = 1; i < order.size() && distinct < stop_at; ++i)
    if (less(order[i - 1], order[i])) ++distinct;
  return distinct;
}

RowMatrix kmeanspp_init(const RowMatrix &x, int k, Rng &rng) {
  const int64_t n = x.rows();
  const int dim = static_cast<int>(x.cols());
  RowMatrix centroids(k, dim);
  std::uniform_int_distribution<int64_t> first(0, n - 1);
  centroids.row(0) = x.row(first(rng));
  std::vector<double> d2(n);
  for (int64_t i = 0; i < n; ++i)
    d2[i] = sq_distance(x.row(i).data(), centroids.row(0).data(), dim);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    // Frames at distance 0 from a chosen centre have zero mass, so centres
    // stay distinct as long as there are at least k distinct frames.
    double target = unif(rng) * total;
    int64_t pick = -1;
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      acc += d2[i];
      pick = i;
      if (acc >= target) break;
    }
    centroids.row(c) = x.row(pick);
    for (int64_t i = 0; i < n; ++i)
      d2[i] = std::min(
          d2[i], sq_distance(x.row(i).data(), centroids.row(c).data(), dim));
  }
  return centroids;
}

struct LloydRun {
  RowMatrix centroids;
  double inertia = 0.0;
  int n_iters = 0;
  std::vector<double> trace;
};

// Moves one frame into each empty cluster, taken from the largest cluster
// that still has a member away from its centroid.
void repair_empty_clusters(const RowMatrix &x, RowMatrix *centroids,
                           std::vector<int> *labels,
                           std::vector<int64_t> *counts) {
  const int k = static_cast<int>(centroids->rows());
  const int dim = static_cast<int>(x.cols());
  for (int empty = 0; empty < k; ++empty) {
    if ((*counts)[empty] > 0) continue;
    std::vector<int> donors(k);
    std::iota(donors.begin(), donors.end(), 0);
    std::stable_sort(donors.begin(), donors.end(), [&](int a, int b) {
      return (*counts)[a] > (*counts)[b];
    });
    bool moved = false;
    for (int donor : donors) {
      if ((*counts)[donor] < 2) break;
      int64_t far = -1;
      double far_d = 0.0;
      for (int64_t i = 0; i < x.rows(); ++i) {
        if ((*labels)[i] != donor) continue;
        double d = sq_distance(x.row(i).data(), centroids->row(donor).data(), dim);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) continue;
      const int64_t n = (*counts)[donor];
      centroids->row(donor) =
          (centroids->row(donor) * static_cast<double>(n) - x.row(far)) /
          static_cast<double>(n - 1);
      centroids->row(empty) = x.row(far);
      (*labels)[far] = empty;
      (*counts)[donor] -= 1;
      (*counts)[empty] = 1;
      moved = true;
      break;
    }
    if (!moved)
      throw Error(ErrorKind::kInsufficientData,
                  "k-means: cannot repair empty cluster (too few distinct frames)");
  }
}

LloydRun lloyd(const RowMatrix &x, RowMatrix centroids, int max_iters) {
  const int64_t n = x.rows();
  const int k = static_cast<int>(centroids.rows());
  const int dim = static_cast<int>(x.cols());
  std::vector<int> labels(n, -1), prev;
  LloydRun run;
  for (int iter = 0;; ++iter) {
    prev = labels;
    double inertia = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      double d;
      labels[i] = nearest(centroids, x.row(i).data(), &d);
      inertia += d;
    }
    run.trace.push_back(inertia);
    run.inertia = inertia;
    if (labels == prev || iter == max_iters) break;

    RowMatrix sums = RowMatrix::Zero(k, dim);
    std::vector<int64_t> counts(k, 0);
    for (int64_t i = 0; i < n; ++i) {
      sums.row(labels[i]) += x.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centroids.row(c) = sums.row(c) / double(counts[c]);
    repair_empty_clusters(x, &centroids, &labels, &counts);
    ++run.n_iters;
  }
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

KMeansModel fit_kmeans(const FeatureArchive &archive, int k, uint64_t seed,
                       const KMeansOptions &opts) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "k must be >= 1");
  if (opts.n_restarts < 1)
    throw Error(ErrorKind::kInvalidArgument, "n_restarts must be >= 1");
  if (opts.max_iters < 1)
    throw Error(ErrorKind::kInvalidArgument, "max_iters must be >= 1");
  RowMatrix x = gather_frames(archive, opts.max_frames, seed);
  if (x.rows() < k)
    throw Error(ErrorKind::kInsufficientData,
                "k-means: " + std::to_string(x.rows()) +
                    " frames available for k=" + std::to_string(k));
  if (count_distinct_rows(x, k) < k)
    throw Error(ErrorKind::kInsufficientData,
                "k-means: fewer distinct frames than k=" + std::to_string(k));

  KMeansModel best;
  bool have_best = false;
  for (int r = 0; r < opts.n_restarts; ++r) {
    Rng rng(mix_seed(seed, "restart-" + std::to_string(r)));
    LloydRun run = lloyd(x, kmeanspp_init(x, k, rng), opts.max_iters);
    if (!have_best || run.inertia < best.inertia) {
      best.centroids = run.centroids;
      best.inertia = run.inertia;
      best.n_iters_run = run.n_iters;
      best.inertia_trace = std::move(run.trace);
      have_best = true;
    }
  }
  best.k = k;
  best.seed = seed;
  best.n_restarts = opts.n_restarts;
  best.n_fit_frames = x.rows();
  return best;
}

int nearest_centroid(const Eigen::MatrixXd &centroids, const float *frame,
                     double *sq_dist) {
  int arg = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int c = 0; c < centroids.rows(); ++c) {
    double s = 0.0;
    for (int j = 0; j < centroids.cols(); ++j) {
      double d = static_cast<double>(frame[j]) - centroids(c, j);
      s += d * d;
    }
    if (s < bd) {
      bd = s;
      arg = c;
    }
  }
  if (sq_dist) *sq_dist = bd;
  return arg;
}

ClusterAssignment assign(const KMeansModel &model,
                         const FeatureArchive &archive) {
  if (model.dim() != archive.dim)
    throw Error(ErrorKind::kDimMismatch,
                "k-means model dim " + std::to_string(model.dim()) +
                    " does not match archive dim " + std::to_string(archive.dim));
  RowMatrix centroids = model.centroids;
  ClusterAssignment out;
  out.k = model.k;
  out.frame_rate_hz = archive.frame_rate_hz;
  std::vector<double> row(archive.dim);
  for (const auto &[id, m] : archive.utterances) {
    std::vector<int> &ids = out.ids[id];
    ids.resize(m.rows());
    for (int r = 0; r < m.rows(); ++r) {
      for (int j = 0; j < archive.dim; ++j) row[j] = m(r, j);
      double d;
      ids[r] = nearest(centroids, row.data(), &d);
    }
  }
  return out;
}

double assignment_inertia(const KMeansModel &model,
                          const FeatureArchive &archive,
                          const ClusterAssignment &assignment) {
  double total = 0.0;
  for (const auto &[id, m] : archive.utterances) {
    const std::vector<int> &ids = assignment.ids.at(id);
    for (int r = 0; r < m.rows(); ++r)
      total += (m.row(r).cast<double>() - model.centroids.row(ids[r]))
                   .squaredNorm();
  }
  return total;
}

FeatureArchive onehot_frames(const ClusterAssignment &assignment) {
  FeatureArchive out;
  out.dim = assignment.k;
  out.frame_rate_hz = assignment.frame_rate_hz;
  for (const auto &[id, ids] : assignment.ids) {
    FeatureMatrix m = FeatureMatrix::Zero(static_cast<int64_t>(ids.size()),
                                          assignment.k);
    for (size_t r = 0; r < ids.size(); ++r) {
      if (ids[r] < 0 || ids[r] >= assignment.k)
        throw Error(ErrorKind::kFormat, "cluster id out of range in utterance " + id);
      m(static_cast<int64_t>(r), ids[r]) = 1.0f;
    }
    out.utterances.emplace(id, std::move(m));
  }
  return out;
}

void save_kmeans(const KMeansModel &model, const fs::path &dir) {
  json meta = {{"k", model.k},
               {"dim", model.dim()},
               {"seed", model.seed},
               {"n_restarts", model.n_restarts},
               {"inertia", model.inertia},
               {"n_iters_run", model.n_iters_run},
               {"n_fit_frames", model.n_fit_frames},
               {"metric", "squared_euclidean"},
               {"init", "k-means++"}};
  std::string bytes;
  for (int c = 0; c < model.k; ++c)
    for (int j = 0; j < model.dim(); ++j)
      append_f32_le(&bytes, static_cast<float>(model.centroids(c, j)));
  write_file_atomic(dir / "centroids.f32", bytes);
  write_file_atomic(dir / "kmeans.json", meta.dump(2) + "\n");
}

KMeansModel load_kmeans(const fs::path &dir) {
  KMeansModel model;
  int dim = 0;
  try {
    json meta = json::parse(read_file(dir / "kmeans.json"));
    model.k = meta.at("k").get<int>();
    dim = meta.at("dim").get<int>();
    model.seed = meta.at("seed").get<uint64_t>();
    model.n_restarts = meta.at("n_restarts").get<int>();
    model.inertia = meta.at("inertia").get<double>();
    model.n_iters_run = meta.at("n_iters_run").get<int>();
    model.n_fit_frames = meta.value("n_fit_frames", int64_t{0});
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kFormat, "invalid kmeans.json: " + std::string(e.what()));
  }
  if (model.k < 1 || dim < 1)
    throw Error(ErrorKind::kFormat, "kmeans.json: k and dim must be positive");
  std::string bytes = read_file(dir / "centroids.f32");
  if (bytes.size() != static_cast<size_t>(model.k) * dim * 4)
    throw Error(ErrorKind::kByteLength, "centroids.f32: byte-length mismatch");
  model.centroids.resize(model.k, dim);
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  for (int c = 0; c < model.k; ++c)
    for (int j = 0; j < dim; ++j)
      model.centroids(c, j) = read_f32_le(p + 4 * (c * dim + j));
  return model;
}

void save_assignment(const ClusterAssignment &assignment, const fs::path &dir) {
  if (assignment.k > 65536)
    throw Error(ErrorKind::kInvalidArgument,
                "assignment files store uint16 ids; k must be <= 65536");
  json manifest = {{"k", assignment.k},
                   {"frame_rate_hz", assignment.frame_rate_hz},
                   {"utterances", json::array()}};
  size_t index = 0;
  for (const auto &[id, ids] : assignment.ids) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.u16", index++);
    std::string bytes;
    for (int v : ids) append_u16_le(&bytes, static_cast<uint16_t>(v));
    write_file_atomic(dir / name, bytes);
    manifest["utterances"].push_back(
        {{"id", id}, {"file", name}, {"n_frames", ids.size()}});
  }
  write_file_atomic(dir / "assign.json", manifest.dump(2) + "\n");
}

ClusterAssignment load_assignment(const fs::path &dir) {
  ClusterAssignment out;
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "assign.json"));
    out.k = manifest.at("k").get<int>();
    out.frame_rate_hz = manifest.at("frame_rate_hz").get<double>();
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kFormat, "invalid assign.json: " + std::string(e.what()));
  }
  if (out.k < 1) throw Error(ErrorKind::kFormat, "assign.json: k must be positive");
  for (const auto &u : manifest.at("utterances")) {
    std::string id = u.at("id").get<std::string>();
    size_t n = u.at("n_frames").get<size_t>();
    std::string bytes = read_file(dir / u.at("file").get<std::string>());
    if (bytes.size() != 2 * n)
      throw Error(ErrorKind::kByteLength,
                  "byte-length mismatch for assignment of utterance " + id);
    std::vector<int> ids(n);
    const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
    for (size_t i = 0; i < n; ++i) {
      ids[i] = read_u16_le(p + 2 * i);
      if (ids[i] >= out.k)
        throw Error(ErrorKind::kFormat, "cluster id out of range in utterance " + id);
    }
    out.ids.emplace(id, std::move(ids));
  }
  return out;
}

FrameCounts frame_counts(const ClusterAssignment &assignment) {
  FrameCounts counts;
  for (const auto &[id, ids] : assignment.ids)
    counts[id] = static_cast<int>(ids.size());
  return counts;
}

}  // namespace phoneprobe
