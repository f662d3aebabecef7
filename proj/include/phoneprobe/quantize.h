// include/phoneprobe/quantize.h

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

#ifndef PHONEPROBE_QUANTIZE_H_
#define PHONEPROBE_QUANTIZE_H_

// k-means discretisation of frame-level features.  Frames are mapped to
// their nearest centroid and can be re-expanded into one-hot rows, which is
// how the discrete units are probed and scored.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phoneprobe/dataio.h"

namespace phoneprobe {

struct KMeansOptions {
  int n_restarts = 10;
  int max_iters = 300;
  // 0 = use every frame; otherwise a seeded reservoir sample of this size.
  int64_t max_frames = 0;
};

struct KMeansModel {
  Eigen::MatrixXd centroids;  // k x dim
  int k = 0;
  double inertia = 0.0;
  uint64_t seed = 0;
  int n_restarts = 0;
  int n_iters_run = 0;
  int64_t n_fit_frames = 0;
  // Inertia after each assignment step of the winning restart.
  std::vector<double> inertia_trace;

  int dim() const { return static_cast<int>(centroids.cols()); }
};

struct ClusterAssignment {
  int k = 0;
  double frame_rate_hz = 100.0;
  std::map<std::string, std::vector<int>> ids;
};

// Lloyd's algorithm from k-means++ seeding; best of n_restarts by inertia.
// Throws kInsufficientData when the archive has fewer than k distinct frames.
KMeansModel fit_kmeans(const FeatureArchive &archive, int k, uint64_t seed,
                       const KMeansOptions &opts = {});

// Nearest centroid by squared Euclidean distance, ties to the lowest index.
int nearest_centroid(const Eigen::MatrixXd &centroids, const float *frame,
                     double *sq_dist = nullptr);

ClusterAssignment assign(const KMeansModel &model,
                         const FeatureArchive &archive);

// Sum of squared distances of every frame to its assigned centroid.
double assignment_inertia(const KMeansModel &model,
                          const FeatureArchive &archive,
                          const ClusterAssignment &assignment);

FeatureArchive onehot_frames(const ClusterAssignment &assignment);

void save_kmeans(const KMeansModel &model, const std::filesystem::path &dir);
KMeansModel load_kmeans(const std::filesystem::path &dir);

void save_assignment(const ClusterAssignment &assignment,
                     const std::filesystem::path &dir);
ClusterAssignment load_assignment(const std::filesystem::path &dir);
FrameCounts frame_counts(const ClusterAssignment &assignment);

}  // namespace phoneprobe

#endif  // PHONEPROBE_QUANTIZE_H_
