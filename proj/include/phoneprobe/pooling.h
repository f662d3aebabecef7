// include/phoneprobe/pooling.h

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

#ifndef PHONEPROBE_POOLING_H_
#define PHONEPROBE_POOLING_H_

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "phoneprobe/dataio.h"
#include "phoneprobe/quantize.h"

namespace phoneprobe {

enum class PoolSource { kContinuous, kOneHot };

// One row per phone token; row i describes tokens[i].
struct PooledDataset {
  Eigen::MatrixXd vectors;
  std::vector<PhoneToken> tokens;
  PoolSource source = PoolSource::kContinuous;
  int k = 0;  // only meaningful for kOneHot

  int dim() const { return static_cast<int>(vectors.cols()); }
  int64_t size() const { return static_cast<int64_t>(tokens.size()); }
  // Rows in the given order.
  PooledDataset subset(const std::vector<int64_t> &rows) const;
};

// Mean of each token's frames (compensated summation).
PooledDataset mean_pool(const FeatureArchive &archive,
                        const AlignmentTable &alignments);

// Normalised cluster-id histogram over each token's frames.
PooledDataset one_hot_pool(const ClusterAssignment &assignment,
                           const AlignmentTable &alignments);

void save_pooled(const PooledDataset &data, const std::filesystem::path &dir);
PooledDataset load_pooled(const std::filesystem::path &dir);

}  // namespace phoneprobe

#endif  // PHONEPROBE_POOLING_H_
