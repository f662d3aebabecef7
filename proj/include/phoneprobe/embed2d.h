// include/phoneprobe/embed2d.h

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

#ifndef PHONEPROBE_EMBED2D_H_
#define PHONEPROBE_EMBED2D_H_

// Exact t-SNE to two dimensions, plus CSV/SVG scatter export.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "phoneprobe/pooling.h"

namespace phoneprobe {

struct TsneOptions {
  int64_t subset_n = 6000;
  double perplexity = 30.0;
  uint64_t seed = 0;
  int n_iters = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iter = 250;
  double init_sigma = 1e-4;
};

struct Embedding2D {
  Eigen::MatrixXd coords;           // n x 2
  std::vector<int64_t> rows;        // input row of each coordinate row
  std::vector<double> perplexities; // calibrated per-point perplexity
  double kl_initial = 0.0;
  double kl_final = 0.0;
  TsneOptions options;
};

// Joint affinities P (n x n, symmetric, sums to 1) from squared distances;
// each conditional row is calibrated to the target perplexity by binary
// search on the Gaussian precision.
Eigen::MatrixXd tsne_affinities(const Eigen::MatrixXd &x, double perplexity,
                                std::vector<double> *achieved = nullptr);

// KL(P || Q) of a 2-D layout under the Student-t kernel.
double tsne_kl(const Eigen::MatrixXd &p, const Eigen::MatrixXd &y);

Embedding2D tsne(const PooledDataset &data, const TsneOptions &opts);

nlohmann::json to_json(const Embedding2D &embedding);

std::string coords_csv(const Embedding2D &embedding,
                       const std::vector<PhoneToken> &tokens);

// Writes `<stem>.csv` (x,y,label) and `<stem>.svg`.  Colours come from the
// position of the label in `vocabulary` (sorted labels of the tokens when
// empty); the legend lists only labels that have at least one point.
void export_scatter(const Embedding2D &embedding,
                    const std::vector<PhoneToken> &tokens, LabelKind color_by,
                    const std::filesystem::path &stem,
                    std::vector<std::string> vocabulary = {});

}  // namespace phoneprobe

#endif  // PHONEPROBE_EMBED2D_H_
