// include/phoneprobe/abx.h

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

#ifndef PHONEPROBE_ABX_H_
#define PHONEPROBE_ABX_H_

// Within-speaker phone ABX discrimination.
//
// Tokens are compared with dynamic time warping over the angular frame
// distance  delta(a, b) = arccos(cos(a, b)) / pi,  and the DTW cost is the
// mean of delta along the optimal alignment path.  A cell groups the tokens
// of two phones uttered by one speaker in one (previous, next) phone
// context; cell scores are averaged over contexts, then speakers, then
// phone pairs.

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "phoneprobe/dataio.h"

namespace phoneprobe {

enum class AbxMode { kContinuous, kOneHot };

std::string to_string(AbxMode mode);
AbxMode parse_abx_mode(std::string_view name);

// Marks utterance-initial / utterance-final context.
inline const char kBoundaryPhone[] = "#";

// Angle between two frames divided by pi, in [0, 1].  Throws on a zero
// vector.
double angular_distance(const Eigen::Ref<const Eigen::RowVectorXd> &a,
                        const Eigen::Ref<const Eigen::RowVectorXd> &b);

// Mean frame distance along the cheapest monotone path using steps
// (i-1,j), (i,j-1), (i-1,j-1).  When several paths share the minimum total
// cost the longest one is used, so the result is symmetric in x and y.
double dtw_distance(const Eigen::MatrixXd &x, const Eigen::MatrixXd &y);

struct AbxContext {
  std::string prev;
  std::string next;
  auto operator<=>(const AbxContext &) const = default;
};

struct AbxCell {
  std::string phone_a;  // phone_a < phone_b
  std::string phone_b;
  std::string speaker;
  AbxContext context;
  std::vector<int64_t> items_a;  // indices into AlignmentTable::tokens
  std::vector<int64_t> items_b;

  bool scoreable_ab() const { return items_a.size() >= 2 && !items_b.empty(); }
  bool scoreable_ba() const { return items_b.size() >= 2 && !items_a.empty(); }
};

// Context of every token: neighbouring tokens of the same utterance.
std::vector<AbxContext> token_contexts(const AlignmentTable &alignments);

// All within-speaker minimal-pair cells with at least one scoreable
// direction.  Each (speaker, context, phone) group is capped at
// max_per_phone tokens by seeded uniform sampling.
std::vector<AbxCell> enumerate_cells(const AlignmentTable &alignments,
                                     int max_per_phone, uint64_t seed);

struct AbxPairScore {
  std::string phone_a;
  std::string phone_b;
  double error_pct = 0.0;
  int64_t n_cells = 0;
};

struct AbxResult {
  AbxMode mode = AbxMode::kContinuous;
  double error_pct = 0.0;
  int64_t n_cells = 0;
  int64_t n_triplets = 0;
  int max_per_phone = 0;
  uint64_t seed = 0;
  std::vector<AbxPairScore> pairs;
};

AbxResult score_abx(const FeatureArchive &archive,
                    const AlignmentTable &alignments, AbxMode mode,
                    int max_per_phone = 10, uint64_t seed = 0);

nlohmann::json to_json(const AbxResult &result);
std::string pair_csv(const AbxResult &result);

}  // namespace phoneprobe

#endif  // PHONEPROBE_ABX_H_
