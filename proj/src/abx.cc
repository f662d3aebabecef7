// src/abx.cc

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

#include "phoneprobe/abx.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "phoneprobe/csv.h"

namespace phoneprobe {

std::string to_string(AbxMode mode) {
  return mode == AbxMode::kOneHot ? "onehot" : "continuous";
}

AbxMode parse_abx_mode(std::string_view name) {
  if (name == "continuous") return AbxMode::kContinuous;
  if (name == "onehot") return AbxMode::kOneHot;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown ABX mode '" + std::string(name) + "'");
}

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Rows scaled to unit length.
RowMatrix unit_rows(const Eigen::MatrixXd &x) {
  RowMatrix u = x;
  for (int64_t i = 0; i < u.rows(); ++i) {
    double norm = u.row(i).norm();
    if (!(norm > 0.0))
      throw Error(ErrorKind::kInvalidArgument,
                  "zero-norm frame: angular distance undefined");
    u.row(i) /= norm;
  }
  return u;
}

// arccos of the cosine, computed as 2*atan2(|a-b|, |a+b|) on unit vectors;
// this is exact for identical frames where arccos(1 - eps) is not.
inline double unit_angle(const double *a, const double *b, int64_t dim) {
  double diff = 0.0, sum = 0.0;
  for (int64_t j = 0; j < dim; ++j) {
    double d = a[j] - b[j], s = a[j] + b[j];
    diff += d * d;
    sum += s * s;
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum)) / std::numbers::pi;
}

double dtw_unit(const RowMatrix &x, const RowMatrix &y) {
  const int64_t m = x.rows(), n = y.rows(), dim = x.cols();
  // (total cost, path length) per cell; lexicographic: lower cost, then
  // longer path.
  std::vector<double> cost(m * n);
  std::vector<int> len(m * n);
  auto better = [&](int64_t a, int64_t b) {
    return cost[a] < cost[b] || (cost[a] == cost[b] && len[a] > len[b]);
  };
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double d = unit_angle(x.row(i).data(), y.row(j).data(), dim);
      int64_t here = i * n + j;
      if (i == 0 && j == 0) {
        cost[here] = d;
        len[here] = 1;
        continue;
      }
      int64_t best = -1;
      if (i > 0) best = (i - 1) * n + j;
      if (j > 0 && (best < 0 || better(i * n + j - 1, best))) best = i * n + j - 1;
      if (i > 0 && j > 0 && better((i - 1) * n + j - 1, best))
        best = (i - 1) * n + j - 1;
      cost[here] = cost[best] + d;
      len[here] = len[best] + 1;
    }
  }
  return cost.back() / len.back();
}

}  // namespace

double angular_distance(const Eigen::Ref<const Eigen::RowVectorXd> &a,
                        const Eigen::Ref<const Eigen::RowVectorXd> &b) {
  if (a.size() != b.size())
    throw Error(ErrorKind::kDimMismatch, "frame dims differ");
  RowMatrix ua = unit_rows(Eigen::MatrixXd(a)), ub = unit_rows(Eigen::MatrixXd(b));
  return unit_angle(ua.data(), ub.data(), ua.cols());
}

double dtw_distance(const Eigen::MatrixXd &x, const Eigen::MatrixXd &y) {
  if (x.cols() != y.cols())
    throw Error(ErrorKind::kDimMismatch, "DTW inputs have different dims");
  if (x.rows() < 1 || y.rows() < 1)
    throw Error(ErrorKind::kInvalidArgument, "DTW inputs need at least one frame");
  return dtw_unit(unit_rows(x), unit_rows(y));
}

std::vector<AbxContext> token_contexts(const AlignmentTable &alignments) {
  const auto &tokens = alignments.tokens;
  std::map<std::string, std::vector<int64_t>> by_utt;
  for (size_t i = 0; i < tokens.size(); ++i)
    by_utt[tokens[i].utterance_id].push_back(static_cast<int64_t>(i));
  std::vector<AbxContext> ctx(tokens.size());
  for (auto &[utt, rows] : by_utt) {
    std::stable_sort(rows.begin(), rows.end(), [&](int64_t a, int64_t b) {
      return tokens[a].start_frame < tokens[b].start_frame;
    });
    for (size_t k = 0; k < rows.size(); ++k) {
      ctx[rows[k]].prev = k > 0 ? tokens[rows[k - 1]].phone : kBoundaryPhone;
      ctx[rows[k]].next =
          k + 1 < rows.size() ? tokens[rows[k + 1]].phone : kBoundaryPhone;
    }
  }
  return ctx;
}

std::vector<AbxCell> enumerate_cells(const AlignmentTable &alignments,
                                     int max_per_phone, uint64_t seed) {
  if (max_per_phone < 1)
    throw Error(ErrorKind::kInvalidArgument, "max_per_phone must be >= 1");
  const auto &tokens = alignments.tokens;
  std::vector<AbxContext> ctx = token_contexts(alignments);

  // (speaker, context) -> phone -> token rows
  std::map<std::pair<std::string, AbxContext>,
           std::map<std::string, std::vector<int64_t>>>
      groups;
  for (size_t i = 0; i < tokens.size(); ++i)
    groups[{tokens[i].speaker, ctx[i]}][tokens[i].phone].push_back(
        static_cast<int64_t>(i));

  std::vector<AbxCell> cells;
  for (auto &[key, phones] : groups) {
    const auto &[speaker, context] = key;
    for (auto &[phone, rows] : phones) {
      if (static_cast<int>(rows.size()) <= max_per_phone) continue;
      Rng rng(mix_seed(seed, speaker + '\x1f' + context.prev + '\x1f' +
                                 context.next + '\x1f' + phone));
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(max_per_phone);
      std::sort(rows.begin(), rows.end());
    }
    for (auto a = phones.begin(); a != phones.end(); ++a) {
      for (auto b = std::next(a); b != phones.end(); ++b) {
        AbxCell cell{a->first, b->first, speaker, context, a->second, b->second};
        if (cell.scoreable_ab() || cell.scoreable_ba())
          cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

AbxResult score_abx(const FeatureArchive &archive,
                    const AlignmentTable &alignments, AbxMode mode,
                    int max_per_phone, uint64_t seed) {
  std::vector<AbxCell> cells = enumerate_cells(alignments, max_per_phone, seed);
  if (cells.empty()) throw Error(ErrorKind::kNoCells, "no ABX cells");

  const auto &tokens = alignments.tokens;
  std::map<int64_t, RowMatrix> unit;  // token row -> unit-normalised frames
  auto frames_of = [&](int64_t row) -> const RowMatrix & {
    auto it = unit.find(row);
    if (it != unit.end()) return it->second;
    const PhoneToken &t = tokens[row];
    auto u = archive.utterances.find(t.utterance_id);
    if (u == archive.utterances.end() || t.end_frame > u->second.rows())
      throw Error(ErrorKind::kSpanOutOfRange,
                  "token " + t.token_id + " not covered by archive");
    Eigen::MatrixXd x = u->second.middleRows(t.start_frame, t.num_frames())
                            .cast<double>();
    try {
      return unit.emplace(row, unit_rows(x)).first->second;
    } catch (const Error &e) {
      throw Error(e.kind(), std::string(e.what()) + " (token " + t.token_id +
                                ", mode " + to_string(mode) + ")");
    }
  };

  AbxResult result;
  result.mode = mode;
  result.max_per_phone = max_per_phone;
  result.seed = seed;

  // (phone_a, phone_b) -> speaker -> per-context cell scores
  std::map<std::pair<std::string, std::string>,
           std::map<std::string, std::vector<double>>>
      scores;
  for (const AbxCell &cell : cells) {
    std::vector<int64_t> items = cell.items_a;
    items.insert(items.end(), cell.items_b.begin(), cell.items_b.end());
    const size_t na = cell.items_a.size(), n = items.size();
    Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        dist(i, j) = dist(j, i) = dtw_unit(frames_of(items[i]), frames_of(items[j]));

    // Targets/distractors as index ranges into `items`.
    auto direction = [&](size_t t0, size_t t1, size_t d0, size_t d1) {
      double total = 0.0;
      int64_t count = 0;
      for (size_t x = t0; x < t1; ++x)
        for (size_t a = t0; a < t1; ++a) {
          if (a == x) continue;
          for (size_t b = d0; b < d1; ++b) {
            double da = dist(a, x), db = dist(b, x);
            total += da < db ? 1.0 : (da == db ? 0.5 : 0.0);
            ++count;
          }
        }
      result.n_triplets += count;
      return total / static_cast<double>(count);
    };
    double sum = 0.0;
    int dirs = 0;
    if (cell.scoreable_ab()) {
      sum += direction(0, na, na, n);
      ++dirs;
    }
    if (cell.scoreable_ba()) {
      sum += direction(na, n, 0, na);
      ++dirs;
    }
    scores[{cell.phone_a, cell.phone_b}][cell.speaker].push_back(sum / dirs);
    ++result.n_cells;
  }

  double overall = 0.0;
  for (const auto &[pair, by_speaker] : scores) {
    double pair_score = 0.0;
    int64_t pair_cells = 0;
    for (const auto &[speaker, ctx_scores] : by_speaker) {
      double s = 0.0;
      for (double v : ctx_scores) s += v;
      pair_score += s / static_cast<double>(ctx_scores.size());
      pair_cells += static_cast<int64_t>(ctx_scores.size());
    }
    pair_score /= static_cast<double>(by_speaker.size());
    overall += pair_score;
    result.pairs.push_back(
        {pair.first, pair.second, 100.0 * (1.0 - pair_score), pair_cells});
  }
  overall /= static_cast<double>(scores.size());
  result.error_pct = 100.0 * (1.0 - overall);
  return result;
}

nlohmann::json to_json(const AbxResult &r) {
  return {{"mode", to_string(r.mode)},
          {"error_pct", r.error_pct},
          {"n_cells", r.n_cells},
          {"n_triplets", r.n_triplets},
          {"max_per_phone", r.max_per_phone},
          {"seed", r.seed},
          {"condition", "within_speaker"},
          {"frame_distance", "arccos(cos)/pi"},
          {"dtw_normalisation", "mean over optimal path"}};
}

std::string pair_csv(const AbxResult &r) {
  std::string out = "phone_a,phone_b,error_pct,n_cells\n";
  for (const AbxPairScore &p : r.pairs)
    out += csv_join({p.phone_a, p.phone_b, format_double(p.error_pct),
                     std::to_string(p.n_cells)}) +
           "\n";
  return out;
}

}  // namespace phoneprobe
