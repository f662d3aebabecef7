// src/pooling.cc

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

#include "phoneprobe/pooling.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace phoneprobe {

namespace fs = std::filesystem;
using nlohmann::json;

PooledDataset PooledDataset::subset(const std::vector<int64_t> &rows) const {
  PooledDataset out;
  out.source = source;
  out.k = k;
  out.vectors.resize(static_cast<int64_t>(rows.size()), vectors.cols());
  out.tokens.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    out.vectors.row(static_cast<int64_t>(i)) = vectors.row(rows[i]);
    out.tokens.push_back(tokens[rows[i]]);
  }
  return out;
}

PooledDataset mean_pool(const FeatureArchive &archive,
                        const AlignmentTable &alignments) {
  PooledDataset out;
  out.source = PoolSource::kContinuous;
  out.tokens = alignments.tokens;
  out.vectors.resize(static_cast<int64_t>(out.tokens.size()), archive.dim);
  std::vector<double> sum(archive.dim), comp(archive.dim);
  for (size_t i = 0; i < out.tokens.size(); ++i) {
    const PhoneToken &t = out.tokens[i];
    auto it = archive.utterances.find(t.utterance_id);
    if (it == archive.utterances.end() || t.end_frame > it->second.rows() ||
        t.start_frame < 0 || t.end_frame <= t.start_frame)
      throw Error(ErrorKind::kSpanOutOfRange,
                  "token " + t.token_id + " not covered by archive");
    const FeatureMatrix &m = it->second;
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(comp.begin(), comp.end(), 0.0);
    for (int f = t.start_frame; f < t.end_frame; ++f) {
      for (int j = 0; j < archive.dim; ++j) {
        // Neumaier summation
        double v = m(f, j);
        double s = sum[j] + v;
        if (std::abs(sum[j]) >= std::abs(v))
          comp[j] += (sum[j] - s) + v;
        else
          comp[j] += (v - s) + sum[j];
        sum[j] = s;
      }
    }
    const double n = t.num_frames();
    for (int j = 0; j < archive.dim; ++j)
      out.vectors(static_cast<int64_t>(i), j) = (sum[j] + comp[j]) / n;
  }
  return out;
}

PooledDataset one_hot_pool(const ClusterAssignment &assignment,
                           const AlignmentTable &alignments) {
  PooledDataset out;
  out.source = PoolSource::kOneHot;
  out.k = assignment.k;
  out.tokens = alignments.tokens;
  out.vectors =
      Eigen::MatrixXd::Zero(static_cast<int64_t>(out.tokens.size()), assignment.k);
  std::vector<int64_t> counts(assignment.k);
  for (size_t i = 0; i < out.tokens.size(); ++i) {
    const PhoneToken &t = out.tokens[i];
    auto it = assignment.ids.find(t.utterance_id);
    if (it == assignment.ids.end() ||
        t.end_frame > static_cast<int>(it->second.size()) || t.start_frame < 0 ||
        t.end_frame <= t.start_frame)
      throw Error(ErrorKind::kSpanOutOfRange,
                  "token " + t.token_id + " has frames without a cluster assignment");
    std::fill(counts.begin(), counts.end(), 0);
    for (int f = t.start_frame; f < t.end_frame; ++f) {
      int id = it->second[f];
      if (id < 0 || id >= assignment.k)
        throw Error(ErrorKind::kFormat, "cluster id out of range for token " + t.token_id);
      ++counts[id];
    }
    const double n = t.num_frames();
    for (int c = 0; c < assignment.k; ++c)
      if (counts[c]) out.vectors(static_cast<int64_t>(i), c) = counts[c] / n;
  }
  return out;
}

void save_pooled(const PooledDataset &data, const fs::path &dir) {
  json meta = {{"dim", data.dim()},
               {"n_rows", data.size()},
               {"source", data.source == PoolSource::kOneHot ? "onehot" : "continuous"}};
  if (data.source == PoolSource::kOneHot) meta["k"] = data.k;
  std::string bytes;
  bytes.reserve(data.vectors.size() * 4);
  for (int64_t i = 0; i < data.vectors.rows(); ++i)
    for (int j = 0; j < data.vectors.cols(); ++j)
      append_f32_le(&bytes, static_cast<float>(data.vectors(i, j)));
  write_file_atomic(dir / "vectors.f32", bytes);
  save_alignments(data.tokens, dir / "tokens.csv");
  write_file_atomic(dir / "pooled.json", meta.dump(2) + "\n");
}

PooledDataset load_pooled(const fs::path &dir) {
  PooledDataset out;
  int64_t dim = 0, n_rows = 0;
  try {
    json meta = json::parse(read_file(dir / "pooled.json"));
    dim = meta.at("dim").get<int64_t>();
    n_rows = meta.value("n_rows", int64_t{-1});
    std::string source = meta.at("source").get<std::string>();
    if (source == "onehot") {
      out.source = PoolSource::kOneHot;
      out.k = meta.at("k").get<int>();
      if (out.k != dim)
        throw Error(ErrorKind::kDimMismatch, "pooled.json: k must equal dim");
    } else if (source != "continuous") {
      throw Error(ErrorKind::kFormat, "pooled.json: unknown source " + source);
    }
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kFormat, "invalid pooled.json: " + std::string(e.what()));
  }
  if (dim < 1) throw Error(ErrorKind::kFormat, "pooled.json: dim must be positive");
  std::ifstream is(dir / "tokens.csv", std::ios::binary);
  if (!is) throw Error(ErrorKind::kMissingFile, "missing " + (dir / "tokens.csv").string());
  out.tokens = read_alignment_csv(is, (dir / "tokens.csv").string());
  if (n_rows >= 0 && n_rows != out.size())
    throw Error(ErrorKind::kFormat, "pooled.json n_rows does not match tokens.csv");
  std::string bytes = read_file(dir / "vectors.f32");
  if (bytes.size() != static_cast<size_t>(out.size() * dim * 4))
    throw Error(ErrorKind::kByteLength, "vectors.f32: byte-length mismatch");
  out.vectors.resize(out.size(), dim);
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  for (int64_t i = 0; i < out.size(); ++i)
    for (int64_t j = 0; j < dim; ++j) {
      float v = read_f32_le(p + 4 * (i * dim + j));
      if (!std::isfinite(v))
        throw Error(ErrorKind::kNonFinite, "non-finite pooled value for token " +
                                               out.tokens[i].token_id);
      out.vectors(i, j) = v;
    }
  return out;
}

}  // namespace phoneprobe
