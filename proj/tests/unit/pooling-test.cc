// tests/unit/pooling-test.cc

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

#include <algorithm>
#include <random>

#include "doctest.h"
#include "phoneprobe/pooling.h"
#include "unit/test-util.h"

using namespace phoneprobe;
using phoneprobe::testing::make_token;

namespace {

AlignmentTable table(std::vector<PhoneToken> tokens, const FrameCounts &counts) {
  return build_alignment_table(std::move(tokens), counts);
}

}  // namespace

TEST_CASE("mean_pool examples") {
  FeatureArchive a;
  a.dim = 2;
  a.utterances["u1"] = FeatureMatrix(4, 2);
  a.utterances["u1"] << 9, 9, 1, 2, 3, 4, 5, 6;
  AlignmentTable t = table({make_token("single", "u1", "a", "vowel", 0, 1),
                            make_token("pair", "u1", "p", "plosive", 1, 3)},
                           frame_counts(a));
  PooledDataset p = mean_pool(a, t);
  REQUIRE(p.size() == 2);
  CHECK(p.dim() == 2);
  CHECK(p.source == PoolSource::kContinuous);
  CHECK(p.vectors(0, 0) == 9.0);
  CHECK(p.vectors(0, 1) == 9.0);
  CHECK(p.vectors(1, 0) == 2.0);
  CHECK(p.vectors(1, 1) == 3.0);
  CHECK(p.tokens[1].token_id == "pair");
}

TEST_CASE("mean_pool matches an independent summation oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    FeatureArchive a = phoneprobe::testing::random_archive(rng, 3, 5, 30);
    auto tokens = phoneprobe::testing::random_tiling(rng, a, 7);
    PooledDataset p = mean_pool(a, table(tokens, frame_counts(a)));
    for (size_t i = 0; i < tokens.size(); ++i) {
      const auto &m = a.utterances.at(tokens[i].utterance_id);
      for (int c = 0; c < a.dim; ++c) {
        long double sum = 0;
        for (int f = tokens[i].start_frame; f < tokens[i].end_frame; ++f)
          sum += m(f, c);
        CHECK(std::abs(p.vectors(i, c) -
                       static_cast<double>(sum / tokens[i].num_frames())) < 1e-6);
      }
    }
  }
}

TEST_CASE("mean_pool is translation equivariant") {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> shift(-100, 100);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureArchive a = phoneprobe::testing::random_archive(rng, 4, 6, 25);
    // Values on a 1/1024 grid so that adding an integer is exact in float.
    for (auto &[id, m] : a.utterances)
      m = (m.array() * 1024.0f).round() / 1024.0f;
    AlignmentTable t = table(phoneprobe::testing::random_tiling(rng, a, 7),
                             frame_counts(a));
    Eigen::RowVectorXf c(a.dim);
    for (int j = 0; j < a.dim; ++j) c(j) = static_cast<float>(shift(rng));
    FeatureArchive b = a;
    for (auto &[id, m] : b.utterances) m.rowwise() += c;
    PooledDataset pa = mean_pool(a, t), pb = mean_pool(b, t);
    Eigen::MatrixXd expected = pa.vectors;
    expected.rowwise() += c.cast<double>();
    CHECK((pb.vectors - expected).cwiseAbs().maxCoeff() < 1e-6);
    FeatureArchive zero = a;
    for (auto &[id, m] : zero.utterances) m.setZero();
    for (auto &[id, m] : zero.utterances) m.rowwise() += c;
    PooledDataset pz = mean_pool(zero, t);
    for (int64_t i = 0; i < pz.size(); ++i)
      CHECK((pz.vectors.row(i) - c.cast<double>()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("one_hot_pool examples") {
  ClusterAssignment ids;
  ids.k = 5;
  ids.ids["u1"] = {3, 3, 3, 3, 0, 1, 0, 1};
  FrameCounts counts = frame_counts(ids);
  AlignmentTable t = table({make_token("a", "u1", "a", "vowel", 0, 4),
                            make_token("b", "u1", "p", "plosive", 4, 8)},
                           counts);
  PooledDataset p = one_hot_pool(ids, t);
  CHECK(p.source == PoolSource::kOneHot);
  CHECK(p.k == 5);
  REQUIRE(p.dim() == 5);
  Eigen::RowVectorXd r0(5), r1(5);
  r0 << 0, 0, 0, 1, 0;
  r1 << 0.5, 0.5, 0, 0, 0;
  CHECK(p.vectors.row(0) == r0);
  CHECK(p.vectors.row(1) == r1);
}

TEST_CASE("one_hot_pool names the token whose frames are not covered") {
  ClusterAssignment ids;
  ids.k = 3;
  ids.ids["u1"] = {0, 1, 2};
  AlignmentTable t = table({make_token("late", "u1", "a", "vowel", 2, 5)},
                           {{"u1", 5}});
  try {
    one_hot_pool(ids, t);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("late") != std::string::npos);
  }
}

TEST_CASE("one_hot_pool matches a counting oracle; rows are distributions") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> cluster(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    FeatureArchive a = phoneprobe::testing::random_archive(rng, 3, 1, 30);
    auto tokens = phoneprobe::testing::random_tiling(rng, a, 6);
    ClusterAssignment ids;
    ids.k = 6;
    for (const auto &[id, m] : a.utterances) {
      auto &seq = ids.ids[id];
      for (int64_t f = 0; f < m.rows(); ++f) seq.push_back(cluster(rng));
    }
    PooledDataset p = one_hot_pool(ids, table(tokens, frame_counts(a)));
    for (size_t i = 0; i < tokens.size(); ++i) {
      std::vector<int> count(6, 0);
      const auto &seq = ids.ids.at(tokens[i].utterance_id);
      for (int f = tokens[i].start_frame; f < tokens[i].end_frame; ++f)
        ++count[seq[f]];
      for (int c = 0; c < 6; ++c) {
        CHECK(p.vectors(i, c) ==
              static_cast<double>(count[c]) / tokens[i].num_frames());
        CHECK(p.vectors(i, c) >= 0.0);
        CHECK(p.vectors(i, c) <= 1.0);
      }
      CHECK(std::abs(p.vectors.row(i).sum() - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("pooled rows follow alignment order whatever the utterance order") {
  std::mt19937_64 rng(24);
  FeatureArchive a = phoneprobe::testing::random_archive(rng, 6, 3, 15);
  auto tokens = phoneprobe::testing::random_tiling(rng, a, 4);
  // Group the tokens by utterance in a shuffled utterance order.
  std::vector<std::string> order;
  for (const auto &kv : a.utterances) order.push_back(kv.first);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<PhoneToken> reordered;
  for (const auto &u : order)
    for (const auto &t : tokens)
      if (t.utterance_id == u) reordered.push_back(t);
  PooledDataset p = mean_pool(a, table(tokens, frame_counts(a)));
  PooledDataset q = mean_pool(a, table(reordered, frame_counts(a)));
  for (size_t i = 0; i < reordered.size(); ++i) {
    auto it = std::find(tokens.begin(), tokens.end(), reordered[i]);
    int64_t j = it - tokens.begin();
    CHECK(q.tokens[i] == reordered[i]);
    CHECK(q.vectors.row(i) == p.vectors.row(j));
  }
}

TEST_CASE("pooled datasets round trip through files") {
  phoneprobe::testing::TempDir dir;
  std::mt19937_64 rng(25);
  FeatureArchive a = phoneprobe::testing::random_archive(rng, 3, 4, 12);
  PooledDataset p =
      mean_pool(a, table(phoneprobe::testing::random_tiling(rng, a), frame_counts(a)));
  save_pooled(p, dir / "p");
  PooledDataset q = load_pooled(dir / "p");
  CHECK(q.tokens == p.tokens);
  CHECK(q.source == p.source);
  // Vectors are stored as float32.
  CHECK((q.vectors - p.vectors).cwiseAbs().maxCoeff() < 1e-5);

  ClusterAssignment ids;
  ids.k = 4;
  ids.ids["u"] = {0, 1, 2, 3, 3};
  PooledDataset h = one_hot_pool(
      ids, table({make_token("x", "u", "a", "vowel", 0, 5)}, frame_counts(ids)));
  save_pooled(h, dir / "h");
  PooledDataset g = load_pooled(dir / "h");
  CHECK(g.source == PoolSource::kOneHot);
  CHECK(g.k == 4);
  CHECK((g.vectors - h.vectors).cwiseAbs().maxCoeff() < 1e-7);
}
