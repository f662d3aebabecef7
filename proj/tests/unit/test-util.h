// tests/unit/test-util.h

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

#ifndef PHONEPROBE_TESTS_TEST_UTIL_H_
#define PHONEPROBE_TESTS_TEST_UTIL_H_

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "phoneprobe/dataio.h"

namespace phoneprobe::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("phoneprobe-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline PhoneToken make_token(std::string id, std::string utt, std::string phone,
                             std::string phone_class, int start, int end,
                             std::string speaker = "s1",
                             std::string gender = "female",
                             std::string language = "en") {
  PhoneToken t;
  t.token_id = std::move(id);
  t.utterance_id = std::move(utt);
  t.phone = std::move(phone);
  t.phone_class = std::move(phone_class);
  t.start_frame = start;
  t.end_frame = end;
  t.speaker = std::move(speaker);
  t.gender = std::move(gender);
  t.language = std::move(language);
  return t;
}

// Utterances "u0".."u{n-1}" with random lengths in [1, max_frames] and
// Gaussian values.
inline FeatureArchive random_archive(std::mt19937_64 &rng, int n_utts, int dim,
                                     int max_frames = 20) {
  FeatureArchive a;
  a.dim = dim;
  a.frame_rate_hz = 100.0;
  std::uniform_int_distribution<int> len(1, max_frames);
  std::normal_distribution<float> g;
  for (int u = 0; u < n_utts; ++u) {
    FeatureMatrix m(len(rng), dim);
    for (int64_t i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    a.utterances["u" + std::to_string(u)] = std::move(m);
  }
  return a;
}

// Contiguous tokens tiling every utterance, with random phones drawn from a
// small inventory whose class is fixed per phone.
inline std::vector<PhoneToken> random_tiling(std::mt19937_64 &rng,
                                             const FeatureArchive &a,
                                             int max_len = 4) {
  static const char *phones[] = {"a", "i", "p", "t", "m", "s"};
  static const char *classes[] = {"vowel", "vowel", "plosive",
                                  "plosive", "nasal", "fricative"};
  std::uniform_int_distribution<int> len(1, max_len), ph(0, 5), bit(0, 1);
  std::vector<PhoneToken> tokens;
  int spk = 0;
  for (const auto &[id, m] : a.utterances) {
    std::string speaker = "s" + std::to_string(spk % 3);
    std::string gender = spk % 3 == 1 ? "male" : "female";
    std::string language = bit(rng) ? "en" : "fr";
    ++spk;
    int start = 0;
    const int n = static_cast<int>(m.rows());
    while (start < n) {
      int end = std::min(n, start + len(rng));
      int p = ph(rng);
      tokens.push_back(make_token(id + "_" + std::to_string(start), id, phones[p],
                                  classes[p], start, end, speaker, gender,
                                  language));
      start = end;
    }
  }
  return tokens;
}

}  // namespace phoneprobe::testing

#endif  // PHONEPROBE_TESTS_TEST_UTIL_H_
