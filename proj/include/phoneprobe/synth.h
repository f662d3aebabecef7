// include/phoneprobe/synth.h

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

#ifndef PHONEPROBE_SYNTH_H_
#define PHONEPROBE_SYNTH_H_

// Synthetic corpora with planted factor structure.
//
// Every frame is the sum of one code vector per factor (phone identity,
// phone class, gender, language, and a phone-by-gender interaction that
// gives each gender its own realisation of every phone) plus isotropic
// Gaussian noise.  A
// concentrated factor writes its code into a few reserved dimensions; a
// diffuse factor spreads it over all dimensions through a dense random
// matrix with per-dimension magnitude strength/sqrt(dim).  Utterances are
// strings of three-phone words from a lexicon built out of minimal-pair
// families (same outer phones, different middle phone), so that
// within-speaker ABX cells exist.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "phoneprobe/dataio.h"

namespace phoneprobe {

enum class EncodingStyle { kConcentrated, kDiffuse };

struct FactorEncoding {
  std::vector<int> dims;  // reserved dims; ignored when diffuse
  double strength = 0.0;
  EncodingStyle style = EncodingStyle::kConcentrated;
};

struct PhoneSpec {
  std::string phone;
  std::string phone_class;
};

inline constexpr const char *kFactorNames[] = {"phone", "phone_class", "gender",
                                               "language", "phone_gender"};

struct SynthProfile {
  int n_speakers = 20;
  int n_utterances = 200;
  int dim = 64;
  double frame_rate_hz = 100.0;
  std::vector<PhoneSpec> phones;
  std::vector<std::string> genders{"female", "male"};
  std::vector<std::string> languages{"en", "fr"};
  // keyed by kFactorNames; a missing factor contributes nothing
  std::map<std::string, FactorEncoding> factors;
  double noise_sigma = 1.0;
  uint64_t seed = 0;
  int min_phone_frames = 3;
  int max_phone_frames = 12;
  int words_per_utterance = 8;
  int n_word_families = 10;
  int family_size = 4;

  void validate() const;
};

nlohmann::json to_json(const SynthProfile &profile);
SynthProfile profile_from_json(const nlohmann::json &j);

// Forty phones, five per class of the eight-class inventory.
std::vector<PhoneSpec> default_phone_inventory();

// Named starting points: "concentrated" (language in one reserved dim),
// "diffuse" (language spread over all dims), "noise" (no planted signal),
// "identical" (noise-free, phone identity only).
SynthProfile preset_profile(std::string_view name, uint64_t seed = 0);

std::pair<FeatureArchive, AlignmentTable> generate(const SynthProfile &profile);

}  // namespace phoneprobe

#endif  // PHONEPROBE_SYNTH_H_
