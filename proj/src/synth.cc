// src/synth.cc

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

#include "phoneprobe/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

namespace phoneprobe {

using nlohmann::json;

namespace {

std::string style_name(EncodingStyle s) {
  return s == EncodingStyle::kDiffuse ? "diffuse" : "concentrated";
}

EncodingStyle parse_style(const std::string &s) {
  if (s == "concentrated") return EncodingStyle::kConcentrated;
  if (s == "diffuse") return EncodingStyle::kDiffuse;
  throw Error(ErrorKind::kInvalidArgument, "unknown encoding style '" + s + "'");
}

std::vector<std::string> factor_values(const SynthProfile &p,
                                       const std::string &factor) {
  std::set<std::string> values;
  if (factor == "phone") {
    for (const PhoneSpec &ph : p.phones) values.insert(ph.phone);
  } else if (factor == "phone_class") {
    for (const PhoneSpec &ph : p.phones) values.insert(ph.phone_class);
  } else if (factor == "gender") {
    values.insert(p.genders.begin(), p.genders.end());
  } else if (factor == "phone_gender") {
    for (const PhoneSpec &ph : p.phones)
      for (const std::string &g : p.genders) values.insert(ph.phone + "/" + g);
  } else {
    values.insert(p.languages.begin(), p.languages.end());
  }
  return {values.begin(), values.end()};
}

// Code vectors (values x dim) already scaled by strength.  Columns are
// centred across values and normalised to rms 1 (concentrated, on the
// reserved dims) or 1/sqrt(dim) (diffuse, on every dim).
Eigen::MatrixXd factor_codes(const SynthProfile &p, const std::string &factor,
                             const FactorEncoding &enc, size_t n_values) {
  const bool diffuse = enc.style == EncodingStyle::kDiffuse;
  const int width = diffuse ? p.dim : static_cast<int>(enc.dims.size());
  Rng rng(mix_seed(p.seed, "code/" + factor));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd raw(static_cast<int64_t>(n_values), width);
  for (int64_t v = 0; v < raw.rows(); ++v)
    for (int c = 0; c < width; ++c) raw(v, c) = normal(rng);
  raw.rowwise() -= raw.colwise().mean();
  const double target_rms = diffuse ? 1.0 / std::sqrt(double(p.dim)) : 1.0;
  for (int c = 0; c < width; ++c) {
    double rms = std::sqrt(raw.col(c).squaredNorm() / double(raw.rows()));
    if (rms > 0.0) raw.col(c) *= target_rms / rms;
  }
  Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(raw.rows(), p.dim);
  for (int c = 0; c < width; ++c)
    codes.col(diffuse ? c : enc.dims[c]) = enc.strength * raw.col(c);
  return codes;
}

}  // namespace

void SynthProfile::validate() const {
  auto fail = [](const std::string &what) {
    throw Error(ErrorKind::kInvalidArgument, "invalid synth profile: " + what);
  };
  if (n_speakers < 1 || n_utterances < 1) fail("need at least one speaker and utterance");
  if (dim < 1) fail("dim must be positive");
  if (!(frame_rate_hz > 0)) fail("frame_rate_hz must be positive");
  if (phones.empty()) fail("phone inventory is empty");
  if (genders.empty() || languages.empty()) fail("gender and language lists must be non-empty");
  if (!(noise_sigma >= 0)) fail("noise_sigma must be >= 0");
  if (min_phone_frames < 1 || max_phone_frames < min_phone_frames)
    fail("phone duration range must satisfy 1 <= min <= max");
  if (words_per_utterance < 1) fail("words_per_utterance must be >= 1");
  if (n_word_families < 1 || family_size < 1) fail("lexicon must be non-empty");
  if (family_size > static_cast<int>(phones.size()))
    fail("family_size exceeds phone inventory");
  std::map<std::string, std::string> cls;
  for (const PhoneSpec &ph : phones) {
    auto [it, inserted] = cls.emplace(ph.phone, ph.phone_class);
    if (!inserted) fail("phone '" + ph.phone + "' listed twice");
  }
  std::set<int> used;
  for (const auto &[name, enc] : factors) {
    if (std::find(std::begin(kFactorNames), std::end(kFactorNames), name) ==
        std::end(kFactorNames))
      fail("unknown factor '" + name + "'");
    if (!(enc.strength >= 0)) fail("factor '" + name + "' has negative strength");
    if (enc.style == EncodingStyle::kDiffuse) continue;
    if (enc.dims.empty() && enc.strength > 0)
      fail("concentrated factor '" + name + "' has no dims");
    for (int d : enc.dims) {
      if (d < 0 || d >= dim) fail("factor '" + name + "' dim out of range");
      if (!used.insert(d).second)
        fail("concentrated factors share dim " + std::to_string(d));
    }
  }
}

json to_json(const SynthProfile &p) {
  json j;
  j["n_speakers"] = p.n_speakers;
  j["n_utterances"] = p.n_utterances;
  j["dim"] = p.dim;
  j["frame_rate_hz"] = p.frame_rate_hz;
  j["phones"] = json::array();
  for (const PhoneSpec &ph : p.phones)
    j["phones"].push_back({{"phone", ph.phone}, {"class", ph.phone_class}});
  j["genders"] = p.genders;
  j["languages"] = p.languages;
  j["factors"] = json::object();
  for (const auto &[name, enc] : p.factors)
    j["factors"][name] = {{"dims", enc.dims},
                          {"strength", enc.strength},
                          {"style", style_name(enc.style)}};
  j["noise_sigma"] = p.noise_sigma;
  j["seed"] = p.seed;
  j["min_phone_frames"] = p.min_phone_frames;
  j["max_phone_frames"] = p.max_phone_frames;
  j["words_per_utterance"] = p.words_per_utterance;
  j["n_word_families"] = p.n_word_families;
  j["family_size"] = p.family_size;
  return j;
}

SynthProfile profile_from_json(const json &j) {
  SynthProfile p;
  try {
    p.n_speakers = j.value("n_speakers", p.n_speakers);
    p.n_utterances = j.value("n_utterances", p.n_utterances);
    p.dim = j.value("dim", p.dim);
    p.frame_rate_hz = j.value("frame_rate_hz", p.frame_rate_hz);
    if (j.contains("phones")) {
      for (const auto &ph : j.at("phones"))
        p.phones.push_back({ph.at("phone").get<std::string>(),
                            ph.at("class").get<std::string>()});
    } else {
      p.phones = default_phone_inventory();
    }
    p.genders = j.value("genders", p.genders);
    p.languages = j.value("languages", p.languages);
    if (j.contains("factors"))
      for (const auto &[name, f] : j.at("factors").items()) {
        FactorEncoding enc;
        enc.dims = f.value("dims", std::vector<int>{});
        enc.strength = f.at("strength").get<double>();
        enc.style = parse_style(f.value("style", std::string("concentrated")));
        p.factors[name] = enc;
      }
    p.noise_sigma = j.value("noise_sigma", p.noise_sigma);
    p.seed = j.value("seed", p.seed);
    p.min_phone_frames = j.value("min_phone_frames", p.min_phone_frames);
    p.max_phone_frames = j.value("max_phone_frames", p.max_phone_frames);
    p.words_per_utterance = j.value("words_per_utterance", p.words_per_utterance);
    p.n_word_families = j.value("n_word_families", p.n_word_families);
    p.family_size = j.value("family_size", p.family_size);
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kFormat, "invalid synth profile JSON: " + std::string(e.what()));
  }
  p.validate();
  return p;
}

std::vector<PhoneSpec> default_phone_inventory() {
  const std::pair<const char *, std::vector<const char *>> table[] = {
      {"fricative", {"f", "s", "S", "v", "z"}},
      {"affricate", {"tS", "dZ", "ts", "dz", "pf"}},
      {"plosive", {"p", "t", "k", "b", "d"}},
      {"approximant", {"l", "r", "R", "L", "rr"}},
      {"nasal", {"m", "n", "N", "J", "nn"}},
      {"nasal vowel", {"an", "on", "in", "un", "en"}},
      {"semi-vowel", {"w", "j", "H", "W", "jj"}},
      {"vowel", {"a", "i", "u", "e", "o"}}};
  std::vector<PhoneSpec> out;
  for (const auto &[cls, phones] : table)
    for (const char *ph : phones) out.push_back({ph, cls});
  return out;
}

SynthProfile preset_profile(std::string_view name, uint64_t seed) {
  SynthProfile p;
  p.seed = seed;
  p.phones = default_phone_inventory();
  auto range = [](int from, int to) {
    std::vector<int> v(to - from);
    std::iota(v.begin(), v.end(), from);
    return v;
  };
  p.noise_sigma = 1.0;
  p.factors["phone"] = {range(0, 12), 0.7, EncodingStyle::kConcentrated};
  p.factors["phone_class"] = {range(12, 18), 0.7, EncodingStyle::kConcentrated};
  p.factors["gender"] = {range(18, 20), 0.4, EncodingStyle::kConcentrated};
  p.factors["phone_gender"] = {range(21, 33), 0.7, EncodingStyle::kConcentrated};
  if (name == "concentrated") {
    p.factors["language"] = {{20}, 0.45, EncodingStyle::kConcentrated};
  } else if (name == "diffuse") {
    p.factors["language"] = {{}, 0.45, EncodingStyle::kDiffuse};
  } else if (name == "noise") {
    p.factors.clear();
  } else if (name == "identical") {
    p.factors.clear();
    p.factors["phone"] = {range(0, 12), 1.0, EncodingStyle::kConcentrated};
    p.noise_sigma = 0.0;
  } else {
    throw Error(ErrorKind::kInvalidArgument,
                "unknown synth preset '" + std::string(name) +
                    "' (expected concentrated, diffuse, noise or identical)");
  }
  return p;
}

std::pair<FeatureArchive, AlignmentTable> generate(const SynthProfile &p) {
  p.validate();
  const int n_phones = static_cast<int>(p.phones.size());

  // Lexicon: families of three-phone words sharing their outer phones.
  std::vector<std::array<int, 3>> lexicon;
  {
    Rng rng(mix_seed(p.seed, "lexicon"));
    std::uniform_int_distribution<int> any(0, n_phones - 1);
    int next_middle = 0;
    for (int f = 0; f < p.n_word_families; ++f) {
      int prev = any(rng), next = any(rng);
      for (int m = 0; m < p.family_size; ++m)
        lexicon.push_back({prev, (next_middle++) % n_phones, next});
    }
  }

  // Per-factor code rows, indexed by factor value.
  struct Planted {
    std::vector<std::string> values;
    Eigen::MatrixXd codes;
  };
  std::map<std::string, Planted> planted;
  for (const auto &[name, enc] : p.factors) {
    Planted pl;
    pl.values = factor_values(p, name);
    pl.codes = factor_codes(p, name, enc, pl.values.size());
    planted.emplace(name, std::move(pl));
  }
  auto add_code = [&](Eigen::RowVectorXd *mean, const std::string &factor,
                      const std::string &value) {
    auto it = planted.find(factor);
    if (it == planted.end()) return;
    const auto &vals = it->second.values;
    auto pos = std::lower_bound(vals.begin(), vals.end(), value) - vals.begin();
    *mean += it->second.codes.row(pos);
  };

  FeatureArchive archive;
  archive.dim = p.dim;
  archive.frame_rate_hz = p.frame_rate_hz;
  std::vector<PhoneToken> tokens;
  const int n_genders = static_cast<int>(p.genders.size());
  const int n_langs = static_cast<int>(p.languages.size());
  for (int u = 0; u < p.n_utterances; ++u) {
    char utt_id[32], spk_id[32];
    std::snprintf(utt_id, sizeof(utt_id), "utt%05d", u);
    const int s = u % p.n_speakers;
    std::snprintf(spk_id, sizeof(spk_id), "spk%03d", s);
    const std::string &gender = p.genders[s % n_genders];
    const std::string &language = p.languages[(s / n_genders) % n_langs];

    Rng rng(mix_seed(p.seed, utt_id));
    std::uniform_int_distribution<size_t> word(0, lexicon.size() - 1);
    std::uniform_int_distribution<int> duration(p.min_phone_frames,
                                                p.max_phone_frames);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<int> phone_seq;
    for (int w = 0; w < p.words_per_utterance; ++w) {
      const auto &wd = lexicon[word(rng)];
      phone_seq.insert(phone_seq.end(), wd.begin(), wd.end());
    }
    std::vector<int> durations(phone_seq.size());
    int total = 0;
    for (size_t i = 0; i < phone_seq.size(); ++i) total += durations[i] = duration(rng);

    FeatureMatrix frames(total, p.dim);
    int frame = 0;
    for (size_t i = 0; i < phone_seq.size(); ++i) {
      const PhoneSpec &ph = p.phones[phone_seq[i]];
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(p.dim);
      add_code(&mean, "phone", ph.phone);
      add_code(&mean, "phone_class", ph.phone_class);
      add_code(&mean, "gender", gender);
      add_code(&mean, "phone_gender", ph.phone + "/" + gender);
      add_code(&mean, "language", language);
      PhoneToken t;
      char tok_id[48];
      std::snprintf(tok_id, sizeof(tok_id), "%s_%03zu", utt_id, i);
      t.token_id = tok_id;
      t.utterance_id = utt_id;
      t.phone = ph.phone;
      t.phone_class = ph.phone_class;
      t.start_frame = frame;
      t.end_frame = frame + durations[i];
      t.speaker = spk_id;
      t.gender = gender;
      t.language = language;
      for (; frame < t.end_frame; ++frame)
        for (int d = 0; d < p.dim; ++d)
          frames(frame, d) = static_cast<float>(
              mean(d) + (p.noise_sigma > 0 ? p.noise_sigma * noise(rng) : 0.0));
      tokens.push_back(std::move(t));
    }
    archive.utterances.emplace(utt_id, std::move(frames));
  }
  AlignmentTable table = build_alignment_table(std::move(tokens), frame_counts(archive));
  return {std::move(archive), std::move(table)};
}

}  // namespace phoneprobe
