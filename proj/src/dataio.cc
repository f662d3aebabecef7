// src/dataio.cc

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

#include "phoneprobe/dataio.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "phoneprobe/csv.h"

namespace phoneprobe {

namespace fs = std::filesystem;
using nlohmann::json;

void FeatureArchive::validate() const {
  if (dim <= 0)
    throw Error(ErrorKind::kFormat, "archive dim must be positive, got " +
                                        std::to_string(dim));
  if (!(frame_rate_hz > 0) || !std::isfinite(frame_rate_hz))
    throw Error(ErrorKind::kFormat, "archive frame_rate_hz must be positive");
  for (const auto &[id, m] : utterances) {
    if (m.rows() < 1)
      throw Error(ErrorKind::kFormat, "utterance " + id + " has no frames");
    if (m.cols() != dim)
      throw Error(ErrorKind::kDimMismatch,
                  "dim mismatch for utterance " + id + ": expected " +
                      std::to_string(dim) + ", got " + std::to_string(m.cols()));
    if (!m.allFinite())
      throw Error(ErrorKind::kNonFinite,
                  "non-finite value in utterance " + id);
  }
}

int64_t FeatureArchive::total_frames() const {
  int64_t n = 0;
  for (const auto &kv : utterances) n += kv.second.rows();
  return n;
}

bool FeatureArchive::operator==(const FeatureArchive &other) const {
  if (dim != other.dim || frame_rate_hz != other.frame_rate_hz ||
      utterances.size() != other.utterances.size())
    return false;
  auto it = other.utterances.begin();
  for (const auto &[id, m] : utterances) {
    if (id != it->first || m.rows() != it->second.rows() ||
        m.cols() != it->second.cols())
      return false;
    // Compare bit patterns so that -0.0 vs 0.0 counts as a difference.
    if (std::memcmp(m.data(), it->second.data(), sizeof(float) * m.size()) != 0)
      return false;
    ++it;
  }
  return true;
}

FrameCounts frame_counts(const FeatureArchive &archive) {
  FrameCounts counts;
  for (const auto &[id, m] : archive.utterances)
    counts[id] = static_cast<int>(m.rows());
  return counts;
}

namespace {

json parse_json_file(const fs::path &path) {
  std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kFormat,
                "malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

FeatureArchive load_archive(const fs::path &root) {
  fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path))
    throw Error(ErrorKind::kMissingFile,
                "missing archive manifest " + manifest_path.string());
  json manifest = parse_json_file(manifest_path);

  FeatureArchive archive;
  std::vector<std::tuple<std::string, std::string, int64_t>> entries;
  try {
    archive.dim = manifest.at("dim").get<int>();
    archive.frame_rate_hz = manifest.at("frame_rate_hz").get<double>();
    for (const auto &u : manifest.at("utterances")) {
      std::string id = u.at("id").get<std::string>();
      if (u.contains("dim") && u.at("dim").get<int>() != archive.dim)
        throw Error(ErrorKind::kDimMismatch,
                    "dim mismatch for utterance " + id + ": manifest dim " +
                        std::to_string(archive.dim) + ", utterance declares " +
                        std::to_string(u.at("dim").get<int>()));
      entries.emplace_back(id, u.at("file").get<std::string>(),
                           u.at("n_frames").get<int64_t>());
    }
  } catch (const json::exception &e) {
    throw Error(ErrorKind::kFormat,
                "invalid manifest " + manifest_path.string() + ": " + e.what());
  }
  if (archive.dim <= 0)
    throw Error(ErrorKind::kFormat, "manifest dim must be positive");
  if (!(archive.frame_rate_hz > 0))
    throw Error(ErrorKind::kFormat, "manifest frame_rate_hz must be positive");

  for (const auto &[id, file, n_frames] : entries) {
    if (n_frames < 1)
      throw Error(ErrorKind::kFormat,
                  "utterance " + id + " declares n_frames < 1");
    if (archive.utterances.count(id))
      throw Error(ErrorKind::kFormat, "duplicate utterance id " + id);
    fs::path path = root / file;
    if (!fs::exists(path))
      throw Error(ErrorKind::kMissingFile, "missing feature file " +
                                               path.string() +
                                               " for utterance " + id);
    std::string bytes = read_file(path);
    const uint64_t expected =
        static_cast<uint64_t>(n_frames) * archive.dim * sizeof(float);
    if (bytes.size() != expected)
      throw Error(ErrorKind::kByteLength,
                  "byte-length mismatch for utterance " + id + ": expected " +
                      std::to_string(expected) + " bytes, found " +
                      std::to_string(bytes.size()));
    FeatureMatrix m(n_frames, archive.dim);
    const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
    float *dst = m.data();
    for (int64_t i = 0; i < m.size(); ++i) {
      dst[i] = read_f32_le(p + 4 * i);
      if (!std::isfinite(dst[i]))
        throw Error(ErrorKind::kNonFinite,
                    "non-finite value in utterance " + id + " at frame " +
                        std::to_string(i / archive.dim));
    }
    archive.utterances.emplace(id, std::move(m));
  }
  return archive;
}

void save_archive(const FeatureArchive &archive, const fs::path &root) {
  archive.validate();
  json manifest;
  manifest["dim"] = archive.dim;
  manifest["frame_rate_hz"] = archive.frame_rate_hz;
  manifest["utterances"] = json::array();
  size_t index = 0;
  for (const auto &[id, m] : archive.utterances) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.f32", index++);
    std::string bytes;
    bytes.reserve(m.size() * 4);
    for (int64_t i = 0; i < m.size(); ++i) append_f32_le(&bytes, m.data()[i]);
    write_file_atomic(root / name, bytes);
    manifest["utterances"].push_back(
        {{"id", id}, {"file", name}, {"n_frames", m.rows()}});
  }
  write_file_atomic(root / "manifest.json", manifest.dump(2) + "\n");
}

const std::string &label_of(const PhoneToken &token, LabelKind kind) {
  switch (kind) {
    case LabelKind::kPhoneClass: return token.phone_class;
    case LabelKind::kGender: return token.gender;
    case LabelKind::kLanguage: return token.language;
  }
  return token.phone_class;
}

AlignmentTable build_alignment_table(std::vector<PhoneToken> tokens,
                                     const FrameCounts &counts) {
  std::set<std::string> ids;
  std::map<std::string, std::string> phone_to_class;
  std::map<std::string, const PhoneToken *> last_in_utt;
  std::map<std::string, std::set<std::string>> vocab;
  for (const PhoneToken &t : tokens) {
    if (t.token_id.empty())
      throw Error(ErrorKind::kFormat, "empty token_id");
    if (!ids.insert(t.token_id).second)
      throw Error(ErrorKind::kFormat, "duplicate token_id " + t.token_id);
    auto it = counts.find(t.utterance_id);
    if (it == counts.end())
      throw Error(ErrorKind::kUnknownUtterance,
                  "token " + t.token_id + " references unknown utterance " +
                      t.utterance_id);
    if (t.start_frame < 0 || t.end_frame <= t.start_frame)
      throw Error(ErrorKind::kSpanOutOfRange,
                  "token " + t.token_id + " has empty or negative span [" +
                      std::to_string(t.start_frame) + "," +
                      std::to_string(t.end_frame) + ")");
    if (t.end_frame > it->second)
      throw Error(ErrorKind::kSpanOutOfRange,
                  "span out of range: token " + t.token_id + " ends at frame " +
                      std::to_string(t.end_frame) + " but utterance " +
                      t.utterance_id + " has " + std::to_string(it->second) +
                      " frames");
    auto [cls, inserted] = phone_to_class.emplace(t.phone, t.phone_class);
    if (!inserted && cls->second != t.phone_class)
      throw Error(ErrorKind::kInconsistentClass,
                  "phone '" + t.phone + "' labelled both '" + cls->second +
                      "' and '" + t.phone_class + "' (token " + t.token_id +
                      ")");
    const PhoneToken *&prev = last_in_utt[t.utterance_id];
    if (prev) {
      if (t.start_frame < prev->start_frame)
        throw Error(ErrorKind::kFormat,
                    "tokens of utterance " + t.utterance_id +
                        " not sorted by start_frame at token " + t.token_id);
      if (t.start_frame < prev->end_frame)
        throw Error(ErrorKind::kOverlap, "token " + t.token_id +
                                             " overlaps token " +
                                             prev->token_id + " in utterance " +
                                             t.utterance_id);
    }
    prev = &t;
    vocab["phone"].insert(t.phone);
    vocab["phone_class"].insert(t.phone_class);
    vocab["speaker"].insert(t.speaker);
    vocab["gender"].insert(t.gender);
    vocab["language"].insert(t.language);
  }
  AlignmentTable table;
  table.tokens = std::move(tokens);
  for (auto &[kind, values] : vocab)
    table.label_vocabularies[kind].assign(values.begin(), values.end());
  return table;
}

namespace {

int parse_frame(const std::string &text, const std::string &where) {
  size_t pos = 0;
  long value = 0;
  try {
    value = std::stol(text, &pos);
  } catch (const std::exception &) {
    pos = 0;
  }
  if (pos != text.size() || text.empty())
    throw Error(ErrorKind::kFormat,
                where + ": expected integer frame index, got '" + text + "'");
  return static_cast<int>(value);
}

}  // namespace

std::vector<PhoneToken> read_alignment_csv(std::istream &is,
                                           const std::string &source_name) {
  std::vector<std::string> fields;
  if (!read_csv_record(is, &fields))
    throw Error(ErrorKind::kFormat, source_name + ": missing CSV header");
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0)
    fields[0].erase(0, 3);
  std::vector<std::string> expected;
  {
    std::istringstream hs(kAlignmentHeader);
    read_csv_record(hs, &expected);
  }
  if (fields != expected)
    throw Error(ErrorKind::kFormat, source_name + ": header must be '" +
                                        std::string(kAlignmentHeader) + "'");
  std::vector<PhoneToken> tokens;
  int line = 1;
  while (read_csv_record(is, &fields)) {
    ++line;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    std::string where = source_name + ":" + std::to_string(line);
    if (fields.size() != expected.size())
      throw Error(ErrorKind::kFormat, where + ": expected " +
                                          std::to_string(expected.size()) +
                                          " fields, got " +
                                          std::to_string(fields.size()));
    PhoneToken t;
    t.token_id = fields[0];
    t.utterance_id = fields[1];
    t.phone = fields[2];
    t.phone_class = fields[3];
    t.start_frame = parse_frame(fields[4], where);
    t.end_frame = parse_frame(fields[5], where);
    t.speaker = fields[6];
    t.gender = fields[7];
    t.language = fields[8];
    tokens.push_back(std::move(t));
  }
  return tokens;
}

AlignmentTable load_alignments(const fs::path &path, const FrameCounts &counts) {
  if (!fs::exists(path))
    throw Error(ErrorKind::kMissingFile,
                "missing alignment file " + path.string());
  std::ifstream is(path, std::ios::binary);
  return build_alignment_table(read_alignment_csv(is, path.string()), counts);
}

AlignmentTable load_alignments(const fs::path &path,
                               const FeatureArchive &archive) {
  return load_alignments(path, frame_counts(archive));
}

std::string alignment_csv(const std::vector<PhoneToken> &tokens) {
  std::string out = std::string(kAlignmentHeader) + "\n";
  for (const PhoneToken &t : tokens) {
    out += csv_join({t.token_id, t.utterance_id, t.phone, t.phone_class,
                     std::to_string(t.start_frame), std::to_string(t.end_frame),
                     t.speaker, t.gender, t.language});
    out += "\n";
  }
  return out;
}

void save_alignments(const std::vector<PhoneToken> &tokens,
                     const fs::path &path) {
  write_file_atomic(path, alignment_csv(tokens));
}

}  // namespace phoneprobe
