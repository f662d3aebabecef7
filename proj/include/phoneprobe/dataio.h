// include/phoneprobe/dataio.h

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

#ifndef PHONEPROBE_DATAIO_H_
#define PHONEPROBE_DATAIO_H_

// Feature archives and phone alignment tables: the on-disk inputs of every
// analysis.  Loaders validate completely and either return a well-formed
// value or throw phoneprobe::Error.

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phoneprobe/common.h"

namespace phoneprobe {

// One row per frame, one column per feature dimension.
using FeatureMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureArchive {
  int dim = 0;
  double frame_rate_hz = 100.0;
  std::map<std::string, FeatureMatrix> utterances;

  // Checks dim/frame-rate positivity, per-utterance shape and finiteness.
  void validate() const;
  int64_t total_frames() const;
  bool operator==(const FeatureArchive &other) const;
};

// utterance id -> number of frames; what alignments are validated against.
using FrameCounts = std::map<std::string, int>;
FrameCounts frame_counts(const FeatureArchive &archive);

FeatureArchive load_archive(const std::filesystem::path &root);
void save_archive(const FeatureArchive &archive,
                  const std::filesystem::path &root);

struct PhoneToken {
  std::string token_id;
  std::string utterance_id;
  std::string phone;
  std::string phone_class;
  int start_frame = 0;
  int end_frame = 0;  // exclusive
  std::string speaker;
  std::string gender;
  std::string language;

  int num_frames() const { return end_frame - start_frame; }
  bool operator==(const PhoneToken &) const = default;
};

const std::string &label_of(const PhoneToken &token, LabelKind kind);

struct AlignmentTable {
  std::vector<PhoneToken> tokens;
  // "phone", "phone_class", "speaker", "gender", "language" -> sorted
  // distinct values observed in tokens.
  std::map<std::string, std::vector<std::string>> label_vocabularies;
};

inline const char kAlignmentHeader[] =
    "token_id,utterance_id,phone,phone_class,start_frame,end_frame,speaker,"
    "gender,language";

// Validates tokens against the utterance frame counts and fills in the
// label vocabularies.  Tokens of one utterance must appear in increasing
// start_frame order and must not overlap.
AlignmentTable build_alignment_table(std::vector<PhoneToken> tokens,
                                     const FrameCounts &counts);

// Parses the alignment CSV without validating spans.
std::vector<PhoneToken> read_alignment_csv(std::istream &is,
                                           const std::string &source_name);

AlignmentTable load_alignments(const std::filesystem::path &path,
                               const FrameCounts &counts);
AlignmentTable load_alignments(const std::filesystem::path &path,
                               const FeatureArchive &archive);

std::string alignment_csv(const std::vector<PhoneToken> &tokens);
void save_alignments(const std::vector<PhoneToken> &tokens,
                     const std::filesystem::path &path);

}  // namespace phoneprobe

#endif  // PHONEPROBE_DATAIO_H_
