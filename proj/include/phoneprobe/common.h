// include/phoneprobe/common.h

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

#ifndef PHONEPROBE_COMMON_H_
#define PHONEPROBE_COMMON_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace phoneprobe {

enum class ErrorKind {
  kInvalidArgument,
  kFormat,
  kMissingFile,
  kDimMismatch,
  kNonFinite,
  kByteLength,
  kUnknownUtterance,
  kSpanOutOfRange,
  kOverlap,
  kInconsistentClass,
  kInsufficientData,
  kNoCells,
  kIo,
};

// All library failures are reported through this type.  Validation errors
// (malformed input, bad arguments) are distinguished from runtime failures
// so the command-line front end can map them to different exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  bool is_validation() const { return kind_ != ErrorKind::kIo; }

 private:
  ErrorKind kind_;
};

enum class LabelKind { kPhoneClass, kGender, kLanguage };

inline constexpr LabelKind kAllLabelKinds[] = {
    LabelKind::kPhoneClass, LabelKind::kGender, LabelKind::kLanguage};

std::string to_string(LabelKind kind);
LabelKind parse_label_kind(std::string_view name);

using Rng = std::mt19937_64;

// Stable 64-bit FNV-1a; used to derive sub-seeds from string keys.
uint64_t fnv1a(std::string_view text, uint64_t basis = 0xcbf29ce484222325ULL);
uint64_t mix_seed(uint64_t seed, std::string_view key);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path &path,
                       std::string_view contents);
std::string read_file(const std::filesystem::path &path);

// Little-endian float32 / uint16 codecs, independent of host byte order.
void append_f32_le(std::string *out, float value);
float read_f32_le(const unsigned char *bytes);
void append_u16_le(std::string *out, uint16_t value);
uint16_t read_u16_le(const unsigned char *bytes);

// Shortest decimal text that round-trips the double.
std::string format_double(double value);

}  // namespace phoneprobe

#endif  // PHONEPROBE_COMMON_H_
