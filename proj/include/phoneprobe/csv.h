// include/phoneprobe/csv.h

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

#ifndef PHONEPROBE_CSV_H_
#define PHONEPROBE_CSV_H_

#include <istream>
#include <string>
#include <vector>

namespace phoneprobe {

// Minimal RFC 4180 reader: comma separated, optional double-quoted fields
// with "" escapes, LF or CRLF line endings.  Returns false at end of input.
bool read_csv_record(std::istream &is, std::vector<std::string> *fields);

// Quotes the field only when it contains a separator, quote or newline.
std::string csv_escape(const std::string &field);
std::string csv_join(const std::vector<std::string> &fields);

}  // namespace phoneprobe

#endif  // PHONEPROBE_CSV_H_
