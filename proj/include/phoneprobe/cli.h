// include/phoneprobe/cli.h

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

#ifndef PHONEPROBE_CLI_H_
#define PHONEPROBE_CLI_H_

// Command-line driver.  Subcommands: pool, probe, path, quantize fit|apply,
// abx, tsne, synth, battery, replay.  Every run writes run.json (argv and all
// effective parameters) next to its outputs in --out-dir.
//
// Exit codes: 0 success, 1 usage or validation error, 2 runtime failure.

#include <string>
#include <vector>

namespace phoneprobe {

// `args` excludes the program name.
int run_cli(const std::vector<std::string> &args);

int run_cli(int argc, const char *const *argv);

}  // namespace phoneprobe

#endif  // PHONEPROBE_CLI_H_
