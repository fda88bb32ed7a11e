// Copyright 2026 The Modkal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MODKAL_RUN_CONFIG_H_
#define MODKAL_RUN_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace modkal {

enum class RunMode { kDegrade, kEnhance, kEval, kPipeline };
enum class EnhanceMethod { kSpecSub, kMmse, kLogMmse, kModKfLin, kModKfLog, kModKf3d };
enum class DerevMethod { kNone, kLrsv, kWpe, kWpeBlock };

// Invalid command line or configuration file; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  RunMode mode = RunMode::kEnhance;
  EnhanceMethod method = EnhanceMethod::kLogMmse;
  DerevMethod derev = DerevMethod::kNone;
  std::optional<double> t60_s;
  double drr_db = 0.0;
  std::optional<double> snr_db;
  double alpha = 0.0;
  std::optional<double> gamma_param;
  std::optional<std::uint64_t> seed;
  double frame_ms = 20.0;
  double hop_ms = 10.0;
  // For eval, input is the reference and output the signal under test.
  std::string input_path;
  std::string output_path;
  std::string noise_path;    // empty: seeded white noise
  std::string metrics_path;  // empty: stdout

  // Throws UsageError for out-of-range values and invalid combinations.
  void Validate() const;

  // Canonical key=value text of every setting that affects outputs.
  std::string Canonical() const;

  // FNV-1a 64 of Canonical(), as 16 hex digits.
  std::string Hash() const;
};

std::string ToString(RunMode mode);
std::string ToString(EnhanceMethod method);
std::string ToString(DerevMethod derev);

// Parses `modkal <mode> [flags] <in> <out>`. Values come from, in increasing
// precedence: built-in defaults, the key=value file named by --config (or
// the MODKAL_CONFIG environment variable), and command-line flags. Returns
// nullopt after printing help to `out`.
std::optional<RunConfig> ParseConfig(const std::vector<std::string>& args,
                                     std::ostream& out);

}  // namespace modkal

#endif  // MODKAL_RUN_CONFIG_H_
