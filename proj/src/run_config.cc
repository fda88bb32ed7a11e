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

#include "modkal/run_config.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>

#include <CLI11.hpp>

namespace modkal {
namespace {

const std::map<std::string, RunMode> kModes = {{"degrade", RunMode::kDegrade},
                                               {"enhance", RunMode::kEnhance},
                                               {"eval", RunMode::kEval},
                                               {"pipeline", RunMode::kPipeline}};

const std::map<std::string, EnhanceMethod> kMethods = {
    {"specsub", EnhanceMethod::kSpecSub},     {"mmse", EnhanceMethod::kMmse},
    {"logmmse", EnhanceMethod::kLogMmse},     {"modkf_lin", EnhanceMethod::kModKfLin},
    {"modkf_log", EnhanceMethod::kModKfLog},  {"modkf_3d", EnhanceMethod::kModKf3d}};

const std::map<std::string, DerevMethod> kDerevs = {{"none", DerevMethod::kNone},
                                                    {"lrsv", DerevMethod::kLrsv},
                                                    {"wpe", DerevMethod::kWpe},
                                                    {"wpe_block", DerevMethod::kWpeBlock}};

template <typename Enum>
std::string NameOf(const std::map<std::string, Enum>& names, Enum value) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  throw std::logic_error("unnamed enum value");
}

std::string Number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string Number(const std::optional<double>& value) {
  return value ? Number(*value) : "none";
}

}  // namespace

std::string ToString(RunMode mode) { return NameOf(kModes, mode); }
std::string ToString(EnhanceMethod method) { return NameOf(kMethods, method); }
std::string ToString(DerevMethod derev) { return NameOf(kDerevs, derev); }

void RunConfig::Validate() const {
  if (!(alpha >= -1.0 && alpha <= 1.0)) {
    throw UsageError("alpha out of range [-1,1]");
  }
  if (gamma_param) {
    if (!(*gamma_param > 0.0)) throw UsageError("gamma must be > 0");
    if (alpha != 0.0) throw UsageError("alpha and gamma are mutually exclusive");
  }
  if (t60_s && !(*t60_s > 0.0)) throw UsageError("t60 must be > 0");
  if (!std::isfinite(drr_db)) throw UsageError("drr must be finite");
  if (snr_db && std::isnan(*snr_db)) throw UsageError("snr must be a number");
  if (!(frame_ms > 0.0) || !(hop_ms > 0.0) || hop_ms > frame_ms) {
    throw UsageError("need 0 < hop-ms <= frame-ms");
  }
  if (derev == DerevMethod::kLrsv && !t60_s) {
    throw UsageError("derev=lrsv requires --t60");
  }
  if (mode == RunMode::kDegrade || mode == RunMode::kPipeline) {
    if (!snr_db && !t60_s) throw UsageError("degradation needs --snr or --t60");
    if (!seed) throw UsageError("--seed is required for degradation");
  }
  if (input_path.empty() || output_path.empty()) {
    throw UsageError("input and output paths are required");
  }
}

std::string RunConfig::Canonical() const {
  std::string out;
  auto line = [&out](const std::string& key, const std::string& value) {
    out += key + "=" + value + "\n";
  };
  line("mode", ToString(mode));
  line("method", ToString(method));
  line("derev", ToString(derev));
  line("t60", Number(t60_s));
  line("drr", Number(drr_db));
  line("snr", Number(snr_db));
  line("alpha", Number(alpha));
  line("gamma", Number(gamma_param));
  line("seed", seed ? std::to_string(*seed) : "none");
  line("frame-ms", Number(frame_ms));
  line("hop-ms", Number(hop_ms));
  line("input", input_path);
  line("noise", noise_path);
  return out;
}

std::string RunConfig::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : Canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::optional<RunConfig> ParseConfig(const std::vector<std::string>& args,
                                     std::ostream& out) {
  RunConfig cfg;
  CLI::App app{"Single-channel speech enhancement and dereverberation", "modkal"};
  app.add_option("mode", cfg.mode, "degrade | enhance | eval | pipeline")
      ->required()
      ->configurable(false)
      ->transform(CLI::CheckedTransformer(kModes));
  app.add_option("input", cfg.input_path, "input WAV (reference for eval)")
      ->required()
      ->configurable(false);
  app.add_option("output", cfg.output_path, "output WAV (signal under test for eval)")
      ->required()
      ->configurable(false);
  app.add_option("--method", cfg.method, "noise suppression method")
      ->transform(CLI::CheckedTransformer(kMethods));
  app.add_option("--derev", cfg.derev, "dereverberation stage")
      ->transform(CLI::CheckedTransformer(kDerevs));
  app.add_option("--t60", cfg.t60_s, "reverberation time in seconds");
  app.add_option("--drr", cfg.drr_db, "direct-to-reverberant ratio in dB");
  app.add_option("--snr", cfg.snr_db, "mixing SNR in dB");
  app.add_option("--alpha", cfg.alpha, "speech/noise phase factor in [-1, 1]");
  app.add_option("--gamma", cfg.gamma_param, "use the gamma observation form");
  app.add_option("--seed", cfg.seed, "seed for every stochastic step");
  app.add_option("--frame-ms", cfg.frame_ms, "STFT frame length in ms");
  app.add_option("--hop-ms", cfg.hop_ms, "STFT hop in ms");
  app.add_option("--noise", cfg.noise_path, "noise WAV used for mixing");
  app.add_option("--metrics", cfg.metrics_path, "JSON-lines metrics file (default stdout)")
      ->configurable(false);

  std::string default_config;
  if (const char* env = std::getenv("MODKAL_CONFIG"); env != nullptr && *env) {
    default_config = env;
    if (!std::filesystem::exists(default_config)) {
      throw UsageError("MODKAL_CONFIG file not found: " + default_config);
    }
  }
  app.set_config("--config", default_config, "key=value configuration file");
  app.allow_config_extras(false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  cfg.Validate();
  return cfg;
}

}  // namespace modkal
