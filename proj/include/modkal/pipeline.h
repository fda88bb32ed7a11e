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

#ifndef MODKAL_PIPELINE_H_
#define MODKAL_PIPELINE_H_

#include <iosfwd>
#include <span>
#include <vector>

#include "modkal/evalkit.h"
#include "modkal/modkf.h"
#include "modkal/parallel.h"
#include "modkal/run_config.h"
#include "modkal/stft.h"

namespace modkal {

inline constexpr double kWpeBlockS = 0.5;

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

// Throws for sample rates other than 8 and 16 kHz.
void CheckSampleRate(int sample_rate_hz);

StftGeometry GeometryFor(const RunConfig& cfg, int sample_rate_hz);

// Filter settings behind the modkf_* methods.
ModKfConfig ModKfConfigFor(const RunConfig& cfg);

// Reverberation (when t60 is set) followed by noise mixing (when snr is set).
// `noise` may be empty, in which case seeded white noise is used.
std::vector<double> DegradeSignal(std::span<const double> clean,
                                  std::span<const double> noise,
                                  const RunConfig& cfg, int sample_rate_hz);

// Denoising with cfg.method, then the cfg.derev stage. Output has the input
// length.
std::vector<double> EnhanceSignal(std::span<const double> noisy,
                                  const RunConfig& cfg, int sample_rate_hz,
                                  Exec exec = Exec::kParallel);

// Segmental SNR and LSD of `test` against `reference`; `test` is cut to the
// reference length and must not be shorter.
MetricReport Evaluate(std::span<const double> reference,
                      std::span<const double> test, const RunConfig& cfg,
                      int sample_rate_hz, Exec exec = Exec::kParallel);

// Executes one run. Metrics go to cfg.metrics_path, or to `metrics_out` when
// that is empty. Errors are reported on `err`, every file this run created is
// removed, and kExitRuntime is returned.
int RunPipeline(const RunConfig& cfg, std::ostream& metrics_out,
                std::ostream& err, Exec exec = Exec::kParallel);

}  // namespace modkal

#endif  // MODKAL_PIPELINE_H_
