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

#ifndef MODKAL_DEREVERB_H_
#define MODKAL_DEREVERB_H_

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "modkal/gainrules.h"
#include "modkal/grid.h"
#include "modkal/parallel.h"
#include "modkal/stft.h"

namespace modkal {

// Length of the direct-path window when measuring DRR.
inline constexpr double kDirectWindowS = 0.002;

// Default early/late boundary.
inline constexpr double kDefaultLateBoundaryS = 0.05;

struct RirParams {
  double t60_s = 0.5;
  double drr_db = 0.0;
  int sample_rate_hz = 16000;
  double length_s = 0.5;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Amplitude decay rate zeta = 3 ln 10 / t60 (1/s); zero for t60 = inf.
double DecayRate(double t60_s);

// Direct impulse at h[0] followed by seeded Gaussian noise under the
// envelope exp(-zeta t). The direct amplitude is chosen so the energy in the
// first kDirectWindowS over the energy after it equals drr_db; the response
// is then scaled so h[0] = 1. Throws if the DRR cannot be reached because the
// tail energy inside the direct window is already too large.
std::vector<double> SynthRir(const RirParams& params);

// exp(-2 zeta tl), the power decay across the early/late boundary.
double LateDecayFactor(double t60_s, double tl_s);

// lambda_L[t] = LateDecayFactor * power[t - round(tl / hop)], zero before the
// delay. Throws "track too short" if the delay reaches the track length.
std::vector<double> LrsvEstimate(std::span<const double> power, double t60_s,
                                 double tl_s, double hop_s);

// clamp((P - lambda_late - lambda_noise) / max(P, floor_power), gain_min, 1).
double LateSuppressionGain(double noisy_power, double lambda_late,
                           double lambda_noise, double gain_min,
                           double floor_power = kLogPowerFloor);

struct LrsvConfig {
  double t60_s = 0.5;
  double tl_s = kDefaultLateBoundaryS;
  // First-order recursive smoothing of |Y|^2 before the late variance and
  // the gain are formed; 0 uses the raw periodogram.
  double power_smoothing = 0.5;
  double gain_min = kDefaultGainFloor;

  void Validate() const;
};

// Gains from LRSV plus an optional noise PSD (same shape as `spec`; an empty
// grid means no noise term).
Grid<double> LrsvGains(const Spectrogram& spec, const LrsvConfig& config,
                       const Grid<double>& noise_psd = {},
                       Exec exec = Exec::kSerial);

Spectrogram SuppressLateReverb(const Spectrogram& spec, const LrsvConfig& config,
                               const Grid<double>& noise_psd = {},
                               Exec exec = Exec::kSerial);

struct WpeConfig {
  int delay_T1 = 3;
  int taps_T2 = 40;  // 0 disables prediction
  int iterations = 3;
  double eps = 1e-8;      // ridge, relative to trace(R) / taps_T2
  double var_floor = 1e-10;
  double block_s = 0.0;   // > 0 selects block-wise processing

  void Validate() const;
};

struct WpeResult {
  Spectrogram output;
  // filters(k, j) is the coefficient g_j of bin k applied as g^H to the frame
  // delayed by delay_T1 + j.
  Grid<std::complex<double>> filters;
};

// Batch WPE over the whole utterance, one independent solve per bin. Throws
// "utterance too short for WPE taps" unless T > delay_T1 + taps_T2.
WpeResult WpeBatchDetailed(const Spectrogram& spec, const WpeConfig& config,
                           Exec exec = Exec::kSerial);

Spectrogram WpeBatch(const Spectrogram& spec, const WpeConfig& config,
                     Exec exec = Exec::kSerial);

// Batch WPE on non-overlapping blocks of round(block_s / hop) frames with no
// state carried across blocks. An utterance no longer than one block is
// processed exactly as WpeBatch; a trailing block too short for the taps is
// passed through unmodified.
Spectrogram WpeBlock(const Spectrogram& spec, const WpeConfig& config,
                     Exec exec = Exec::kSerial);

int WpeBlockFrames(const WpeConfig& config, const StftGeometry& geometry);

}  // namespace modkal

#endif  // MODKAL_DEREVERB_H_
