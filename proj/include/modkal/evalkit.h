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

#ifndef MODKAL_EVALKIT_H_
#define MODKAL_EVALKIT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "modkal/grid.h"
#include "modkal/parallel.h"
#include "modkal/stft.h"

namespace modkal {

inline constexpr double kSegSnrFloorDb = -10.0;
inline constexpr double kSegSnrCeilingDb = 35.0;

// Frames within this many dB of the loudest frame count as active, both for
// SNR scaling and for segmental SNR.
inline constexpr double kActiveRangeDb = 40.0;

// Frame length used to find active regions when mixing noise.
inline constexpr double kActivityFrameS = 0.02;

struct MetricReport {
  double seg_snr_db = 0.0;
  double lsd_db = 0.0;
  std::vector<double> per_frame_seg_snr_db;
  std::string file;
  std::string method;
  std::string config_hash;

  // {"file", "method", "seg_snr_db", "lsd_db", "config_hash"} on one line.
  std::string ToJsonLine() const;
};

// 0/1 mask over non-overlapping frames of `frame_len` samples (trailing
// partial frame included) marking frames within kActiveRangeDb of the peak.
std::vector<bool> ActiveFrames(std::span<const double> signal, int frame_len);

// Mean power of `signal` over the active frames of `reference`.
double ActivePower(std::span<const double> signal,
                   std::span<const double> reference, int frame_len);

// clean + c * noise, with c chosen so the SNR over the active region of
// `clean` equals snr_db. The noise is read from a seed-dependent offset and
// wraps around. snr_db = +inf returns clean unchanged.
std::vector<double> AddNoiseAtSnr(std::span<const double> clean,
                                  std::span<const double> noise, double snr_db,
                                  std::uint64_t seed, int sample_rate_hz);

// Direct convolution for small problems, FFT convolution otherwise. Output
// length is a.size() + b.size() - 1.
std::vector<double> Convolve(std::span<const double> a,
                             std::span<const double> b);

// Convolves with `rir` (if non-empty), then mixes `noise` (if non-empty) at
// snr_db relative to the reverberant signal.
std::vector<double> Degrade(std::span<const double> clean,
                            std::span<const double> rir,
                            std::span<const double> noise, double snr_db,
                            std::uint64_t seed, int sample_rate_hz);

struct SegSnrResult {
  double mean_db = 0.0;
  std::vector<double> per_frame_db;  // active frames only
};

// Mean of clamped per-frame SNRs over non-overlapping frames whose reference
// energy is within kActiveRangeDb of the loudest frame.
SegSnrResult SegSnrDetailed(std::span<const double> reference,
                            std::span<const double> test, int frame_len);

double SegSnr(std::span<const double> reference, std::span<const double> test,
              int frame_len);

// Mean over frames of the RMS (over bins) log-power difference in dB.
double Lsd(const RealSpectrogram& ref, const RealSpectrogram& test);

// LSD between the STFTs of two signals of equal length.
double LsdOfSignals(std::span<const double> reference,
                    std::span<const double> test, const StftGeometry& geometry,
                    Exec exec = Exec::kSerial);

struct PhaseReconstruction {
  std::vector<double> samples;
  // Distance between the target magnitude and the magnitude of the STFT of
  // each iteration's output, counting both halves of the spectrum.
  std::vector<double> consistency_error;
};

// Griffin-Lim style iteration: combine the target magnitude with the current
// phase, invert by least squares, re-analyse and keep the new phase.
PhaseReconstruction IterativePhaseReconstruct(const Grid<double>& target_mag,
                                              const Grid<double>& init_phase,
                                              const StftGeometry& geometry,
                                              int iterations,
                                              Exec exec = Exec::kSerial);

struct SpeechLikeConfig {
  double f0_hz = 120.0;
  double pitch_depth = 0.1;     // relative
  double pitch_rate_hz = 1.0;
  double syllable_rate_hz = 4.0;
  double amplitude = 0.1;
};

// Band-limited sawtooth with sinusoidal pitch modulation under a raised
// cosine syllable envelope that returns to zero once per syllable.
std::vector<double> SpeechLikeSignal(double duration_s, int sample_rate_hz,
                                     const SpeechLikeConfig& config = {});

std::vector<double> WhiteNoise(std::size_t length, std::uint64_t seed,
                               double stddev = 1.0);

}  // namespace modkal

#endif  // MODKAL_EVALKIT_H_
