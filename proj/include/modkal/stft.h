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

#ifndef MODKAL_STFT_H_
#define MODKAL_STFT_H_

#include <complex>
#include <span>
#include <vector>

#include "modkal/grid.h"
#include "modkal/parallel.h"

namespace modkal {

// kRectangular exists for analysis tests; enhancement uses the other two.
enum class Window { kRectangular, kHamming, kSqrtHann };

enum class SpectralDomain { kAmplitude, kPower, kLogPower };

// Power floor applied before taking logarithms (about -120 dB).
inline constexpr double kLogPowerFloor = 1e-12;

struct StftGeometry {
  int frame_len = 320;
  int hop = 160;
  Window window = Window::kSqrtHann;
  int sample_rate_hz = 16000;

  int num_bins() const { return frame_len / 2 + 1; }
  double hop_seconds() const {
    return static_cast<double>(hop) / sample_rate_hz;
  }

  // Throws std::invalid_argument unless frame_len is even and positive and
  // 0 < hop <= frame_len.
  void Validate() const;

  // Converts millisecond frame/hop sizes, rounding to the nearest sample and
  // bumping an odd frame length up by one.
  static StftGeometry FromMilliseconds(int sample_rate_hz, double frame_ms,
                                       double hop_ms,
                                       Window window = Window::kSqrtHann);

  friend bool operator==(const StftGeometry&, const StftGeometry&) = default;
};

// One-sided STFT. frames(t, k) is bin k of frame t.
struct Spectrogram {
  StftGeometry geometry;
  Grid<std::complex<double>> frames;

  int num_frames() const { return frames.rows(); }
  int num_bins() const { return frames.cols(); }
};

struct RealSpectrogram {
  StftGeometry geometry;
  SpectralDomain domain = SpectralDomain::kPower;
  Grid<double> values;

  int num_frames() const { return values.rows(); }
  int num_bins() const { return values.cols(); }
};

// Triangular Mel filterbank. weights(m, k) is the response of band m at bin k.
struct MelMap {
  Grid<double> weights;
  std::vector<double> centers_hz;

  int num_bands() const { return weights.rows(); }
  int num_bins() const { return weights.cols(); }
};

// Half-open sample index range.
struct SampleRange {
  int begin = 0;
  int end = 0;
};

std::vector<double> AnalysisWindow(int frame_len, Window window);
std::vector<double> SynthesisWindow(int frame_len, Window window);

// True if the analysis*synthesis window product overlap-adds to a constant
// at this hop (relative ripple below `tolerance`).
bool SatisfiesCola(const StftGeometry& geometry, double tolerance = 1e-10);

// floor((signal_len - frame_len) / hop) + 1, or 0 if the signal is shorter
// than one frame.
int NumFrames(int signal_len, int frame_len, int hop);

// Samples that receive contributions from every overlapping frame.
SampleRange InteriorRange(const StftGeometry& geometry, int num_frames);

Spectrogram Analyze(std::span<const double> signal,
                    const StftGeometry& geometry, Exec exec = Exec::kSerial);

// Weighted overlap-add with the constant COLA normalisation. Output length is
// (T - 1) * hop + frame_len. Throws std::invalid_argument with
// "reconstruction condition violated" for non-COLA geometries.
std::vector<double> Synthesize(const Spectrogram& spec,
                               Exec exec = Exec::kSerial);

// Least-squares inverse: overlap-adds analysis-windowed frames and divides by
// the local sum of squared windows. Exact everywhere a sample is covered, for
// any hop. This is the projection used by iterative phase reconstruction.
std::vector<double> SynthesizeLeastSquares(const Spectrogram& spec,
                                           Exec exec = Exec::kSerial);

RealSpectrogram ToDomain(const Spectrogram& spec, SpectralDomain target,
                         double power_floor = kLogPowerFloor);

// Scales every coefficient by a real gain; phases are untouched.
Spectrogram ApplyGain(const Spectrogram& spec, const Grid<double>& gains);

double HzToMel(double hz);
double MelToHz(double mel);

MelMap MelMatrix(int n_bins, int n_mel, int sample_rate_hz);

// Per-bin gain sum_m w(m,k) g_m / sum_m w(m,k).
std::vector<double> BandGainInterpolate(std::span<const double> mel_gains,
                                        const MelMap& map);

// A signal zero-padded so that all original samples are interior samples of
// its STFT and the padded length is a whole number of hops.
struct PaddedSignal {
  std::vector<double> samples;
  int offset = 0;
  int original_length = 0;
};

PaddedSignal PadForAnalysis(std::span<const double> signal,
                            const StftGeometry& geometry);

// Cuts the original-length segment back out of a synthesized padded signal.
std::vector<double> Unpad(std::span<const double> synthesized,
                          const PaddedSignal& padded);

}  // namespace modkal

#endif  // MODKAL_STFT_H_
