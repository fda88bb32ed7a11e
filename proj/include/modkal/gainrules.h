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

#ifndef MODKAL_GAINRULES_H_
#define MODKAL_GAINRULES_H_

#include <span>
#include <vector>

#include "modkal/grid.h"
#include "modkal/parallel.h"
#include "modkal/stft.h"

namespace modkal {

enum class GainMethod { kSpecSub, kMmse, kLogMmse };

// A priori SNR xi and a posteriori SNR zeta_post, both linear.
struct SnrPair {
  double xi = 0.0;
  double zeta_post = 0.0;
};

// -25 dB amplitude floor shared by all gain rules.
inline constexpr double kDefaultGainFloor = 0.056234132519034911;
inline constexpr double kMmseGainMax = 2.0;

struct MinStatsConfig {
  double window_s = 1.5;
  double smoothing = 0.85;
  double bias = 1.5;
  double floor = kLogPowerFloor;
};

// Minimum-statistics noise power tracker for one frequency bin.
class MinStatsBin {
 public:
  MinStatsBin(int window_frames, const MinStatsConfig& config);

  // Feeds one periodogram value and returns the updated noise power.
  double Update(double noisy_power);
  double lambda() const { return lambda_; }

 private:
  MinStatsConfig config_;
  std::vector<double> history_;
  int filled_ = 0;
  int next_ = 0;
  double smoothed_ = 0.0;
  double lambda_;
};

// Per-bin noise power spectral density.
class NoisePsd {
 public:
  NoisePsd(int num_bins, int window_frames, const MinStatsConfig& config = {});
  static NoisePsd ForGeometry(const StftGeometry& geometry,
                              const MinStatsConfig& config = {});

  void Update(std::span<const double> noisy_power_frame);

  const std::vector<double>& lambda() const { return lambda_; }
  int update_count() const { return update_count_; }

 private:
  std::vector<MinStatsBin> bins_;
  std::vector<double> lambda_;
  int update_count_ = 0;
};

int MinStatsWindowFrames(const StftGeometry& geometry,
                         const MinStatsConfig& config);

// Runs the tracker over a whole power spectrogram; each bin is independent.
Grid<double> TrackNoisePsd(const Grid<double>& power,
                           const StftGeometry& geometry,
                           const MinStatsConfig& config = {},
                           Exec exec = Exec::kSerial);

double DecisionDirectedSnr(double prev_clean_power, double noisy_power,
                           double lambda, double a_dd);

double SpectralSubtractGain(double noisy_power, double lambda,
                            double oversubtraction, double gain_floor,
                            double power_floor = kLogPowerFloor);

// Short-time spectral amplitude MMSE estimator gain (unclamped).
double MmseGain(SnrPair snr);

// Log-spectral amplitude MMSE estimator gain (unclamped).
double LogMmseGain(SnrPair snr);

// E1(x) for x > 0.
double ExponentialIntegralE1(double x);

// Applies the documented clamp range [gain_floor, G_max(method)].
double ClampGain(GainMethod method, double gain, double gain_floor);

struct BaselineConfig {
  GainMethod method = GainMethod::kLogMmse;
  double a_dd = 0.98;
  double oversubtraction = 4.0;
  double gain_floor = kDefaultGainFloor;
  // Lower bound on the decision-directed a priori SNR (-25 dB).
  double xi_min = 0.0031622776601683794;
  MinStatsConfig noise;
};

struct BaselineResult {
  Grid<double> gains;
  Grid<double> noise_psd;
};

// Per-frame, per-bin gains of a classical rule. Bins run in parallel.
BaselineResult BaselineGains(const Spectrogram& noisy,
                             const BaselineConfig& config,
                             Exec exec = Exec::kSerial);

// analyze -> track noise -> gain -> apply -> synthesize; output length equals
// input length.
std::vector<double> EnhanceUtteranceBaseline(std::span<const double> signal,
                                             const StftGeometry& geometry,
                                             const BaselineConfig& config,
                                             Exec exec = Exec::kSerial);

}  // namespace modkal

#endif  // MODKAL_GAINRULES_H_
