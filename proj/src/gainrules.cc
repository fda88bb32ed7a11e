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

#include "modkal/gainrules.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace modkal {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

// Gamma(1.5) = sqrt(pi) / 2.
constexpr double kGammaThreeHalves = 0.88622692545275801365;

// Kummer M(-1/2, 1; -nu). Below the split the Kummer transformation
// e^{-nu} M(3/2, 1; nu) gives a series of positive terms; above it the
// large-argument expansion is used.
double KummerMinusHalf(double nu) {
  constexpr double kSplit = 10.0;
  if (nu < kSplit) {
    double term = 1.0;
    double sum = 1.0;
    for (int n = 0; n < 500; ++n) {
      term *= (1.5 + n) * nu / ((n + 1.0) * (n + 1.0));
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::exp(-nu) * sum;
  }
  // M(a, b; -nu) ~ Gamma(b)/Gamma(b-a) nu^{-a} sum_n (a)_n (a-b+1)_n / n! nu^-n
  // with a = -1/2, b = 1; stop at the smallest term.
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < 60; ++n) {
    const double poch = -0.5 + n;
    const double next = term * poch * poch / ((n + 1.0) * nu);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
  }
  return std::sqrt(nu) / kGammaThreeHalves * sum;
}

void CheckSnr(SnrPair snr) {
  if (!std::isfinite(snr.xi) || !std::isfinite(snr.zeta_post) || snr.xi < 0.0 ||
      snr.zeta_post <= 0.0) {
    throw std::invalid_argument("SNR pair must be finite with xi >= 0, zeta > 0");
  }
}

}  // namespace

MinStatsBin::MinStatsBin(int window_frames, const MinStatsConfig& config)
    : config_(config),
      history_(std::max(window_frames, 1), 0.0),
      lambda_(config.floor) {}

double MinStatsBin::Update(double noisy_power) {
  smoothed_ = filled_ == 0 ? noisy_power
                           : config_.smoothing * smoothed_ +
                                 (1.0 - config_.smoothing) * noisy_power;
  history_[next_] = smoothed_;
  next_ = (next_ + 1) % static_cast<int>(history_.size());
  filled_ = std::min(filled_ + 1, static_cast<int>(history_.size()));
  const double minimum =
      *std::min_element(history_.begin(), history_.begin() + filled_);
  lambda_ = std::max(config_.bias * minimum, config_.floor);
  return lambda_;
}

int MinStatsWindowFrames(const StftGeometry& geometry,
                         const MinStatsConfig& config) {
  return std::max(
      1, static_cast<int>(std::lround(config.window_s / geometry.hop_seconds())));
}

NoisePsd::NoisePsd(int num_bins, int window_frames, const MinStatsConfig& config)
    : bins_(num_bins, MinStatsBin(window_frames, config)),
      lambda_(num_bins, config.floor) {}

NoisePsd NoisePsd::ForGeometry(const StftGeometry& geometry,
                               const MinStatsConfig& config) {
  return NoisePsd(geometry.num_bins(), MinStatsWindowFrames(geometry, config),
                  config);
}

void NoisePsd::Update(std::span<const double> noisy_power_frame) {
  if (noisy_power_frame.size() != bins_.size()) {
    throw std::invalid_argument("noise PSD frame length mismatch");
  }
  for (std::size_t k = 0; k < bins_.size(); ++k) {
    lambda_[k] = bins_[k].Update(noisy_power_frame[k]);
  }
  ++update_count_;
}

Grid<double> TrackNoisePsd(const Grid<double>& power,
                           const StftGeometry& geometry,
                           const MinStatsConfig& config, Exec exec) {
  const int window = MinStatsWindowFrames(geometry, config);
  Grid<double> lambda(power.rows(), power.cols());
#pragma omp parallel for schedule(static) if (RunParallel(exec))
  for (int k = 0; k < power.cols(); ++k) {
    MinStatsBin tracker(window, config);
    for (int t = 0; t < power.rows(); ++t) {
      lambda(t, k) = tracker.Update(power(t, k));
    }
  }
  return lambda;
}

double DecisionDirectedSnr(double prev_clean_power, double noisy_power,
                           double lambda, double a_dd) {
  if (!(lambda > 0.0)) throw std::invalid_argument("noise power must be > 0");
  return a_dd * (prev_clean_power / lambda) +
         (1.0 - a_dd) * std::max(noisy_power / lambda - 1.0, 0.0);
}

double SpectralSubtractGain(double noisy_power, double lambda,
                            double oversubtraction, double gain_floor,
                            double power_floor) {
  if (lambda <= 0.0) return 1.0;
  const double residual = std::max(noisy_power - oversubtraction * lambda, 0.0);
  const double gain = std::sqrt(residual / std::max(noisy_power, power_floor));
  return std::clamp(gain, gain_floor, 1.0);
}

double MmseGain(SnrPair snr) {
  CheckSnr(snr);
  const double nu = snr.xi * snr.zeta_post / (1.0 + snr.xi);
  if (nu == 0.0) return 0.0;
  return kGammaThreeHalves * std::sqrt(nu) / snr.zeta_post *
         KummerMinusHalf(nu);
}

double LogMmseGain(SnrPair snr) {
  CheckSnr(snr);
  const double nu = snr.xi * snr.zeta_post / (1.0 + snr.xi);
  if (nu == 0.0) return 0.0;
  return snr.xi / (1.0 + snr.xi) * std::exp(0.5 * ExponentialIntegralE1(nu));
}

double ExponentialIntegralE1(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("E1 requires x > 0");
  if (x < 1.0) {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    double sum = 0.0;
    double power = 1.0;
    for (int k = 1; k < 100; ++k) {
      power *= -x / k;
      const double term = power / k;
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return -kEulerGamma - std::log(x) - sum;
  }
  // Continued fraction evaluated with the modified Lentz method.
  constexpr double kTiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x);
}

double ClampGain(GainMethod method, double gain, double gain_floor) {
  const double ceiling = method == GainMethod::kMmse ? kMmseGainMax : 1.0;
  return std::clamp(gain, gain_floor, ceiling);
}

BaselineResult BaselineGains(const Spectrogram& noisy,
                             const BaselineConfig& config, Exec exec) {
  if (config.a_dd < 0.0 || config.a_dd >= 1.0) {
    throw std::invalid_argument("a_dd must lie in [0, 1)");
  }
  const int t_count = noisy.num_frames();
  const int k_count = noisy.num_bins();
  const int window = MinStatsWindowFrames(noisy.geometry, config.noise);
  BaselineResult result{Grid<double>(t_count, k_count),
                        Grid<double>(t_count, k_count)};
#pragma omp parallel for schedule(static) if (RunParallel(exec))
  for (int k = 0; k < k_count; ++k) {
    MinStatsBin tracker(window, config.noise);
    double prev_clean_power = 0.0;
    for (int t = 0; t < t_count; ++t) {
      const double power = std::norm(noisy.frames(t, k));
      const double lambda = tracker.Update(power);
      result.noise_psd(t, k) = lambda;
      double gain = 1.0;
      if (config.method == GainMethod::kSpecSub) {
        gain = SpectralSubtractGain(power, lambda, config.oversubtraction,
                                    config.gain_floor);
      } else {
        const double xi = std::max(
            DecisionDirectedSnr(prev_clean_power, power, lambda, config.a_dd),
            config.xi_min);
        const double zeta = std::max(power / lambda, 1e-10);
        const SnrPair snr{xi, zeta};
        gain = config.method == GainMethod::kMmse ? MmseGain(snr)
                                                  : LogMmseGain(snr);
        gain = ClampGain(config.method, gain, config.gain_floor);
      }
      result.gains(t, k) = gain;
      prev_clean_power = gain * gain * power;
    }
  }
  return result;
}

std::vector<double> EnhanceUtteranceBaseline(std::span<const double> signal,
                                             const StftGeometry& geometry,
                                             const BaselineConfig& config,
                                             Exec exec) {
  const PaddedSignal padded = PadForAnalysis(signal, geometry);
  const Spectrogram noisy = Analyze(padded.samples, geometry, exec);
  const BaselineResult gains = BaselineGains(noisy, config, exec);
  const Spectrogram enhanced = ApplyGain(noisy, gains.gains);
  return Unpad(Synthesize(enhanced, exec), padded);
}

}  // namespace modkal
