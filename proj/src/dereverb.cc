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

#include "modkal/dereverb.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace modkal {

void RirParams::Validate() const {
  if (!(t60_s > 0.0)) throw std::invalid_argument("t60 must be > 0");
  if (!(length_s > 0.0)) throw std::invalid_argument("RIR length must be > 0");
  if (length_s < 0.5 * t60_s) {
    throw std::invalid_argument("RIR length must be at least t60 / 2");
  }
  if (sample_rate_hz <= 0) throw std::invalid_argument("sample rate must be > 0");
  if (!std::isfinite(drr_db)) throw std::invalid_argument("DRR must be finite");
}

double DecayRate(double t60_s) {
  if (!(t60_s > 0.0)) throw std::invalid_argument("t60 must be > 0");
  return 3.0 * std::numbers::ln10 / t60_s;
}

std::vector<double> SynthRir(const RirParams& params) {
  params.Validate();
  const double fs = params.sample_rate_hz;
  const auto length = static_cast<std::size_t>(std::lround(params.length_s * fs));
  const auto direct_len = static_cast<std::size_t>(std::lround(kDirectWindowS * fs));
  if (length <= direct_len) throw std::invalid_argument("RIR shorter than the direct window");

  const double zeta = DecayRate(params.t60_s);
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> h(length, 0.0);
  for (std::size_t i = 1; i < length; ++i) {
    h[i] = gauss(rng) * std::exp(-zeta * static_cast<double>(i) / fs);
  }

  double early = 0.0;
  double late = 0.0;
  for (std::size_t i = 1; i < length; ++i) {
    (i < direct_len ? early : late) += h[i] * h[i];
  }
  const double direct_energy = std::pow(10.0, params.drr_db / 10.0) * late - early;
  if (!(direct_energy > 0.0)) {
    throw std::invalid_argument("DRR not reachable for this T60");
  }
  const double scale = 1.0 / std::sqrt(direct_energy);
  h[0] = 1.0;
  for (std::size_t i = 1; i < length; ++i) h[i] *= scale;
  return h;
}

double LateDecayFactor(double t60_s, double tl_s) {
  if (std::isinf(t60_s)) return 1.0;
  return std::exp(-2.0 * DecayRate(t60_s) * tl_s);
}

std::vector<double> LrsvEstimate(std::span<const double> power, double t60_s,
                                 double tl_s, double hop_s) {
  if (!(hop_s > 0.0) || !(tl_s >= hop_s)) {
    throw std::invalid_argument("late boundary must be at least one hop");
  }
  const auto delay = static_cast<std::size_t>(std::lround(tl_s / hop_s));
  if (delay >= power.size()) throw std::invalid_argument("track too short");
  const double decay = LateDecayFactor(t60_s, tl_s);
  std::vector<double> late(power.size(), 0.0);
  for (std::size_t t = delay; t < power.size(); ++t) {
    late[t] = decay * power[t - delay];
  }
  return late;
}

double LateSuppressionGain(double noisy_power, double lambda_late,
                           double lambda_noise, double gain_min,
                           double floor_power) {
  const double g = (noisy_power - lambda_late - lambda_noise) /
                   std::max(noisy_power, floor_power);
  return std::clamp(g, gain_min, 1.0);
}

void LrsvConfig::Validate() const {
  if (!(t60_s > 0.0)) throw std::invalid_argument("t60 must be > 0");
  if (!(power_smoothing >= 0.0 && power_smoothing < 1.0)) {
    throw std::invalid_argument("power smoothing must lie in [0, 1)");
  }
  if (!(gain_min >= 0.0 && gain_min <= 1.0)) {
    throw std::invalid_argument("gain floor must lie in [0, 1]");
  }
}

Grid<double> LrsvGains(const Spectrogram& spec, const LrsvConfig& config,
                       const Grid<double>& noise_psd, Exec exec) {
  config.Validate();
  const int t_count = spec.num_frames();
  const int k_count = spec.num_bins();
  const bool with_noise = noise_psd.size() > 0;
  if (with_noise && !noise_psd.same_shape(t_count, k_count)) {
    throw std::invalid_argument("noise PSD shape mismatch");
  }
  const double hop_s = spec.geometry.hop_seconds();
  Grid<double> gains(t_count, k_count, 1.0);

#pragma omp parallel for schedule(static) if (RunParallel(exec))
  for (int k = 0; k < k_count; ++k) {
    std::vector<double> smoothed(t_count);
    double acc = 0.0;
    for (int t = 0; t < t_count; ++t) {
      const double p = std::norm(spec.frames(t, k));
      acc = t == 0 ? p : config.power_smoothing * acc +
                             (1.0 - config.power_smoothing) * p;
      smoothed[t] = acc;
    }
    const std::vector<double> late =
        LrsvEstimate(smoothed, config.t60_s, config.tl_s, hop_s);
    for (int t = 0; t < t_count; ++t) {
      const double noise = with_noise ? noise_psd(t, k) : 0.0;
      gains(t, k) =
          LateSuppressionGain(smoothed[t], late[t], noise, config.gain_min);
    }
  }
  return gains;
}

Spectrogram SuppressLateReverb(const Spectrogram& spec, const LrsvConfig& config,
                               const Grid<double>& noise_psd, Exec exec) {
  return ApplyGain(spec, LrsvGains(spec, config, noise_psd, exec));
}

void WpeConfig::Validate() const {
  if (delay_T1 < 1) throw std::invalid_argument("WPE delay must be >= 1");
  if (taps_T2 < 0) throw std::invalid_argument("WPE taps must be >= 0");
  if (iterations < 1) throw std::invalid_argument("WPE iterations must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("WPE eps must be > 0");
  if (!(var_floor > 0.0)) throw std::invalid_argument("WPE variance floor must be > 0");
  if (!(block_s >= 0.0)) throw std::invalid_argument("WPE block length must be >= 0");
}

namespace {

using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

// One bin of batch WPE. Returns conj(g) so that d = y - X h, where row t of X
// holds the delayed frames y[t - T1 - j].
ComplexVector WpeBin(const ComplexVector& y, const WpeConfig& config,
                     ComplexVector& d) {
  const Eigen::Index t_count = y.size();
  const int taps = config.taps_T2;
  ComplexMatrix x = ComplexMatrix::Zero(t_count, taps);
  for (int j = 0; j < taps; ++j) {
    const Eigen::Index lag = config.delay_T1 + j;
    if (lag < t_count) x.col(j).tail(t_count - lag) = y.head(t_count - lag);
  }
  d = y;
  ComplexVector h = ComplexVector::Zero(taps);
  for (int iter = 0; iter < config.iterations; ++iter) {
    const Eigen::VectorXd inv_var =
        d.cwiseAbs2().cwiseMax(config.var_floor).cwiseInverse();
    const ComplexMatrix xw = inv_var.asDiagonal() * x;
    ComplexMatrix r = x.adjoint() * xw;
    const ComplexVector rhs = xw.adjoint() * y;
    const double ridge = config.eps * r.trace().real() / taps;
    r.diagonal().array() += ridge;
    h = r.ldlt().solve(rhs);
    d = y - x * h;
  }
  return h;
}

}  // namespace

WpeResult WpeBatchDetailed(const Spectrogram& spec, const WpeConfig& config,
                           Exec exec) {
  config.Validate();
  const int t_count = spec.num_frames();
  const int k_count = spec.num_bins();
  WpeResult out{spec, Grid<std::complex<double>>(k_count, config.taps_T2)};
  if (config.taps_T2 == 0) return out;
  if (t_count <= config.delay_T1 + config.taps_T2) {
    throw std::invalid_argument("utterance too short for WPE taps");
  }

#pragma omp parallel for schedule(dynamic) if (RunParallel(exec))
  for (int k = 0; k < k_count; ++k) {
    ComplexVector y(t_count);
    for (int t = 0; t < t_count; ++t) y(t) = spec.frames(t, k);
    ComplexVector d;
    const ComplexVector h = WpeBin(y, config, d);
    for (int t = 0; t < t_count; ++t) out.output.frames(t, k) = d(t);
    for (int j = 0; j < config.taps_T2; ++j) out.filters(k, j) = std::conj(h(j));
  }
  return out;
}

Spectrogram WpeBatch(const Spectrogram& spec, const WpeConfig& config,
                     Exec exec) {
  return WpeBatchDetailed(spec, config, exec).output;
}

int WpeBlockFrames(const WpeConfig& config, const StftGeometry& geometry) {
  if (!(config.block_s > 0.0)) {
    throw std::invalid_argument("block mode needs block_s > 0");
  }
  return std::max(1, static_cast<int>(
                         std::lround(config.block_s / geometry.hop_seconds())));
}

Spectrogram WpeBlock(const Spectrogram& spec, const WpeConfig& config,
                     Exec exec) {
  config.Validate();
  const int block = WpeBlockFrames(config, spec.geometry);
  const int t_count = spec.num_frames();
  if (t_count <= block) return WpeBatch(spec, config, exec);

  const int k_count = spec.num_bins();
  Spectrogram out = spec;
  for (int start = 0; start < t_count; start += block) {
    const int len = std::min(block, t_count - start);
    if (config.taps_T2 == 0 || len <= config.delay_T1 + config.taps_T2) continue;
    Spectrogram part{spec.geometry, Grid<std::complex<double>>(len, k_count)};
    for (int t = 0; t < len; ++t) {
      std::copy_n(spec.frames.row(start + t).begin(), k_count,
                  part.frames.row(t).begin());
    }
    const Spectrogram done = WpeBatch(part, config, exec);
    for (int t = 0; t < len; ++t) {
      std::copy_n(done.frames.row(t).begin(), k_count,
                  out.frames.row(start + t).begin());
    }
  }
  return out;
}

}  // namespace modkal
