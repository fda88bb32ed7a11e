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

#include "modkal/stft.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fft.h"

namespace modkal {
namespace {

using Complex = std::complex<double>;
using internal::RealFft;

// Sum over frames of analysis*synthesis at each phase n in [0, hop).
std::vector<double> OverlapSums(const StftGeometry& g) {
  const auto wa = AnalysisWindow(g.frame_len, g.window);
  const auto ws = SynthesisWindow(g.frame_len, g.window);
  std::vector<double> sums(g.hop, 0.0);
  for (int n = 0; n < g.frame_len; ++n) sums[n % g.hop] += wa[n] * ws[n];
  return sums;
}

double ColaConstant(const StftGeometry& g) {
  const auto sums = OverlapSums(g);
  return sums.front();
}

// Inverse-transforms every frame into rows of a T x N grid.
Grid<double> InverseFrames(const Spectrogram& spec, Exec exec) {
  const StftGeometry& g = spec.geometry;
  const int n = g.frame_len;
  const int t_count = spec.num_frames();
  Grid<double> out(t_count, n);
  RealFft fft(n);
#pragma omp parallel if (RunParallel(exec))
  {
    std::vector<Complex> scratch(g.num_bins());
#pragma omp for schedule(static)
    for (int t = 0; t < t_count; ++t) {
      std::copy(spec.frames.row(t).begin(), spec.frames.row(t).end(),
                scratch.begin());
      fft.Inverse(scratch, out.row(t));
    }
  }
  return out;
}

}  // namespace

void StftGeometry::Validate() const {
  if (frame_len <= 0 || frame_len % 2 != 0) {
    throw std::invalid_argument("frame length must be positive and even");
  }
  if (hop <= 0 || hop > frame_len) {
    throw std::invalid_argument("hop must lie in (0, frame_len]");
  }
  if (sample_rate_hz <= 0) {
    throw std::invalid_argument("sample rate must be positive");
  }
}

StftGeometry StftGeometry::FromMilliseconds(int sample_rate_hz, double frame_ms,
                                            double hop_ms, Window window) {
  StftGeometry g;
  g.sample_rate_hz = sample_rate_hz;
  g.frame_len = static_cast<int>(std::lround(frame_ms * 1e-3 * sample_rate_hz));
  if (g.frame_len % 2 != 0) ++g.frame_len;
  g.hop = static_cast<int>(std::lround(hop_ms * 1e-3 * sample_rate_hz));
  g.window = window;
  g.Validate();
  return g;
}

std::vector<double> AnalysisWindow(int frame_len, Window window) {
  std::vector<double> w(frame_len, 1.0);
  const double step = 2.0 * std::numbers::pi / frame_len;
  switch (window) {
    case Window::kRectangular:
      break;
    case Window::kHamming:
      for (int n = 0; n < frame_len; ++n) w[n] = 0.54 - 0.46 * std::cos(step * n);
      break;
    case Window::kSqrtHann:
      for (int n = 0; n < frame_len; ++n) {
        w[n] = std::sqrt(0.5 - 0.5 * std::cos(step * n));
      }
      break;
  }
  return w;
}

std::vector<double> SynthesisWindow(int frame_len, Window window) {
  // Hamming and rectangular analysis are already COLA on their own, so they
  // resynthesise with a flat window.
  if (window == Window::kSqrtHann) return AnalysisWindow(frame_len, window);
  return std::vector<double>(frame_len, 1.0);
}

bool SatisfiesCola(const StftGeometry& geometry, double tolerance) {
  geometry.Validate();
  const auto sums = OverlapSums(geometry);
  const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
  if (*lo <= 0.0) return false;
  return (*hi - *lo) / *hi <= tolerance;
}

int NumFrames(int signal_len, int frame_len, int hop) {
  if (signal_len < frame_len) return 0;
  return (signal_len - frame_len) / hop + 1;
}

SampleRange InteriorRange(const StftGeometry& g, int num_frames) {
  if (num_frames <= 0) return {};
  const int length = (num_frames - 1) * g.hop + g.frame_len;
  return {g.frame_len - g.hop, std::min(num_frames * g.hop, length)};
}

Spectrogram Analyze(std::span<const double> signal, const StftGeometry& geometry,
                    Exec exec) {
  geometry.Validate();
  const int n = geometry.frame_len;
  if (static_cast<int>(signal.size()) < n) {
    throw std::invalid_argument("input too short");
  }
  const int t_count = NumFrames(static_cast<int>(signal.size()), n, geometry.hop);
  Spectrogram spec{geometry, Grid<Complex>(t_count, geometry.num_bins())};
  const auto window = AnalysisWindow(n, geometry.window);
  RealFft fft(n);
#pragma omp parallel if (RunParallel(exec))
  {
    std::vector<double> frame(n);
#pragma omp for schedule(static)
    for (int t = 0; t < t_count; ++t) {
      const std::size_t start = static_cast<std::size_t>(t) * geometry.hop;
      for (int i = 0; i < n; ++i) frame[i] = window[i] * signal[start + i];
      fft.Forward(frame, spec.frames.row(t));
    }
  }
  return spec;
}

std::vector<double> Synthesize(const Spectrogram& spec, Exec exec) {
  const StftGeometry& g = spec.geometry;
  if (!SatisfiesCola(g)) {
    throw std::invalid_argument("reconstruction condition violated");
  }
  const int t_count = spec.num_frames();
  if (t_count == 0) return {};
  const Grid<double> frames = InverseFrames(spec, exec);
  const auto ws = SynthesisWindow(g.frame_len, g.window);
  const double inv_c = 1.0 / ColaConstant(g);
  std::vector<double> out((t_count - 1) * g.hop + g.frame_len, 0.0);
  for (int t = 0; t < t_count; ++t) {
    const auto row = frames.row(t);
    double* dst = out.data() + static_cast<std::size_t>(t) * g.hop;
    for (int i = 0; i < g.frame_len; ++i) dst[i] += ws[i] * row[i];
  }
  for (double& v : out) v *= inv_c;
  return out;
}

std::vector<double> SynthesizeLeastSquares(const Spectrogram& spec, Exec exec) {
  const StftGeometry& g = spec.geometry;
  g.Validate();
  const int t_count = spec.num_frames();
  if (t_count == 0) return {};
  const Grid<double> frames = InverseFrames(spec, exec);
  const auto wa = AnalysisWindow(g.frame_len, g.window);
  const std::size_t length = (t_count - 1) * g.hop + g.frame_len;
  std::vector<double> out(length, 0.0);
  std::vector<double> norm(length, 0.0);
  for (int t = 0; t < t_count; ++t) {
    const auto row = frames.row(t);
    const std::size_t start = static_cast<std::size_t>(t) * g.hop;
    for (int i = 0; i < g.frame_len; ++i) {
      out[start + i] += wa[i] * row[i];
      norm[start + i] += wa[i] * wa[i];
    }
  }
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = norm[i] > 0.0 ? out[i] / norm[i] : 0.0;
  }
  return out;
}

RealSpectrogram ToDomain(const Spectrogram& spec, SpectralDomain target,
                         double power_floor) {
  RealSpectrogram out{spec.geometry, target,
                      Grid<double>(spec.num_frames(), spec.num_bins())};
  const auto& src = spec.frames.data();
  auto& dst = out.values.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    switch (target) {
      case SpectralDomain::kAmplitude:
        dst[i] = std::abs(src[i]);
        break;
      case SpectralDomain::kPower:
        dst[i] = std::norm(src[i]);
        break;
      case SpectralDomain::kLogPower:
        dst[i] = std::log(std::max(std::norm(src[i]), power_floor));
        break;
    }
  }
  return out;
}

Spectrogram ApplyGain(const Spectrogram& spec, const Grid<double>& gains) {
  if (!gains.same_shape(spec.num_frames(), spec.num_bins())) {
    throw std::invalid_argument("gain shape does not match spectrogram");
  }
  Spectrogram out = spec;
  auto& data = out.frames.data();
  const auto& g = gains.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(g[i] >= 0.0)) throw std::invalid_argument("gains must be >= 0");
    data[i] *= g[i];
  }
  return out;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelMap MelMatrix(int n_bins, int n_mel, int sample_rate_hz) {
  if (n_mel < 2 || n_mel >= n_bins) {
    throw std::invalid_argument("number of Mel bands out of range");
  }
  const double nyquist = 0.5 * sample_rate_hz;
  const double mel_max = HzToMel(nyquist);
  MelMap map{Grid<double>(n_mel, n_bins), std::vector<double>(n_mel)};
  for (int m = 0; m < n_mel; ++m) {
    map.centers_hz[m] = MelToHz(mel_max * m / (n_mel - 1));
  }
  const double bin_hz = nyquist / (n_bins - 1);
  for (int m = 0; m < n_mel; ++m) {
    const double center = map.centers_hz[m];
    const double lower = m > 0 ? map.centers_hz[m - 1] : center;
    const double upper = m + 1 < n_mel ? map.centers_hz[m + 1] : center;
    double peak = 0.0;
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f == center) {
        w = 1.0;
      } else if (f < center && f > lower) {
        w = (f - lower) / (center - lower);
      } else if (f > center && f < upper) {
        w = (upper - f) / (upper - center);
      }
      map.weights(m, k) = w;
      peak = std::max(peak, w);
    }
    if (peak > 0.0) {
      for (int k = 0; k < n_bins; ++k) map.weights(m, k) /= peak;
    } else {
      // Band narrower than a bin: attach it to the nearest bin.
      const int k = std::clamp(static_cast<int>(std::lround(center / bin_hz)),
                               0, n_bins - 1);
      map.weights(m, k) = 1.0;
    }
  }
  return map;
}

std::vector<double> BandGainInterpolate(std::span<const double> mel_gains,
                                        const MelMap& map) {
  if (static_cast<int>(mel_gains.size()) != map.num_bands()) {
    throw std::invalid_argument("Mel gain length mismatch");
  }
  std::vector<double> gains(map.num_bins(), 0.0);
  for (int k = 0; k < map.num_bins(); ++k) {
    double num = 0.0;
    double den = 0.0;
    for (int m = 0; m < map.num_bands(); ++m) {
      num += map.weights(m, k) * mel_gains[m];
      den += map.weights(m, k);
    }
    gains[k] = num / den;
  }
  return gains;
}

PaddedSignal PadForAnalysis(std::span<const double> signal,
                            const StftGeometry& g) {
  g.Validate();
  PaddedSignal padded;
  padded.offset = g.frame_len - g.hop;
  padded.original_length = static_cast<int>(signal.size());
  const int needed = padded.offset + padded.original_length;
  const int t_count = std::max(1, (needed + g.hop - 1) / g.hop);
  padded.samples.assign((t_count - 1) * g.hop + g.frame_len, 0.0);
  std::copy(signal.begin(), signal.end(),
            padded.samples.begin() + padded.offset);
  return padded;
}

std::vector<double> Unpad(std::span<const double> synthesized,
                          const PaddedSignal& padded) {
  if (static_cast<int>(synthesized.size()) <
      padded.offset + padded.original_length) {
    throw std::invalid_argument("synthesized signal shorter than padding");
  }
  const auto first = synthesized.begin() + padded.offset;
  return {first, first + padded.original_length};
}

}  // namespace modkal
