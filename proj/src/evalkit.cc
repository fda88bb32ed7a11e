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

#include "modkal/evalkit.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "fft.h"

namespace modkal {
namespace {

// Above this many multiply-adds convolution switches to the FFT.
constexpr double kDirectConvolutionLimit = 4e6;

double Power(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

std::vector<double> FrameEnergies(std::span<const double> signal, int frame_len,
                                  bool include_partial) {
  std::vector<double> energies;
  for (std::size_t start = 0; start < signal.size(); start += frame_len) {
    const std::size_t len = std::min<std::size_t>(frame_len, signal.size() - start);
    if (len < static_cast<std::size_t>(frame_len) && !include_partial) break;
    energies.push_back(Power(signal.subspan(start, len)));
  }
  return energies;
}

std::vector<bool> ActiveMask(std::span<const double> energies) {
  const double peak =
      energies.empty() ? 0.0 : *std::max_element(energies.begin(), energies.end());
  const double threshold = peak * std::pow(10.0, -kActiveRangeDb / 10.0);
  std::vector<bool> mask(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    mask[i] = peak > 0.0 && energies[i] >= threshold;
  }
  return mask;
}

std::vector<double> FftConvolve(std::span<const double> a,
                                std::span<const double> b) {
  const std::size_t out_len = a.size() + b.size() - 1;
  const auto n = static_cast<int>(std::bit_ceil(out_len));
  internal::RealFft fft(n);
  std::vector<double> buf(n, 0.0);
  std::vector<std::complex<double>> fa(n / 2 + 1);
  std::vector<std::complex<double>> fb(n / 2 + 1);
  std::copy(a.begin(), a.end(), buf.begin());
  fft.Forward(buf, fa);
  std::fill(buf.begin(), buf.end(), 0.0);
  std::copy(b.begin(), b.end(), buf.begin());
  fft.Forward(buf, fb);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  fft.Inverse(fa, buf);
  buf.resize(out_len);
  return buf;
}

}  // namespace

std::string MetricReport::ToJsonLine() const {
  const nlohmann::ordered_json j = {{"file", file},
                                    {"method", method},
                                    {"seg_snr_db", seg_snr_db},
                                    {"lsd_db", lsd_db},
                                    {"config_hash", config_hash}};
  return j.dump();
}

std::vector<bool> ActiveFrames(std::span<const double> signal, int frame_len) {
  if (frame_len <= 0) throw std::invalid_argument("frame length must be > 0");
  return ActiveMask(FrameEnergies(signal, frame_len, true));
}

double ActivePower(std::span<const double> signal,
                   std::span<const double> reference, int frame_len) {
  if (signal.size() != reference.size()) {
    throw std::invalid_argument("signal length mismatch");
  }
  const std::vector<bool> mask = ActiveFrames(reference, frame_len);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < mask.size(); ++f) {
    if (!mask[f]) continue;
    const std::size_t start = f * frame_len;
    const std::size_t len = std::min<std::size_t>(frame_len, signal.size() - start);
    acc += Power(signal.subspan(start, len));
    count += len;
  }
  return count > 0 ? acc / count : 0.0;
}

std::vector<double> AddNoiseAtSnr(std::span<const double> clean,
                                  std::span<const double> noise, double snr_db,
                                  std::uint64_t seed, int sample_rate_hz) {
  if (std::isinf(snr_db) && snr_db > 0.0) {
    return {clean.begin(), clean.end()};
  }
  if (std::isnan(snr_db) || clean.empty() || noise.empty()) {
    throw std::invalid_argument("invalid noise mixing request");
  }
  std::mt19937_64 rng(seed);
  const std::size_t offset =
      std::uniform_int_distribution<std::size_t>(0, noise.size() - 1)(rng);
  std::vector<double> aligned(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    aligned[i] = noise[(offset + i) % noise.size()];
  }
  const int frame_len = std::max(
      1, static_cast<int>(std::lround(kActivityFrameS * sample_rate_hz)));
  const double clean_power = ActivePower(clean, clean, frame_len);
  const double noise_power = ActivePower(aligned, clean, frame_len);
  if (!(clean_power > 0.0)) throw std::invalid_argument("zero-power clean signal");
  if (!(noise_power > 0.0)) throw std::invalid_argument("zero-power noise signal");
  const double scale =
      std::sqrt(clean_power / (noise_power * std::pow(10.0, snr_db / 10.0)));
  std::vector<double> out(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    out[i] = clean[i] + scale * aligned[i];
  }
  return out;
}

std::vector<double> Convolve(std::span<const double> a,
                             std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty convolution input");
  if (static_cast<double>(a.size()) * static_cast<double>(b.size()) >
      kDirectConvolutionLimit) {
    return FftConvolve(a, b);
  }
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] == 0.0) continue;
    for (std::size_t i = 0; i < a.size(); ++i) out[i + j] += a[i] * b[j];
  }
  return out;
}

std::vector<double> Degrade(std::span<const double> clean,
                            std::span<const double> rir,
                            std::span<const double> noise, double snr_db,
                            std::uint64_t seed, int sample_rate_hz) {
  if (rir.empty() && noise.empty()) {
    throw std::invalid_argument("degrade needs a RIR or a noise signal");
  }
  std::vector<double> out =
      rir.empty() ? std::vector<double>(clean.begin(), clean.end())
                  : Convolve(clean, rir);
  if (!noise.empty()) out = AddNoiseAtSnr(out, noise, snr_db, seed, sample_rate_hz);
  return out;
}

SegSnrResult SegSnrDetailed(std::span<const double> reference,
                            std::span<const double> test, int frame_len) {
  if (reference.size() != test.size()) {
    throw std::invalid_argument("signal length mismatch");
  }
  if (frame_len <= 0) throw std::invalid_argument("frame length must be > 0");
  const std::vector<double> energies = FrameEnergies(reference, frame_len, false);
  const std::vector<bool> active = ActiveMask(energies);
  SegSnrResult out;
  double total = 0.0;
  for (std::size_t f = 0; f < energies.size(); ++f) {
    if (!active[f]) continue;
    double err = 0.0;
    for (std::size_t i = f * frame_len; i < (f + 1) * frame_len; ++i) {
      const double e = reference[i] - test[i];
      err += e * e;
    }
    const double snr = err > 0.0 ? 10.0 * std::log10(energies[f] / err)
                                 : kSegSnrCeilingDb;
    out.per_frame_db.push_back(std::clamp(snr, kSegSnrFloorDb, kSegSnrCeilingDb));
    total += out.per_frame_db.back();
  }
  if (out.per_frame_db.empty()) throw std::invalid_argument("all frames silent");
  out.mean_db = total / out.per_frame_db.size();
  return out;
}

double SegSnr(std::span<const double> reference, std::span<const double> test,
              int frame_len) {
  return SegSnrDetailed(reference, test, frame_len).mean_db;
}

double Lsd(const RealSpectrogram& ref, const RealSpectrogram& test) {
  if (ref.domain != SpectralDomain::kLogPower ||
      test.domain != SpectralDomain::kLogPower) {
    throw std::invalid_argument("LSD needs log-power spectrograms");
  }
  if (!(ref.geometry == test.geometry) ||
      !ref.values.same_shape(test.num_frames(), test.num_bins())) {
    throw std::invalid_argument("spectrogram shape mismatch");
  }
  const int t_count = ref.num_frames();
  const int k_count = ref.num_bins();
  if (t_count == 0 || k_count == 0) throw std::invalid_argument("empty spectrogram");
  constexpr double kDbPerNat = 10.0 / std::numbers::ln10;
  double total = 0.0;
  for (int t = 0; t < t_count; ++t) {
    double acc = 0.0;
    for (int k = 0; k < k_count; ++k) {
      const double diff = kDbPerNat * (ref.values(t, k) - test.values(t, k));
      acc += diff * diff;
    }
    total += std::sqrt(acc / k_count);
  }
  return total / t_count;
}

double LsdOfSignals(std::span<const double> reference,
                    std::span<const double> test, const StftGeometry& geometry,
                    Exec exec) {
  if (reference.size() != test.size()) {
    throw std::invalid_argument("signal length mismatch");
  }
  return Lsd(ToDomain(Analyze(reference, geometry, exec), SpectralDomain::kLogPower),
             ToDomain(Analyze(test, geometry, exec), SpectralDomain::kLogPower));
}

PhaseReconstruction IterativePhaseReconstruct(const Grid<double>& target_mag,
                                              const Grid<double>& init_phase,
                                              const StftGeometry& geometry,
                                              int iterations, Exec exec) {
  geometry.Validate();
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  const int t_count = target_mag.rows();
  const int k_count = target_mag.cols();
  if (k_count != geometry.num_bins() || t_count < 1) {
    throw std::invalid_argument("magnitude shape does not match the geometry");
  }
  if (!init_phase.same_shape(t_count, k_count)) {
    throw std::invalid_argument("phase shape mismatch");
  }

  Grid<double> phase = init_phase;
  Spectrogram current{geometry, Grid<std::complex<double>>(t_count, k_count)};
  PhaseReconstruction out;
  for (int iter = 0; iter < iterations; ++iter) {
    for (int t = 0; t < t_count; ++t) {
      for (int k = 0; k < k_count; ++k) {
        current.frames(t, k) = std::polar(target_mag(t, k), phase(t, k));
      }
    }
    out.samples = SynthesizeLeastSquares(current, exec);
    const Spectrogram reanalysed = Analyze(out.samples, geometry, exec);
    double err = 0.0;
    for (int t = 0; t < t_count; ++t) {
      for (int k = 0; k < k_count; ++k) {
        const std::complex<double> s = reanalysed.frames(t, k);
        const double d = std::abs(s) - target_mag(t, k);
        // Interior bins stand for a conjugate pair in the full spectrum.
        const bool edge = k == 0 || (k == k_count - 1 && geometry.frame_len % 2 == 0);
        err += (edge ? 1.0 : 2.0) * d * d;
        phase(t, k) = std::arg(s);
      }
    }
    out.consistency_error.push_back(std::sqrt(err));
  }
  return out;
}

std::vector<double> SpeechLikeSignal(double duration_s, int sample_rate_hz,
                                     const SpeechLikeConfig& config) {
  if (!(duration_s > 0.0) || sample_rate_hz <= 0) {
    throw std::invalid_argument("invalid signal duration or rate");
  }
  const auto length = static_cast<std::size_t>(std::lround(duration_s * sample_rate_hz));
  const double fs = sample_rate_hz;
  const double nyquist = 0.5 * fs;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<double> out(length);
  double phase = 0.0;  // fundamental phase in cycles
  for (std::size_t i = 0; i < length; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double f0 = config.f0_hz *
                      (1.0 + config.pitch_depth * std::sin(kTwoPi * config.pitch_rate_hz * t));
    double value = 0.0;
    for (int h = 1; h * f0 < nyquist; ++h) {
      value += std::sin(kTwoPi * h * phase) / h;
    }
    const double envelope = 0.5 - 0.5 * std::cos(kTwoPi * config.syllable_rate_hz * t);
    out[i] = config.amplitude * envelope * value;
    phase += f0 / fs;
    phase -= std::floor(phase);
  }
  return out;
}

std::vector<double> WhiteNoise(std::size_t length, std::uint64_t seed,
                               double stddev) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, stddev);
  std::vector<double> out(length);
  for (double& v : out) v = gauss(rng);
  return out;
}

}  // namespace modkal
