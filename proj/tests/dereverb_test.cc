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

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "modkal/evalkit.h"

namespace modkal {
namespace {

using cd = std::complex<double>;

double Energy(std::span<const double> h, std::size_t begin, std::size_t end) {
  double e = 0.0;
  for (std::size_t i = begin; i < end; ++i) e += h[i] * h[i];
  return e;
}

// ---------------------------------------------------------------- RIR

TEST(SynthRir, EnvelopeDropsSixtyDbAtT60) {
  const RirParams p{0.5, 0.0, 16000, 0.6, 3};
  const auto h = SynthRir(p);
  const std::size_t delta = 160;
  const std::size_t at_t60 = 8000;
  const double head = Energy(h, 1, 1 + delta) / delta;
  const double tail = Energy(h, at_t60, at_t60 + delta) / delta;
  EXPECT_NEAR(10.0 * std::log10(head / tail), 60.0, 2.0);
}

TEST(SynthRir, DirectToReverberantRatio) {
  for (double drr : {-5.0, 0.0, 6.0, 15.0}) {
    const RirParams p{0.4, drr, 16000, 0.4, 11};
    const auto h = SynthRir(p);
    EXPECT_EQ(h[0], 1.0);
    const std::size_t direct = 32;  // 2 ms
    const double measured =
        10.0 * std::log10(Energy(h, 0, direct) / Energy(h, direct, h.size()));
    EXPECT_NEAR(measured, drr, 0.5);
  }
}

TEST(SynthRir, SeedDeterminism) {
  const RirParams p{0.3, 0.0, 8000, 0.3, 42};
  EXPECT_EQ(SynthRir(p), SynthRir(p));
  RirParams q = p;
  q.seed = 43;
  EXPECT_NE(SynthRir(p), SynthRir(q));
}

TEST(SynthRir, RejectsInvalidParameters) {
  EXPECT_THROW(SynthRir({0.0, 0.0, 16000, 0.5, 0}), std::invalid_argument);
  EXPECT_THROW(SynthRir({0.8, 0.0, 16000, 0.3, 0}), std::invalid_argument);
  EXPECT_THROW(SynthRir({0.5, -40.0, 16000, 0.5, 0}), std::invalid_argument);
}

// ---------------------------------------------------------------- LRSV

TEST(Lrsv, DecayFactor) {
  EXPECT_NEAR(LateDecayFactor(0.5, 0.05), std::pow(10.0, -0.6), 1e-15);
  EXPECT_EQ(LateDecayFactor(std::numeric_limits<double>::infinity(), 0.05), 1.0);
}

TEST(Lrsv, ImpulseIsShiftedByTheLateBoundary) {
  std::vector<double> power(50, 0.0);
  power[10] = 1.0;
  const auto late = LrsvEstimate(power, 0.5, 0.05, 0.01);
  for (int t = 0; t < 50; ++t) {
    if (t == 15) {
      EXPECT_NEAR(late[t], std::pow(10.0, -0.6), 1e-15);
    } else {
      EXPECT_EQ(late[t], 0.0) << t;
    }
  }
}

TEST(Lrsv, LinearInThePowerTrack) {
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> power(200);
  for (double& p : power) p = e(rng);
  const auto base = LrsvEstimate(power, 0.7, 0.05, 0.016);
  std::vector<double> scaled = power;
  for (double& p : scaled) p *= 4.0;
  const auto out = LrsvEstimate(scaled, 0.7, 0.05, 0.016);
  for (std::size_t t = 0; t < power.size(); ++t) EXPECT_EQ(out[t], 4.0 * base[t]);
}

TEST(Lrsv, Errors) {
  const std::vector<double> power(5, 1.0);
  try {
    LrsvEstimate(power, 0.5, 0.05, 0.01);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "track too short");
  }
  EXPECT_THROW(LrsvEstimate(std::vector<double>(100, 1.0), 0.5, 0.005, 0.01),
               std::invalid_argument);
}

TEST(LateSuppressionGain, Examples) {
  EXPECT_EQ(LateSuppressionGain(4.0, 0.0, 0.0, 0.1), 1.0);
  EXPECT_EQ(LateSuppressionGain(4.0, 3.0, 1.0, 0.1), 0.1);
  EXPECT_EQ(LateSuppressionGain(4.0, 5.0, 0.0, 0.1), 0.1);
  EXPECT_DOUBLE_EQ(LateSuppressionGain(4.0, 1.0, 1.0, 0.0), 0.5);
}

TEST(LateSuppressionGain, AlwaysInRange) {
  std::mt19937_64 rng(2);
  std::exponential_distribution<double> e(1.0);
  for (int i = 0; i < 5000; ++i) {
    const double g = LateSuppressionGain(e(rng), e(rng), e(rng), 0.05);
    EXPECT_GE(g, 0.05);
    EXPECT_LE(g, 1.0);
  }
}

TEST(LrsvGains, RangeAndNoiseShape) {
  const StftGeometry g;
  const auto clean = SpeechLikeSignal(1.0, 16000);
  const auto rev = Convolve(clean, SynthRir({0.6, 0.0, 16000, 0.6, 5}));
  const Spectrogram spec = Analyze(rev, g);
  LrsvConfig c;
  c.t60_s = 0.6;
  for (double v : LrsvGains(spec, c).data()) {
    EXPECT_GE(v, c.gain_min);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(LrsvGains(spec, c, Grid<double>(3, 3, 0.0)), std::invalid_argument);
}

// ---------------------------------------------------------------- WPE

Spectrogram Random(int frames, int bins, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Spectrogram s{StftGeometry{2 * (bins - 1), bins - 1}, Grid<cd>(frames, bins)};
  for (cd& v : s.frames.data()) v = {n(rng), n(rng)};
  return s;
}

double RelativeChange(const Spectrogram& a, const Spectrogram& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    num += std::norm(a.frames.data()[i] - b.frames.data()[i]);
    den += std::norm(a.frames.data()[i]);
  }
  return std::sqrt(num / den);
}

TEST(Wpe, AnechoicNoiseIsLeftAlone) {
  // With 40 complex taps the fit absorbs roughly taps / frames of the power,
  // so the check needs a long observation.
  const Spectrogram s = Random(20000, 9, 7);
  const Spectrogram out = WpeBatch(s, WpeConfig{});
  EXPECT_LT(RelativeChange(s, out), 0.05);
}

TEST(Wpe, SingleEchoIsAttenuated) {
  // Each bin of a speech-like spectrogram receives a copy of itself 10 frames
  // later at 0.8; the echo-to-direct ratio is read off the output by
  // projecting it on the direct and on the delayed source, pooled over bins.
  auto x = SpeechLikeSignal(4.0, 16000);
  const auto floor_noise = WhiteNoise(x.size(), 3, 1e-3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += floor_noise[i];
  const Spectrogram src = Analyze(x, StftGeometry{});
  Spectrogram y = src;
  for (int t = 10; t < y.num_frames(); ++t) {
    for (int k = 0; k < y.num_bins(); ++k) y.frames(t, k) += 0.8 * src.frames(t - 10, k);
  }
  const Spectrogram d = WpeBatch(y, WpeConfig{});
  double echo_power = 0.0;
  double direct_power = 0.0;
  for (int k = 0; k < y.num_bins(); ++k) {
    cd direct{};
    cd echo{};
    double p0 = 0.0;
    double p10 = 0.0;
    for (int t = 10; t < y.num_frames(); ++t) {
      direct += d.frames(t, k) * std::conj(src.frames(t, k));
      echo += d.frames(t, k) * std::conj(src.frames(t - 10, k));
      p0 += std::norm(src.frames(t, k));
      p10 += std::norm(src.frames(t - 10, k));
    }
    echo_power += std::norm(echo) / p10;
    direct_power += std::norm(direct) / p0;
  }
  const double before_db = 10.0 * std::log10(0.64);
  EXPECT_LE(10.0 * std::log10(echo_power / direct_power), before_db - 10.0);
}

TEST(Wpe, ZeroTapsIsIdentity) {
  const Spectrogram s = Random(60, 5, 1);
  WpeConfig c;
  c.taps_T2 = 0;
  EXPECT_EQ(WpeBatch(s, c).frames, s.frames);
}

TEST(Wpe, OutputIsInputMinusDelayedPrediction) {
  const Spectrogram s = Random(300, 5, 2);
  const WpeConfig c;
  const WpeResult r = WpeBatchDetailed(s, c);
  ASSERT_EQ(r.filters.rows(), 5);
  ASSERT_EQ(r.filters.cols(), c.taps_T2);
  for (int k = 0; k < 5; ++k) {
    for (int t = 0; t < s.num_frames(); ++t) {
      cd pred{};
      for (int j = 0; j < c.taps_T2; ++j) {
        const int src = t - c.delay_T1 - j;
        if (src >= 0) pred += std::conj(r.filters(k, j)) * s.frames(src, k);
      }
      EXPECT_NEAR(std::abs(s.frames(t, k) - pred - r.output.frames(t, k)), 0.0, 1e-8);
    }
  }
}

TEST(Wpe, ShortInputIsAnError) {
  const Spectrogram s = Random(43, 5, 3);
  try {
    WpeBatch(s, WpeConfig{});
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "utterance too short for WPE taps");
  }
  EXPECT_NO_THROW(WpeBatch(Random(44, 5, 3), WpeConfig{}));
}

TEST(Wpe, ConfigValidation) {
  WpeConfig c;
  c.delay_T1 = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = {};
  c.iterations = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = {};
  c.taps_T2 = -1;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

Spectrogram RandomAtHop(int frames, std::uint64_t seed) {
  Spectrogram s = Random(frames, 5, seed);
  s.geometry = StftGeometry{320, 160};  // 10 ms at 16 kHz, 50 frames per 0.5 s
  return s;
}

TEST(WpeBlock, ShortUtteranceMatchesBatch) {
  const Spectrogram s = RandomAtHop(48, 4);
  WpeConfig c;
  c.block_s = 0.5;
  EXPECT_EQ(WpeBlockFrames(c, s.geometry), 50);
  EXPECT_EQ(WpeBlock(s, c).frames, WpeBatch(s, c).frames);
}

TEST(WpeBlock, BlocksAreIndependentAndTrailingPartIsPassedThrough) {
  const Spectrogram s = RandomAtHop(110, 5);
  WpeConfig c;
  c.block_s = 0.5;
  const Spectrogram out = WpeBlock(s, c);
  Spectrogram second{s.geometry, Grid<cd>(50, 5)};
  for (int t = 0; t < 50; ++t) {
    for (int k = 0; k < 5; ++k) second.frames(t, k) = s.frames(50 + t, k);
  }
  const Spectrogram second_out = WpeBatch(second, c);
  for (int t = 0; t < 50; ++t) {
    for (int k = 0; k < 5; ++k) EXPECT_EQ(out.frames(50 + t, k), second_out.frames(t, k));
  }
  for (int t = 100; t < 110; ++t) {
    for (int k = 0; k < 5; ++k) EXPECT_EQ(out.frames(t, k), s.frames(t, k));
  }
}

TEST(WpeBlock, NeedsABlockLength) {
  EXPECT_THROW(WpeBlock(RandomAtHop(100, 6), WpeConfig{}), std::invalid_argument);
}

}  // namespace
}  // namespace modkal
