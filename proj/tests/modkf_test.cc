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

#include "modkal/modkf.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "modkal/evalkit.h"
#include "oracles.h"

namespace modkal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

KfState LogState(double m0, double m1, double v0, double v1, double c01 = 0.0) {
  KfState s = KfState::Zero(2, KfDomain::kLogPower);
  s.mean = {m0, m1, 0.0};
  s.P(0, 0) = v0;
  s.P(1, 1) = v1;
  s.P(0, 1) = s.P(1, 0) = c01;
  return s;
}

double MinEigen(const KfState& s) {
  Eigen::MatrixXd m(s.dim, s.dim);
  for (int i = 0; i < s.dim; ++i) {
    for (int j = 0; j < s.dim; ++j) m(i, j) = s.P(i, j);
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
}

// ---------------------------------------------------------------- observation

TEST(ObservationFn, Examples) {
  EXPECT_NEAR(ObservationFn(0.0, 0.0, 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(ObservationFn(0.0, 0.0, 1.0), std::log(4.0), 1e-15);
  EXPECT_NEAR(ObservationFn(0.0, -30.0, 0.0), 0.0, 1e-12);
}

TEST(ObservationFn, NonFiniteResultIsAnError) {
  try {
    ObservationFn(1.0, 1.0, -1.0);
    FAIL() << "expected an error";
  } catch (const std::domain_error& e) {
    EXPECT_STREQ(e.what(), "invalid phase configuration");
  }
}

TEST(ObservationFn, GammaForm) {
  EXPECT_NEAR(ObservationFnGamma(0.0, 0.0, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(ObservationFnGamma(0.0, 0.0, 2.0), 0.5 * std::log(2.0), 1e-15);
  EXPECT_THROW(ObservationFnGamma(0.0, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(ObservationFnGamma(0.0, 0.0, -1.0), std::invalid_argument);
}

TEST(ObservationFn, AdditivityIdentities) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = u(rng);
    const double n = u(rng);
    EXPECT_NEAR(ObservationFn(x, n, 0.0), oracle::PowerSum(x, n), 1e-12);
    EXPECT_NEAR(ObservationFn(x, n, 1.0), oracle::AmplitudeSum(x, n), 1e-12);
    EXPECT_NEAR(ObservationFnGamma(x, n, 1.0), ObservationFn(x, n, 0.0), 1e-12);
  }
}

TEST(ObservationFn, DominatesAndIncreasesForNonNegativeAlpha) {
  for (double alpha : {0.0, 0.3, 1.0}) {
    for (double x = -10.0; x <= 10.0; x += 0.5) {
      for (double n = -10.0; n <= 10.0; n += 0.5) {
        const double y = ObservationFn(x, n, alpha);
        EXPECT_GE(y, std::max(x, n));
        EXPECT_GT(ObservationFn(x + 0.25, n, alpha), y);
        EXPECT_GT(ObservationFn(x, n + 0.25, alpha), y);
      }
    }
  }
}

// ---------------------------------------------------------------- prediction

TEST(PredictInter, IdentityTransitionOnEqualLags) {
  // The companion matrix of a = (1, 0) copies x_t into the lag slot, so only
  // a state whose two components agree is left untouched.
  KfState s = LogState(1.5, 1.5, 0.4, 0.4, 0.4);
  const ArModel model{{1.0, 0.0}, 0.0, 0.0};
  EXPECT_EQ(PredictInter(s, model), s);
}

TEST(PredictInter, HalvingCoefficient) {
  const KfState s = LogState(2.0, 7.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(PredictInter(s, ArModel{{0.5, 0.0}, 0.0, 0.0}).mean[0], 1.0);
}

TEST(PredictInter, CovariancePropagation) {
  const KfState s = LogState(0.0, 0.0, 1.0, 1.0);
  const ArModel model{{0.9, -0.2}, 0.1, 0.0};
  const KfState out = PredictInter(s, model);
  Eigen::Matrix2d f;
  f << 0.9, -0.2, 1.0, 0.0;
  const Eigen::Matrix2d expected = f * f.transpose() + Eigen::Vector2d(0.1, 0.0).asDiagonal().toDenseMatrix();
  EXPECT_NEAR(out.P(0, 0), 0.95, 1e-15);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(out.P(i, j), expected(i, j), 1e-15);
  }
}

TEST(PredictInter, MeanIsAFixedPoint) {
  const KfState s = LogState(-4.0, -4.0, 0.0, 0.0);
  const KfState out = PredictInter(s, ArModel{{1.1, -0.3}, 0.0, -4.0});
  EXPECT_NEAR(out.mean[0], -4.0, 1e-15);
}

TEST(PredictInter, OrderAboveTwoIsRejected) {
  EXPECT_THROW(PredictInter(LogState(0, 0, 1, 1), ArModel{{0.1, 0.1, 0.1}, 0.1, 0.0}),
               std::invalid_argument);
}

KfState ThreeState(double m0, double m1, double v) {
  KfState s = KfState::Zero(3, KfDomain::kLogPower);
  s.mean = {m0, m1, 0.0};
  s.P(0, 0) = s.P(1, 1) = v;
  s.P(0, 1) = s.P(1, 0) = 0.3 * v;
  return s;
}

TEST(PredictIntra, ZeroWeightKeepsTemporalPrediction) {
  const KfState s = ThreeState(1.0, 0.5, 0.7);
  const KfState out = PredictIntra(s, {3.0, 0.2, 1.0}, -2.0, {0.8, 0.1, 0.0});
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(out.mean[i], s.mean[i]);
    for (int j = 0; j < 2; ++j) EXPECT_EQ(out.P(i, j), s.P(i, j));
  }
  EXPECT_EQ(out.P(0, 2), 0.0);
}

TEST(PredictIntra, AgreeingPredictionsLeaveTheMean) {
  // Spectral prediction: offset 1 + b1 * (2 - 1) = 2 = temporal mean.
  const KfState s = ThreeState(2.0, 2.0, 0.5);
  const KfState out = PredictIntra(s, {2.0, 0.0, 1.0}, 1.0, {1.0, 0.0, 0.3});
  EXPECT_DOUBLE_EQ(out.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(out.mean[2], 1.0);
}

TEST(PredictIntra, ConvexBlend) {
  // Temporal 2, spectral 4 + 0 = 4.
  const KfState s = ThreeState(2.0, 0.0, 0.5);
  const KfState out = PredictIntra(s, {0.0, 0.0, 0.0}, 4.0, {1.0, 0.2, 0.5});
  EXPECT_DOUBLE_EQ(out.mean[0], 3.0);
  // Mixture variance 0.5 * 0.5 + 0.5 * 0.2 + 0.25 * (2 - 4)^2.
  EXPECT_DOUBLE_EQ(out.P(0, 0), 0.25 + 0.1 + 1.0);
  EXPECT_GE(MinEigen(out), -1e-12);
}

TEST(PredictIntra, NeedsThreeStates) {
  EXPECT_THROW(PredictIntra(LogState(0, 0, 1, 1), {}, 0.0, {}), std::invalid_argument);
}

// ---------------------------------------------------------------- linear update

KfState AmpState(double m0, double v0) {
  KfState s = KfState::Zero(2, KfDomain::kAmplitude);
  s.mean = {m0, m0, 0.0};
  s.P(0, 0) = v0;
  s.P(1, 1) = v0;
  s.P(0, 1) = s.P(1, 0) = 0.5 * v0;
  return s;
}

TEST(UpdateLinear, ScalarTextbookCase) {
  const KfState out = UpdateLinear(AmpState(1.0, 1.0), 3.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(out.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(out.P(0, 0), 0.5);
}

TEST(UpdateLinear, UninformativeObservationAndCertainPrior) {
  const KfState s = AmpState(1.0, 1.0);
  EXPECT_EQ(UpdateLinear(s, 50.0, 0.0, kInf), s);
  const KfState certain = AmpState(1.0, 0.0);
  EXPECT_EQ(UpdateLinear(certain, 50.0, 0.0, 1.0), certain);
}

TEST(UpdateLinear, RejectsNegativeVarianceAndWrongDomain) {
  EXPECT_THROW(UpdateLinear(AmpState(1.0, 1.0), 1.0, 0.0, -1.0), std::invalid_argument);
  EXPECT_THROW(UpdateLinear(LogState(0, 0, 1, 1), 1.0, 0.0, 1.0), std::invalid_argument);
}

TEST(UpdateLinear, NeverIncreasesLeadingVariance) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 500; ++i) {
    const KfState s = AmpState(u(rng), u(rng));
    const KfState out = UpdateLinear(s, u(rng), u(rng), u(rng));
    EXPECT_LE(out.P(0, 0), s.P(0, 0));
    EXPECT_GE(MinEigen(out), -1e-10);
  }
}

// ---------------------------------------------------------------- log-power update

ObservationModel Obs(double alpha, double var) {
  ObservationModel obs;
  obs.alpha = alpha;
  obs.obs_noise_var = var;
  return obs;
}

TEST(UpdateLogPower, HighSnrMatchesLinearUpdate) {
  const KfState s = LogState(1.0, 1.0, 0.8, 0.8, 0.2);
  const NoiseState noise{1.0 - 40.0, 1.0, 0.0};
  const double y = 1.7;
  const KfState out = UpdateLogPower(s, y, noise, Obs(0.0, 0.2)).speech;
  // Scalar Kalman update with y = x + v.
  const double gain = 0.8 / (0.8 + 0.2);
  EXPECT_NEAR(out.mean[0], 1.0 + gain * (y - 1.0), 0.02);
  EXPECT_NEAR(out.P(0, 0), (1.0 - gain) * 0.8, 0.02);
}

TEST(UpdateLogPower, InfiniteObservationNoiseIsANoOp) {
  const KfState s = LogState(1.0, 0.5, 0.8, 0.6, 0.1);
  const JointPosterior out = UpdateLogPower(s, 4.0, {0.0, 1.0, 0.0}, Obs(0.0, kInf));
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(out.speech.mean[i], s.mean[i], 1e-9);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(out.speech.P(i, j), s.P(i, j), 1e-9);
  }
}

TEST(UpdateLogPower, KnownNoiseMatchesOneDimensionalQuadrature) {
  const KfState s = LogState(0.0, 0.0, 1.0, 1.0);
  const double y = std::log(2.0);
  const JointPosterior out = UpdateLogPower(s, y, {0.0, 0.0, 0.0}, Obs(0.0, 0.01));
  const oracle::Moments ref = oracle::LogPowerPosterior1d(0.0, 1.0, 0.0, y, 0.01, 0.0);
  EXPECT_NEAR(ref.mean, 0.0, 0.05);
  EXPECT_NEAR(out.speech.mean[0], 0.0, 0.05);
  EXPECT_NEAR(out.speech.mean[0], ref.mean, 0.05);
}

TEST(UpdateLogPower, QuadratureOracleAgreesWithDenseGrid) {
  for (double snr : {-10.0, 0.0, 10.0}) {
    const double y = ObservationFn(0.0, -snr, 0.0) + 0.3;
    const auto gh = oracle::LogPowerPosterior(0.0, 1.0, -snr, 0.25, y, 0.1, 0.0);
    const auto grid = oracle::LogPowerPosteriorGrid(0.0, 1.0, -snr, 0.25, y, 0.1, 0.0);
    EXPECT_NEAR(gh.mean, grid.mean, 1e-4);
    EXPECT_NEAR(gh.var, grid.var, 1e-4);
  }
}

// Prior mean x in {-2, 0, 2}, prior var in {0.25, 1}, x - n in {-10, 0, 10},
// alpha in {0, 1}; y is the observation of the prior means, noise var 0.25,
// observation var 0.1.
TEST(UpdateLogPower, MatchesTwoDimensionalQuadratureOnGrid) {
  for (double mx : {-2.0, 0.0, 2.0}) {
    for (double vx : {0.25, 1.0}) {
      for (double snr : {-10.0, 0.0, 10.0}) {
        for (double alpha : {0.0, 1.0}) {
          const double mn = mx - snr;
          const double y = ObservationFn(mx, mn, alpha);
          const KfState s = LogState(mx, mx, vx, vx);
          const JointPosterior out =
              UpdateLogPower(s, y, {mn, 0.25, 0.0}, Obs(alpha, 0.1));
          const auto ref = oracle::LogPowerPosterior(mx, vx, mn, 0.25, y, 0.1, alpha);
          EXPECT_NEAR(out.speech.mean[0], ref.mean, 0.1)
              << mx << " " << vx << " " << snr << " " << alpha;
          EXPECT_NEAR(out.speech.P(0, 0) / ref.var, 1.0, 0.2)
              << mx << " " << vx << " " << snr << " " << alpha;
        }
      }
    }
  }
}

TEST(UpdateLogPower, PosteriorIsPsdAndNotWider) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-15.0, 15.0);
  std::uniform_real_distribution<double> v(0.01, 4.0);
  for (int i = 0; i < 500; ++i) {
    const double vx = v(rng);
    const KfState s = LogState(u(rng), u(rng), vx, v(rng) + vx, 0.5 * vx);
    const double y = u(rng);
    const JointPosterior out =
        UpdateLogPower(s, y, {u(rng), v(rng), 0.0}, Obs(i % 2 == 0 ? 0.0 : 0.7, v(rng)));
    EXPECT_LE(out.speech.P(0, 0), s.P(0, 0) + 1e-9);
    EXPECT_GE(MinEigen(out.speech), -1e-10);
    EXPECT_TRUE(std::isfinite(out.speech.mean[0]));
  }
}

TEST(UpdateLogPower, NoiseDominatedObservationMovesTheNoise) {
  const KfState s = LogState(-20.0, -20.0, 0.5, 0.5);
  const JointPosterior out = UpdateLogPower(s, 2.0, {0.0, 1.0, 0.0}, Obs(0.0, 0.1));
  EXPECT_GT(out.noise.mean_logpower, 1.5);
  EXPECT_LT(out.noise.var, 1.0);
  EXPECT_NEAR(out.speech.mean[0], -20.0, 0.1);
}

// ---------------------------------------------------------------- noise tracking

TEST(NoiseTrack, FullPresenceFreezesTheState) {
  const NoiseState n{1.0, 0.5, 0.0};
  const NoiseState out = NoiseTrackUpdate(n, 9.0, 1.0, 1.0);
  EXPECT_NEAR(out.mean_logpower, 1.0, 1e-6);
  EXPECT_NEAR(out.var, 0.5, 1e-6);
}

TEST(NoiseTrack, ScalarUpdate) {
  const NoiseState out = NoiseTrackUpdate({0.0, 1.0, 0.0}, 2.0, 0.0, 1.0);
  EXPECT_NEAR(out.mean_logpower, 1.0, 1e-8);
  EXPECT_NEAR(out.var, 0.5, 1e-8);
}

TEST(NoiseTrack, ConvergesToConstantObservation) {
  NoiseState n{-5.0, 1.0, 0.01};
  for (int i = 0; i < 2000; ++i) n = NoiseTrackUpdate(n, 3.0, 0.0, 1.0);
  EXPECT_NEAR(n.mean_logpower, 3.0, 1e-6);
}

TEST(NoiseTrack, PresenceLogistic) {
  EXPECT_DOUBLE_EQ(SpeechPresenceProbability(5.0, 2.0), 0.5);
  EXPECT_NEAR(SpeechPresenceProbability(7.0, 2.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(SpeechPresenceProbability(-10.0, 0.0), 1.0 / (1.0 + std::exp(6.5)), 1e-15);
}

// ---------------------------------------------------------------- misc

TEST(GammaMomentMatch, Examples) {
  const GammaParams a = GammaMomentMatch(2.0, 1.0);
  EXPECT_DOUBLE_EQ(a.shape, 4.0);
  EXPECT_DOUBLE_EQ(a.scale, 0.5);
  const GammaParams b = GammaMomentMatch(1.0, 1.0);
  EXPECT_DOUBLE_EQ(b.shape, 1.0);
  EXPECT_DOUBLE_EQ(b.scale, 1.0);
  for (double mean : {0.3, 1.7, 40.0}) {
    for (double var : {0.01, 2.0, 100.0}) {
      const GammaParams g = GammaMomentMatch(mean, var);
      EXPECT_NEAR(g.shape * g.scale, mean, 1e-12 * mean);
      EXPECT_NEAR(g.shape * g.scale * g.scale, var, 1e-12 * var);
    }
  }
  EXPECT_THROW(GammaMomentMatch(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(GammaMomentMatch(1.0, -1.0), std::invalid_argument);
}

TEST(RepairCovariance, ClampsNegativeEigenvaluesAndSymmetrises) {
  KfState s = KfState::Zero(3, KfDomain::kLogPower);
  s.P(0, 0) = 1.0;
  s.P(1, 1) = 1.0;
  s.P(0, 1) = 1.5;
  s.P(1, 0) = 1.3;
  s.P(2, 2) = 0.5;
  s.P(0, 2) = s.P(2, 0) = 0.1;
  RepairCovariance(s);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(s.P(i, j), s.P(j, i));
  }
  EXPECT_GE(MinEigen(s), -1e-10);
}

TEST(RepairCovariance, LeavesPsdMatricesAlone) {
  KfState s = LogState(0.0, 0.0, 2.0, 1.0, 0.5);
  const KfState before = s;
  RepairCovariance(s);
  EXPECT_EQ(s, before);
}

TEST(ModKfConfig, Validation) {
  ModKfConfig c;
  c.observation.alpha = 1.5;
  try {
    c.Validate();
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "alpha out of range [-1,1]");
  }
  ModKfConfig amp_intra;
  amp_intra.domain = KfDomain::kAmplitude;
  amp_intra.intra = true;
  EXPECT_THROW(amp_intra.Validate(), std::invalid_argument);
}

// ---------------------------------------------------------------- tracks

TEST(EnhanceTrack, HighSnrPassThrough) {
  const auto x = oracle::Ar2Path(1.2, -0.4, 0.09, 300, 4);
  ModKfConfig c;
  c.observation.obs_noise_var = 0.0;
  std::vector<double> y(x.size());
  std::vector<NoiseMoments> noise(x.size());
  const double sixty_db = 6.0 * std::numbers::ln10;
  for (std::size_t t = 0; t < x.size(); ++t) {
    noise[t] = {x[t] - sixty_db, 0.0};
    y[t] = ObservationFn(x[t], noise[t].mean, 0.0);
  }
  const TrackEstimate est = EnhanceTrack(y, noise, c);
  for (std::size_t t = 0; t < x.size(); ++t) EXPECT_NEAR(est.mean[t], x[t], 0.05);
}

TEST(EnhanceTrack, ReducesGaussianObservationNoise) {
  ModKfConfig c;
  c.domain = KfDomain::kAmplitude;
  const NoiseMoments noise{0.0, 1.0};
  double obs_err = 0.0;
  double est_err = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto x = oracle::Ar2Path(1.2, -0.4, 0.09, 400, seed);
    const auto e = WhiteNoise(x.size(), 1000 + seed);
    std::vector<double> y(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) y[t] = x[t] + e[t];
    const TrackEstimate est = EnhanceTrack(y, std::span(&noise, 1), c);
    for (std::size_t t = 0; t < x.size(); ++t) {
      obs_err += e[t] * e[t];
      est_err += (est.mean[t] - x[t]) * (est.mean[t] - x[t]);
    }
  }
  EXPECT_LT(est_err, 0.8 * obs_err);
}

TEST(EnhanceTrack, ConstantTrackIsAFixedPoint) {
  ModKfConfig c;
  c.domain = KfDomain::kAmplitude;
  const std::vector<double> y(100, 2.5);
  const NoiseMoments noise{0.0, 1.0};
  const TrackEstimate est = EnhanceTrack(y, std::span(&noise, 1), c);
  for (std::size_t t = c.mod_len; t < y.size(); ++t) EXPECT_NEAR(est.mean[t], 2.5, 1e-6);
}

TEST(EnhanceTrack, ShortTrackIsAnError) {
  const std::vector<double> y(5, 0.0);
  const NoiseMoments noise{0.0, 1.0};
  EXPECT_THROW(EnhanceTrack(y, std::span(&noise, 1), ModKfConfig{}), std::invalid_argument);
}

Spectrogram NoisySpeech(double seconds, std::uint64_t seed) {
  const auto clean = SpeechLikeSignal(seconds, 16000);
  const auto noisy = AddNoiseAtSnr(clean, WhiteNoise(clean.size(), seed), 5.0, seed, 16000);
  return Analyze(noisy, StftGeometry{});
}

TEST(ModKfGains, ThreeStateWithZeroWeightEqualsTwoState) {
  const Spectrogram spec = NoisySpeech(1.0, 3);
  ModKfConfig two;
  ModKfConfig three;
  three.intra = true;
  three.intra_weight = 0.0;
  const ModKfResult a = ModKfGains(spec, two);
  const ModKfResult b = ModKfGains(spec, three);
  EXPECT_EQ(a.posterior_mean, b.posterior_mean);
  EXPECT_EQ(a.posterior_var, b.posterior_var);
  EXPECT_EQ(a.gains, b.gains);
}

TEST(ModKfGains, GainsStayInRange) {
  const Spectrogram spec = NoisySpeech(1.0, 4);
  for (int variant = 0; variant < 3; ++variant) {
    ModKfConfig c;
    c.domain = variant == 0 ? KfDomain::kAmplitude : KfDomain::kLogPower;
    c.intra = variant == 2;
    const ModKfResult r = ModKfGains(spec, c);
    for (double g : r.gains.data()) {
      EXPECT_GE(g, c.gain_floor);
      EXPECT_LE(g, 1.0);
    }
  }
}

}  // namespace
}  // namespace modkal
