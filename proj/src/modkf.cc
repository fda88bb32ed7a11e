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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace modkal {
namespace {

constexpr double kEigenFloor = 1e-10;
constexpr double kPresenceEps = 1e-9;

// Lower-triangular square root of a 2x2 covariance that tolerates rank
// deficiency.
struct Chol2 {
  double l00 = 0.0;
  double l10 = 0.0;
  double l11 = 0.0;
};

constexpr double kMinSigmaSpread = 1e-6;

Chol2 Cholesky2(double s00, double s01, double s11) {
  Chol2 c;
  c.l00 = std::sqrt(std::max(s00, 0.0));
  c.l10 = c.l00 > 0.0 ? s01 / c.l00 : 0.0;
  c.l11 = std::sqrt(std::max(s11 - c.l10 * c.l10, 0.0));
  return c;
}

void RepairBlock(KfState& state, int first, int count) {
  Eigen::MatrixXd m(count, count);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < count; ++j) m(i, j) = state.P(first + i, first + j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  Eigen::VectorXd values = solver.eigenvalues();
  if (values.minCoeff() >= 0.0) return;
  for (int i = 0; i < count; ++i) values(i) = std::max(values(i), kEigenFloor);
  const Eigen::MatrixXd fixed = solver.eigenvectors() * values.asDiagonal() *
                                solver.eigenvectors().transpose();
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < count; ++j) {
      state.P(first + i, first + j) = 0.5 * (fixed(i, j) + fixed(j, i));
    }
  }
}

double Mean(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
}

}  // namespace

KfState KfState::Zero(int dim, KfDomain domain) {
  if (dim < kTemporalDim || dim > kMaxStateDim) {
    throw std::invalid_argument("state dimension must be 2 or 3");
  }
  KfState state;
  state.dim = dim;
  state.domain = domain;
  return state;
}

void ObservationModel::Validate() const {
  if (variant == PhaseModel::kAlpha && !(alpha >= -1.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha out of range [-1,1]");
  }
  if (variant == PhaseModel::kGamma && !(gamma_param > 0.0)) {
    throw std::invalid_argument("gamma must be > 0");
  }
  if (!(obs_noise_var >= 0.0)) {
    throw std::invalid_argument("observation noise variance must be >= 0");
  }
}

double ObservationFn(double x, double n, double alpha) {
  const double d = n - x;
  // Factor out the larger of the two terms so nothing overflows.
  double y;
  if (d <= 0.0) {
    y = x + std::log1p(std::exp(d) + 2.0 * alpha * std::exp(0.5 * d));
  } else {
    y = n + std::log1p(std::exp(-d) + 2.0 * alpha * std::exp(-0.5 * d));
  }
  if (!std::isfinite(y)) {
    throw std::domain_error("invalid phase configuration");
  }
  return y;
}

double ObservationFnGamma(double x, double n, double gamma_param) {
  if (!(gamma_param > 0.0)) throw std::invalid_argument("gamma must be > 0");
  const double d = gamma_param * (n - x);
  if (d <= 0.0) return x + std::log1p(std::exp(d)) / gamma_param;
  return n + std::log1p(std::exp(-d)) / gamma_param;
}

double Observe(const ObservationModel& model, double x, double n) {
  return model.variant == PhaseModel::kAlpha
             ? ObservationFn(x, n, model.alpha)
             : ObservationFnGamma(x, n, model.gamma_param);
}

KfState PredictInter(const KfState& state, const ArModel& model) {
  const int d = state.dim;
  const int p = model.order();
  if (p > kTemporalDim) {
    throw std::invalid_argument("AR order exceeds the temporal state size");
  }
  std::array<double, kMaxStateDim * kMaxStateDim> f{};
  auto F = [&](int i, int j) -> double& { return f[i * kMaxStateDim + j]; };
  for (int i = 0; i < p; ++i) F(0, i) = model.coeffs[i];
  F(1, 0) = 1.0;
  if (d == kMaxStateDim) F(2, 2) = 1.0;

  double coeff_sum = 0.0;
  for (double a : model.coeffs) coeff_sum += a;

  KfState out = state;
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += F(i, j) * state.mean[j];
    out.mean[i] = acc;
  }
  out.mean[0] += (1.0 - coeff_sum) * model.mean;

  std::array<double, kMaxStateDim * kMaxStateDim> fp{};
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += F(i, k) * state.P(k, j);
      fp[i * kMaxStateDim + j] = acc;
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += fp[i * kMaxStateDim + k] * F(j, k);
      out.P(i, j) = acc;
    }
  }
  out.P(0, 0) += model.residual_var;
  return out;
}

KfState PredictIntra(const KfState& state, const LowerBin& lower,
                     double own_offset, const IntraParams& params) {
  if (state.dim != kMaxStateDim) {
    throw std::invalid_argument("intra-frame prediction needs a 3-state filter");
  }
  const double w = params.weight;
  const double z = params.coeff * (lower.mean - lower.offset);
  const double z_var =
      params.coeff * params.coeff * lower.var + params.residual_var;

  KfState out = state;
  out.mean[2] = z;
  for (int i = 0; i < kMaxStateDim; ++i) {
    out.P(i, 2) = 0.0;
    out.P(2, i) = 0.0;
  }
  out.P(2, 2) = z_var;

  // Component 0 becomes the moment-matched Gaussian of the mixture
  // (1 - w) * temporal + w * spectral, whose variance also covers the
  // disagreement between the two predictions.
  const double spectral = own_offset + z;
  const double gap = state.mean[0] - spectral;
  out.mean[0] = (1.0 - w) * state.mean[0] + w * spectral;
  out.P(0, 0) = (1.0 - w) * state.P(0, 0) + w * z_var + w * (1.0 - w) * gap * gap;
  out.P(0, 1) = (1.0 - w) * state.P(0, 1);
  out.P(1, 0) = out.P(0, 1);
  out.P(0, 2) = w * z_var;
  out.P(2, 0) = out.P(0, 2);
  return out;
}

KfState UpdateLinear(const KfState& state, double y_amp, double noise_mean,
                     double noise_var) {
  if (state.domain != KfDomain::kAmplitude) {
    throw std::invalid_argument("linear update requires an amplitude state");
  }
  if (noise_var < 0.0 || state.P(0, 0) < 0.0) {
    throw std::invalid_argument("negative variance in linear update");
  }
  if (std::isinf(noise_var)) return state;
  const double s = state.P(0, 0) + noise_var;
  if (!(s > 0.0)) return state;
  const int d = state.dim;
  std::array<double, kMaxStateDim> gain{};
  for (int i = 0; i < d; ++i) gain[i] = state.P(i, 0) / s;
  const double innovation = y_amp - noise_mean - state.mean[0];
  KfState out = state;
  for (int i = 0; i < d; ++i) out.mean[i] += gain[i] * innovation;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out.P(i, j) -= gain[i] * gain[j] * s;
  }
  RepairCovariance(out);
  return out;
}

JointPosterior UpdateLogPower(const KfState& state, double y_lp,
                              const NoiseState& noise,
                              const ObservationModel& obs) {
  if (state.domain != KfDomain::kLogPower) {
    throw std::invalid_argument("log-power update requires a log-power state");
  }
  obs.Validate();
  const int d = state.dim;
  const int ni = d;  // index of the noise component in the joint vector
  constexpr int kJoint = kMaxStateDim + 1;

  JointPosterior prior_out{state, noise, 0.0};
  if (std::isinf(obs.obs_noise_var)) return prior_out;

  std::array<double, kJoint> m0{};
  std::array<double, kJoint * kJoint> p0{};
  auto P0 = [&](int i, int j) -> double& { return p0[i * kJoint + j]; };
  for (int i = 0; i < d; ++i) {
    m0[i] = state.mean[i];
    for (int j = 0; j < d; ++j) P0(i, j) = state.P(i, j);
  }
  m0[ni] = noise.mean_logpower;
  P0(ni, ni) = noise.var;

  std::array<double, kJoint> m = m0;
  std::array<double, kJoint * kJoint> p = p0;
  auto P = [&](int i, int j) -> double& { return p[i * kJoint + j]; };

  const double root3 = std::sqrt(3.0);
  for (int iter = 0; iter < kPosteriorLinearizationIters; ++iter) {
    // Sigma points of the current (speech, noise) marginal.
    const double mx = m[0];
    const double mn = m[ni];
    Chol2 c = Cholesky2(P(0, 0), P(0, ni), P(ni, ni));
    // A collapsed iterate would leave no spread to regress on; a tiny spread
    // turns the regression into a local derivative instead.
    c.l00 = std::max(c.l00, kMinSigmaSpread);
    c.l11 = std::max(c.l11, kMinSigmaSpread);
    const double h0 = Observe(obs, mx, mn);
    const double hp0 = Observe(obs, mx + root3 * c.l00, mn + root3 * c.l10);
    const double hm0 = Observe(obs, mx - root3 * c.l00, mn - root3 * c.l10);
    const double hp1 = Observe(obs, mx, mn + root3 * c.l11);
    const double hm1 = Observe(obs, mx, mn - root3 * c.l11);
    constexpr double kW0 = 1.0 / 3.0;
    constexpr double kWi = 1.0 / 6.0;
    const double y_mean = kW0 * h0 + kWi * (hp0 + hm0 + hp1 + hm1);
    const double syy =
        kW0 * (h0 - y_mean) * (h0 - y_mean) +
        kWi * ((hp0 - y_mean) * (hp0 - y_mean) + (hm0 - y_mean) * (hm0 - y_mean) +
               (hp1 - y_mean) * (hp1 - y_mean) + (hm1 - y_mean) * (hm1 - y_mean));
    // Regression slopes in whitened coordinates, then mapped back.
    const double a0 = kWi * root3 * (hp0 - hm0);
    const double a1 = kWi * root3 * (hp1 - hm1);
    const double slope_n = a1 / c.l11;
    const double slope_x = (a0 - c.l10 * slope_n) / c.l00;
    const double lin_var = std::max(syy - (a0 * a0 + a1 * a1), 0.0);
    const double offset = y_mean - slope_x * mx - slope_n * mn;

    // Linear update of the prior with y = slope' z + offset + e.
    std::array<double, kJoint> ph{};
    for (int i = 0; i <= ni; ++i) ph[i] = slope_x * P0(i, 0) + slope_n * P0(i, ni);
    const double s = slope_x * ph[0] + slope_n * ph[ni] + lin_var + obs.obs_noise_var;
    if (!(s > 0.0)) return prior_out;
    const double innovation =
        y_lp - (slope_x * m0[0] + slope_n * m0[ni] + offset);
    std::array<double, kJoint> gain{};
    for (int i = 0; i <= ni; ++i) gain[i] = ph[i] / s;
    for (int i = 0; i <= ni; ++i) m[i] = m0[i] + gain[i] * innovation;
    for (int i = 0; i <= ni; ++i) {
      for (int j = 0; j <= ni; ++j) P(i, j) = P0(i, j) - gain[i] * gain[j] * s;
    }
  }

  JointPosterior out;
  out.speech = state;
  for (int i = 0; i < d; ++i) {
    out.speech.mean[i] = m[i];
    for (int j = 0; j < d; ++j) out.speech.P(i, j) = P(i, j);
  }
  RepairCovariance(out.speech);
  out.noise = {m[ni], std::max(P(ni, ni), 0.0), noise.process_var_q};
  out.speech_noise_cov = P(0, ni);
  return out;
}

NoiseState NoiseTrackUpdate(const NoiseState& noise, double y_lp,
                            double speech_presence_prob, double obs_var) {
  NoiseState out = noise;
  const double predicted_var = noise.var + noise.process_var_q;
  const double presence = std::clamp(speech_presence_prob, 0.0, 1.0);
  const double effective_var = obs_var / (1.0 - presence + kPresenceEps);
  const double gain = predicted_var / (predicted_var + effective_var);
  out.mean_logpower = noise.mean_logpower + gain * (y_lp - noise.mean_logpower);
  out.var = (1.0 - gain) * predicted_var;
  return out;
}

double SpeechPresenceProbability(double y_lp, double noise_mean) {
  constexpr double kMidpoint = 3.0;
  constexpr double kSlope = 0.5;
  return 1.0 / (1.0 + std::exp(-kSlope * (y_lp - noise_mean - kMidpoint)));
}

GammaParams GammaMomentMatch(double mean, double var) {
  if (!(mean > 0.0) || !(var > 0.0)) {
    throw std::invalid_argument("moment matching needs mean > 0 and var > 0");
  }
  return {mean * mean / var, var / mean};
}

void RepairCovariance(KfState& state) {
  const int d = state.dim;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double avg = 0.5 * (state.P(i, j) + state.P(j, i));
      state.P(i, j) = avg;
      state.P(j, i) = avg;
    }
  }
  // The spectral component is repaired on its own when it is decoupled, so
  // the temporal block is treated exactly as in the 2-state filter.
  if (d == kMaxStateDim && state.P(0, 2) == 0.0 && state.P(1, 2) == 0.0) {
    RepairBlock(state, 0, kTemporalDim);
    state.P(2, 2) = std::max(state.P(2, 2), 0.0);
    return;
  }
  RepairBlock(state, 0, d);
}

void ModKfConfig::Validate() const {
  if (ar_order < 0 || ar_order > kTemporalDim) {
    throw std::invalid_argument("AR order must lie in [0, 2]");
  }
  if (mod_len < 2 * ar_order + 1) {
    throw std::invalid_argument("modulation frame shorter than 2p+1");
  }
  if (mod_hop <= 0) throw std::invalid_argument("modulation hop must be > 0");
  if (intra && domain != KfDomain::kLogPower) {
    throw std::invalid_argument("intra-frame prediction is log-power only");
  }
  if (intra_weight < 0.0 || intra_weight > 1.0) {
    throw std::invalid_argument("intra weight must lie in [0, 1]");
  }
  observation.Validate();
}

BinTracker::BinTracker(const ModKfConfig& config,
                       std::span<const double> reference, int state_dim)
    : config_(config),
      reference_(reference),
      state_(KfState::Zero(state_dim, config.domain)) {
  const int t_count = static_cast<int>(reference.size());
  if (t_count < config.mod_len) throw std::invalid_argument("track too short");
  num_mod_frames_ = (t_count - config.mod_len) / config.mod_hop + 1;
}

void BinTracker::SelectModel(int t) {
  int index = 0;
  if (t >= config_.mod_len) index = (t - config_.mod_len) / config_.mod_hop;
  index = std::min(index, num_mod_frames_ - 1);
  if (index == model_index_) return;
  model_index_ = index;
  const auto frame = reference_.subspan(
      static_cast<std::size_t>(index) * config_.mod_hop, config_.mod_len);
  model_ = FitAr(frame, config_.ar_order);
  model_.residual_var = std::max(model_.residual_var, config_.min_residual_var);
  const double mu = Mean(frame);
  double var = 0.0;
  for (double v : frame) var += (v - mu) * (v - mu);
  model_frame_var_ = var / frame.size();
}

void BinTracker::Predict(int t) {
  SelectModel(t);
  if (t == 0) {
    const double var = std::max(model_frame_var_, config_.min_residual_var);
    for (int i = 0; i < kTemporalDim; ++i) {
      state_.mean[i] = model_.mean;
      state_.P(i, i) = var;
    }
    return;
  }
  state_ = PredictInter(state_, model_);
}

void BinTracker::PredictIntra(const LowerBin& lower, const IntraParams& params) {
  state_ = modkal::PredictIntra(state_, lower, model_.mean, params);
}

void BinTracker::Update(double observed, const NoiseMoments& noise) {
  if (config_.domain == KfDomain::kAmplitude) {
    state_ = UpdateLinear(state_, observed, noise.mean, noise.var);
    return;
  }
  const NoiseState belief{noise.mean, noise.var, 0.0};
  state_ = UpdateLogPower(state_, observed, belief, config_.observation).speech;
}

TrackEstimate EnhanceTrack(std::span<const double> observed,
                           std::span<const NoiseMoments> noise,
                           const ModKfConfig& config,
                           std::span<const double> reference) {
  config.Validate();
  const std::size_t t_count = observed.size();
  if (reference.empty()) reference = observed;
  if (reference.size() != t_count) {
    throw std::invalid_argument("reference track length mismatch");
  }
  if (noise.size() != 1 && noise.size() != t_count) {
    throw std::invalid_argument("noise track length mismatch");
  }
  BinTracker tracker(config, reference, kTemporalDim);
  TrackEstimate out{std::vector<double>(t_count), std::vector<double>(t_count)};
  for (std::size_t t = 0; t < t_count; ++t) {
    tracker.Predict(static_cast<int>(t));
    tracker.Update(observed[t], noise.size() == 1 ? noise[0] : noise[t]);
    out.mean[t] = tracker.state().mean[0];
    out.var[t] = tracker.state().P(0, 0);
  }
  return out;
}

namespace {

// Observation, reference and noise tracks for every bin, laid out T x K.
struct BinInputs {
  Grid<double> observed;
  Grid<double> reference;
  Grid<NoiseMoments> noise;
};

BinInputs PrepareInputs(const Spectrogram& noisy, const ModKfConfig& config,
                        Exec exec) {
  const int t_count = noisy.num_frames();
  const int k_count = noisy.num_bins();
  const BaselineResult pre = BaselineGains(noisy, config.preclean, exec);
  BinInputs in{Grid<double>(t_count, k_count), Grid<double>(t_count, k_count),
               Grid<NoiseMoments>(t_count, k_count)};
  const bool log_domain = config.domain == KfDomain::kLogPower;
  const int init_frames = std::clamp(config.noise_init_frames, 1, t_count);

#pragma omp parallel for schedule(static) if (RunParallel(exec))
  for (int k = 0; k < k_count; ++k) {
    for (int t = 0; t < t_count; ++t) {
      const double power = std::norm(noisy.frames(t, k));
      const double gain = pre.gains(t, k);
      if (log_domain) {
        in.observed(t, k) = std::log(std::max(power, kLogPowerFloor));
        in.reference(t, k) =
            std::log(std::max(gain * gain * power, kLogPowerFloor));
      } else {
        const double lambda = pre.noise_psd(t, k);
        in.observed(t, k) = std::sqrt(power);
        in.reference(t, k) = gain * std::sqrt(power);
        // Rayleigh moments of the noise amplitude.
        in.noise(t, k) = {0.5 * std::sqrt(std::numbers::pi * lambda),
                          (1.0 - 0.25 * std::numbers::pi) * lambda};
      }
    }
    if (!log_domain) continue;
    double init = 0.0;
    for (int t = 0; t < init_frames; ++t) init += in.observed(t, k);
    NoiseState tracker{init / init_frames, 1.0, config.noise_process_var};
    for (int t = 0; t < t_count; ++t) {
      // The speech update sees the one-step noise prediction plus the
      // intrinsic spread of a log-periodogram value.
      in.noise(t, k) = {tracker.mean_logpower,
                        tracker.var + tracker.process_var_q + kLogPeriodogramVar};
      const double y = in.observed(t, k);
      tracker = NoiseTrackUpdate(
          tracker, y, SpeechPresenceProbability(y, tracker.mean_logpower),
          kLogPeriodogramVar);
    }
  }
  return in;
}

// AR(1) across frequency of the reference frame around the per-bin AR means.
IntraParams FitIntra(std::span<const double> reference_row,
                     std::span<const double> offsets, double weight) {
  double r0 = 0.0;
  double r1 = 0.0;
  const std::size_t k_count = reference_row.size();
  for (std::size_t k = 0; k < k_count; ++k) {
    const double dev = reference_row[k] - offsets[k];
    r0 += dev * dev;
    if (k > 0) r1 += dev * (reference_row[k - 1] - offsets[k - 1]);
  }
  IntraParams params;
  params.weight = weight;
  if (r0 > 0.0) {
    params.coeff = std::clamp(r1 / r0, -kMaxReflection, kMaxReflection);
    params.residual_var =
        (1.0 - params.coeff * params.coeff) * r0 / static_cast<double>(k_count);
  }
  return params;
}

double GainFromPosterior(const ModKfConfig& config, double posterior,
                         double observed) {
  double gain;
  if (config.domain == KfDomain::kLogPower) {
    gain = std::exp(0.5 * (posterior - observed));
  } else {
    gain = observed > 0.0 ? posterior / observed : 1.0;
  }
  return std::clamp(gain, config.gain_floor, 1.0);
}

}  // namespace

ModKfResult ModKfGains(const Spectrogram& noisy, const ModKfConfig& config,
                       Exec exec) {
  config.Validate();
  const int t_count = noisy.num_frames();
  const int k_count = noisy.num_bins();
  if (t_count < config.mod_len) throw std::invalid_argument("track too short");
  const BinInputs in = PrepareInputs(noisy, config, exec);
  ModKfResult out{Grid<double>(t_count, k_count), Grid<double>(t_count, k_count),
                  Grid<double>(t_count, k_count)};

  if (!config.intra) {
#pragma omp parallel for schedule(dynamic) if (RunParallel(exec))
    for (int k = 0; k < k_count; ++k) {
      const auto observed = in.observed.column(k);
      const auto reference = in.reference.column(k);
      const auto noise = in.noise.column(k);
      const TrackEstimate est = EnhanceTrack(observed, noise, config, reference);
      for (int t = 0; t < t_count; ++t) {
        out.posterior_mean(t, k) = est.mean[t];
        out.posterior_var(t, k) = est.var[t];
      }
    }
  } else {
    std::vector<std::vector<double>> references(k_count);
    std::vector<BinTracker> trackers;
    trackers.reserve(k_count);
    for (int k = 0; k < k_count; ++k) {
      references[k] = in.reference.column(k);
      trackers.emplace_back(config, references[k], kMaxStateDim);
    }
    std::vector<double> offsets(k_count);
    for (int t = 0; t < t_count; ++t) {
      for (int k = 0; k < k_count; ++k) {
        trackers[k].Predict(t);
        offsets[k] = trackers[k].model().mean;
      }
      const IntraParams intra =
          FitIntra(in.reference.row(t), offsets, config.intra_weight);
      for (int k = 0; k < k_count; ++k) {
        if (k > 0) {
          const KfState& lower = trackers[k - 1].state();
          trackers[k].PredictIntra({lower.mean[0], lower.P(0, 0), offsets[k - 1]},
                                   intra);
        }
        trackers[k].Update(in.observed(t, k), in.noise(t, k));
        out.posterior_mean(t, k) = trackers[k].state().mean[0];
        out.posterior_var(t, k) = trackers[k].state().P(0, 0);
      }
    }
  }

  for (int t = 0; t < t_count; ++t) {
    for (int k = 0; k < k_count; ++k) {
      out.gains(t, k) =
          GainFromPosterior(config, out.posterior_mean(t, k), in.observed(t, k));
    }
  }
  return out;
}

std::vector<double> EnhanceUtteranceModKf(std::span<const double> signal,
                                          const StftGeometry& geometry,
                                          const ModKfConfig& config, Exec exec) {
  const PaddedSignal padded = PadForAnalysis(signal, geometry);
  const Spectrogram noisy = Analyze(padded.samples, geometry, exec);
  const ModKfResult result = ModKfGains(noisy, config, exec);
  return Unpad(Synthesize(ApplyGain(noisy, result.gains), exec), padded);
}

}  // namespace modkal
