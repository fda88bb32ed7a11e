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

#ifndef MODKAL_MODKF_H_
#define MODKAL_MODKF_H_

#include <array>
#include <span>
#include <vector>

#include "modkal/armodel.h"
#include "modkal/gainrules.h"
#include "modkal/grid.h"
#include "modkal/parallel.h"
#include "modkal/stft.h"

namespace modkal {

enum class KfDomain { kAmplitude, kLogPower };

inline constexpr int kMaxStateDim = 3;

// Number of state components that carry the temporal (inter-frame) lags.
inline constexpr int kTemporalDim = 2;

// Variance of the log of an exponentially distributed periodogram value,
// pi^2 / 6.
inline constexpr double kLogPeriodogramVar = 1.6449340668482264;

// Per-bin Gaussian speech state. Component 0 is the current frame, component
// 1 the previous frame; in the 3-state filter component 2 holds the
// spectral (lower-bin) prediction residual.
struct KfState {
  int dim = 2;
  KfDomain domain = KfDomain::kLogPower;
  std::array<double, kMaxStateDim> mean{};
  std::array<double, kMaxStateDim * kMaxStateDim> cov{};

  double& P(int i, int j) { return cov[i * kMaxStateDim + j]; }
  double P(int i, int j) const { return cov[i * kMaxStateDim + j]; }

  static KfState Zero(int dim, KfDomain domain);

  friend bool operator==(const KfState&, const KfState&) = default;
};

enum class PhaseModel { kAlpha, kGamma };

// y = observe(x, n) + v, v ~ N(0, obs_noise_var).
struct ObservationModel {
  PhaseModel variant = PhaseModel::kAlpha;
  double alpha = 0.0;
  double gamma_param = 1.0;
  double obs_noise_var = 0.1;

  void Validate() const;
};

// Gaussian belief over the noise log-power with random-walk variance q.
struct NoiseState {
  double mean_logpower = 0.0;
  double var = 1.0;
  double process_var_q = 0.0;
};

// Mean and variance of the noise in the filter's domain for one frame.
struct NoiseMoments {
  double mean = 0.0;
  double var = 0.0;
};

// y = x + ln(1 + e^(n-x) + 2 alpha e^((n-x)/2)) in log-power. Throws
// "invalid phase configuration" if the result is not finite.
double ObservationFn(double x, double n, double alpha);

// y = x + ln(1 + e^(gamma (n-x))) / gamma. Throws for gamma <= 0.
double ObservationFnGamma(double x, double n, double gamma_param);

double Observe(const ObservationModel& model, double x, double n);

// mean <- F mean + (1 - sum a) mu e0, cov <- F cov F' + diag(residual_var, 0..)
// with F the companion matrix of the AR model over the temporal components.
KfState PredictInter(const KfState& state, const ArModel& model);

struct IntraParams {
  double coeff = 0.0;         // b1
  double residual_var = 0.0;  // innovation variance of the spectral AR(1)
  double weight = 0.3;        // w_intra
};

// Posterior of the already-updated lower-frequency bin in the same frame.
struct LowerBin {
  double mean = 0.0;
  double var = 0.0;
  double offset = 0.0;  // that bin's AR mean
};

// Sets component 2 to coeff * (lower.mean - lower.offset) with variance
// coeff^2 lower.var + residual_var. Component 0 is replaced by the Gaussian
// matching the first two moments of the mixture of the temporal prediction
// (weight 1 - w) and the spectral prediction own_offset + component 2
// (weight w), so its mean is the convex blend of the two.
KfState PredictIntra(const KfState& state, const LowerBin& lower,
                     double own_offset, const IntraParams& params);

// Linear update for y = x_amp + n_amp with n_amp ~ N(noise_mean, noise_var).
KfState UpdateLinear(const KfState& state, double y_amp, double noise_mean,
                     double noise_var);

struct JointPosterior {
  KfState speech;
  NoiseState noise;
  double speech_noise_cov = 0.0;
};

// Number of statistical-linearisation passes in the log-power update.
inline constexpr int kPosteriorLinearizationIters = 5;

// Non-linear log-power update over the joint (speech, noise) Gaussian. The
// observation function is linearised by sigma-point regression (5 points,
// lambda + d = 3) around the current posterior and the update is repeated
// from the prior kPosteriorLinearizationIters times.
JointPosterior UpdateLogPower(const KfState& state, double y_lp,
                              const NoiseState& noise,
                              const ObservationModel& obs);

// Random-walk predict (var += q) followed by a Gaussian update towards y_lp
// whose observation variance is inflated by 1 / (1 - presence + eps).
NoiseState NoiseTrackUpdate(const NoiseState& noise, double y_lp,
                            double speech_presence_prob, double obs_var);

// Logistic in (y_lp - noise_mean): midpoint 3 nats, slope 1/2 per nat.
double SpeechPresenceProbability(double y_lp, double noise_mean);

struct GammaParams {
  double shape = 0.0;
  double scale = 0.0;
};

GammaParams GammaMomentMatch(double mean, double var);

// Symmetrises the covariance and lifts eigenvalues below zero to 1e-10.
void RepairCovariance(KfState& state);

struct ModKfConfig {
  KfDomain domain = KfDomain::kLogPower;
  bool intra = false;
  int ar_order = 2;
  int mod_len = 16;
  int mod_hop = 4;
  ObservationModel observation;
  double min_residual_var = 0.05;
  double intra_weight = 0.3;
  double noise_process_var = 1e-3;
  int noise_init_frames = 10;
  double gain_floor = kDefaultGainFloor;
  // Baseline used to pre-clean the trajectories the AR models are fitted on.
  BaselineConfig preclean;

  void Validate() const;
};

// Causal Kalman tracker of one frequency bin. AR models are refitted on the
// reference trajectory once per modulation frame: frame t uses the latest
// modulation frame that ends before t (the first one during warm-up).
class BinTracker {
 public:
  BinTracker(const ModKfConfig& config, std::span<const double> reference,
             int state_dim);

  // Initialises the state at t = 0, otherwise runs the inter-frame
  // prediction with the model for frame t.
  void Predict(int t);
  void PredictIntra(const LowerBin& lower, const IntraParams& params);
  void Update(double observed, const NoiseMoments& noise);

  const KfState& state() const { return state_; }
  const ArModel& model() const { return model_; }

 private:
  void SelectModel(int t);

  const ModKfConfig& config_;
  std::span<const double> reference_;
  int num_mod_frames_;
  int model_index_ = -1;
  ArModel model_;
  double model_frame_var_ = 0.0;
  KfState state_;
};

struct TrackEstimate {
  std::vector<double> mean;
  std::vector<double> var;
};

// Runs the 2-state filter over one bin. `noise` holds one entry per frame or
// a single entry used for all frames; an empty `reference` fits the AR
// models on the observed track itself.
TrackEstimate EnhanceTrack(std::span<const double> observed,
                           std::span<const NoiseMoments> noise,
                           const ModKfConfig& config,
                           std::span<const double> reference = {});

struct ModKfResult {
  Grid<double> gains;
  Grid<double> posterior_mean;
  Grid<double> posterior_var;
};

// Whole-spectrogram filtering. The 2-state filters run bins in parallel; the
// 3-state filter walks bins in ascending order inside each frame.
ModKfResult ModKfGains(const Spectrogram& noisy, const ModKfConfig& config,
                       Exec exec = Exec::kSerial);

std::vector<double> EnhanceUtteranceModKf(std::span<const double> signal,
                                          const StftGeometry& geometry,
                                          const ModKfConfig& config,
                                          Exec exec = Exec::kSerial);

}  // namespace modkal

#endif  // MODKAL_MODKF_H_
