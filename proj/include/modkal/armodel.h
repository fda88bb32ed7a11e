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

#ifndef MODKAL_ARMODEL_H_
#define MODKAL_ARMODEL_H_

#include <span>
#include <vector>

namespace modkal {

// L consecutive spectral values of one frequency bin.
struct ModulationFrame {
  std::vector<double> samples;
  int bin_index = 0;
  int start_frame = 0;
};

// x[t] - mean = sum_i coeffs[i] * (x[t-1-i] - mean) + e[t],
// e ~ N(0, residual_var).
struct ArModel {
  std::vector<double> coeffs;
  double residual_var = 0.0;
  double mean = 0.0;

  int order() const { return static_cast<int>(coeffs.size()); }
};

// A reflection coefficient with |k| >= 1 is replaced by +-kMaxReflection so
// the fitted predictor is always stable.
inline constexpr double kMaxReflection = 0.998;

// floor((T - L) / hop) + 1 windows of the track. Throws "track too short"
// when T < L.
std::vector<ModulationFrame> BuildModulationFrames(std::span<const double> track,
                                                   int mod_len, int mod_hop,
                                                   int bin_index = 0);

// Biased autocorrelation r[tau] = (1/L) sum_t x_t x_{t-tau} of the
// mean-removed frame, tau = 0..max_lag.
std::vector<double> Autocorrelation(std::span<const double> frame, int max_lag);

// Solves the Yule-Walker equations for an order-p predictor. Throws
// "degenerate autocorrelation" if acf[0] <= 0.
ArModel LevinsonDurbin(std::span<const double> acf, int order);

// Mean removal + autocorrelation + Levinson-Durbin. Frames with no
// fluctuation yield a zero-coefficient model with zero residual variance.
ArModel FitAr(std::span<const double> frame, int order);

}  // namespace modkal

#endif  // MODKAL_ARMODEL_H_
