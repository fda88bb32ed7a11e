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

#include "modkal/armodel.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace modkal {

std::vector<ModulationFrame> BuildModulationFrames(std::span<const double> track,
                                                   int mod_len, int mod_hop,
                                                   int bin_index) {
  if (mod_len <= 0 || mod_hop <= 0) {
    throw std::invalid_argument("modulation length and hop must be positive");
  }
  const int t_count = static_cast<int>(track.size());
  if (t_count < mod_len) throw std::invalid_argument("track too short");
  const int frames = (t_count - mod_len) / mod_hop + 1;
  std::vector<ModulationFrame> out;
  out.reserve(frames);
  for (int j = 0; j < frames; ++j) {
    const auto first = track.begin() + static_cast<std::ptrdiff_t>(j) * mod_hop;
    out.push_back({std::vector<double>(first, first + mod_len), bin_index,
                   j * mod_hop});
  }
  return out;
}

std::vector<double> Autocorrelation(std::span<const double> frame,
                                    int max_lag) {
  const int len = static_cast<int>(frame.size());
  if (max_lag < 0 || max_lag >= len) {
    throw std::invalid_argument("autocorrelation lag must be < frame length");
  }
  const double mean = std::accumulate(frame.begin(), frame.end(), 0.0) / len;
  std::vector<double> centered(frame.begin(), frame.end());
  for (double& v : centered) v -= mean;
  std::vector<double> acf(max_lag + 1, 0.0);
  for (int tau = 0; tau <= max_lag; ++tau) {
    double sum = 0.0;
    for (int t = tau; t < len; ++t) sum += centered[t] * centered[t - tau];
    acf[tau] = sum / len;
  }
  return acf;
}

ArModel LevinsonDurbin(std::span<const double> acf, int order) {
  if (order < 0 || static_cast<int>(acf.size()) < order + 1) {
    throw std::invalid_argument("autocorrelation shorter than order + 1");
  }
  if (!(acf[0] > 0.0)) throw std::invalid_argument("degenerate autocorrelation");

  ArModel model;
  model.coeffs.assign(order, 0.0);
  std::vector<double>& a = model.coeffs;
  std::vector<double> prev(order, 0.0);
  double error = acf[0];
  for (int m = 0; m < order; ++m) {
    double acc = acf[m + 1];
    for (int i = 0; i < m; ++i) acc -= a[i] * acf[m - i];
    double k = acc / error;
    if (std::abs(k) >= 1.0) k = std::copysign(kMaxReflection, k);
    std::copy(a.begin(), a.begin() + m, prev.begin());
    a[m] = k;
    for (int i = 0; i < m; ++i) a[i] = prev[i] - k * prev[m - 1 - i];
    error *= (1.0 - k * k);
  }
  model.residual_var = std::max(error, 0.0);
  return model;
}

ArModel FitAr(std::span<const double> frame, int order) {
  const auto acf = Autocorrelation(frame, order);
  ArModel model;
  if (acf[0] > 0.0) {
    model = LevinsonDurbin(acf, order);
  } else {
    model.coeffs.assign(order, 0.0);
  }
  model.mean =
      std::accumulate(frame.begin(), frame.end(), 0.0) / frame.size();
  return model;
}

}  // namespace modkal
