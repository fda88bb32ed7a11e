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

#include "fft.h"

#include <mutex>
#include <stdexcept>

namespace modkal::internal {
namespace {

std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n <= 0) throw std::invalid_argument("FFT size must be positive");
  std::lock_guard<std::mutex> lock(PlannerMutex());
  double* real = fftw_alloc_real(n);
  fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_ = fftw_plan_dft_r2c_1d(n, real, spec, flags);
  inverse_ = fftw_plan_dft_c2r_1d(n, spec, real, flags);
  fftw_free(real);
  fftw_free(spec);
  if (forward_ == nullptr || inverse_ == nullptr) {
    throw std::runtime_error("FFTW planning failed");
  }
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  if (forward_ != nullptr) fftw_destroy_plan(forward_);
  if (inverse_ != nullptr) fftw_destroy_plan(inverse_);
}

void RealFft::Forward(std::span<double> in,
                      std::span<std::complex<double>> out) const {
  if (static_cast<int>(in.size()) != n_ ||
      static_cast<int>(out.size()) != n_ / 2 + 1) {
    throw std::invalid_argument("FFT buffer size mismatch");
  }
  fftw_execute_dft_r2c(forward_, in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::Inverse(std::span<std::complex<double>> in,
                      std::span<double> out) const {
  if (static_cast<int>(out.size()) != n_ ||
      static_cast<int>(in.size()) != n_ / 2 + 1) {
    throw std::invalid_argument("FFT buffer size mismatch");
  }
  fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  const double scale = 1.0 / n_;
  for (double& v : out) v *= scale;
}

}  // namespace modkal::internal
