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

#ifndef MODKAL_SRC_FFT_H_
#define MODKAL_SRC_FFT_H_

#include <complex>
#include <span>

#include <fftw3.h>

namespace modkal::internal {

// Real-input FFT of a fixed size backed by FFTW. Plans are created with
// FFTW_ESTIMATE | FFTW_UNALIGNED so the same codelets run for any buffer,
// which keeps results bit-reproducible. Execution is thread-safe; plan
// creation and destruction are serialised internally.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }

  // Unnormalised forward transform: n real samples -> n/2+1 bins.
  void Forward(std::span<double> in, std::span<std::complex<double>> out) const;

  // Inverse transform scaled by 1/n. `in` is used as scratch and clobbered.
  void Inverse(std::span<std::complex<double>> in, std::span<double> out) const;

 private:
  int n_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace modkal::internal

#endif  // MODKAL_SRC_FFT_H_
