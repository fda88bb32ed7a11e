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

#ifndef MODKAL_WAV_IO_H_
#define MODKAL_WAV_IO_H_

#include <string>
#include <vector>

namespace modkal {

struct WavData {
  std::vector<double> samples;
  int sample_rate_hz = 0;
};

// Reads mono PCM16 (scaled by 1/32768) or IEEE float32 RIFF/WAVE files,
// including WAVE_FORMAT_EXTENSIBLE headers carrying either format. Throws
// std::runtime_error with a descriptive message otherwise ("mono required"
// for multi-channel files).
WavData ReadWav(const std::string& path);

// Writes a mono IEEE float32 file.
void WriteWav(const std::string& path, const WavData& wav);

// Writes a mono PCM16 file, rounding and saturating. Used to produce test
// inputs in the integer format.
void WritePcm16Wav(const std::string& path, const WavData& wav);

}  // namespace modkal

#endif  // MODKAL_WAV_IO_H_
