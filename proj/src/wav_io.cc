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

#include "modkal/wav_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace modkal {
namespace {

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T Load(const std::vector<char>& bytes, std::size_t pos) {
  if (pos + sizeof(T) > bytes.size()) throw std::runtime_error("truncated WAV file");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  return value;
}

template <typename T>
void Store(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.append(raw, sizeof(T));
}

void WriteFile(const std::string& path, std::uint16_t format,
               std::uint16_t bits, const std::string& payload,
               int sample_rate_hz) {
  const std::uint16_t block_align = bits / 8;
  std::string out;
  out.append("RIFF");
  Store<std::uint32_t>(out, static_cast<std::uint32_t>(36 + payload.size()));
  out.append("WAVEfmt ");
  Store<std::uint32_t>(out, 16);
  Store<std::uint16_t>(out, format);
  Store<std::uint16_t>(out, 1);
  Store<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate_hz));
  Store<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate_hz) * block_align);
  Store<std::uint16_t>(out, block_align);
  Store<std::uint16_t>(out, bits);
  out.append("data");
  Store<std::uint32_t>(out, static_cast<std::uint32_t>(payload.size()));
  out.append(payload);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("failed writing " + path);
}

}  // namespace

WavData ReadWav(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + path);
  const std::vector<char> bytes((std::istreambuf_iterator<char>(file)),
                                std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error(path + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_pos = 0;
  std::size_t data_len = 0;
  bool have_data = false;
  for (std::size_t pos = 12; pos + 8 <= bytes.size();) {
    const std::string id(bytes.data() + pos, 4);
    const auto len = Load<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      format = Load<std::uint16_t>(bytes, body);
      channels = Load<std::uint16_t>(bytes, body + 2);
      rate = Load<std::uint32_t>(bytes, body + 4);
      bits = Load<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) throw std::runtime_error(path + ": malformed extensible header");
        // First two bytes of the sub-format GUID carry the actual format.
        format = Load<std::uint16_t>(bytes, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_len = std::min<std::size_t>(len, bytes.size() - body);
      have_data = true;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt || !have_data) {
    throw std::runtime_error(path + ": missing fmt or data chunk");
  }
  if (channels != 1) throw std::runtime_error(path + ": mono required");

  WavData wav;
  wav.sample_rate_hz = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    wav.samples.resize(data_len / 2);
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
      wav.samples[i] = Load<std::int16_t>(bytes, data_pos + 2 * i) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    wav.samples.resize(data_len / 4);
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
      wav.samples[i] = Load<float>(bytes, data_pos + 4 * i);
    }
  } else {
    throw std::runtime_error(path + ": unsupported format (PCM16 or float32 only)");
  }
  return wav;
}

void WriteWav(const std::string& path, const WavData& wav) {
  std::string payload;
  payload.reserve(wav.samples.size() * 4);
  for (double v : wav.samples) Store<float>(payload, static_cast<float>(v));
  WriteFile(path, kFormatFloat, 32, payload, wav.sample_rate_hz);
}

void WritePcm16Wav(const std::string& path, const WavData& wav) {
  std::string payload;
  payload.reserve(wav.samples.size() * 2);
  for (double v : wav.samples) {
    const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
    Store<std::int16_t>(payload, static_cast<std::int16_t>(scaled));
  }
  WriteFile(path, kFormatPcm, 16, payload, wav.sample_rate_hz);
}

}  // namespace modkal
