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

#include "modkal/pipeline.h"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "modkal/dereverb.h"
#include "modkal/gainrules.h"
#include "modkal/wav_io.h"

namespace modkal {
namespace {

std::vector<double> Dereverberate(std::span<const double> signal,
                                  const RunConfig& cfg,
                                  const StftGeometry& geometry, Exec exec) {
  if (cfg.derev == DerevMethod::kNone) return {signal.begin(), signal.end()};
  const PaddedSignal padded = PadForAnalysis(signal, geometry);
  const Spectrogram spec = Analyze(padded.samples, geometry, exec);
  Spectrogram out;
  switch (cfg.derev) {
    case DerevMethod::kLrsv: {
      LrsvConfig lrsv;
      lrsv.t60_s = *cfg.t60_s;
      const Grid<double> noise = TrackNoisePsd(
          ToDomain(spec, SpectralDomain::kPower).values, geometry, {}, exec);
      out = SuppressLateReverb(spec, lrsv, noise, exec);
      break;
    }
    case DerevMethod::kWpe:
      out = WpeBatch(spec, WpeConfig{}, exec);
      break;
    case DerevMethod::kWpeBlock: {
      WpeConfig wpe;
      wpe.block_s = kWpeBlockS;
      out = WpeBlock(spec, wpe, exec);
      break;
    }
    case DerevMethod::kNone:
      break;
  }
  return Unpad(Synthesize(out, exec), padded);
}

GainMethod BaselineMethod(EnhanceMethod method) {
  switch (method) {
    case EnhanceMethod::kSpecSub:
      return GainMethod::kSpecSub;
    case EnhanceMethod::kMmse:
      return GainMethod::kMmse;
    default:
      return GainMethod::kLogMmse;
  }
}

bool IsModKf(EnhanceMethod method) {
  return method == EnhanceMethod::kModKfLin || method == EnhanceMethod::kModKfLog ||
         method == EnhanceMethod::kModKf3d;
}

// Removes registered files unless released.
class OutputGuard {
 public:
  ~OutputGuard() {
    for (const auto& path : paths_) {
      std::error_code ec;
      std::filesystem::remove(path, ec);
    }
  }
  void Add(const std::string& path) { paths_.push_back(path); }
  void Release() { paths_.clear(); }

 private:
  std::vector<std::string> paths_;
};

}  // namespace

void CheckSampleRate(int sample_rate_hz) {
  if (sample_rate_hz != 8000 && sample_rate_hz != 16000) {
    throw std::runtime_error("unsupported sample rate " +
                             std::to_string(sample_rate_hz) +
                             " Hz (8000 or 16000 required)");
  }
}

StftGeometry GeometryFor(const RunConfig& cfg, int sample_rate_hz) {
  StftGeometry g = StftGeometry::FromMilliseconds(sample_rate_hz, cfg.frame_ms,
                                                  cfg.hop_ms, Window::kSqrtHann);
  g.Validate();
  return g;
}

ModKfConfig ModKfConfigFor(const RunConfig& cfg) {
  ModKfConfig kf;
  kf.domain = cfg.method == EnhanceMethod::kModKfLin ? KfDomain::kAmplitude
                                                      : KfDomain::kLogPower;
  kf.intra = cfg.method == EnhanceMethod::kModKf3d;
  if (cfg.gamma_param) {
    kf.observation.variant = PhaseModel::kGamma;
    kf.observation.gamma_param = *cfg.gamma_param;
  } else {
    kf.observation.alpha = cfg.alpha;
  }
  return kf;
}

std::vector<double> DegradeSignal(std::span<const double> clean,
                                  std::span<const double> noise,
                                  const RunConfig& cfg, int sample_rate_hz) {
  if (!cfg.seed) throw std::invalid_argument("seed required for degradation");
  const std::uint64_t seed = *cfg.seed;
  std::vector<double> rir;
  if (cfg.t60_s) {
    RirParams params;
    params.t60_s = *cfg.t60_s;
    params.drr_db = cfg.drr_db;
    params.sample_rate_hz = sample_rate_hz;
    params.length_s = *cfg.t60_s;
    params.seed = seed;
    rir = SynthRir(params);
  }
  std::vector<double> generated;
  if (cfg.snr_db && noise.empty()) {
    generated = WhiteNoise(clean.size() + (rir.empty() ? 0 : rir.size() - 1),
                           seed + 1);
    noise = generated;
  }
  if (!cfg.snr_db) noise = {};
  return Degrade(clean, rir, noise, cfg.snr_db.value_or(0.0), seed,
                 sample_rate_hz);
}

std::vector<double> EnhanceSignal(std::span<const double> noisy,
                                  const RunConfig& cfg, int sample_rate_hz,
                                  Exec exec) {
  const StftGeometry geometry = GeometryFor(cfg, sample_rate_hz);
  std::vector<double> denoised;
  if (IsModKf(cfg.method)) {
    denoised = EnhanceUtteranceModKf(noisy, geometry, ModKfConfigFor(cfg), exec);
  } else {
    BaselineConfig baseline;
    baseline.method = BaselineMethod(cfg.method);
    denoised = EnhanceUtteranceBaseline(noisy, geometry, baseline, exec);
  }
  return Dereverberate(denoised, cfg, geometry, exec);
}

MetricReport Evaluate(std::span<const double> reference,
                      std::span<const double> test, const RunConfig& cfg,
                      int sample_rate_hz, Exec exec) {
  if (test.size() < reference.size()) {
    throw std::runtime_error("signal under test is shorter than the reference");
  }
  test = test.first(reference.size());
  const int seg_len = static_cast<int>(kActivityFrameS * sample_rate_hz);
  MetricReport report;
  const SegSnrResult seg = SegSnrDetailed(reference, test, seg_len);
  report.seg_snr_db = seg.mean_db;
  report.per_frame_seg_snr_db = seg.per_frame_db;
  report.lsd_db = LsdOfSignals(reference, test, GeometryFor(cfg, sample_rate_hz), exec);
  report.method = ToString(cfg.method);
  report.config_hash = cfg.Hash();
  return report;
}

int RunPipeline(const RunConfig& cfg, std::ostream& metrics_out,
                std::ostream& err, Exec exec) {
  OutputGuard guard;
  try {
    cfg.Validate();
    const WavData input = ReadWav(cfg.input_path);
    CheckSampleRate(input.sample_rate_hz);
    const int fs = input.sample_rate_hz;

    std::vector<double> result;
    std::optional<MetricReport> report;
    switch (cfg.mode) {
      case RunMode::kDegrade:
      case RunMode::kPipeline: {
        WavData noise;
        if (!cfg.noise_path.empty()) {
          noise = ReadWav(cfg.noise_path);
          if (noise.sample_rate_hz != fs) {
            throw std::runtime_error("noise sample rate differs from input");
          }
        }
        result = DegradeSignal(input.samples, noise.samples, cfg, fs);
        if (cfg.mode == RunMode::kPipeline) {
          result = EnhanceSignal(result, cfg, fs, exec);
          report = Evaluate(input.samples, result, cfg, fs, exec);
          report->file = cfg.output_path;
        }
        break;
      }
      case RunMode::kEnhance:
        result = EnhanceSignal(input.samples, cfg, fs, exec);
        break;
      case RunMode::kEval: {
        const WavData test = ReadWav(cfg.output_path);
        if (test.sample_rate_hz != fs) {
          throw std::runtime_error("sample rates of reference and test differ");
        }
        report = Evaluate(input.samples, test.samples, cfg, fs, exec);
        report->file = cfg.output_path;
        break;
      }
    }

    if (cfg.mode != RunMode::kEval) {
      guard.Add(cfg.output_path);
      WriteWav(cfg.output_path, {result, fs});
    }
    if (report) {
      const std::string line = report->ToJsonLine() + "\n";
      if (cfg.metrics_path.empty()) {
        metrics_out << line;
      } else {
        guard.Add(cfg.metrics_path);
        std::ofstream file(cfg.metrics_path, std::ios::binary | std::ios::trunc);
        file << line;
        if (!file) throw std::runtime_error("failed writing " + cfg.metrics_path);
      }
    }
    guard.Release();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "modkal: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "modkal: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace modkal
