// Copyright (c) 2026 The synthasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "synthasr/vocoder.hpp"

#include <cmath>
#include <numbers>

#include "synthasr/error.hpp"
#include "synthasr/rng.hpp"

namespace synthasr::vocoder {

namespace {

dsp::ComplexSpectrogram Combine(const Matrix& mag, const dsp::ComplexSpectrogram* phase_src,
                                const std::vector<double>* phases) {
  dsp::ComplexSpectrogram spec;
  spec.frames = mag.rows;
  spec.bins = mag.cols;
  spec.data.resize(mag.data.size());
  for (std::size_t i = 0; i < mag.data.size(); ++i) {
    double angle = 0.0;
    if (phase_src != nullptr) {
      angle = std::arg(phase_src->data[i]);
    } else if (phases != nullptr) {
      angle = (*phases)[i];
    }
    spec.data[i] = std::polar(mag.data[i], angle);
  }
  return spec;
}

}  // namespace

Matrix WithDcBin(const Matrix& m) {
  Matrix out(m.rows, m.cols + 1);
  for (std::size_t t = 0; t < m.rows; ++t) {
    for (std::size_t k = 0; k < m.cols; ++k) out(t, k + 1) = m(t, k);
  }
  return out;
}

double ConsistencyError(const Matrix& mag, const dsp::Waveform& w,
                        const dsp::StftConfig& stft_cfg) {
  const auto spec = dsp::Stft(w, stft_cfg);
  Require(spec.frames == mag.rows && spec.bins == mag.cols,
          "consistency_error: shape mismatch (" + std::to_string(mag.rows) + "x" +
              std::to_string(mag.cols) + " vs " + std::to_string(spec.frames) + "x" +
              std::to_string(spec.bins) + ")",
          ErrorCode::kShapeMismatch);
  double sq = 0.0;
  for (std::size_t i = 0; i < mag.data.size(); ++i) {
    const double d = mag.data[i] - std::abs(spec.data[i]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

dsp::Waveform GriffinLim(const Matrix& mag_in, const GriffinLimConfig& cfg,
                         const dsp::StftConfig& stft_cfg, int sample_rate,
                         std::vector<double>* trace) {
  Require(cfg.n_iters >= 1, "griffin_lim: n_iters must be >= 1");
  Require(mag_in.cols == static_cast<std::size_t>(stft_cfg.Bins()),
          "griffin_lim: magnitude has " + std::to_string(mag_in.cols) +
              " bins, expected " + std::to_string(stft_cfg.Bins()),
          ErrorCode::kShapeMismatch);
  Require(mag_in.rows > 0, "griffin_lim: empty magnitude");
  Matrix mag = mag_in;
  for (double& v : mag.data) {
    Require(std::isfinite(v), "griffin_lim: non-finite magnitude");
    Require(v >= 0.0, "griffin_lim: negative magnitude");
    if (cfg.power != 1.0) v = std::pow(v, cfg.power);
  }

  dsp::Waveform x;
  if (cfg.init_phase == PhaseInit::kRandom) {
    Rng rng(cfg.seed);
    std::vector<double> phases(mag.data.size());
    for (double& p : phases) p = rng.Uniform(-std::numbers::pi, std::numbers::pi);
    x = dsp::Istft(Combine(mag, nullptr, &phases), stft_cfg, sample_rate);
  } else {
    x = dsp::Istft(Combine(mag, nullptr, nullptr), stft_cfg, sample_rate);
  }
  if (trace != nullptr) {
    trace->clear();
    trace->push_back(ConsistencyError(mag, x, stft_cfg));
  }
  for (int it = 0; it < cfg.n_iters; ++it) {
    const auto spec = dsp::Stft(x, stft_cfg);
    x = dsp::Istft(Combine(mag, &spec, nullptr), stft_cfg, sample_rate);
    if (trace != nullptr) trace->push_back(ConsistencyError(mag, x, stft_cfg));
  }
  return x;
}

}  // namespace synthasr::vocoder
