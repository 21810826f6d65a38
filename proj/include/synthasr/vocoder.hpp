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

#pragma once

#include <cstdint>
#include <vector>

#include "synthasr/dsp/dsp.hpp"

namespace synthasr::vocoder {

enum class PhaseInit { kZero, kRandom };

struct GriffinLimConfig {
  int n_iters = 1;
  PhaseInit init_phase = PhaseInit::kZero;
  std::uint64_t seed = 0;
  // Exponent applied to the magnitudes before reconstruction.
  double power = 1.0;
};

// Griffin & Lim phase reconstruction. `mag` is frames x (fft_size/2+1).
// Starting from x0 = istft(mag * phase0), each iteration replaces the
// magnitude of stft(x) with `mag` and resynthesizes. When `trace` is given
// it receives the consistency error of x0..x_n.
dsp::Waveform GriffinLim(const Matrix& mag, const GriffinLimConfig& cfg,
                         const dsp::StftConfig& stft_cfg, int sample_rate,
                         std::vector<double>* trace = nullptr);

// Frobenius distance between `mag` and |stft(w)|.
double ConsistencyError(const Matrix& mag, const dsp::Waveform& w,
                        const dsp::StftConfig& stft_cfg);

// Prepends a zero DC column to a DC-less magnitude spectrogram.
Matrix WithDcBin(const Matrix& mag_without_dc);

}  // namespace synthasr::vocoder
