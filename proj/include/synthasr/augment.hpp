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
#include <utility>
#include <vector>

#include "synthasr/dsp/dsp.hpp"

namespace synthasr::augment {

struct SpecAugmentParams {
  int min_freq_masks = 1;
  int max_freq_masks = 4;
  int min_freq_width = 1;
  int max_freq_width = 8;
  // Upper bound on the number of time masks is frames * this fraction,
  // but never below 1.
  double time_mask_count_max_frac = 1.0 / 50.0;
  int time_mask_max_len = 20;
  double mask_value = 0.0;

  void Validate() const;
};

struct MaskSpan {
  std::size_t start = 0;
  std::size_t width = 0;
  bool operator==(const MaskSpan&) const = default;
};

struct MaskRecord {
  std::vector<MaskSpan> freq_masks;
  std::vector<MaskSpan> time_masks;

  bool Covers(std::size_t frame, std::size_t dim) const;
};

std::pair<dsp::FeatureMatrix, MaskRecord> SpecAugment(
    const dsp::FeatureMatrix& f, const SpecAugmentParams& p, std::uint64_t seed);

// Sox-style speed change: duration scales by 1/factor, pitch by factor.
// Band-limited Kaiser-windowed sinc interpolation.
dsp::Waveform SpeedPerturb(const dsp::Waveform& w, double factor);

struct SilenceRemoveParams {
  double threshold_db = -40.0;
  double window_s = 0.020;
  double min_silence_s = 0.250;
};

// Splits the signal into consecutive windows, marks windows whose RMS is
// below the threshold (dBFS) as quiet, and cuts every run of quiet windows
// lasting at least min_silence. Whole windows are cut, so a second pass
// sees the same windows and is a no-op. All-quiet input yields an empty
// waveform.
dsp::Waveform SilenceRemove(const dsp::Waveform& w, const SilenceRemoveParams& p = {});

}  // namespace synthasr::augment
