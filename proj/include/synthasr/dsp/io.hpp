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

#include <filesystem>
#include <string>

#include "synthasr/dsp/dsp.hpp"

namespace synthasr::dsp {

// 16-bit PCM mono only.
Waveform ReadWav(const std::filesystem::path& path);
void WriteWav(const std::filesystem::path& path, const Waveform& w);

struct WavInfo {
  int sample_rate = 0;
  std::size_t num_samples = 0;
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(num_samples) / sample_rate : 0.0;
  }
};
// Parses only the header.
WavInfo ReadWavInfo(const std::filesystem::path& path);

// Scales so that the peak absolute sample equals `peak`. Silent input is
// returned unchanged.
Waveform PeakNormalize(const Waveform& w, double peak = 0.95);

// Binary feature file: "FEA1", kind u8, T u32, F u32, frame_rate f32, then
// T*F float32 row-major, all little-endian.
void WriteFeatures(const std::filesystem::path& path, const FeatureMatrix& f);
FeatureMatrix ReadFeatures(const std::filesystem::path& path);

void WriteNormStats(const std::filesystem::path& path, const NormStats& s);
NormStats ReadNormStats(const std::filesystem::path& path);

}  // namespace synthasr::dsp
