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

#include <cmath>
#include <numbers>
#include <vector>

#include "synthasr/dsp/dsp.hpp"
#include "synthasr/rng.hpp"

namespace synthasr::testing {

inline dsp::Waveform Tone(double hz, double seconds, double amp = 0.5, int sr = 16000) {
  dsp::Waveform w;
  w.sample_rate = sr;
  w.samples.resize(static_cast<std::size_t>(std::lround(seconds * sr)));
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr);
  }
  return w;
}

inline dsp::Waveform Noise(std::size_t n, double amp, std::uint64_t seed, int sr = 16000) {
  Rng rng(seed);
  dsp::Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (double& s : w.samples) s = amp * rng.Uniform(-1.0, 1.0);
  return w;
}

inline std::vector<double> RandomVector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                        double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.Uniform(lo, hi);
  return v;
}

// Naive O(n^2) DFT of a real sequence, first n/2+1 bins.
inline std::vector<dsp::Complex> NaiveDft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<dsp::Complex> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    dsp::Complex s{};
    for (std::size_t i = 0; i < n; ++i) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / n;
      s += x[i] * dsp::Complex(std::cos(a), std::sin(a));
    }
    out[k] = s;
  }
  return out;
}

}  // namespace synthasr::testing
