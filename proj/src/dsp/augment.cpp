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

#include "synthasr/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "synthasr/error.hpp"
#include "synthasr/rng.hpp"

namespace synthasr::augment {

void SpecAugmentParams::Validate() const {
  Require(min_freq_masks >= 0 && min_freq_masks <= max_freq_masks,
          "spec_augment: empty frequency mask count range");
  Require(min_freq_width >= 1 && min_freq_width <= max_freq_width,
          "spec_augment: empty frequency width range");
  Require(time_mask_max_len >= 1, "spec_augment: time_mask_max_len must be >= 1");
  Require(time_mask_count_max_frac > 0.0, "spec_augment: bad time mask fraction");
}

bool MaskRecord::Covers(std::size_t frame, std::size_t dim) const {
  for (const auto& m : freq_masks) {
    if (dim >= m.start && dim < m.start + m.width) return true;
  }
  for (const auto& m : time_masks) {
    if (frame >= m.start && frame < m.start + m.width) return true;
  }
  return false;
}

std::pair<dsp::FeatureMatrix, MaskRecord> SpecAugment(
    const dsp::FeatureMatrix& f, const SpecAugmentParams& p, std::uint64_t seed) {
  p.Validate();
  Require(f.frames() > 0 && f.dim() > 0, "spec_augment: empty feature matrix");
  Rng rng(seed);
  const auto n_frames = static_cast<std::int64_t>(f.frames());
  const auto n_dims = static_cast<std::int64_t>(f.dim());
  MaskRecord rec;

  const auto n_freq = rng.UniformInt(p.min_freq_masks, p.max_freq_masks);
  for (std::int64_t i = 0; i < n_freq; ++i) {
    const auto width = std::min(rng.UniformInt(p.min_freq_width, p.max_freq_width), n_dims);
    const auto start = rng.UniformInt(0, n_dims - width);
    rec.freq_masks.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(width)});
  }

  const auto max_time = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(n_frames * p.time_mask_count_max_frac)));
  const auto n_time = rng.UniformInt(1, max_time);
  for (std::int64_t i = 0; i < n_time; ++i) {
    const auto len = std::min<std::int64_t>(rng.UniformInt(1, p.time_mask_max_len), n_frames);
    const auto start = rng.UniformInt(0, n_frames - len);
    rec.time_masks.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(len)});
  }

  dsp::FeatureMatrix out = f;
  for (const auto& m : rec.freq_masks) {
    for (std::size_t t = 0; t < f.frames(); ++t) {
      for (std::size_t d = m.start; d < m.start + m.width; ++d) out.data(t, d) = p.mask_value;
    }
  }
  for (const auto& m : rec.time_masks) {
    for (std::size_t t = m.start; t < m.start + m.width; ++t) {
      for (std::size_t d = 0; d < f.dim(); ++d) out.data(t, d) = p.mask_value;
    }
  }
  return {std::move(out), std::move(rec)};
}

namespace {

double BesselI0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

}  // namespace

dsp::Waveform SpeedPerturb(const dsp::Waveform& w, double factor) {
  Require(factor > 0.0 && std::isfinite(factor), "speed_perturb: factor must be > 0");
  dsp::Waveform out;
  out.sample_rate = w.sample_rate;
  const auto n_in = static_cast<std::int64_t>(w.samples.size());
  const auto n_out = static_cast<std::int64_t>(std::llround(n_in / factor));
  out.samples.assign(static_cast<std::size_t>(n_out), 0.0);
  if (n_in == 0) return out;

  // Output sample n reads the input at position n * factor. Speeding up
  // (factor > 1) compresses the spectrum past Nyquist, so the kernel cutoff
  // drops to 1/factor.
  constexpr int kZeroCrossings = 32;
  constexpr double kBeta = 8.6;
  const double cutoff = std::min(1.0, 1.0 / factor);
  const double half_width = kZeroCrossings / cutoff;
  const double i0_beta = BesselI0(kBeta);
  for (std::int64_t n = 0; n < n_out; ++n) {
    const double pos = static_cast<double>(n) * factor;
    const auto lo = static_cast<std::int64_t>(std::ceil(pos - half_width));
    const auto hi = static_cast<std::int64_t>(std::floor(pos + half_width));
    double acc = 0.0;
    for (std::int64_t k = std::max<std::int64_t>(lo, 0); k <= std::min(hi, n_in - 1); ++k) {
      const double d = pos - static_cast<double>(k);
      const double x = d * cutoff;
      const double sinc =
          x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double r = d / half_width;
      const double win = BesselI0(kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
      acc += w.samples[static_cast<std::size_t>(k)] * cutoff * sinc * win;
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

dsp::Waveform SilenceRemove(const dsp::Waveform& w, const SilenceRemoveParams& p) {
  Require(p.window_s > 0.0, "silence_remove: window must be positive");
  const auto win = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(p.window_s * w.sample_rate)));
  const std::size_t n = w.samples.size();
  const std::size_t n_win = (n + win - 1) / win;
  const double threshold = std::pow(10.0, p.threshold_db / 20.0);
  const auto min_run = static_cast<std::size_t>(std::ceil(p.min_silence_s / p.window_s - 1e-9));

  std::vector<bool> quiet(n_win);
  bool all_quiet = true;
  for (std::size_t b = 0; b < n_win; ++b) {
    const std::size_t begin = b * win;
    const std::size_t end = std::min(n, begin + win);
    double sq = 0.0;
    for (std::size_t i = begin; i < end; ++i) sq += w.samples[i] * w.samples[i];
    quiet[b] = std::sqrt(sq / static_cast<double>(end - begin)) < threshold;
    all_quiet = all_quiet && quiet[b];
  }
  dsp::Waveform out;
  out.sample_rate = w.sample_rate;
  if (all_quiet) return out;

  std::vector<bool> keep(n_win, true);
  for (std::size_t b = 0; b < n_win;) {
    if (!quiet[b]) {
      ++b;
      continue;
    }
    std::size_t e = b;
    while (e < n_win && quiet[e]) ++e;
    if (e - b >= std::max<std::size_t>(min_run, 1)) {
      for (std::size_t i = b; i < e; ++i) keep[i] = false;
    }
    b = e;
  }
  out.samples.reserve(n);
  for (std::size_t b = 0; b < n_win; ++b) {
    if (!keep[b]) continue;
    const std::size_t begin = b * win;
    const std::size_t end = std::min(n, begin + win);
    out.samples.insert(out.samples.end(), w.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                       w.samples.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace synthasr::augment
