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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>

#include "synthasr/augment.hpp"
#include "synthasr/error.hpp"
#include "test_util.hpp"

using namespace synthasr;
using namespace synthasr::dsp;
using namespace synthasr::augment;
using synthasr::testing::Noise;
using synthasr::testing::RandomVector;
using synthasr::testing::Tone;

namespace {

FeatureMatrix RandomFeatures(std::size_t t, std::size_t f, std::uint64_t seed) {
  FeatureMatrix m;
  m.data = Matrix(t, f);
  m.data.data = RandomVector(t * f, seed, 0.5, 2.0);
  return m;
}

// Chi-square critical values at p = 0.01.
constexpr std::array<double, 5> kChi2Crit = {0.0, 6.635, 9.210, 11.345, 13.277};

double ChiSquare(const std::vector<long>& counts) {
  long n = 0;
  for (long c : counts) n += c;
  const double expected = static_cast<double>(n) / counts.size();
  double chi = 0.0;
  for (long c : counts) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

std::size_t PeakBin(const Waveform& w, int fft) {
  std::vector<Complex> buf(fft);
  for (int i = 0; i < fft && i < static_cast<int>(w.samples.size()); ++i) buf[i] = w.samples[i];
  Fft(buf, false);
  std::size_t best = 0;
  for (int k = 1; k <= fft / 2; ++k) {
    if (std::abs(buf[k]) > std::abs(buf[best])) best = k;
  }
  return best;
}

Waveform Concat(std::initializer_list<Waveform> parts) {
  Waveform out;
  for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  return out;
}

}  // namespace

TEST_CASE("spec augment masks within the stated ranges") {
  const auto f = RandomFeatures(100, 80, 1);
  SpecAugmentParams p;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto [out, rec] = SpecAugment(f, p, seed);
    CHECK(rec.freq_masks.size() >= 1);
    CHECK(rec.freq_masks.size() <= 4);
    CHECK(rec.time_masks.size() >= 1);
    CHECK(rec.time_masks.size() <= 2);
    for (const auto& m : rec.freq_masks) {
      CHECK(m.width >= 1);
      CHECK(m.width <= 8);
      CHECK(m.start + m.width <= 80);
    }
    for (const auto& m : rec.time_masks) {
      CHECK(m.width >= 1);
      CHECK(m.width <= 20);
      CHECK(m.start + m.width <= 100);
    }
    for (std::size_t t = 0; t < 100; ++t) {
      for (std::size_t d = 0; d < 80; ++d) {
        if (rec.Covers(t, d)) {
          REQUIRE(out.data(t, d) == p.mask_value);
        } else {
          REQUIRE(out.data(t, d) == f.data(t, d));
        }
      }
    }
  }
}

TEST_CASE("spec augment is reproducible and handles tiny inputs") {
  const auto f = RandomFeatures(37, 5, 2);
  SpecAugmentParams p;
  const auto a = SpecAugment(f, p, 99);
  const auto b = SpecAugment(f, p, 99);
  CHECK(a.first.data == b.first.data);
  CHECK(a.second.freq_masks == b.second.freq_masks);
  CHECK(a.second.time_masks == b.second.time_masks);
  CHECK(a.second.time_masks.size() == 1);

  const auto one = RandomFeatures(1, 1, 3);
  const auto [o, rec] = SpecAugment(one, p, 5);
  CHECK(o.data(0, 0) == 0.0);
  CHECK_THROWS_AS(SpecAugment(FeatureMatrix{}, p, 1), Error);
}

TEST_CASE("spec augment count histograms are uniform") {
  const auto f = RandomFeatures(200, 80, 4);  // up to 4 time masks
  SpecAugmentParams p;
  std::vector<long> freq(4, 0), time(4, 0), width(8, 0);
  for (std::uint64_t seed = 0; seed < 100000; ++seed) {
    const auto rec = SpecAugment(f, p, seed).second;
    ++freq[rec.freq_masks.size() - 1];
    ++time[rec.time_masks.size() - 1];
    ++width[rec.freq_masks[0].width - 1];
  }
  CHECK(ChiSquare(freq) < kChi2Crit[3]);
  CHECK(ChiSquare(time) < kChi2Crit[3]);
  CHECK(ChiSquare(width) < 18.475);  // 7 degrees of freedom
}

TEST_CASE("speed perturbation") {
  SUBCASE("identity") {
    const auto x = Noise(4000, 0.5, 7);
    const auto y = SpeedPerturb(x, 1.0);
    REQUIRE(y.samples.size() == x.samples.size());
    for (std::size_t i = 0; i < x.samples.size(); ++i) CHECK(std::abs(y.samples[i] - x.samples[i]) < 1e-6);
  }
  SUBCASE("duration") {
    const auto y = SpeedPerturb(Tone(300.0, 1.0), 0.9);
    CHECK(std::abs(static_cast<double>(y.samples.size()) - 16000.0 / 0.9) <= 1.0);
  }
  SUBCASE("pitch moves with the factor") {
    const auto y = SpeedPerturb(Tone(440.0, 1.0), 1.1);
    const double hz_per_bin = 16000.0 / 8192.0;
    const auto bin = PeakBin(y, 8192);
    CHECK(std::abs(bin * hz_per_bin - 484.0) <= hz_per_bin);
  }
  SUBCASE("round trip") {
    for (double f : {0.9, 0.95, 1.05, 1.1}) {
      const auto x = Tone(523.0, 0.5, 0.4);
      const auto y = SpeedPerturb(SpeedPerturb(x, f), 1.0 / f);
      // Compare away from the edges, where the sinc kernel is truncated.
      double err = 0.0, ref = 0.0;
      const std::size_t n = std::min(x.samples.size(), y.samples.size());
      for (std::size_t i = 200; i + 200 < n; ++i) {
        err += (x.samples[i] - y.samples[i]) * (x.samples[i] - y.samples[i]);
        ref += x.samples[i] * x.samples[i];
      }
      CHECK(std::sqrt(err / ref) < 1e-2);
    }
  }
  CHECK_THROWS_AS(SpeedPerturb(Tone(100, 0.1), 0.0), Error);
  CHECK_THROWS_AS(SpeedPerturb(Tone(100, 0.1), -1.0), Error);
}

TEST_CASE("silence removal") {
  SUBCASE("all zeros") {
    CHECK(SilenceRemove(Waveform{std::vector<double>(16000, 0.0), 16000}).samples.empty());
  }
  SUBCASE("loud input is untouched") {
    const auto x = Tone(300.0, 1.0, 0.5);
    CHECK(SilenceRemove(x).samples == x.samples);
  }
  SUBCASE("interior pause is cut") {
    auto quiet = Noise(16000, 1e-3, 9);  // about -60 dBFS
    const auto x = Concat({Tone(300.0, 0.5, 0.5), quiet, Tone(300.0, 0.5, 0.5)});
    const auto y = SilenceRemove(x);
    CHECK(std::abs(y.duration() - 1.0) <= 2 * 0.020);
    CHECK(SilenceRemove(y).samples == y.samples);
  }
  SUBCASE("short pauses stay") {
    const auto x = Concat({Tone(300.0, 0.5, 0.5), Waveform{std::vector<double>(3200, 0.0), 16000},
                           Tone(300.0, 0.5, 0.5)});
    CHECK(SilenceRemove(x).samples.size() == x.samples.size());
  }
  SUBCASE("idempotent on random material") {
    for (int trial = 0; trial < 10; ++trial) {
      Rng rng(trial);
      Waveform x;
      for (int seg = 0; seg < 6; ++seg) {
        const double amp = rng.Uniform() < 0.5 ? 1e-4 : 0.3;
        const auto part = Noise(static_cast<std::size_t>(rng.UniformInt(100, 9000)), amp, 10 * trial + seg);
        x.samples.insert(x.samples.end(), part.samples.begin(), part.samples.end());
      }
      const auto once = SilenceRemove(x);
      CHECK(SilenceRemove(once).samples == once.samples);
    }
  }
}
