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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "synthasr/dsp/dsp.hpp"
#include "synthasr/dsp/io.hpp"
#include "synthasr/error.hpp"
#include "test_util.hpp"

using namespace synthasr;
using namespace synthasr::dsp;
using synthasr::testing::NaiveDft;
using synthasr::testing::Noise;
using synthasr::testing::RandomVector;
using synthasr::testing::Tone;

namespace {

StftConfig RawConfig() {
  StftConfig cfg;
  cfg.preemphasis_alpha = 0.0;
  return cfg;
}

std::filesystem::path TempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("synthasr_test_" + name);
}

}  // namespace

TEST_CASE("preemphasize") {
  SUBCASE("zero signal stays zero") {
    Waveform w{std::vector<double>(10, 0.0), 16000};
    for (double s : Preemphasize(w, 0.97).samples) CHECK(s == 0.0);
  }
  SUBCASE("impulse") {
    const auto y = Preemphasize(Waveform{{1.0, 0.0, 0.0}, 16000}, 0.97).samples;
    CHECK(y[0] == 1.0);
    CHECK(y[1] == doctest::Approx(-0.97).epsilon(1e-15));
    CHECK(y[2] == 0.0);
  }
  SUBCASE("matches the difference equation") {
    const auto x = RandomVector(16, 3);
    const auto y = Preemphasize(Waveform{x, 16000}, 0.97).samples;
    REQUIRE(y.size() == 16);
    CHECK(y[0] == x[0]);
    for (std::size_t t = 1; t < 16; ++t) CHECK(y[t] == x[t] - 0.97 * x[t - 1]);
  }
  SUBCASE("empty input") { CHECK(Preemphasize(Waveform{{}, 16000}, 0.97).samples.empty()); }
  SUBCASE("linear") {
    const auto x = RandomVector(64, 4), z = RandomVector(64, 5);
    std::vector<double> mix(64);
    for (int i = 0; i < 64; ++i) mix[i] = 2.5 * x[i] - 0.75 * z[i];
    const auto px = Preemphasize(Waveform{x, 16000}, 0.97).samples;
    const auto pz = Preemphasize(Waveform{z, 16000}, 0.97).samples;
    const auto pm = Preemphasize(Waveform{mix, 16000}, 0.97).samples;
    for (int i = 0; i < 64; ++i) CHECK(std::abs(pm[i] - (2.5 * px[i] - 0.75 * pz[i])) < 1e-12);
  }
  SUBCASE("deemphasis inverts") {
    const auto x = RandomVector(100, 6);
    const auto back = Deemphasize(Preemphasize(Waveform{x, 16000}, 0.97), 0.97).samples;
    for (int i = 0; i < 100; ++i) CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(Preemphasize(Waveform{{1.0}, 16000}, 1.0), Error);
}

TEST_CASE("stft framing") {
  StftConfig cfg;
  CHECK(cfg.WindowSamples(16000) == 800);
  CHECK(cfg.HopSamples(16000) == 200);
  CHECK(cfg.Bins() == 513);

  const auto spec = Stft(Noise(16000, 0.3, 1), RawConfig());
  CHECK(spec.frames == (16000 - 800) / 200 + 1);
  CHECK(spec.bins == 513);

  // Shorter than a window: one zero-padded frame.
  CHECK(Stft(Noise(300, 0.3, 2), RawConfig()).frames == 1);

  StftConfig bad = RawConfig();
  bad.hop_s = 0.06;
  CHECK_THROWS_AS(bad.Validate(16000), Error);
  bad = RawConfig();
  bad.fft_size = 1000;
  CHECK_THROWS_AS(bad.Validate(16000), Error);
  bad = RawConfig();
  bad.fft_size = 512;
  CHECK_THROWS_AS(bad.Validate(16000), Error);
}

TEST_CASE("stft of zeros is zero") {
  const auto spec = Stft(Waveform{std::vector<double>(4000, 0.0), 16000}, RawConfig());
  for (const auto& c : spec.data) CHECK(std::abs(c) == 0.0);
}

TEST_CASE("stft frame matches naive DFT and peaks at the bin-center frequency") {
  const auto cfg = RawConfig();
  const int bin = 40;  // 40 * 16000 / 1024 = 625 Hz
  const auto w = Tone(bin * 16000.0 / 1024.0, 0.2);
  const auto spec = Stft(w, cfg);

  const auto window = MakeWindow(WindowFn::kHann, 800);
  std::vector<double> frame(1024, 0.0);
  const std::size_t t = 3;
  for (int i = 0; i < 800; ++i) frame[i] = w.samples[t * 200 + i] * window[i];
  const auto ref = NaiveDft(frame);
  double max_err = 0.0;
  std::size_t peak = 0;
  for (std::size_t k = 0; k < 513; ++k) {
    max_err = std::max(max_err, std::abs(spec(t, k) - ref[k]));
    if (std::abs(spec(t, k)) > std::abs(spec(t, peak))) peak = k;
  }
  CHECK(max_err < 1e-9);
  CHECK(peak == bin);
}

TEST_CASE("Parseval consistency per frame") {
  const auto cfg = RawConfig();
  const auto w = Noise(4000, 0.5, 11);
  const auto spec = Stft(w, cfg);
  const auto window = MakeWindow(WindowFn::kHann, 800);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    double time_energy = 0.0;
    for (int i = 0; i < 800; ++i) {
      const double v = w.samples[t * 200 + i] * window[i];
      time_energy += v * v;
    }
    double freq = std::norm(spec(t, 0)) + std::norm(spec(t, 512));
    for (std::size_t k = 1; k < 512; ++k) freq += 2.0 * std::norm(spec(t, k));
    CHECK(std::abs(freq / 1024.0 - time_energy) / time_energy < 1e-6);
  }
}

TEST_CASE("istft round trip") {
  const auto cfg = RawConfig();
  const auto x = Noise(16000, 0.5, 21);
  const auto y = Istft(Stft(x, cfg), cfg, 16000);
  REQUIRE(y.samples.size() == IstftLength(Stft(x, cfg).frames, cfg, 16000));
  double max_err = 0.0;
  // Interior: samples covered by a full set of overlapping frames.
  for (std::size_t i = 600; i + 600 < y.samples.size(); ++i) {
    max_err = std::max(max_err, std::abs(y.samples[i] - x.samples[i]));
  }
  CHECK(max_err < 1e-6);

  SUBCASE("stft . istft . stft is idempotent on interior frames") {
    const auto s1 = Stft(x, cfg);
    const auto s2 = Stft(Istft(s1, cfg, 16000), cfg);
    double err = 0.0, scale = 0.0;
    for (std::size_t t = 4; t + 4 < s1.frames; ++t) {
      for (std::size_t k = 0; k < s1.bins; ++k) {
        err = std::max(err, std::abs(s1(t, k) - s2(t, k)));
        scale = std::max(scale, std::abs(s1(t, k)));
      }
    }
    CHECK(err / scale < 1e-6);
  }
}

TEST_CASE("istft of zeros is zero") {
  ComplexSpectrogram spec;
  spec.frames = 5;
  spec.bins = 513;
  spec.data.assign(5 * 513, Complex{});
  for (double s : Istft(spec, RawConfig(), 16000).samples) CHECK(s == 0.0);
}

TEST_CASE("single frame inverse") {
  const auto cfg = RawConfig();
  const auto tone = Tone(700.0, 0.05);  // exactly one window
  const auto spec = Stft(tone, cfg);
  REQUIRE(spec.frames == 1);
  // Naive inverse DFT of the frame gives back the windowed sinusoid.
  const auto window = MakeWindow(WindowFn::kHann, 800);
  double err = 0.0;
  for (int n = 0; n < 800; ++n) {
    double acc = std::real(spec(0, 0)) + std::real(spec(0, 512)) * std::cos(std::numbers::pi * n);
    for (int k = 1; k < 512; ++k) {
      const double a = 2.0 * std::numbers::pi * k * n / 1024.0;
      acc += 2.0 * (std::real(spec(0, k)) * std::cos(a) - std::imag(spec(0, k)) * std::sin(a));
    }
    err = std::max(err, std::abs(acc / 1024.0 - tone.samples[n] * window[n]));
  }
  CHECK(err < 1e-9);
  // istft undoes the analysis window wherever the window is not floored.
  const auto y = Istft(spec, cfg, 16000);
  for (int n = 0; n < 800; ++n) {
    if (window[n] * window[n] >= 0.1) CHECK(std::abs(y.samples[n] - tone.samples[n]) < 1e-9);
  }
}

TEST_CASE("mel scale conversions round trip") {
  for (auto scale : {MelScale::kHtk, MelScale::kSlaney}) {
    for (double hz = 1.0; hz < 20000.0; hz *= 1.37) {
      const double back = MelToHz(HzToMel(hz, scale), scale);
      CHECK(std::abs(back - hz) / hz < 1e-9);
    }
  }
  CHECK(HzToMel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
}

TEST_CASE("mel filterbank") {
  const auto fb = MakeMelFilterbank(16000, 1024, 80, 60.0);
  CHECK(fb.weights.rows == 80);
  CHECK(fb.weights.cols == 513);
  for (std::size_t m = 0; m < 80; ++m) {
    double row_max = 0.0;
    for (std::size_t k = 0; k < 513; ++k) {
      CHECK(fb.weights(m, k) >= 0.0);
      row_max = std::max(row_max, fb.weights(m, k));
    }
    CHECK(row_max > 0.0);
    if (m > 0) CHECK(fb.center_hz[m] > fb.center_hz[m - 1]);
  }
  // Nothing below the 60 Hz bound: bins 0..3 (0..47 Hz) are unused.
  for (std::size_t k = 0; k <= 3; ++k) {
    for (std::size_t m = 0; m < 80; ++m) CHECK(fb.weights(m, k) == 0.0);
  }
  CHECK_THROWS_AS(MakeMelFilterbank(16000, 256, 200, 60.0), Error);
  CHECK_THROWS_AS(MakeMelFilterbank(16000, 1024, 80, 9000.0), Error);
}

TEST_CASE("log-mel") {
  StftConfig cfg;
  const auto fb = MakeMelFilterbank(16000, 1024, 80, 60.0);
  SUBCASE("zero signal hits the floor") {
    const auto f = LogMel(Waveform{std::vector<double>(3200, 0.0), 16000}, cfg, fb);
    CHECK(f.dim() == 80);
    for (double v : f.data.data) CHECK(v == std::log(kLogFloor));
  }
  SUBCASE("doubling amplitude adds log 4") {
    const auto x = Noise(8000, 0.1, 5);
    auto x2 = x;
    for (double& s : x2.samples) s *= 2.0;
    const auto a = LogMel(x, cfg, fb);
    const auto b = LogMel(x2, cfg, fb);
    CHECK(a.frames() == (8000 - 800) / 200 + 1);
    for (std::size_t i = 0; i < a.data.data.size(); ++i) {
      CHECK(b.data.data[i] - a.data.data[i] == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("linear magnitude drops the DC bin") {
  const auto f = LinearMagnitude(Noise(4000, 0.3, 8), StftConfig{});
  CHECK(f.dim() == 512);
  CHECK(f.kind == FeatureKind::kLinearMag);
}

TEST_CASE("mfcc") {
  SUBCASE("constant log-mel frame has only c0") {
    std::vector<double> frame(80, -3.25);
    const auto c = Dct2(frame, 40);
    CHECK(c[0] == doctest::Approx(-3.25 * std::sqrt(80.0)));
    for (std::size_t k = 1; k < 40; ++k) CHECK(std::abs(c[k]) < 1e-12);
  }
  SUBCASE("matches scipy's orthonormal DCT-II") {
    const std::vector<double> x = {0.001230153357,  0.298745537508,  -0.274137855362,
                                   -0.890591838757, -0.454670785172, -0.991646554996,
                                   0.060143602597,  1.340215245555,  -0.492206518551,
                                   -0.62047489982,  0.489842050185,  0.35688700816};
    const std::vector<double> ref = {-0.3396738854755588, -0.5393276696752283,
                                     0.5321394985167753,  0.773455033451494,
                                     0.6024639301113022,  -1.1426682651351283};
    const auto c = Dct2(x, 6);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(c[k] - ref[k]) < 1e-12);
  }
  SUBCASE("shape") {
    StftConfig cfg;
    const auto fb = MakeMelFilterbank(16000, 1024, 80, 60.0);
    const auto f = Mfcc(Noise(8000, 0.2, 9), cfg, fb, 40);
    CHECK(f.dim() == 40);
    CHECK(f.kind == FeatureKind::kMfcc);
  }
}

TEST_CASE("norm stats") {
  SUBCASE("identical frames floor the std") {
    FeatureMatrix f;
    f.data = Matrix(5, 3, 2.0);
    const FeatureMatrix corpus[] = {f};
    const auto s = EstimateNormStats(corpus);
    for (double sd : s.std) CHECK(sd == kStdFloor);
  }
  SUBCASE("population variance") {
    FeatureMatrix f;
    f.data = Matrix(2, 1);
    f.data(0, 0) = 0.0;
    f.data(1, 0) = 2.0;
    const FeatureMatrix corpus[] = {f};
    const auto s = EstimateNormStats(corpus);
    CHECK(s.mean[0] == 1.0);
    CHECK(s.std[0] == 1.0);
  }
  SUBCASE("random corpus matches a two-pass estimate and normalises") {
    std::vector<FeatureMatrix> corpus;
    for (int u = 0; u < 4; ++u) {
      FeatureMatrix f;
      f.data = Matrix(30 + u * 7, 6);
      f.data.data = RandomVector(f.data.rows * 6, 100 + u, -3.0, 5.0);
      corpus.push_back(f);
    }
    const auto s = EstimateNormStats(corpus);
    for (std::size_t d = 0; d < 6; ++d) {
      double n = 0, sum = 0;
      for (const auto& f : corpus)
        for (std::size_t t = 0; t < f.frames(); ++t) sum += f.data(t, d), ++n;
      const double mean = sum / n;
      double var = 0;
      for (const auto& f : corpus)
        for (std::size_t t = 0; t < f.frames(); ++t) var += (f.data(t, d) - mean) * (f.data(t, d) - mean);
      var /= n;
      CHECK(std::abs(s.mean[d] - mean) <= 1e-10 * std::abs(mean));
      CHECK(std::abs(s.std[d] - std::sqrt(var)) <= 1e-10 * std::sqrt(var));
    }
    std::vector<FeatureMatrix> normed;
    for (const auto& f : corpus) normed.push_back(ApplyNorm(f, s));
    const auto s2 = EstimateNormStats(normed);
    for (std::size_t d = 0; d < 6; ++d) {
      CHECK(std::abs(s2.mean[d]) < 1e-6);
      CHECK(std::abs(s2.std[d] * s2.std[d] - 1.0) < 1e-6);
    }
  }
  SUBCASE("partial accumulators merge") {
    FeatureMatrix a, b;
    a.data = Matrix(10, 2);
    a.data.data = RandomVector(20, 1);
    b.data = Matrix(7, 2);
    b.data.data = RandomVector(14, 2);
    NormAccumulator whole, pa, pb;
    whole.Add(a);
    whole.Add(b);
    pa.Add(a);
    pb.Add(b);
    pa.Merge(pb);
    const auto s1 = whole.Finalize(), s2 = pa.Finalize();
    for (std::size_t d = 0; d < 2; ++d) {
      CHECK(s1.mean[d] == doctest::Approx(s2.mean[d]).epsilon(1e-12));
      CHECK(s1.std[d] == doctest::Approx(s2.std[d]).epsilon(1e-12));
    }
  }
  SUBCASE("apply_norm identities and errors") {
    FeatureMatrix f;
    f.data = Matrix(3, 2);
    f.data.data = {1, 2, 3, 4, 5, 6};
    NormStats unit;
    unit.mean = {0, 0};
    unit.std = {1, 1};
    CHECK(ApplyNorm(f, unit).data == f.data);
    NormStats at_row;
    at_row.mean = {3, 4};
    at_row.std = {2, 5};
    const auto z = ApplyNorm(f, at_row);
    CHECK(z.data(1, 0) == 0.0);
    CHECK(z.data(1, 1) == 0.0);
    NormStats wrong;
    wrong.mean = {0};
    wrong.std = {1};
    CHECK_THROWS_AS(ApplyNorm(f, wrong), Error);
  }
  SUBCASE("too few frames") {
    FeatureMatrix f;
    f.data = Matrix(1, 2);
    const FeatureMatrix corpus[] = {f};
    CHECK_THROWS_AS(EstimateNormStats(corpus), Error);
  }
}

TEST_CASE("wav io") {
  const auto path = TempPath("io.wav");
  auto w = Tone(440.0, 0.25, 0.5);
  WriteWav(path, w);
  const auto info = ReadWavInfo(path);
  CHECK(info.sample_rate == 16000);
  CHECK(info.num_samples == 4000);
  CHECK(info.duration_s() == doctest::Approx(0.25));
  const auto r = ReadWav(path);
  REQUIRE(r.samples.size() == 4000);
  for (std::size_t i = 0; i < 4000; ++i) CHECK(std::abs(r.samples[i] - w.samples[i]) < 1.0 / 16000.0);
  std::filesystem::remove(path);

  const auto junk = TempPath("junk.wav");
  std::ofstream(junk) << "not a wav";
  CHECK_THROWS_AS(ReadWav(junk), Error);
  std::filesystem::remove(junk);
}

TEST_CASE("feature file layout") {
  FeatureMatrix f;
  f.kind = FeatureKind::kMfcc;
  f.frame_rate = 80.0;
  f.data = Matrix(3, 2);
  f.data.data = {0.5, -1.0, 2.0, 0.25, 3.0, -0.125};
  const auto path = TempPath("f.fea");
  WriteFeatures(path, f);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), {}};
  REQUIRE(bytes.size() == 17 + 6 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "FEA1");
  CHECK(bytes[4] == 2);
  CHECK(bytes[5] == 3);
  CHECK(bytes[9] == 2);
  // 80.0f = 0x42a00000 little-endian
  CHECK(bytes[13] == 0x00);
  CHECK(bytes[16] == 0x42);
  const auto g = ReadFeatures(path);
  CHECK(g.kind == f.kind);
  CHECK(g.frame_rate == 80.0);
  CHECK(g.data == f.data);
  std::filesystem::remove(path);
}
