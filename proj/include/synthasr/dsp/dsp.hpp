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

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synthasr/dsp/matrix.hpp"

namespace synthasr::dsp {

inline constexpr int kDefaultSampleRate = 16000;

// Mono audio. Samples are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  void Validate() const;
};

enum class WindowFn { kHann };

struct StftConfig {
  double window_len_s = 0.050;
  double hop_s = 0.0125;
  int fft_size = 1024;
  WindowFn window = WindowFn::kHann;
  double preemphasis_alpha = 0.97;

  int WindowSamples(int sample_rate) const;
  int HopSamples(int sample_rate) const;
  int Bins() const { return fft_size / 2 + 1; }
  // Throws on hop > window, a non power-of-two FFT, or an FFT shorter
  // than the window.
  void Validate(int sample_rate) const;
};

using Complex = std::complex<double>;

struct ComplexSpectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<Complex> data;

  Complex& operator()(std::size_t t, std::size_t k) { return data[t * bins + k]; }
  const Complex& operator()(std::size_t t, std::size_t k) const {
    return data[t * bins + k];
  }
};

enum class FeatureKind : std::uint8_t { kLinearMag = 0, kLogMel = 1, kMfcc = 2 };

std::string ToString(FeatureKind kind);

// Time-major features: data.rows frames by data.cols dimensions.
struct FeatureMatrix {
  Matrix data;
  FeatureKind kind = FeatureKind::kLogMel;
  double frame_rate = 80.0;

  std::size_t frames() const { return data.rows; }
  std::size_t dim() const { return data.cols; }
  // All entries finite.
  void Validate() const;
};

enum class MelScale { kHtk, kSlaney };

struct MelFilterbank {
  Matrix weights;  // n_mels x (fft_size / 2 + 1)
  double f_min = 60.0;
  double f_max = 8000.0;
  MelScale scale = MelScale::kHtk;
  std::vector<double> center_hz;
};

// Per-dimension statistics. Raw sums are kept so partial estimates merge
// exactly.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::size_t n_frames = 0;
  std::vector<double> sum;
  std::vector<double> sum_sq;

  std::size_t dim() const { return mean.size(); }
};

inline constexpr double kLogFloor = 1e-10;
inline constexpr double kStdFloor = 1e-8;

Waveform Preemphasize(const Waveform& w, double alpha);
// Inverse of Preemphasize.
Waveform Deemphasize(const Waveform& w, double alpha);

// Half-sample shifted periodic Hann: strictly positive, and overlap-adds
// to a constant at hop = n / 4 like the periodic Hann.
std::vector<double> MakeWindow(WindowFn fn, int n);

// In-place radix-2 FFT. Size must be a power of two. The inverse is scaled
// by 1/n.
void Fft(std::span<Complex> data, bool inverse);

bool IsPowerOfTwo(std::size_t n);

ComplexSpectrogram Stft(const Waveform& w, const StftConfig& cfg);

// Weighted overlap-add inverse. Samples whose summed squared window falls
// below 10% of its maximum are normalised by that floor instead, which
// only affects the first and last partial hop.
Waveform Istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
               int sample_rate);

// Number of output samples Istft produces for a given frame count.
std::size_t IstftLength(std::size_t frames, const StftConfig& cfg,
                        int sample_rate);

double HzToMel(double hz, MelScale scale = MelScale::kHtk);
double MelToHz(double mel, MelScale scale = MelScale::kHtk);

// f_max <= 0 means Nyquist.
MelFilterbank MakeMelFilterbank(int sample_rate, int fft_size, int n_mels = 80,
                                double f_min = 60.0, double f_max = -1.0,
                                MelScale scale = MelScale::kHtk);

// Power spectrogram |X|^2 of the preemphasized signal, T x (fft/2+1).
Matrix PowerSpectrogram(const Waveform& w, const StftConfig& cfg);

FeatureMatrix LogMel(const Waveform& w, const StftConfig& cfg,
                     const MelFilterbank& fb);

// Magnitude spectrogram with the DC bin removed: T x (fft/2).
FeatureMatrix LinearMagnitude(const Waveform& w, const StftConfig& cfg);

// Orthonormal DCT-II of a single vector, first n_coeffs outputs.
std::vector<double> Dct2(std::span<const double> x, std::size_t n_coeffs);

FeatureMatrix MfccFromLogMel(const FeatureMatrix& log_mel, std::size_t n_coeffs);
FeatureMatrix Mfcc(const Waveform& w, const StftConfig& cfg,
                   const MelFilterbank& fb, std::size_t n_coeffs = 40);

class NormAccumulator {
 public:
  void Add(const FeatureMatrix& f);
  void Merge(const NormAccumulator& other);
  NormStats Finalize() const;
  std::size_t frames() const { return n_frames_; }

 private:
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  std::size_t n_frames_ = 0;
};

NormStats EstimateNormStats(std::span<const FeatureMatrix> corpus);
FeatureMatrix ApplyNorm(const FeatureMatrix& f, const NormStats& s);
FeatureMatrix Denormalize(const FeatureMatrix& f, const NormStats& s);

}  // namespace synthasr::dsp
