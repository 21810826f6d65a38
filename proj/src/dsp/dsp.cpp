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

#include "synthasr/dsp/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "synthasr/error.hpp"

namespace synthasr::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

void RequireFinite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    Require(std::isfinite(x), std::string(what) + ": non-finite value");
  }
}

}  // namespace

void Waveform::Validate() const {
  Require(sample_rate > 0, "waveform: sample_rate must be positive");
  RequireFinite(samples, "waveform");
}

std::string ToString(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kLinearMag:
      return "linear_mag";
    case FeatureKind::kLogMel:
      return "log_mel";
    case FeatureKind::kMfcc:
      return "mfcc";
  }
  return "unknown";
}

void FeatureMatrix::Validate() const {
  Require(data.data.size() == data.rows * data.cols,
          "feature matrix: inconsistent shape");
  RequireFinite(data.data, "feature matrix");
}

int StftConfig::WindowSamples(int sample_rate) const {
  return static_cast<int>(std::lround(window_len_s * sample_rate));
}

int StftConfig::HopSamples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_s * sample_rate));
}

bool IsPowerOfTwo(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void StftConfig::Validate(int sample_rate) const {
  Require(sample_rate > 0, "stft: sample_rate must be positive");
  const int win = WindowSamples(sample_rate);
  const int hop = HopSamples(sample_rate);
  Require(win > 0 && hop > 0, "stft: window and hop must be positive");
  Require(hop <= win, "stft: hop must not exceed the window length");
  Require(IsPowerOfTwo(static_cast<std::size_t>(fft_size)),
          "stft: fft_size must be a power of two");
  Require(fft_size >= win, "stft: fft_size shorter than the window");
  Require(preemphasis_alpha >= 0.0 && preemphasis_alpha < 1.0,
          "stft: preemphasis alpha must lie in [0, 1)");
}

Waveform Preemphasize(const Waveform& w, double alpha) {
  Require(alpha >= 0.0 && alpha < 1.0, "preemphasize: alpha must lie in [0, 1)");
  Waveform out{std::vector<double>(w.samples.size()), w.sample_rate};
  if (w.samples.empty()) return out;
  out.samples[0] = w.samples[0];
  for (std::size_t t = 1; t < w.samples.size(); ++t) {
    out.samples[t] = w.samples[t] - alpha * w.samples[t - 1];
  }
  return out;
}

Waveform Deemphasize(const Waveform& w, double alpha) {
  Require(alpha >= 0.0 && alpha < 1.0, "deemphasize: alpha must lie in [0, 1)");
  Waveform out{std::vector<double>(w.samples.size()), w.sample_rate};
  double prev = 0.0;
  for (std::size_t t = 0; t < w.samples.size(); ++t) {
    prev = w.samples[t] + (t == 0 ? 0.0 : alpha * prev);
    out.samples[t] = prev;
  }
  return out;
}

std::vector<double> MakeWindow(WindowFn fn, int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  switch (fn) {
    case WindowFn::kHann:
      for (int i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * (i + 0.5) / n);
      }
      break;
  }
  return w;
}

void Fft(std::span<Complex> a, bool inverse) {
  const std::size_t n = a.size();
  Require(IsPowerOfTwo(n), "fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1 : -1);
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles computed directly rather than by recurrence to keep the
      // round-trip error near machine precision.
      const Complex wk(std::cos(ang * k), std::sin(ang * k));
      for (std::size_t i = 0; i < n; i += len) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + half] * wk;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= scale;
  }
}

ComplexSpectrogram Stft(const Waveform& w, const StftConfig& cfg) {
  cfg.Validate(w.sample_rate);
  Require(!w.samples.empty(), "stft: empty waveform");
  const std::size_t win = cfg.WindowSamples(w.sample_rate);
  const std::size_t hop = cfg.HopSamples(w.sample_rate);
  const std::size_t n = w.samples.size();
  const std::size_t frames = n < win ? 1 : (n - win) / hop + 1;
  const auto window = MakeWindow(cfg.window, static_cast<int>(win));

  ComplexSpectrogram spec;
  spec.frames = frames;
  spec.bins = static_cast<std::size_t>(cfg.Bins());
  spec.data.resize(frames * spec.bins);
  std::vector<Complex> buf(static_cast<std::size_t>(cfg.fft_size));
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), Complex{});
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < win && start + i < n; ++i) {
      buf[i] = w.samples[start + i] * window[i];
    }
    Fft(buf, false);
    std::copy_n(buf.begin(), spec.bins, spec.data.begin() + t * spec.bins);
  }
  return spec;
}

std::size_t IstftLength(std::size_t frames, const StftConfig& cfg,
                        int sample_rate) {
  if (frames == 0) return 0;
  return (frames - 1) * cfg.HopSamples(sample_rate) +
         cfg.WindowSamples(sample_rate);
}

Waveform Istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
               int sample_rate) {
  cfg.Validate(sample_rate);
  Require(spec.bins == static_cast<std::size_t>(cfg.Bins()),
          "istft: bin count does not match fft_size");
  Require(spec.data.size() == spec.frames * spec.bins,
          "istft: inconsistent spectrogram shape");
  const std::size_t win = cfg.WindowSamples(sample_rate);
  const std::size_t hop = cfg.HopSamples(sample_rate);
  const std::size_t fft = static_cast<std::size_t>(cfg.fft_size);
  const auto window = MakeWindow(cfg.window, static_cast<int>(win));
  const std::size_t len = IstftLength(spec.frames, cfg, sample_rate);

  std::vector<double> acc(len, 0.0);
  std::vector<double> energy(len, 0.0);
  std::vector<Complex> buf(fft);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) buf[k] = spec(t, k);
    buf[0] = buf[0].real();
    buf[fft / 2] = buf[fft / 2].real();
    for (std::size_t k = 1; k < fft / 2; ++k) buf[fft - k] = std::conj(buf[k]);
    Fft(buf, true);
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < win; ++i) {
      acc[start + i] += window[i] * buf[i].real();
      energy[start + i] += window[i] * window[i];
    }
  }
  double peak = 0.0;
  for (double e : energy) {
    Require(e > 0.0, "istft: zero window overlap energy (window/hop mismatch)");
    peak = std::max(peak, e);
  }
  const double floor = 0.1 * peak;
  Waveform out{std::vector<double>(len), sample_rate};
  for (std::size_t i = 0; i < len; ++i) {
    out.samples[i] = acc[i] / std::max(energy[i], floor);
  }
  return out;
}

double HzToMel(double hz, MelScale scale) {
  switch (scale) {
    case MelScale::kHtk:
      return 2595.0 * std::log10(1.0 + hz / 700.0);
    case MelScale::kSlaney: {
      constexpr double f_sp = 200.0 / 3.0;
      constexpr double min_log_hz = 1000.0;
      constexpr double min_log_mel = min_log_hz / f_sp;
      const double logstep = std::log(6.4) / 27.0;
      if (hz < min_log_hz) return hz / f_sp;
      return min_log_mel + std::log(hz / min_log_hz) / logstep;
    }
  }
  return 0.0;
}

double MelToHz(double mel, MelScale scale) {
  switch (scale) {
    case MelScale::kHtk:
      return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    case MelScale::kSlaney: {
      constexpr double f_sp = 200.0 / 3.0;
      constexpr double min_log_hz = 1000.0;
      constexpr double min_log_mel = min_log_hz / f_sp;
      const double logstep = std::log(6.4) / 27.0;
      if (mel < min_log_mel) return mel * f_sp;
      return min_log_hz * std::exp(logstep * (mel - min_log_mel));
    }
  }
  return 0.0;
}

MelFilterbank MakeMelFilterbank(int sample_rate, int fft_size, int n_mels,
                                double f_min, double f_max, MelScale scale) {
  if (f_max <= 0.0) f_max = sample_rate / 2.0;
  Require(sample_rate > 0 && fft_size > 0 && n_mels > 0,
          "mel filterbank: sizes must be positive");
  Require(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0,
          "mel filterbank: need 0 <= f_min < f_max <= sample_rate/2");
  const std::size_t bins = static_cast<std::size_t>(fft_size) / 2 + 1;
  const double mel_lo = HzToMel(f_min, scale);
  const double mel_hi = HzToMel(f_max, scale);
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(
        mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (n_mels + 1), scale);
  }

  MelFilterbank fb;
  fb.weights = Matrix(static_cast<std::size_t>(n_mels), bins);
  fb.f_min = f_min;
  fb.f_max = f_max;
  fb.scale = scale;
  fb.center_hz.resize(static_cast<std::size_t>(n_mels));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    fb.center_hz[m] = mid;
    bool any = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      const double v = std::max(0.0, std::min(up, down));
      fb.weights(m, k) = v;
      any = any || v > 0.0;
    }
    Require(any, "mel filterbank: filter " + std::to_string(m) +
                     " covers no FFT bin (too many mels for this resolution)");
  }
  return fb;
}

Matrix PowerSpectrogram(const Waveform& w, const StftConfig& cfg) {
  const auto spec = Stft(Preemphasize(w, cfg.preemphasis_alpha), cfg);
  Matrix p(spec.frames, spec.bins);
  for (std::size_t i = 0; i < spec.data.size(); ++i) p.data[i] = std::norm(spec.data[i]);
  return p;
}

FeatureMatrix LogMel(const Waveform& w, const StftConfig& cfg,
                     const MelFilterbank& fb) {
  Require(fb.weights.cols == static_cast<std::size_t>(cfg.Bins()),
          "log_mel: filterbank does not match fft_size");
  const Matrix power = PowerSpectrogram(w, cfg);
  FeatureMatrix out;
  out.kind = FeatureKind::kLogMel;
  out.frame_rate = 1.0 / cfg.hop_s;
  out.data = Matrix(power.rows, fb.weights.rows);
  for (std::size_t t = 0; t < power.rows; ++t) {
    const auto p = power.Row(t);
    for (std::size_t m = 0; m < fb.weights.rows; ++m) {
      const auto wrow = fb.weights.Row(m);
      double e = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) e += wrow[k] * p[k];
      out.data(t, m) = std::log(std::max(e, kLogFloor));
    }
  }
  return out;
}

FeatureMatrix LinearMagnitude(const Waveform& w, const StftConfig& cfg) {
  const auto spec = Stft(Preemphasize(w, cfg.preemphasis_alpha), cfg);
  FeatureMatrix out;
  out.kind = FeatureKind::kLinearMag;
  out.frame_rate = 1.0 / cfg.hop_s;
  out.data = Matrix(spec.frames, spec.bins - 1);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 1; k < spec.bins; ++k) {
      out.data(t, k - 1) = std::abs(spec(t, k));
    }
  }
  return out;
}

std::vector<double> Dct2(std::span<const double> x, std::size_t n_coeffs) {
  const std::size_t n = x.size();
  Require(n_coeffs <= n, "dct: more coefficients than inputs");
  std::vector<double> out(n_coeffs);
  for (std::size_t k = 0; k < n_coeffs; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += x[i] * std::cos(kPi * (i + 0.5) * k / n);
    }
    out[k] = s * std::sqrt((k == 0 ? 1.0 : 2.0) / n);
  }
  return out;
}

FeatureMatrix MfccFromLogMel(const FeatureMatrix& log_mel, std::size_t n_coeffs) {
  Require(log_mel.kind == FeatureKind::kLogMel, "mfcc: expects log-mel input");
  Require(n_coeffs <= log_mel.dim(), "mfcc: n_coeffs exceeds n_mels");
  FeatureMatrix out;
  out.kind = FeatureKind::kMfcc;
  out.frame_rate = log_mel.frame_rate;
  out.data = Matrix(log_mel.frames(), n_coeffs);
  for (std::size_t t = 0; t < log_mel.frames(); ++t) {
    const auto c = Dct2(log_mel.data.Row(t), n_coeffs);
    std::copy(c.begin(), c.end(), out.data.Row(t).begin());
  }
  return out;
}

FeatureMatrix Mfcc(const Waveform& w, const StftConfig& cfg,
                   const MelFilterbank& fb, std::size_t n_coeffs) {
  Require(n_coeffs <= fb.weights.rows, "mfcc: n_coeffs exceeds n_mels");
  return MfccFromLogMel(LogMel(w, cfg, fb), n_coeffs);
}

void NormAccumulator::Add(const FeatureMatrix& f) {
  if (sum_.empty()) {
    sum_.assign(f.dim(), 0.0);
    sum_sq_.assign(f.dim(), 0.0);
  }
  Require(f.dim() == sum_.size(), "norm stats: dimension mismatch");
  for (std::size_t t = 0; t < f.frames(); ++t) {
    const auto row = f.data.Row(t);
    for (std::size_t d = 0; d < row.size(); ++d) {
      sum_[d] += row[d];
      sum_sq_[d] += row[d] * row[d];
    }
  }
  n_frames_ += f.frames();
}

void NormAccumulator::Merge(const NormAccumulator& other) {
  if (other.n_frames_ == 0 && other.sum_.empty()) return;
  if (sum_.empty()) {
    *this = other;
    return;
  }
  Require(other.sum_.size() == sum_.size(), "norm stats: dimension mismatch");
  for (std::size_t d = 0; d < sum_.size(); ++d) {
    sum_[d] += other.sum_[d];
    sum_sq_[d] += other.sum_sq_[d];
  }
  n_frames_ += other.n_frames_;
}

NormStats NormAccumulator::Finalize() const {
  Require(n_frames_ >= 2, "norm stats: need at least 2 frames");
  NormStats s;
  s.n_frames = n_frames_;
  s.sum = sum_;
  s.sum_sq = sum_sq_;
  s.mean.resize(sum_.size());
  s.std.resize(sum_.size());
  const double n = static_cast<double>(n_frames_);
  for (std::size_t d = 0; d < sum_.size(); ++d) {
    const double mean = sum_[d] / n;
    const double var = std::max(0.0, sum_sq_[d] / n - mean * mean);
    s.mean[d] = mean;
    s.std[d] = std::max(std::sqrt(var), kStdFloor);
  }
  return s;
}

NormStats EstimateNormStats(std::span<const FeatureMatrix> corpus) {
  NormAccumulator acc;
  for (const auto& f : corpus) acc.Add(f);
  return acc.Finalize();
}

FeatureMatrix ApplyNorm(const FeatureMatrix& f, const NormStats& s) {
  Require(f.dim() == s.dim(), "apply_norm: dimension mismatch (" +
                                  std::to_string(f.dim()) + " vs " +
                                  std::to_string(s.dim()) + ")",
          ErrorCode::kShapeMismatch);
  FeatureMatrix out = f;
  for (std::size_t t = 0; t < f.frames(); ++t) {
    auto row = out.data.Row(t);
    for (std::size_t d = 0; d < row.size(); ++d) {
      row[d] = (row[d] - s.mean[d]) / s.std[d];
    }
  }
  return out;
}

FeatureMatrix Denormalize(const FeatureMatrix& f, const NormStats& s) {
  Require(f.dim() == s.dim(), "denormalize: dimension mismatch",
          ErrorCode::kShapeMismatch);
  FeatureMatrix out = f;
  for (std::size_t t = 0; t < f.frames(); ++t) {
    auto row = out.data.Row(t);
    for (std::size_t d = 0; d < row.size(); ++d) {
      row[d] = row[d] * s.std[d] + s.mean[d];
    }
  }
  return out;
}

}  // namespace synthasr::dsp
