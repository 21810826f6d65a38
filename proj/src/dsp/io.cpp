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

#include "synthasr/dsp/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "synthasr/error.hpp"

namespace synthasr::dsp {

namespace {

void PutU16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

void PutU32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void PutF32(std::ostream& os, float f) { PutU32(os, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t GetU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t GetU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::vector<unsigned char> Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct WavLayout {
  WavInfo info;
  std::size_t data_offset = 0;
};

WavLayout ParseWavHeader(const std::vector<unsigned char>& bytes,
                         const std::string& name) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kFormat, name + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  WavLayout layout;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = GetU32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || pos + 8 + size > bytes.size()) fail("truncated fmt chunk");
      const std::uint16_t format = GetU16(chunk + 8);
      const std::uint16_t channels = GetU16(chunk + 10);
      const std::uint32_t rate = GetU32(chunk + 12);
      const std::uint16_t bits = GetU16(chunk + 22);
      if (format != 1 || channels != 1 || bits != 16) {
        fail("only 16-bit PCM mono is supported");
      }
      layout.info.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) fail("data chunk before fmt chunk");
      const std::size_t avail = bytes.size() - (pos + 8);
      layout.info.num_samples = std::min<std::size_t>(size, avail) / 2;
      layout.data_offset = pos + 8;
      return layout;
    }
    pos += 8 + size + (size & 1);
  }
  fail("missing data chunk");
  return layout;
}

}  // namespace

Waveform ReadWav(const std::filesystem::path& path) {
  const auto bytes = Slurp(path);
  const auto layout = ParseWavHeader(bytes, path.string());
  Waveform w;
  w.sample_rate = layout.info.sample_rate;
  w.samples.resize(layout.info.num_samples);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const auto raw = static_cast<std::int16_t>(GetU16(bytes.data() + layout.data_offset + 2 * i));
    w.samples[i] = raw / 32768.0;
  }
  return w;
}

WavInfo ReadWavInfo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> head(4096);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  in.clear();
  in.seekg(0, std::ios::end);
  const auto total = static_cast<std::size_t>(in.tellg());
  auto layout = ParseWavHeader(head, path.string());
  // The header buffer may not contain all the data; recompute from the
  // declared chunk size bounded by the real file size.
  const std::uint32_t declared = GetU32(head.data() + layout.data_offset - 4);
  layout.info.num_samples =
      std::min<std::size_t>(declared, total - layout.data_offset) / 2;
  return layout.info;
}

void WriteWav(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  PutU32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(w.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(w.sample_rate * 2));
  PutU16(out, 2);
  PutU16(out, 16);
  out.write("data", 4);
  PutU32(out, data_bytes);
  for (double s : w.samples) {
    const double q = std::clamp(std::round(s * 32767.0), -32768.0, 32767.0);
    PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Waveform PeakNormalize(const Waveform& w, double peak) {
  double m = 0.0;
  for (double s : w.samples) m = std::max(m, std::abs(s));
  if (m == 0.0) return w;
  Waveform out = w;
  for (double& s : out.samples) s *= peak / m;
  return out;
}

void WriteFeatures(const std::filesystem::path& path, const FeatureMatrix& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write("FEA1", 4);
  const char kind = static_cast<char>(f.kind);
  out.write(&kind, 1);
  PutU32(out, static_cast<std::uint32_t>(f.frames()));
  PutU32(out, static_cast<std::uint32_t>(f.dim()));
  PutF32(out, static_cast<float>(f.frame_rate));
  for (double v : f.data.data) PutF32(out, static_cast<float>(v));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

FeatureMatrix ReadFeatures(const std::filesystem::path& path) {
  const auto bytes = Slurp(path);
  constexpr std::size_t kHeader = 4 + 1 + 4 + 4 + 4;
  if (bytes.size() < kHeader || std::memcmp(bytes.data(), "FEA1", 4) != 0) {
    throw Error(ErrorCode::kFormat, path.string() + ": not a FEA1 feature file");
  }
  FeatureMatrix f;
  const auto kind = bytes[4];
  if (kind > 2) throw Error(ErrorCode::kFormat, path.string() + ": bad feature kind");
  f.kind = static_cast<FeatureKind>(kind);
  const std::size_t rows = GetU32(bytes.data() + 5);
  const std::size_t cols = GetU32(bytes.data() + 9);
  f.frame_rate = std::bit_cast<float>(GetU32(bytes.data() + 13));
  if (bytes.size() != kHeader + rows * cols * 4) {
    throw Error(ErrorCode::kFormat, path.string() + ": size does not match header");
  }
  f.data = Matrix(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    f.data.data[i] = std::bit_cast<float>(GetU32(bytes.data() + kHeader + 4 * i));
  }
  return f;
}

void WriteNormStats(const std::filesystem::path& path, const NormStats& s) {
  nlohmann::json j;
  j["n_frames"] = s.n_frames;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["sum"] = s.sum;
  j["sum_sq"] = s.sum_sq;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump() << "\n";
}

NormStats ReadNormStats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  NormStats s;
  try {
    const auto j = nlohmann::json::parse(in);
    s.n_frames = j.at("n_frames").get<std::size_t>();
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    s.sum = j.value("sum", std::vector<double>{});
    s.sum_sq = j.value("sum_sq", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  Require(s.mean.size() == s.std.size(), path.string() + ": mean/std size mismatch",
          ErrorCode::kFormat);
  return s;
}

}  // namespace synthasr::dsp
