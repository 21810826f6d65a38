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

#include "synthasr/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "synthasr/error.hpp"

namespace synthasr::nn {

namespace {

void PutU32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

class Reader {
 public:
  Reader(std::vector<unsigned char> bytes, std::string name)
      : bytes_(std::move(bytes)), name_(std::move(name)) {}

  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string Str(std::size_t n) {
    Need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::kFormat, name_ + ": truncated checkpoint");
  }
  std::vector<unsigned char> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write("SNNC", 4);
  PutU32(out, kCheckpointVersion);
  PutU32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  out.write(ckpt.metadata.data(), static_cast<std::streamsize>(ckpt.metadata.size()));
  const auto all = ckpt.tensors.All();
  PutU32(out, static_cast<std::uint32_t>(all.size()));
  for (const Parameter* p : all) {
    PutU32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    PutU32(out, static_cast<std::uint32_t>(p->shape.size()));
    for (auto d : p->shape) PutU32(out, static_cast<std::uint32_t>(d));
    for (double v : p->value) PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  Reader r({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}, path.string());
  if (r.Str(4) != "SNNC") throw Error(ErrorCode::kFormat, path.string() + ": not a checkpoint");
  const auto version = r.U32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kFormat,
                path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.metadata = r.Str(r.U32());
  const auto count = r.U32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.Str(r.U32());
    Shape shape(r.U32());
    for (auto& d : shape) d = r.U32();
    auto& p = ckpt.tensors.Add(name, shape);
    for (double& v : p.value) v = static_cast<double>(std::bit_cast<float>(r.U32()));
  }
  if (!r.done()) throw Error(ErrorCode::kFormat, path.string() + ": trailing bytes");
  return ckpt;
}

void LoadInto(ParameterStore& dst, const ParameterStore& src) {
  for (Parameter* p : dst.All()) {
    Require(src.Has(p->name), "checkpoint is missing parameter '" + p->name + "'",
            ErrorCode::kFormat);
    const Parameter& s = src.Get(p->name);
    Require(s.shape == p->shape,
            "checkpoint shape mismatch for '" + p->name + "': " + ShapeString(s.shape) + " vs " +
                ShapeString(p->shape),
            ErrorCode::kFormat);
    p->value = s.value;
  }
}

}  // namespace synthasr::nn
