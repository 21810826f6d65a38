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

#include "synthasr/nn/tensor.hpp"

namespace synthasr::nn {

// Named-parameter archive:
//   "SNNC" | u32 version | u32 meta_len | meta (UTF-8, usually JSON)
//   | u32 count | count x { u32 name_len | name | u32 ndim | u32 dims[ndim]
//   | float32 data[prod(dims)] }
// All integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string metadata;
  ParameterStore tensors;
};

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Copies values for every parameter of `dst` from `src`; names and shapes
// must match. Extra tensors in `src` are ignored.
void LoadInto(ParameterStore& dst, const ParameterStore& src);

}  // namespace synthasr::nn
