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

#include <span>
#include <string>

#include "synthasr/nn/ops.hpp"
#include "synthasr/nn/tensor.hpp"
#include "synthasr/rng.hpp"

namespace synthasr::nn {

// Binds a tape to the parameter store a model owns.
struct Ctx {
  Tape& tape;
  ParameterStore& params;

  Var P(const std::string& name) { return tape.Param(params.Get(name)); }
};

// Layers only remember parameter names, so a model stays valid when its
// ParameterStore is copied.
struct Linear {
  std::string w;
  std::string b;
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear Create(ParameterStore& ps, const std::string& name, std::size_t in,
                       std::size_t out, Rng& rng, bool bias = true);
  Var Forward(Ctx& ctx, Var x) const;
};

struct Embedding {
  std::string table;
  std::size_t vocab = 0;
  std::size_t dim = 0;

  static Embedding Create(ParameterStore& ps, const std::string& name, std::size_t vocab,
                          std::size_t dim, Rng& rng);
  Var Forward(Ctx& ctx, std::span<const int> ids) const;
};

struct Conv1dLayer {
  std::string w;
  std::string b;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t width = 0;

  static Conv1dLayer Create(ParameterStore& ps, const std::string& name, std::size_t in,
                            std::size_t out, std::size_t width, Rng& rng, bool bias = true);
  // "Same" length output with zero padding.
  Var Forward(Ctx& ctx, Var x) const;
  Var Forward(Ctx& ctx, Var x, std::size_t pad_left, std::size_t pad_right, double left_value,
              double right_value) const;
};

struct Conv2dLayer {
  std::string w;
  std::string b;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t pad = 1;

  static Conv2dLayer Create(ParameterStore& ps, const std::string& name, std::size_t in,
                            std::size_t out, std::size_t kernel, std::size_t stride,
                            std::size_t pad, Rng& rng);
  Var Forward(Ctx& ctx, Var x) const;
};

struct LstmState {
  Var h;
  Var c;
};

// Gate order: input, forget, cell, output.
struct LstmCell {
  std::string w_ih;
  std::string w_hh;
  std::string b;
  std::size_t in = 0;
  std::size_t hidden = 0;

  static LstmCell Create(ParameterStore& ps, const std::string& name, std::size_t in,
                         std::size_t hidden, Rng& rng);
  LstmState Initial(Tape& tape) const;
  // x: [T, in] -> [T, 4H] input contribution to the gates, bias included.
  Var InputGates(Ctx& ctx, Var x) const;
  LstmState StepGates(Ctx& ctx, Var input_gates_row, const LstmState& prev) const;
  LstmState Step(Ctx& ctx, Var x_row, const LstmState& prev) const;
  // [T, in] -> [T, H]; `reverse` runs right to left but keeps time order in
  // the output.
  Var Sequence(Ctx& ctx, Var x, bool reverse = false, LstmState* last = nullptr) const;
};

struct Blstm {
  LstmCell fwd;
  LstmCell bwd;

  static Blstm Create(ParameterStore& ps, const std::string& name, std::size_t in,
                      std::size_t hidden, Rng& rng);
  // [T, in] -> [T, 2H], forward states first.
  Var Forward(Ctx& ctx, Var x) const;
  std::size_t out_dim() const { return 2 * fwd.hidden; }
};

}  // namespace synthasr::nn
