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

#include <string>
#include <vector>

#include "synthasr/nn/layers.hpp"

namespace synthasr::tts {

// Transformer-style interleaved encoding: even dims sin(j / 10000^(2i/d)),
// odd dims the matching cos.
std::vector<double> PosEnc(std::size_t j, std::size_t dim = 64);
// Rows 0..len-1 stacked into a len x dim matrix.
Matrix PosEncTable(std::size_t len, std::size_t dim = 64);

struct AttentionConfig {
  std::size_t query_dim = 256;    // decoder state size
  std::size_t memory_dim = 384;   // encoder state size
  std::size_t att_dim = 128;
  std::size_t posenc_dim = 64;    // 0 disables the positional term
  std::size_t feedback_filters = 32;
  // Convolution width over the accumulated alignment. 0 feeds the
  // accumulated weight straight into W_gamma (a single feedback channel).
  std::size_t feedback_width = 31;
  // Value used for the positions before the first encoder state.
  double left_pad_value = 1.0;
};

// Additive attention with convolutional weight feedback:
//   gamma = conv(accum), e_j = v^T tanh(W_s s + W_h h_j + W_p posenc(j) + W_gamma gamma_j)
// None of the projections carry a bias.
struct Attention {
  AttentionConfig cfg;
  std::string w_s, w_h, w_p, w_gamma, v, feedback;

  static Attention Create(nn::ParameterStore& ps, const std::string& name,
                          const AttentionConfig& cfg, Rng& rng);

  // Per-utterance projections that do not depend on the decoder state.
  struct Memory {
    nn::Var states;  // [J, memory_dim]
    nn::Var keys;    // [J, att_dim] = W_h h_j + W_p posenc(j)
  };
  Memory Prepare(nn::Ctx& ctx, nn::Var states) const;

  // Feedback features for an accumulated alignment column [J, 1].
  nn::Var Feedback(nn::Ctx& ctx, nn::Var accum) const;

  struct Step {
    nn::Var context;  // [1, memory_dim]
    nn::Var weights;  // [1, J]
    nn::Var accum;    // [J, 1], previous accum plus weights
  };
  Step Attend(nn::Ctx& ctx, const Memory& mem, nn::Var query, nn::Var accum) const;

  std::size_t feedback_channels() const {
    return cfg.feedback_width == 0 ? 1 : cfg.feedback_filters;
  }
};

}  // namespace synthasr::tts
