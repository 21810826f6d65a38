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

#include "synthasr/tts/attention.hpp"

#include <cmath>

#include "synthasr/error.hpp"

namespace synthasr::tts {

using namespace nn;

std::vector<double> PosEnc(std::size_t j, std::size_t dim) {
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; i += 2) {
    const double rate = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
    out[i] = std::sin(static_cast<double>(j) * rate);
    if (i + 1 < dim) out[i + 1] = std::cos(static_cast<double>(j) * rate);
  }
  return out;
}

Matrix PosEncTable(std::size_t len, std::size_t dim) {
  Matrix m(len, dim);
  for (std::size_t j = 0; j < len; ++j) {
    const auto row = PosEnc(j, dim);
    std::copy(row.begin(), row.end(), m.Row(j).begin());
  }
  return m;
}

Attention Attention::Create(ParameterStore& ps, const std::string& name,
                            const AttentionConfig& cfg, Rng& rng) {
  Require(cfg.att_dim > 0 && cfg.query_dim > 0 && cfg.memory_dim > 0,
          "attention: dimensions must be positive");
  Require(cfg.feedback_width == 0 || cfg.feedback_width % 2 == 1,
          "attention: feedback width must be odd");
  Attention a;
  a.cfg = cfg;
  auto add = [&](std::string& field, const std::string& suffix, std::size_t rows, std::size_t cols) {
    field = name + "/" + suffix;
    InitGlorot(ps.Add(field, {rows, cols}), cols, rows, rng);
  };
  add(a.w_s, "w_s", cfg.att_dim, cfg.query_dim);
  add(a.w_h, "w_h", cfg.att_dim, cfg.memory_dim);
  if (cfg.posenc_dim > 0) add(a.w_p, "w_p", cfg.att_dim, cfg.posenc_dim);
  add(a.w_gamma, "w_gamma", cfg.att_dim, a.feedback_channels());
  add(a.v, "v", 1, cfg.att_dim);
  if (cfg.feedback_width > 0) add(a.feedback, "feedback", cfg.feedback_filters, cfg.feedback_width);
  return a;
}

Attention::Memory Attention::Prepare(Ctx& ctx, Var states) const {
  if (states.cols() != cfg.memory_dim) {
    throw Error(ErrorCode::kShapeMismatch, "attention: memory width " + std::to_string(states.cols()) +
                                               " but expected " + std::to_string(cfg.memory_dim));
  }
  Require(states.rows() > 0, "attention: empty memory");
  Var keys = MatMulNT(states, ctx.P(w_h));
  if (cfg.posenc_dim > 0) {
    const Var pe = ctx.tape.Constant(PosEncTable(states.rows(), cfg.posenc_dim));
    keys = Add(keys, MatMulNT(pe, ctx.P(w_p)));
  }
  return {states, keys};
}

Var Attention::Feedback(Ctx& ctx, Var accum) const {
  if (cfg.feedback_width == 0) return accum;
  const std::size_t half = cfg.feedback_width / 2;
  return Conv1d(accum, ctx.P(feedback), Var(), half, half, cfg.left_pad_value, 0.0);
}

Attention::Step Attention::Attend(Ctx& ctx, const Memory& mem, Var query, Var accum) const {
  const std::size_t len = mem.states.rows();
  if (accum.rows() != len || accum.cols() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "attention: accumulated alignment has shape " +
                                               ShapeString(accum.shape()) + " but memory length is " +
                                               std::to_string(len));
  }
  const Var gamma = MatMulNT(Feedback(ctx, accum), ctx.P(w_gamma));
  const Var hidden = Tanh(AddRow(Add(mem.keys, gamma), MatMulNT(query, ctx.P(w_s))));
  const Var energies = MatMulNT(ctx.P(v), hidden);  // [1, J]
  const Var weights = Softmax(energies);
  return {MatMul(weights, mem.states), weights, Add(accum, Transpose(weights))};
}

}  // namespace synthasr::tts
