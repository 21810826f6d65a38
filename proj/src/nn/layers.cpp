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

#include "synthasr/nn/layers.hpp"

#include <cmath>
#include <vector>

#include "synthasr/error.hpp"

namespace synthasr::nn {

Linear Linear::Create(ParameterStore& ps, const std::string& name, std::size_t in,
                      std::size_t out, Rng& rng, bool bias) {
  Linear l;
  l.in = in;
  l.out = out;
  l.w = name + "/w";
  InitGlorot(ps.Add(l.w, {out, in}), in, out, rng);
  if (bias) {
    l.b = name + "/b";
    ps.Add(l.b, {1, out});
  }
  return l;
}

Var Linear::Forward(Ctx& ctx, Var x) const {
  Var y = MatMulNT(x, ctx.P(w));
  return b.empty() ? y : AddRow(y, ctx.P(b));
}

Embedding Embedding::Create(ParameterStore& ps, const std::string& name, std::size_t vocab,
                            std::size_t dim, Rng& rng) {
  Embedding e;
  e.table = name + "/table";
  e.vocab = vocab;
  e.dim = dim;
  InitUniform(ps.Add(e.table, {vocab, dim}), std::sqrt(3.0 / static_cast<double>(dim)), rng);
  return e;
}

Var Embedding::Forward(Ctx& ctx, std::span<const int> ids) const {
  return GatherRows(ctx.P(table), ids);
}

Conv1dLayer Conv1dLayer::Create(ParameterStore& ps, const std::string& name, std::size_t in,
                                std::size_t out, std::size_t width, Rng& rng, bool bias) {
  Conv1dLayer c;
  c.in = in;
  c.out = out;
  c.width = width;
  c.w = name + "/w";
  InitGlorot(ps.Add(c.w, {out, in * width}), in * width, out * width, rng);
  if (bias) {
    c.b = name + "/b";
    ps.Add(c.b, {1, out});
  }
  return c;
}

Var Conv1dLayer::Forward(Ctx& ctx, Var x) const {
  const std::size_t left = (width - 1) / 2;
  return Forward(ctx, x, left, width - 1 - left, 0.0, 0.0);
}

Var Conv1dLayer::Forward(Ctx& ctx, Var x, std::size_t pad_left, std::size_t pad_right,
                         double left_value, double right_value) const {
  Var bias = b.empty() ? Var() : ctx.P(b);
  return Conv1d(x, ctx.P(w), bias, pad_left, pad_right, left_value, right_value);
}

Conv2dLayer Conv2dLayer::Create(ParameterStore& ps, const std::string& name, std::size_t in,
                                std::size_t out, std::size_t kernel, std::size_t stride,
                                std::size_t pad, Rng& rng) {
  Conv2dLayer c;
  c.in = in;
  c.out = out;
  c.kernel = kernel;
  c.stride = stride;
  c.pad = pad;
  c.w = name + "/w";
  c.b = name + "/b";
  InitGlorot(ps.Add(c.w, {out, in * kernel * kernel}), in * kernel * kernel,
             out * kernel * kernel, rng);
  ps.Add(c.b, {1, out});
  return c;
}

Var Conv2dLayer::Forward(Ctx& ctx, Var x) const {
  return Conv2d(x, ctx.P(w), ctx.P(b), kernel, stride, pad);
}

LstmCell LstmCell::Create(ParameterStore& ps, const std::string& name, std::size_t in,
                          std::size_t hidden, Rng& rng) {
  LstmCell c;
  c.in = in;
  c.hidden = hidden;
  c.w_ih = name + "/w_ih";
  c.w_hh = name + "/w_hh";
  c.b = name + "/b";
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
  InitUniform(ps.Add(c.w_ih, {4 * hidden, in}), limit, rng);
  InitUniform(ps.Add(c.w_hh, {4 * hidden, hidden}), limit, rng);
  ps.Add(c.b, {1, 4 * hidden});
  return c;
}

LstmState LstmCell::Initial(Tape& tape) const {
  return {tape.Zeros({1, hidden}), tape.Zeros({1, hidden})};
}

Var LstmCell::InputGates(Ctx& ctx, Var x) const {
  return AddRow(MatMulNT(x, ctx.P(w_ih)), ctx.P(b));
}

LstmState LstmCell::StepGates(Ctx& ctx, Var input_gates_row, const LstmState& prev) const {
  Var gates = Add(input_gates_row, MatMulNT(prev.h, ctx.P(w_hh)));
  Var hc = LstmGates(gates, prev.c);
  return {SliceCols(hc, 0, hidden), SliceCols(hc, hidden, 2 * hidden)};
}

LstmState LstmCell::Step(Ctx& ctx, Var x_row, const LstmState& prev) const {
  return StepGates(ctx, InputGates(ctx, x_row), prev);
}

Var LstmCell::Sequence(Ctx& ctx, Var x, bool reverse, LstmState* last) const {
  const std::size_t len = x.rows();
  Require(len > 0, "lstm: empty input sequence");
  if (x.cols() != in) {
    throw Error(ErrorCode::kShapeMismatch, "lstm: input width " + std::to_string(x.cols()) +
                                               " but cell expects " + std::to_string(in));
  }
  Var gates = InputGates(ctx, x);
  std::vector<Var> outs(len);
  LstmState state = Initial(ctx.tape);
  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t t = reverse ? len - 1 - k : k;
    state = StepGates(ctx, SliceRows(gates, t, t + 1), state);
    outs[t] = state.h;
  }
  if (last != nullptr) *last = state;
  return ConcatRows(outs);
}

Blstm Blstm::Create(ParameterStore& ps, const std::string& name, std::size_t in,
                    std::size_t hidden, Rng& rng) {
  return {LstmCell::Create(ps, name + "/fwd", in, hidden, rng),
          LstmCell::Create(ps, name + "/bwd", in, hidden, rng)};
}

Var Blstm::Forward(Ctx& ctx, Var x) const {
  const Var parts[] = {fwd.Sequence(ctx, x, false), bwd.Sequence(ctx, x, true)};
  return ConcatCols(parts);
}

}  // namespace synthasr::nn
