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
#include <vector>

#include "synthasr/nn/tensor.hpp"

namespace synthasr::nn {

// All ops treat tensors as row-major. 1-D values are [1, n] row vectors.
// Shape errors throw synthasr::Error(kShapeMismatch) naming the op.

Var MatMul(Var a, Var b);    // [m,k] x [k,n]
Var MatMulNT(Var a, Var b);  // [m,k] x [n,k]^T
Var Add(Var a, Var b);
Var AddRow(Var a, Var row);  // broadcasts a [1,n] row over [m,n]
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double c);
Var AddScalar(Var a, double c);

Var Sigmoid(Var a);
Var Tanh(Var a);
Var Relu(Var a);
Var Exp(Var a);
Var Log(Var a);

Var Softmax(Var a);  // per row
Var LogSoftmax(Var a);

Var ConcatCols(std::span<const Var> parts);
Var ConcatRows(std::span<const Var> parts);
Var SliceCols(Var a, std::size_t begin, std::size_t end);
Var SliceRows(Var a, std::size_t begin, std::size_t end);
Var Reshape(Var a, Shape shape);
Var Transpose(Var a);
Var GatherRows(Var table, std::span<const int> ids);

Var Sum(Var a);
Var Mean(Var a);

// x: [T, Cin]; w: [Cout, Cin*K] laid out channel-major (ci*K + k);
// b: [1, Cout] or invalid. The input is extended by pad_left rows of
// left_value and pad_right rows of right_value.
Var Conv1d(Var x, Var w, Var b, std::size_t pad_left, std::size_t pad_right,
           double left_value = 0.0, double right_value = 0.0);

// x: [C, H, W]; w: [Cout, C*k*k]; zero padding.
Var Conv2d(Var x, Var w, Var b, std::size_t kernel, std::size_t stride, std::size_t pad);

// Max over consecutive windows of `factor` rows; a short last window is
// kept (ceil semantics).
Var MaxPoolTime(Var x, std::size_t factor);

// Splits k consecutive rows into one: [T, F] -> [T/k, k*F].
Var StackFrames(Var x, std::size_t k);

// Fused LSTM nonlinearity. gates: [m, 4H] in (input, forget, cell, output)
// order; c_prev: [m, H]. Returns [m, 2H] = [h | c].
Var LstmGates(Var gates, Var c_prev);

// Mean absolute error over all elements.
Var L1Loss(Var pred, Var target);
// Mean binary cross-entropy; predictions are clamped into (0, 1).
Var BceLoss(Var pred, Var target);
// Mean over rows of -log softmax(logits)[label].
Var CrossEntropy(Var logits, std::span<const int> labels);
// -log P(labels | log_probs) summed over the utterance. log_probs is
// [T, V+1] with the blank at `blank`. Throws kInfeasible when T is too short.
Var CtcLoss(Var log_probs, std::span<const int> labels, int blank);

// Minimum number of frames a CTC alignment of `labels` needs.
std::size_t CtcMinFrames(std::span<const int> labels);

}  // namespace synthasr::nn
