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

#include "synthasr/nn/batch.hpp"

#include <optional>
#include <vector>

#include "synthasr/parallel.hpp"

namespace synthasr::nn {

BatchResult ComputeBatch(ParameterStore& params, std::size_t n, const ExampleLoss& loss,
                         int workers, bool with_grad) {
  std::vector<std::optional<double>> losses(n);
  std::vector<Gradients> grads(n);
  ParallelFor(n, workers, [&](std::size_t i) {
    Tape tape(with_grad);
    Ctx ctx{tape, params};
    const Var l = loss(ctx, i);
    if (!l.valid()) return;
    losses[i] = l.item();
    if (with_grad) {
      tape.Backward(l);
      grads[i] = tape.ParamGradients();
    }
  });
  BatchResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!losses[i]) continue;
    out.loss += *losses[i];
    if (with_grad) out.grads.Accumulate(grads[i]);
    ++out.used;
  }
  if (out.used > 0) {
    out.loss /= static_cast<double>(out.used);
    out.grads.Scale(1.0 / static_cast<double>(out.used));
  }
  return out;
}

}  // namespace synthasr::nn
