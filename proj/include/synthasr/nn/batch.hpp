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

#include <functional>

#include "synthasr/nn/layers.hpp"
#include "synthasr/nn/tensor.hpp"

namespace synthasr::nn {

struct BatchResult {
  double loss = 0.0;      // mean over contributing examples
  Gradients grads;        // mean over contributing examples
  std::size_t used = 0;   // examples whose loss was defined
};

// Per-example loss. Returning an invalid Var skips the example.
using ExampleLoss = std::function<Var(Ctx&, std::size_t index)>;

// Evaluates and differentiates each example on its own tape, possibly in
// parallel, then reduces in index order so the result does not depend on
// the worker count.
BatchResult ComputeBatch(ParameterStore& params, std::size_t n, const ExampleLoss& loss,
                         int workers, bool with_grad = true);

}  // namespace synthasr::nn
