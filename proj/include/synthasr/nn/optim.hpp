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

#include <map>
#include <string>
#include <vector>

#include "synthasr/nn/tensor.hpp"

namespace synthasr::nn {

enum class UpdateRule { kSgd, kAdam };

struct OptimizerConfig {
  UpdateRule rule = UpdateRule::kSgd;
  double learning_rate = 0.1;
  // Gradients are rescaled when their global norm exceeds this; <= 0
  // disables clipping.
  double clip_norm = 5.0;
  // Step decay: lr * decay_factor^(steps / decay_every). 0 disables.
  long decay_every = 0;
  double decay_factor = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Keep parameters and accumulators float-representable.
  bool single_precision = true;
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg = {});

  const OptimizerConfig& config() const { return cfg_; }
  double learning_rate() const;
  long steps() const { return steps_; }

  // Clips, updates every parameter that has a gradient, advances the
  // schedule.
  void Step(ParameterStore& params, const Gradients& grads);

  // Restarts the schedule at the initial learning rate and clears the
  // moment estimates.
  void Reset();

  // Serialized accumulators and counters for checkpointing.
  ParameterStore ExportState() const;
  void ImportState(const ParameterStore& state);

 private:
  OptimizerConfig cfg_;
  long steps_ = 0;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace synthasr::nn
