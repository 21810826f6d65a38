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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "synthasr/nn/batch.hpp"
#include "synthasr/nn/optim.hpp"

namespace synthasr::nn {

struct TrainerConfig {
  OptimizerConfig optim;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  int workers = 1;
};

// Minibatch loop over an indexed example set. Batch composition depends
// only on (seed, epoch), so a run resumed from a saved state continues
// exactly where it stopped.
class Trainer {
 public:
  Trainer(ParameterStore& params, TrainerConfig cfg);

  // Shuffled batches of [0, n) for the current epoch.
  std::vector<std::vector<std::size_t>> EpochBatches(std::size_t n) const;

  // One optimizer update on the given examples; returns the batch loss.
  // Batches where no example produced a loss leave the model unchanged.
  double Step(std::span<const std::size_t> batch, const ExampleLoss& loss);

  // Runs the remaining batches of the current epoch, then advances the
  // epoch counter. Returns the mean batch loss.
  double RunEpoch(std::size_t n, const ExampleLoss& loss);

  // Mean loss over [0, n) without updating anything.
  double Evaluate(std::size_t n, const ExampleLoss& loss) const;

  // Learning-rate schedule restart (moments cleared).
  void ResetOptimizer() { opt_.Reset(); }

  long epoch() const { return epoch_; }
  std::size_t batch_in_epoch() const { return batch_; }
  const Optimizer& optimizer() const { return opt_; }
  ParameterStore& params() { return params_; }

  // Parameters, optimizer accumulators and loop position in one archive.
  void Save(const std::filesystem::path& path, const std::string& model_meta) const;
  // Restores a state written by Save; returns the model metadata.
  std::string Load(const std::filesystem::path& path);

 private:
  ParameterStore& params_;
  TrainerConfig cfg_;
  Optimizer opt_;
  long epoch_ = 0;
  std::size_t batch_ = 0;
};

}  // namespace synthasr::nn
