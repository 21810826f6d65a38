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

#include "synthasr/nn/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "synthasr/error.hpp"
#include "synthasr/nn/checkpoint.hpp"
#include "synthasr/rng.hpp"

namespace synthasr::nn {

Trainer::Trainer(ParameterStore& params, TrainerConfig cfg)
    : params_(params), cfg_(cfg), opt_(cfg.optim) {
  Require(cfg_.batch_size >= 1, "trainer: batch size must be >= 1");
}

std::vector<std::vector<std::size_t>> Trainer::EpochBatches(std::size_t n) const {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(DeriveSeed(cfg_.seed, static_cast<std::uint64_t>(epoch_)));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.UniformInt(0, static_cast<std::int64_t>(i) - 1))]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += cfg_.batch_size) {
    batches.emplace_back(order.begin() + i, order.begin() + std::min(n, i + cfg_.batch_size));
  }
  return batches;
}

double Trainer::Step(std::span<const std::size_t> batch, const ExampleLoss& loss) {
  auto result = ComputeBatch(
      params_, batch.size(), [&](Ctx& ctx, std::size_t i) { return loss(ctx, batch[i]); },
      cfg_.workers);
  if (result.used == 0) return 0.0;
  opt_.Step(params_, result.grads);
  return result.loss;
}

double Trainer::RunEpoch(std::size_t n, const ExampleLoss& loss) {
  Require(n > 0, "trainer: no training examples");
  const auto batches = EpochBatches(n);
  double total = 0.0;
  std::size_t count = 0;
  for (; batch_ < batches.size(); ++batch_) {
    total += Step(batches[batch_], loss);
    ++count;
  }
  batch_ = 0;
  ++epoch_;
  return count ? total / static_cast<double>(count) : 0.0;
}

double Trainer::Evaluate(std::size_t n, const ExampleLoss& loss) const {
  return ComputeBatch(params_, n, loss, cfg_.workers, false).loss;
}

void Trainer::Save(const std::filesystem::path& path, const std::string& model_meta) const {
  Checkpoint ckpt;
  nlohmann::json meta;
  meta["model"] = model_meta;
  meta["epoch"] = epoch_;
  meta["batch"] = batch_;
  ckpt.metadata = meta.dump();
  ckpt.tensors = params_;
  const auto state = opt_.ExportState();
  for (const auto* p : state.All()) ckpt.tensors.Add(p->name, p->shape).value = p->value;
  SaveCheckpoint(path, ckpt);
}

std::string Trainer::Load(const std::filesystem::path& path) {
  const auto ckpt = LoadCheckpoint(path);
  LoadInto(params_, ckpt.tensors);
  ParameterStore state;
  for (const auto* p : ckpt.tensors.All()) {
    if (p->name.rfind("optim/", 0) == 0) state.Add(p->name, p->shape).value = p->value;
  }
  opt_.ImportState(state);
  try {
    const auto meta = nlohmann::json::parse(ckpt.metadata);
    epoch_ = meta.at("epoch").get<long>();
    batch_ = meta.at("batch").get<std::size_t>();
    return meta.at("model").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, "trainer state " + path.string() + ": " + e.what());
  }
}

}  // namespace synthasr::nn
