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

#include "json.hpp"
#include "synthasr/asr/asr.hpp"
#include "synthasr/augment.hpp"
#include "synthasr/dsp/dsp.hpp"
#include "synthasr/nn/optim.hpp"
#include "synthasr/tts/tts.hpp"

namespace synthasr::pipeline {

struct CorporaConfig {
  // When set, a toy corpus is generated into <work_dir>/corpus and the
  // paths below are filled in from it.
  bool generate_toy = false;
  std::string train;
  std::string dev_clean;
  std::string dev_other;
  std::string test_clean;
  std::string test_other;
  std::string text;  // text-only lines for synthesis and the LM
};

struct FeatureConfig {
  dsp::StftConfig stft;
  std::size_t n_mels = 80;
  std::size_t n_mfcc = 40;
  double f_min = 60.0;
};

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 4;
  nn::OptimizerConfig optim;
};

struct TtsStageConfig {
  tts::TtsConfig model;
  TrainConfig train;
  std::size_t max_steps = 400;
  std::size_t griffin_lim_iters = 1;
  bool deemphasize = false;  // inverse preemphasis filter after Griffin-Lim
};

struct Mel2LinStageConfig {
  tts::Mel2LinConfig model;
  TrainConfig train;
};

struct AsrStageConfig {
  asr::AsrConfig model;  // vocab is filled in from the BPE model
  std::size_t bpe_merges = 40;
  std::size_t batch_size = 4;
  nn::OptimizerConfig optim;
  std::size_t beam_size = 4;
  std::size_t max_len = 40;
};

struct ScheduleConfig {
  std::size_t phase1_checkpoints = 8;
  double phase1_epochs = 4.0;
  std::size_t phase2_checkpoints = 17;
  bool lr_reset = true;
};

struct MixPolicy {
  double real = 3.0;
  double synthetic = 2.0;
  void Validate() const;
};

// One row of the result table.
struct Condition {
  bool spec_aug = false;
  bool syn_data = false;
  bool lm = false;
};

struct ExperimentConfig {
  std::string work_dir = "work";
  std::uint64_t seed = 1;
  CorporaConfig corpora;
  FeatureConfig features;
  augment::SpecAugmentParams spec_augment;
  TtsStageConfig tts;
  Mel2LinStageConfig mel2lin;
  AsrStageConfig asr;
  ScheduleConfig schedule;
  MixPolicy mix;
  std::vector<double> lm_sweep = {0.0, 0.1, 0.2, 0.4};
  std::vector<Condition> conditions;

  void Validate() const;
};

// Defaults sized for the generated toy corpus.
ExperimentConfig ToyExperimentConfig();

// Unknown keys are rejected so that typos surface as config errors.
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);
void SaveExperimentConfig(const std::filesystem::path& path, const ExperimentConfig& cfg);

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

}  // namespace synthasr::pipeline
