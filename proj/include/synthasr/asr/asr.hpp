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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "synthasr/nn/layers.hpp"
#include "synthasr/tts/attention.hpp"

namespace synthasr::asr {

struct AsrConfig {
  std::size_t input_dim = 40;
  std::size_t enc_layers = 6;
  std::size_t pool_layers = 3;  // max-pool by 2 after each of the first layers
  std::size_t enc_hidden = 128;  // per direction
  std::size_t embed_dim = 64;
  std::size_t dec_hidden = 128;
  std::size_t att_dim = 128;
  std::size_t vocab = 0;  // BPE tokens, excluding the end symbol
  double ctc_weight = 0.5;

  // Output classes: the BPE tokens plus one end symbol, which doubles as
  // the start symbol for the decoder and as the CTC blank.
  std::size_t classes() const { return vocab + 1; }
  int eos() const { return static_cast<int>(vocab); }
  void Validate() const;
};

void to_json(nlohmann::json& j, const AsrConfig& c);
void from_json(const nlohmann::json& j, AsrConfig& c);

// Encoder output length for T input frames.
std::size_t EncodedLength(std::size_t frames, std::size_t pool_layers = 3);

struct AsrDecoderState {
  nn::LstmState lstm;
  nn::Var context;  // [1, 2 * enc_hidden]
  nn::Var accum;    // [J, 1]
};

struct AsrLoss {
  nn::Var total;
  double ce = 0.0;
  double ctc = 0.0;
  bool ctc_used = false;
};

class AsrModel {
 public:
  static AsrModel Create(const AsrConfig& cfg, std::uint64_t seed);
  static AsrModel FromParams(const AsrConfig& cfg, const nn::ParameterStore& params);

  const AsrConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  // [T, input_dim] -> [EncodedLength(T), 2 * enc_hidden]
  nn::Var Encode(nn::Ctx& ctx, nn::Var features) const;
  // Per-frame log-probabilities of the CTC head, blank = eos().
  nn::Var CtcLogProbs(nn::Ctx& ctx, nn::Var encoded) const;

  tts::Attention::Memory Prepare(nn::Ctx& ctx, nn::Var encoded) const;
  AsrDecoderState Initial(nn::Ctx& ctx, std::size_t memory_len) const;
  struct StepOutput {
    AsrDecoderState state;
    nn::Var log_probs;  // [1, classes]
    nn::Var weights;    // [1, J]
  };
  StepOutput Step(nn::Ctx& ctx, const tts::Attention::Memory& mem, const AsrDecoderState& prev,
                  int prev_token) const;

  // Teacher-forced CE over labels + end symbol, plus ctc_weight * CTC.
  // Throws kInfeasible when the CTC term is requested but the labels do not
  // fit the encoder length.
  AsrLoss Loss(nn::Ctx& ctx, const Matrix& features, std::span<const int> labels,
               double ctc_weight) const;

  void Save(const std::filesystem::path& path) const;
  static AsrModel Load(const std::filesystem::path& path);

 private:
  void Build(std::uint64_t seed);

  AsrConfig cfg_;
  nn::ParameterStore params_;
  std::vector<nn::Blstm> encoder_;
  nn::Linear ctc_out_;
  nn::Embedding embed_;
  nn::LstmCell lstm_;
  tts::Attention attention_;
  nn::Linear out_;
};

// Next-token scorer over the ASR output classes. The end symbol id marks
// both the start context and sentence end.
class LmScorer {
 public:
  virtual ~LmScorer() = default;
  virtual double LogProb(std::span<const int> prefix, int token) const = 0;
};

// Bigram table with add-one smoothing.
class BigramLm : public LmScorer {
 public:
  BigramLm() = default;
  // `sentences` are token id sequences without the end symbol.
  static BigramLm Train(std::span<const std::vector<int>> sentences, std::size_t classes, int eos);
  double LogProb(std::span<const int> prefix, int token) const override;

  std::size_t classes() const { return classes_; }
  // Text table: header "bigram <classes> <eos>" then "prev next logprob"
  // for every pair.
  void Save(const std::filesystem::path& path) const;
  static BigramLm Load(const std::filesystem::path& path);

 private:
  std::size_t classes_ = 0;
  int eos_ = 0;
  std::vector<double> table_;  // classes x classes
};

struct BeamOptions {
  std::size_t beam_size = 4;
  std::size_t max_len = 50;  // decoding steps, end symbol included
};

struct BeamResult {
  std::vector<int> tokens;  // without the end symbol
  double asr_score = 0.0;
  double lm_score = 0.0;
  double score = 0.0;
  bool finished = true;  // false when max_len was hit before any end symbol
};

// Adapts a trained model to the beam search step interface for one
// utterance.
class AsrStepModel {
 public:
  AsrStepModel(const AsrModel& model, const Matrix& features);

  struct State {
    AsrDecoderState dec;
    std::vector<double> log_probs;  // next-token distribution
  };
  std::size_t classes() const { return model_.config().classes(); }
  int eos() const { return model_.config().eos(); }
  State Start();
  State Advance(const State& s, int token);

 private:
  const AsrModel& model_;
  nn::Tape tape_{false};
  nn::Ctx ctx_;
  tts::Attention::Memory mem_;
};

// Word-level Levenshtein alignment. Among minimum-edit alignments the one
// with the fewest substitutions is reported, which makes the counts
// symmetric under swapping hypothesis and reference.
struct WerResult {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t ref_words = 0;
  double rate = 0.0;  // errors / max(1, ref_words)
  bool empty_reference = false;
  std::size_t errors() const { return substitutions + insertions + deletions; }
};

WerResult Wer(std::span<const std::string> hyp, std::span<const std::string> ref);
WerResult Wer(const std::string& hyp, const std::string& ref);

}  // namespace synthasr::asr

#include "synthasr/asr/beam_search.hpp"
