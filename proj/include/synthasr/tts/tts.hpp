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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "synthasr/dsp/dsp.hpp"
#include "synthasr/nn/layers.hpp"
#include "synthasr/tts/attention.hpp"

namespace synthasr::tts {

struct TtsConfig {
  std::size_t n_symbols = 29;
  std::size_t n_mels = 80;
  std::size_t embed_dim = 128;
  std::size_t conv_layers = 3;
  std::size_t conv_filters = 128;
  std::size_t conv_width = 5;
  std::size_t enc_hidden = 128;  // per direction
  std::size_t speaker_dim = 128;
  std::size_t gst_tokens = 100;
  std::vector<std::size_t> gst_filters = {16, 16, 32, 32, 64, 64};
  std::size_t gst_hidden = 128;
  std::size_t gst_min_frames = 64;
  std::size_t att_dim = 128;
  std::size_t posenc_dim = 64;
  std::size_t feedback_filters = 32;
  std::size_t feedback_width = 31;
  std::size_t dec_hidden = 256;
  std::size_t stack = 3;
  double stop_threshold = 0.4;
  std::size_t stop_tail = 5;

  std::size_t memory_dim() const { return 2 * enc_hidden + speaker_dim; }
  void Validate() const;
};

void to_json(nlohmann::json& j, const TtsConfig& c);
void from_json(const nlohmann::json& j, TtsConfig& c);

// Stop-token targets for n decoder steps: zeros then 0.2, 0.4, ... 1.0 on
// the last `tail` steps. Shorter sequences keep the end of the ramp.
std::vector<double> StopTargets(std::size_t n_steps, std::size_t tail = 5);

// Decides when synthesis ends: `tail` steps after the first stop value
// above the threshold, counting the crossing step itself as step k.
class StopRule {
 public:
  StopRule(double threshold, std::size_t tail) : threshold_(threshold), tail_(tail) {}
  // Feeds the stop value of the next step; true once decoding must end.
  bool Observe(double stop_value);
  std::size_t steps() const { return steps_; }
  std::optional<std::size_t> crossing() const { return crossing_; }

 private:
  double threshold_;
  std::size_t tail_;
  std::size_t steps_ = 0;
  std::optional<std::size_t> crossing_;
};

struct StyleTokens {
  std::vector<nn::Conv2dLayer> convs;
  nn::LstmCell lstm;
  nn::Linear query;
  std::string tokens;  // [n_tokens, token_dim]
  std::size_t min_frames = 64;

  struct Output {
    nn::Var embedding;  // [1, token_dim]
    nn::Var weights;    // [1, n_tokens]
  };
  Output Forward(nn::Ctx& ctx, nn::Var ref_mel) const;
};

struct DecoderState {
  nn::LstmState l1;
  nn::LstmState l2;
  nn::Var context;  // [1, memory_dim]
  nn::Var accum;    // [J, 1]
};

struct TeacherForced {
  nn::Var mel;     // [stack * N, n_mels]
  nn::Var stop;    // [N, 1], sigmoid outputs
  nn::Var target;  // padded target [stack * N, n_mels]
  std::vector<double> stop_target;
  Matrix alignments;  // N x J
};

struct SynthesisOptions {
  std::size_t max_steps = 400;
  // Replaces the model's stop value at a step; used to probe the stop rule.
  std::function<double(std::size_t step, double model_stop)> stop_override;
};

struct SynthesisResult {
  dsp::FeatureMatrix mel;  // normalized log-mel, frames = stack * steps
  std::size_t steps = 0;
  bool truncated = false;
  std::vector<double> stop_values;
  Matrix alignments;  // steps x J
};

class TtsModel {
 public:
  static TtsModel Create(const TtsConfig& cfg, std::uint64_t seed);

  const TtsConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  // chars -> [J, memory_dim]; the speaker row is appended to every state.
  nn::Var Encode(nn::Ctx& ctx, std::span<const int> chars, nn::Var speaker) const;
  StyleTokens::Output Style(nn::Ctx& ctx, const dsp::FeatureMatrix& ref_mel) const;

  DecoderState InitialState(nn::Ctx& ctx, std::size_t memory_len) const;
  struct StepOutput {
    DecoderState state;
    nn::Var features;  // [1, dec_hidden + memory_dim], input to the output heads
    nn::Var weights;   // [1, J]
  };
  StepOutput DecoderStep(nn::Ctx& ctx, const Attention::Memory& mem, const DecoderState& prev,
                         nn::Var prev_frame) const;
  nn::Var MelHead(nn::Ctx& ctx, nn::Var features) const;   // [N, stack * n_mels]
  nn::Var StopHead(nn::Ctx& ctx, nn::Var features) const;  // [N, 1] in (0, 1)

  // `speaker` overrides the GST embedding of `target` when given.
  TeacherForced Forward(nn::Ctx& ctx, std::span<const int> chars, const dsp::FeatureMatrix& target,
                        const std::vector<double>* speaker = nullptr) const;
  // L1 on frames plus BCE on stop values.
  static nn::Var Loss(const TeacherForced& out);

  SynthesisResult Synthesize(std::span<const int> chars, const std::vector<double>& speaker,
                             const SynthesisOptions& opts = {}) const;
  std::vector<double> SpeakerEmbedding(const dsp::FeatureMatrix& ref_mel) const;

  const Attention& attention() const { return attention_; }

  void Save(const std::filesystem::path& path) const;
  static TtsModel Load(const std::filesystem::path& path);
  static TtsModel FromParams(const TtsConfig& cfg, const nn::ParameterStore& params);

 private:
  void Build(std::uint64_t seed);

  TtsConfig cfg_;
  nn::ParameterStore params_;
  nn::Embedding embedding_;
  std::vector<nn::Conv1dLayer> convs_;
  nn::Blstm encoder_;
  StyleTokens gst_;
  nn::LstmCell lstm1_;
  nn::LstmCell lstm2_;
  Attention attention_;
  nn::Linear mel_out_;
  nn::Linear stop_out_;
};

// Pads a T x n_mels matrix to a multiple of `stack` rows by repeating the
// last frame.
Matrix PadToMultiple(const Matrix& m, std::size_t stack);

struct Mel2LinConfig {
  std::size_t n_mels = 80;
  std::size_t hidden = 128;  // per direction
  std::size_t out_dim = 512;
  void Validate() const;
};

void to_json(nlohmann::json& j, const Mel2LinConfig& c);
void from_json(const nlohmann::json& j, Mel2LinConfig& c);

// Input projection, two bidirectional LSTM blocks with residual
// connections, output projection to the DC-less linear spectrum.
class Mel2LinModel {
 public:
  static Mel2LinModel Create(const Mel2LinConfig& cfg, std::uint64_t seed);

  const Mel2LinConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  // Normalized mel [T, n_mels] -> normalized linear magnitude [T, out_dim].
  nn::Var Forward(nn::Ctx& ctx, nn::Var mel) const;
  // One residual block: x + blstm(x).
  nn::Var Block(nn::Ctx& ctx, std::size_t k, nn::Var x) const;
  // Denormalized, clamped at zero.
  Matrix Predict(const dsp::FeatureMatrix& norm_mel, const dsp::NormStats& lin_stats) const;

  void Save(const std::filesystem::path& path) const;
  static Mel2LinModel Load(const std::filesystem::path& path);
  static Mel2LinModel FromParams(const Mel2LinConfig& cfg, const nn::ParameterStore& params);

 private:
  void Build(std::uint64_t seed);

  Mel2LinConfig cfg_;
  nn::ParameterStore params_;
  nn::Linear in_;
  std::vector<nn::Blstm> blocks_;
  nn::Linear out_;
};

}  // namespace synthasr::tts
