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

#include "synthasr/tts/tts.hpp"

#include <algorithm>
#include <cmath>

#include "synthasr/error.hpp"
#include "synthasr/nn/checkpoint.hpp"
#include "synthasr/nn/ops.hpp"

namespace synthasr::tts {

using namespace nn;
using nlohmann::json;

void TtsConfig::Validate() const {
  Require(n_symbols > 0 && n_mels > 0 && embed_dim > 0 && conv_filters > 0 && enc_hidden > 0 &&
              speaker_dim > 0 && gst_tokens > 0 && gst_hidden > 0 && att_dim > 0 &&
              dec_hidden > 0 && stack > 0,
          "tts config: sizes must be positive", ErrorCode::kConfig);
  Require(conv_width % 2 == 1, "tts config: conv_width must be odd", ErrorCode::kConfig);
  Require(feedback_width % 2 == 1, "tts config: feedback_width must be odd", ErrorCode::kConfig);
  Require(!gst_filters.empty(), "tts config: gst_filters is empty", ErrorCode::kConfig);
  Require(stop_threshold > 0.0 && stop_threshold < 1.0, "tts config: stop_threshold outside (0,1)",
          ErrorCode::kConfig);
  Require(stop_tail >= 1, "tts config: stop_tail must be >= 1", ErrorCode::kConfig);
}

void to_json(json& j, const TtsConfig& c) {
  j = json{{"n_symbols", c.n_symbols},         {"n_mels", c.n_mels},
           {"embed_dim", c.embed_dim},         {"conv_layers", c.conv_layers},
           {"conv_filters", c.conv_filters},   {"conv_width", c.conv_width},
           {"enc_hidden", c.enc_hidden},       {"speaker_dim", c.speaker_dim},
           {"gst_tokens", c.gst_tokens},       {"gst_filters", c.gst_filters},
           {"gst_hidden", c.gst_hidden},       {"gst_min_frames", c.gst_min_frames},
           {"att_dim", c.att_dim},             {"posenc_dim", c.posenc_dim},
           {"feedback_filters", c.feedback_filters}, {"feedback_width", c.feedback_width},
           {"dec_hidden", c.dec_hidden},       {"stack", c.stack},
           {"stop_threshold", c.stop_threshold}, {"stop_tail", c.stop_tail}};
}

void from_json(const json& j, TtsConfig& c) {
  TtsConfig d;
  c.n_symbols = j.value("n_symbols", d.n_symbols);
  c.n_mels = j.value("n_mels", d.n_mels);
  c.embed_dim = j.value("embed_dim", d.embed_dim);
  c.conv_layers = j.value("conv_layers", d.conv_layers);
  c.conv_filters = j.value("conv_filters", d.conv_filters);
  c.conv_width = j.value("conv_width", d.conv_width);
  c.enc_hidden = j.value("enc_hidden", d.enc_hidden);
  c.speaker_dim = j.value("speaker_dim", d.speaker_dim);
  c.gst_tokens = j.value("gst_tokens", d.gst_tokens);
  c.gst_filters = j.value("gst_filters", d.gst_filters);
  c.gst_hidden = j.value("gst_hidden", d.gst_hidden);
  c.gst_min_frames = j.value("gst_min_frames", d.gst_min_frames);
  c.att_dim = j.value("att_dim", d.att_dim);
  c.posenc_dim = j.value("posenc_dim", d.posenc_dim);
  c.feedback_filters = j.value("feedback_filters", d.feedback_filters);
  c.feedback_width = j.value("feedback_width", d.feedback_width);
  c.dec_hidden = j.value("dec_hidden", d.dec_hidden);
  c.stack = j.value("stack", d.stack);
  c.stop_threshold = j.value("stop_threshold", d.stop_threshold);
  c.stop_tail = j.value("stop_tail", d.stop_tail);
}

std::vector<double> StopTargets(std::size_t n_steps, std::size_t tail) {
  std::vector<double> t(n_steps, 0.0);
  for (std::size_t k = 0; k < tail && k < n_steps; ++k) {
    t[n_steps - 1 - k] = static_cast<double>(tail - k) / static_cast<double>(tail);
  }
  return t;
}

bool StopRule::Observe(double stop_value) {
  ++steps_;
  if (!crossing_ && stop_value > threshold_) crossing_ = steps_;
  return crossing_ && steps_ >= *crossing_ + tail_;
}

Matrix PadToMultiple(const Matrix& m, std::size_t stack) {
  Require(m.rows > 0, "pad: empty matrix");
  const std::size_t rows = (m.rows + stack - 1) / stack * stack;
  Matrix out(rows, m.cols);
  std::copy(m.data.begin(), m.data.end(), out.data.begin());
  for (std::size_t r = m.rows; r < rows; ++r) {
    std::copy(m.Row(m.rows - 1).begin(), m.Row(m.rows - 1).end(), out.Row(r).begin());
  }
  return out;
}

StyleTokens::Output StyleTokens::Forward(Ctx& ctx, Var ref_mel) const {
  Require(ref_mel.rows() > 0, "gst: empty reference");
  Var x = ref_mel;
  if (x.rows() < min_frames) {
    const Var parts[] = {x, ctx.tape.Zeros({min_frames - x.rows(), x.cols()})};
    x = ConcatRows(parts);
  }
  x = Reshape(x, {1, x.rows(), x.cols()});
  for (const auto& conv : convs) x = Relu(conv.Forward(ctx, x));
  const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  // [C, H, W] -> [H, W * C] so the LSTM runs over the time axis.
  const Var seq = Reshape(Transpose(Reshape(x, {c, h * w})), {h, w * c});
  LstmState last;
  lstm.Sequence(ctx, seq, false, &last);
  const Var q = query.Forward(ctx, last.h);
  const Var bank = ctx.P(tokens);
  const double scale = 1.0 / std::sqrt(static_cast<double>(bank.cols()));
  const Var weights = Softmax(Scale(MatMulNT(q, bank), scale));
  return {MatMul(weights, bank), weights};
}

TtsModel TtsModel::Create(const TtsConfig& cfg, std::uint64_t seed) {
  cfg.Validate();
  TtsModel m;
  m.cfg_ = cfg;
  m.Build(seed);
  return m;
}

TtsModel TtsModel::FromParams(const TtsConfig& cfg, const ParameterStore& params) {
  TtsModel m = Create(cfg, 0);
  LoadInto(m.params_, params);
  return m;
}

void TtsModel::Build(std::uint64_t seed) {
  Rng rng(seed);
  const auto& c = cfg_;
  embedding_ = Embedding::Create(params_, "tts/embed", c.n_symbols, c.embed_dim, rng);
  std::size_t in = c.embed_dim;
  for (std::size_t i = 0; i < c.conv_layers; ++i) {
    convs_.push_back(Conv1dLayer::Create(params_, "tts/conv" + std::to_string(i), in,
                                         c.conv_filters, c.conv_width, rng));
    in = c.conv_filters;
  }
  encoder_ = Blstm::Create(params_, "tts/enc_blstm", in, c.enc_hidden, rng);

  std::size_t ch = 1, width = c.n_mels;
  for (std::size_t i = 0; i < c.gst_filters.size(); ++i) {
    gst_.convs.push_back(Conv2dLayer::Create(params_, "gst/conv" + std::to_string(i), ch,
                                             c.gst_filters[i], 3, 2, 1, rng));
    ch = c.gst_filters[i];
    width = (width + 1) / 2;
  }
  gst_.lstm = LstmCell::Create(params_, "gst/lstm", ch * width, c.gst_hidden, rng);
  gst_.query = Linear::Create(params_, "gst/query", c.gst_hidden, c.speaker_dim, rng);
  gst_.tokens = "gst/tokens";
  InitUniform(params_.Add(gst_.tokens, {c.gst_tokens, c.speaker_dim}), 0.5, rng);
  gst_.min_frames = c.gst_min_frames;

  lstm1_ = LstmCell::Create(params_, "tts/dec_lstm1", c.n_mels + c.memory_dim(), c.dec_hidden, rng);
  lstm2_ = LstmCell::Create(params_, "tts/dec_lstm2", c.dec_hidden, c.dec_hidden, rng);
  AttentionConfig ac;
  ac.query_dim = c.dec_hidden;
  ac.memory_dim = c.memory_dim();
  ac.att_dim = c.att_dim;
  ac.posenc_dim = c.posenc_dim;
  ac.feedback_filters = c.feedback_filters;
  ac.feedback_width = c.feedback_width;
  ac.left_pad_value = 1.0;
  attention_ = Attention::Create(params_, "tts/att", ac, rng);
  mel_out_ = Linear::Create(params_, "tts/mel_out", c.dec_hidden + c.memory_dim(), c.stack * c.n_mels, rng);
  stop_out_ = Linear::Create(params_, "tts/stop_out", c.dec_hidden + c.memory_dim(), 1, rng);
  for (auto* p : params_.All()) RoundToSingle(p->value);
}

Var TtsModel::Encode(Ctx& ctx, std::span<const int> chars, Var speaker) const {
  Require(!chars.empty(), "tts encode: empty text");
  if (speaker.size() != cfg_.speaker_dim) {
    throw Error(ErrorCode::kShapeMismatch, "tts encode: speaker embedding has " +
                                               std::to_string(speaker.size()) + " values, expected " +
                                               std::to_string(cfg_.speaker_dim));
  }
  Var x = embedding_.Forward(ctx, chars);
  for (const auto& conv : convs_) x = Relu(conv.Forward(ctx, x));
  const Var h = encoder_.Forward(ctx, x);
  const std::vector<int> zeros(chars.size(), 0);
  const Var parts[] = {h, GatherRows(Reshape(speaker, {1, cfg_.speaker_dim}), zeros)};
  return ConcatCols(parts);
}

StyleTokens::Output TtsModel::Style(Ctx& ctx, const dsp::FeatureMatrix& ref_mel) const {
  if (ref_mel.dim() != cfg_.n_mels) {
    throw Error(ErrorCode::kShapeMismatch, "gst: reference has " + std::to_string(ref_mel.dim()) +
                                               " dims, expected " + std::to_string(cfg_.n_mels));
  }
  Require(ref_mel.frames() > 0, "gst: empty reference");
  return gst_.Forward(ctx, ctx.tape.Constant(ref_mel.data));
}

std::vector<double> TtsModel::SpeakerEmbedding(const dsp::FeatureMatrix& ref_mel) const {
  Tape tape(false);
  ParameterStore& ps = const_cast<ParameterStore&>(params_);
  Ctx ctx{tape, ps};
  return Style(ctx, ref_mel).embedding.value();
}

DecoderState TtsModel::InitialState(Ctx& ctx, std::size_t memory_len) const {
  return {lstm1_.Initial(ctx.tape), lstm2_.Initial(ctx.tape), ctx.tape.Zeros({1, cfg_.memory_dim()}),
          ctx.tape.Zeros({memory_len, 1})};
}

TtsModel::StepOutput TtsModel::DecoderStep(Ctx& ctx, const Attention::Memory& mem,
                                           const DecoderState& prev, Var prev_frame) const {
  const Var in_parts[] = {prev_frame, prev.context};
  DecoderState next;
  next.l1 = lstm1_.Step(ctx, ConcatCols(in_parts), prev.l1);
  next.l2 = lstm2_.Step(ctx, next.l1.h, prev.l2);
  const auto att = attention_.Attend(ctx, mem, next.l2.h, prev.accum);
  next.context = att.context;
  next.accum = att.accum;
  const Var feat_parts[] = {next.l2.h, att.context};
  return {next, ConcatCols(feat_parts), att.weights};
}

Var TtsModel::MelHead(Ctx& ctx, Var features) const { return mel_out_.Forward(ctx, features); }

Var TtsModel::StopHead(Ctx& ctx, Var features) const {
  return Sigmoid(stop_out_.Forward(ctx, features));
}

TeacherForced TtsModel::Forward(Ctx& ctx, std::span<const int> chars, const dsp::FeatureMatrix& target,
                                const std::vector<double>* speaker) const {
  if (target.dim() != cfg_.n_mels) {
    throw Error(ErrorCode::kShapeMismatch, "tts: target has " + std::to_string(target.dim()) +
                                               " dims, expected " + std::to_string(cfg_.n_mels));
  }
  Require(target.frames() > 0, "tts: empty target");
  const Var spk = speaker ? ctx.tape.Constant({1, speaker->size()}, *speaker)
                          : Style(ctx, target).embedding;
  const Var enc = Encode(ctx, chars, spk);
  const auto mem = attention_.Prepare(ctx, enc);

  const Matrix padded = PadToMultiple(target.data, cfg_.stack);
  const std::size_t steps = padded.rows / cfg_.stack;
  TeacherForced out;
  out.target = ctx.tape.Constant(padded);
  out.stop_target = StopTargets(steps, cfg_.stop_tail);
  out.alignments = Matrix(steps, chars.size());

  DecoderState state = InitialState(ctx, chars.size());
  std::vector<Var> features;
  features.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const Var prev = i == 0 ? ctx.tape.Zeros({1, cfg_.n_mels})
                            : SliceRows(out.target, cfg_.stack * i - 1, cfg_.stack * i);
    auto step = DecoderStep(ctx, mem, state, prev);
    state = step.state;
    features.push_back(step.features);
    std::copy(step.weights.value().begin(), step.weights.value().end(), out.alignments.Row(i).begin());
  }
  const Var feats = ConcatRows(features);
  out.mel = Reshape(MelHead(ctx, feats), {steps * cfg_.stack, cfg_.n_mels});
  out.stop = StopHead(ctx, feats);
  return out;
}

Var TtsModel::Loss(const TeacherForced& out) {
  Tape& tape = *out.mel.tape();
  if (out.mel.shape() != out.target.shape() || out.stop.size() != out.stop_target.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tts loss: prediction and target lengths differ");
  }
  const Var stop_target = tape.Constant({out.stop_target.size(), 1}, out.stop_target);
  return Add(L1Loss(out.mel, out.target), BceLoss(out.stop, stop_target));
}

SynthesisResult TtsModel::Synthesize(std::span<const int> chars, const std::vector<double>& speaker,
                                     const SynthesisOptions& opts) const {
  Require(opts.max_steps >= 1, "synthesize: max_steps must be >= 1");
  Tape tape(false);
  ParameterStore& ps = const_cast<ParameterStore&>(params_);
  Ctx ctx{tape, ps};
  const Var enc = Encode(ctx, chars, tape.Constant({1, speaker.size()}, speaker));
  const auto mem = attention_.Prepare(ctx, enc);
  DecoderState state = InitialState(ctx, chars.size());
  Var prev = tape.Zeros({1, cfg_.n_mels});

  SynthesisResult res;
  StopRule rule(cfg_.stop_threshold, cfg_.stop_tail);
  std::vector<double> frames;
  std::vector<double> align;
  bool done = false;
  while (!done && res.steps < opts.max_steps) {
    auto step = DecoderStep(ctx, mem, state, prev);
    state = step.state;
    const Var mel = MelHead(ctx, step.features);
    double stop = StopHead(ctx, step.features).item();
    if (opts.stop_override) stop = opts.stop_override(res.steps, stop);
    frames.insert(frames.end(), mel.value().begin(), mel.value().end());
    align.insert(align.end(), step.weights.value().begin(), step.weights.value().end());
    res.stop_values.push_back(stop);
    ++res.steps;
    done = rule.Observe(stop);
    prev = tape.Constant({1, cfg_.n_mels},
                         std::vector<double>(mel.value().end() - static_cast<std::ptrdiff_t>(cfg_.n_mels),
                                             mel.value().end()));
  }
  res.truncated = !done;
  res.mel.kind = dsp::FeatureKind::kLogMel;
  res.mel.data = Matrix(res.steps * cfg_.stack, cfg_.n_mels);
  res.mel.data.data = std::move(frames);
  res.alignments = Matrix(res.steps, chars.size());
  res.alignments.data = std::move(align);
  return res;
}

void TtsModel::Save(const std::filesystem::path& path) const {
  json meta{{"kind", "tts"}, {"config", cfg_}};
  SaveCheckpoint(path, {meta.dump(), params_});
}

TtsModel TtsModel::Load(const std::filesystem::path& path) {
  const auto ckpt = LoadCheckpoint(path);
  TtsConfig cfg;
  try {
    const auto meta = json::parse(ckpt.metadata);
    if (meta.contains("model")) {
      // Trainer state archive: the model metadata is nested.
      const auto inner = json::parse(meta.at("model").get<std::string>());
      cfg = inner.at("config").get<TtsConfig>();
    } else {
      Require(meta.value("kind", "") == "tts", "not a tts checkpoint", ErrorCode::kFormat);
      cfg = meta.at("config").get<TtsConfig>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "tts checkpoint " + path.string() + ": " + e.what());
  }
  return FromParams(cfg, ckpt.tensors);
}

void Mel2LinConfig::Validate() const {
  Require(n_mels > 0 && hidden > 0 && out_dim > 0, "mel2lin config: sizes must be positive",
          ErrorCode::kConfig);
}

void to_json(json& j, const Mel2LinConfig& c) {
  j = json{{"n_mels", c.n_mels}, {"hidden", c.hidden}, {"out_dim", c.out_dim}};
}

void from_json(const json& j, Mel2LinConfig& c) {
  Mel2LinConfig d;
  c.n_mels = j.value("n_mels", d.n_mels);
  c.hidden = j.value("hidden", d.hidden);
  c.out_dim = j.value("out_dim", d.out_dim);
}

Mel2LinModel Mel2LinModel::Create(const Mel2LinConfig& cfg, std::uint64_t seed) {
  cfg.Validate();
  Mel2LinModel m;
  m.cfg_ = cfg;
  m.Build(seed);
  return m;
}

Mel2LinModel Mel2LinModel::FromParams(const Mel2LinConfig& cfg, const ParameterStore& params) {
  Mel2LinModel m = Create(cfg, 0);
  LoadInto(m.params_, params);
  return m;
}

void Mel2LinModel::Build(std::uint64_t seed) {
  Rng rng(seed);
  in_ = Linear::Create(params_, "m2l/in", cfg_.n_mels, 2 * cfg_.hidden, rng);
  for (std::size_t k = 0; k < 2; ++k) {
    blocks_.push_back(Blstm::Create(params_, "m2l/blstm" + std::to_string(k), 2 * cfg_.hidden, cfg_.hidden, rng));
  }
  out_ = Linear::Create(params_, "m2l/out", 2 * cfg_.hidden, cfg_.out_dim, rng);
  for (auto* p : params_.All()) RoundToSingle(p->value);
}

Var Mel2LinModel::Block(Ctx& ctx, std::size_t k, Var x) const {
  return Add(x, blocks_.at(k).Forward(ctx, x));
}

Var Mel2LinModel::Forward(Ctx& ctx, Var mel) const {
  if (mel.cols() != cfg_.n_mels) {
    throw Error(ErrorCode::kShapeMismatch, "mel2lin: input has " + std::to_string(mel.cols()) +
                                               " dims, expected " + std::to_string(cfg_.n_mels));
  }
  Var x = in_.Forward(ctx, mel);
  for (std::size_t k = 0; k < blocks_.size(); ++k) x = Block(ctx, k, x);
  return out_.Forward(ctx, x);
}

Matrix Mel2LinModel::Predict(const dsp::FeatureMatrix& norm_mel, const dsp::NormStats& lin_stats) const {
  Require(lin_stats.dim() == cfg_.out_dim, "mel2lin: normalization stats do not match the output size",
          ErrorCode::kShapeMismatch);
  Tape tape(false);
  ParameterStore& ps = const_cast<ParameterStore&>(params_);
  Ctx ctx{tape, ps};
  dsp::FeatureMatrix out;
  out.kind = dsp::FeatureKind::kLinearMag;
  out.data = Forward(ctx, tape.Constant(norm_mel.data)).ToMatrix();
  Matrix lin = dsp::Denormalize(out, lin_stats).data;
  for (double& v : lin.data) v = std::max(0.0, v);
  return lin;
}

void Mel2LinModel::Save(const std::filesystem::path& path) const {
  json meta{{"kind", "mel2lin"}, {"config", cfg_}};
  SaveCheckpoint(path, {meta.dump(), params_});
}

Mel2LinModel Mel2LinModel::Load(const std::filesystem::path& path) {
  const auto ckpt = LoadCheckpoint(path);
  Mel2LinConfig cfg;
  try {
    auto meta = json::parse(ckpt.metadata);
    if (meta.contains("model")) meta = json::parse(meta.at("model").get<std::string>());
    Require(meta.value("kind", "") == "mel2lin", "not a mel2lin checkpoint", ErrorCode::kFormat);
    cfg = meta.at("config").get<Mel2LinConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "mel2lin checkpoint " + path.string() + ": " + e.what());
  }
  return FromParams(cfg, ckpt.tensors);
}

}  // namespace synthasr::tts
