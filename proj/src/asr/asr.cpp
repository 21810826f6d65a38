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

#include "synthasr/asr/asr.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "synthasr/error.hpp"
#include "synthasr/nn/checkpoint.hpp"
#include "synthasr/nn/ops.hpp"
#include "synthasr/text/text.hpp"

namespace synthasr::asr {

using namespace nn;
using nlohmann::json;

void AsrConfig::Validate() const {
  Require(input_dim > 0 && enc_hidden > 0 && embed_dim > 0 && dec_hidden > 0 && att_dim > 0,
          "asr config: sizes must be positive", ErrorCode::kConfig);
  Require(enc_layers >= 1 && pool_layers <= enc_layers, "asr config: bad encoder layout",
          ErrorCode::kConfig);
  Require(vocab >= 1, "asr config: empty vocabulary", ErrorCode::kConfig);
  Require(ctc_weight >= 0.0, "asr config: ctc_weight must be non-negative", ErrorCode::kConfig);
}

void to_json(json& j, const AsrConfig& c) {
  j = json{{"input_dim", c.input_dim},   {"enc_layers", c.enc_layers}, {"pool_layers", c.pool_layers},
           {"enc_hidden", c.enc_hidden}, {"embed_dim", c.embed_dim},   {"dec_hidden", c.dec_hidden},
           {"att_dim", c.att_dim},       {"vocab", c.vocab},           {"ctc_weight", c.ctc_weight}};
}

void from_json(const json& j, AsrConfig& c) {
  AsrConfig d;
  c.input_dim = j.value("input_dim", d.input_dim);
  c.enc_layers = j.value("enc_layers", d.enc_layers);
  c.pool_layers = j.value("pool_layers", d.pool_layers);
  c.enc_hidden = j.value("enc_hidden", d.enc_hidden);
  c.embed_dim = j.value("embed_dim", d.embed_dim);
  c.dec_hidden = j.value("dec_hidden", d.dec_hidden);
  c.att_dim = j.value("att_dim", d.att_dim);
  c.vocab = j.value("vocab", d.vocab);
  c.ctc_weight = j.value("ctc_weight", d.ctc_weight);
}

std::size_t EncodedLength(std::size_t frames, std::size_t pool_layers) {
  for (std::size_t i = 0; i < pool_layers; ++i) frames = (frames + 1) / 2;
  return frames;
}

AsrModel AsrModel::Create(const AsrConfig& cfg, std::uint64_t seed) {
  cfg.Validate();
  AsrModel m;
  m.cfg_ = cfg;
  m.Build(seed);
  return m;
}

AsrModel AsrModel::FromParams(const AsrConfig& cfg, const ParameterStore& params) {
  AsrModel m = Create(cfg, 0);
  LoadInto(m.params_, params);
  return m;
}

void AsrModel::Build(std::uint64_t seed) {
  Rng rng(seed);
  std::size_t in = cfg_.input_dim;
  for (std::size_t i = 0; i < cfg_.enc_layers; ++i) {
    encoder_.push_back(Blstm::Create(params_, "asr/enc" + std::to_string(i), in, cfg_.enc_hidden, rng));
    in = 2 * cfg_.enc_hidden;
  }
  ctc_out_ = Linear::Create(params_, "asr/ctc_out", in, cfg_.classes(), rng);
  embed_ = Embedding::Create(params_, "asr/embed", cfg_.classes(), cfg_.embed_dim, rng);
  lstm_ = LstmCell::Create(params_, "asr/dec_lstm", cfg_.embed_dim + in, cfg_.dec_hidden, rng);
  tts::AttentionConfig ac;
  ac.query_dim = cfg_.dec_hidden;
  ac.memory_dim = in;
  ac.att_dim = cfg_.att_dim;
  ac.posenc_dim = 0;
  ac.feedback_width = 0;
  ac.left_pad_value = 0.0;
  attention_ = tts::Attention::Create(params_, "asr/att", ac, rng);
  out_ = Linear::Create(params_, "asr/out", cfg_.dec_hidden + in, cfg_.classes(), rng);
  for (auto* p : params_.All()) RoundToSingle(p->value);
}

Var AsrModel::Encode(Ctx& ctx, Var features) const {
  Require(features.rows() > 0, "asr encode: no input frames");
  if (features.cols() != cfg_.input_dim) {
    throw Error(ErrorCode::kShapeMismatch, "asr encode: input has " + std::to_string(features.cols()) +
                                               " dims, expected " + std::to_string(cfg_.input_dim));
  }
  Var x = features;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    x = encoder_[i].Forward(ctx, x);
    if (i < cfg_.pool_layers) x = MaxPoolTime(x, 2);
  }
  return x;
}

Var AsrModel::CtcLogProbs(Ctx& ctx, Var encoded) const {
  return LogSoftmax(ctc_out_.Forward(ctx, encoded));
}

tts::Attention::Memory AsrModel::Prepare(Ctx& ctx, Var encoded) const {
  return attention_.Prepare(ctx, encoded);
}

AsrDecoderState AsrModel::Initial(Ctx& ctx, std::size_t memory_len) const {
  return {lstm_.Initial(ctx.tape), ctx.tape.Zeros({1, 2 * cfg_.enc_hidden}), ctx.tape.Zeros({memory_len, 1})};
}

AsrModel::StepOutput AsrModel::Step(Ctx& ctx, const tts::Attention::Memory& mem,
                                    const AsrDecoderState& prev, int prev_token) const {
  const int ids[] = {prev_token};
  const Var in_parts[] = {embed_.Forward(ctx, ids), prev.context};
  AsrDecoderState next;
  next.lstm = lstm_.Step(ctx, ConcatCols(in_parts), prev.lstm);
  const auto att = attention_.Attend(ctx, mem, next.lstm.h, prev.accum);
  next.context = att.context;
  next.accum = att.accum;
  const Var out_parts[] = {next.lstm.h, att.context};
  return {next, LogSoftmax(out_.Forward(ctx, ConcatCols(out_parts))), att.weights};
}

AsrLoss AsrModel::Loss(Ctx& ctx, const Matrix& features, std::span<const int> labels,
                       double ctc_weight) const {
  for (int l : labels) {
    Require(l >= 0 && l < cfg_.eos(), "asr loss: label " + std::to_string(l) + " outside the vocabulary");
  }
  const Var enc = Encode(ctx, ctx.tape.Constant(features));
  AsrLoss out;
  Var ctc;
  if (ctc_weight > 0.0) {
    if (CtcMinFrames(labels) > enc.rows()) {
      throw Error(ErrorCode::kInfeasible, "asr loss: " + std::to_string(labels.size()) +
                                              " labels do not fit " + std::to_string(enc.rows()) +
                                              " encoder frames");
    }
    ctc = CtcLoss(CtcLogProbs(ctx, enc), labels, cfg_.eos());
    out.ctc = ctc.item();
    out.ctc_used = true;
  }

  const auto mem = Prepare(ctx, enc);
  AsrDecoderState state = Initial(ctx, enc.rows());
  std::vector<Var> rows;
  std::vector<int> targets(labels.begin(), labels.end());
  targets.push_back(cfg_.eos());
  int prev = cfg_.eos();
  for (int target : targets) {
    auto step = Step(ctx, mem, state, prev);
    state = step.state;
    rows.push_back(step.log_probs);
    prev = target;
  }
  // Rows are already log-probabilities; cross-entropy re-normalises them,
  // which leaves them unchanged.
  const Var ce = CrossEntropy(ConcatRows(rows), targets);
  out.ce = ce.item();
  out.total = out.ctc_used ? Add(ce, Scale(ctc, ctc_weight)) : ce;
  return out;
}

void AsrModel::Save(const std::filesystem::path& path) const {
  json meta{{"kind", "asr"}, {"config", cfg_}};
  SaveCheckpoint(path, {meta.dump(), params_});
}

AsrModel AsrModel::Load(const std::filesystem::path& path) {
  const auto ckpt = LoadCheckpoint(path);
  AsrConfig cfg;
  try {
    auto meta = json::parse(ckpt.metadata);
    if (meta.contains("model")) meta = json::parse(meta.at("model").get<std::string>());
    Require(meta.value("kind", "") == "asr", "not an asr checkpoint", ErrorCode::kFormat);
    cfg = meta.at("config").get<AsrConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "asr checkpoint " + path.string() + ": " + e.what());
  }
  return FromParams(cfg, ckpt.tensors);
}

BigramLm BigramLm::Train(std::span<const std::vector<int>> sentences, std::size_t classes, int eos) {
  Require(classes >= 1 && eos >= 0 && static_cast<std::size_t>(eos) < classes, "bigram: bad class layout");
  BigramLm lm;
  lm.classes_ = classes;
  lm.eos_ = eos;
  std::vector<double> counts(classes * classes, 1.0);
  for (const auto& s : sentences) {
    int prev = eos;
    for (int t : s) {
      Require(t >= 0 && static_cast<std::size_t>(t) < classes, "bigram: token out of range");
      counts[static_cast<std::size_t>(prev) * classes + static_cast<std::size_t>(t)] += 1.0;
      prev = t;
    }
    counts[static_cast<std::size_t>(prev) * classes + static_cast<std::size_t>(eos)] += 1.0;
  }
  lm.table_.resize(classes * classes);
  for (std::size_t p = 0; p < classes; ++p) {
    double total = 0.0;
    for (std::size_t t = 0; t < classes; ++t) total += counts[p * classes + t];
    for (std::size_t t = 0; t < classes; ++t) lm.table_[p * classes + t] = std::log(counts[p * classes + t] / total);
  }
  return lm;
}

double BigramLm::LogProb(std::span<const int> prefix, int token) const {
  const int prev = prefix.empty() ? eos_ : prefix.back();
  Require(token >= 0 && static_cast<std::size_t>(token) < classes_ && prev >= 0 &&
              static_cast<std::size_t>(prev) < classes_,
          "bigram: token out of range");
  return table_[static_cast<std::size_t>(prev) * classes_ + static_cast<std::size_t>(token)];
}

void BigramLm::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "bigram " << classes_ << ' ' << eos_ << '\n';
  out.precision(17);
  for (std::size_t p = 0; p < classes_; ++p) {
    for (std::size_t t = 0; t < classes_; ++t) out << p << ' ' << t << ' ' << table_[p * classes_ + t] << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

BigramLm BigramLm::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::string tag;
  BigramLm lm;
  if (!(in >> tag >> lm.classes_ >> lm.eos_) || tag != "bigram" || lm.classes_ == 0) {
    throw Error(ErrorCode::kFormat, path.string() + ": not a bigram table");
  }
  lm.table_.assign(lm.classes_ * lm.classes_, 0.0);
  std::vector<bool> seen(lm.table_.size(), false);
  std::size_t p, t;
  double v;
  while (in >> p >> t >> v) {
    if (p >= lm.classes_ || t >= lm.classes_) throw Error(ErrorCode::kFormat, path.string() + ": index out of range");
    lm.table_[p * lm.classes_ + t] = v;
    seen[p * lm.classes_ + t] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw Error(ErrorCode::kFormat, path.string() + ": incomplete table");
  }
  return lm;
}

AsrStepModel::AsrStepModel(const AsrModel& model, const Matrix& features)
    : model_(model), ctx_{tape_, const_cast<ParameterStore&>(model.params())} {
  mem_ = model_.Prepare(ctx_, model_.Encode(ctx_, tape_.Constant(features)));
}

AsrStepModel::State AsrStepModel::Start() {
  return Advance({model_.Initial(ctx_, mem_.states.rows()), {}}, eos());
}

AsrStepModel::State AsrStepModel::Advance(const State& s, int token) {
  auto step = model_.Step(ctx_, mem_, s.dec, token);
  return {step.state, step.log_probs.value()};
}

WerResult Wer(std::span<const std::string> hyp, std::span<const std::string> ref) {
  const std::size_t n = ref.size(), m = hyp.size();
  // cost[i][j] = (edits, substitutions) aligning ref[:i] with hyp[:j].
  using Cost = std::pair<std::size_t, std::size_t>;
  std::vector<Cost> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> Cost& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = {i, 0};
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = {j, 0};
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = ref[i - 1] == hyp[j - 1];
      Cost diag = at(i - 1, j - 1);
      if (!same) diag = {diag.first + 1, diag.second + 1};
      const Cost del = {at(i - 1, j).first + 1, at(i - 1, j).second};
      const Cost ins = {at(i, j - 1).first + 1, at(i, j - 1).second};
      at(i, j) = std::min({diag, del, ins});
    }
  }
  const auto [edits, subs] = at(n, m);
  WerResult r;
  r.substitutions = subs;
  // With S fixed, I + D = edits - S and I - D = m - n.
  const std::size_t indel = edits - subs;
  r.insertions = (indel + m - n) / 2;
  r.deletions = indel - r.insertions;
  r.ref_words = n;
  r.empty_reference = n == 0;
  r.rate = static_cast<double>(edits) / static_cast<double>(std::max<std::size_t>(1, n));
  return r;
}

WerResult Wer(const std::string& hyp, const std::string& ref) {
  const auto h = text::SplitWords(hyp);
  const auto r = text::SplitWords(ref);
  return Wer(std::span<const std::string>(h), std::span<const std::string>(r));
}

}  // namespace synthasr::asr
