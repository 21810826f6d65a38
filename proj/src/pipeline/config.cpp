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

#include "synthasr/pipeline/config.hpp"

#include <fstream>
#include <set>

#include "synthasr/error.hpp"

namespace synthasr::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

void MixPolicy::Validate() const {
  Require(real >= 0.0 && synthetic >= 0.0 && real + synthetic > 0.0,
          "mix: ratio parts must be non-negative and not both zero", ErrorCode::kConfig);
}

void ExperimentConfig::Validate() const {
  Require(!work_dir.empty(), "config: work_dir is empty", ErrorCode::kConfig);
  if (!corpora.generate_toy) {
    Require(!corpora.train.empty(), "config: corpora.train is required", ErrorCode::kConfig);
  }
  features.stft.Validate(dsp::kDefaultSampleRate);
  Require(features.n_mfcc <= features.n_mels, "config: more MFCCs than mel bands", ErrorCode::kConfig);
  Require(tts.model.n_mels == features.n_mels, "config: tts.n_mels differs from features.n_mels",
          ErrorCode::kConfig);
  Require(mel2lin.model.n_mels == features.n_mels, "config: mel2lin.n_mels differs from features.n_mels",
          ErrorCode::kConfig);
  Require(mel2lin.model.out_dim == static_cast<std::size_t>(features.stft.fft_size / 2),
          "config: mel2lin.out_dim must equal fft_size / 2", ErrorCode::kConfig);
  Require(asr.model.input_dim == features.n_mfcc, "config: asr.input_dim differs from features.n_mfcc",
          ErrorCode::kConfig);
  tts.model.Validate();
  mel2lin.model.Validate();
  spec_augment.Validate();
  mix.Validate();
  Require(schedule.phase1_checkpoints > 0 && schedule.phase2_checkpoints > 0 && schedule.phase1_epochs > 0,
          "config: schedule counts must be positive", ErrorCode::kConfig);
  Require(tts.train.batch_size > 0 && mel2lin.train.batch_size > 0 && asr.batch_size > 0,
          "config: batch sizes must be positive", ErrorCode::kConfig);
  Require(asr.beam_size >= 1 && asr.max_len >= 1, "config: beam_size and max_len must be >= 1",
          ErrorCode::kConfig);
  Require(!lm_sweep.empty(), "config: lm_sweep is empty", ErrorCode::kConfig);
  for (double l : lm_sweep) Require(l >= 0.0, "config: lm weights must be non-negative", ErrorCode::kConfig);
  Require(!conditions.empty(), "config: no conditions", ErrorCode::kConfig);
}

ExperimentConfig ToyExperimentConfig() {
  ExperimentConfig c;
  c.corpora.generate_toy = true;

  auto& t = c.tts.model;
  t.embed_dim = 64;
  t.conv_filters = 64;
  t.enc_hidden = 64;
  t.speaker_dim = 32;
  t.gst_tokens = 10;
  t.gst_filters = {8, 8, 16, 16, 32, 32};
  t.gst_hidden = 32;
  t.att_dim = 64;
  t.posenc_dim = 32;
  t.feedback_filters = 16;
  t.feedback_width = 15;
  t.dec_hidden = 128;
  c.tts.train.epochs = 40;
  c.tts.train.optim.rule = nn::UpdateRule::kAdam;
  c.tts.train.optim.learning_rate = 2e-3;
  c.tts.train.optim.clip_norm = 1.0;

  c.mel2lin.model.hidden = 64;
  c.mel2lin.train.epochs = 20;
  c.mel2lin.train.optim.rule = nn::UpdateRule::kAdam;
  c.mel2lin.train.optim.learning_rate = 2e-3;
  c.mel2lin.train.optim.clip_norm = 1.0;

  auto& a = c.asr.model;
  a.enc_hidden = 64;
  a.dec_hidden = 64;
  a.att_dim = 64;
  a.embed_dim = 32;
  c.asr.optim.rule = nn::UpdateRule::kAdam;
  c.asr.optim.learning_rate = 2e-3;
  c.asr.optim.clip_norm = 5.0;
  c.asr.optim.decay_every = 40;
  c.asr.optim.decay_factor = 0.7;

  // One checkpoint holds two epochs of the real training audio.
  c.schedule.phase1_epochs = 16.0;

  c.conditions = {{false, false, false}, {false, false, true}, {true, false, false},
                  {true, false, true},   {true, true, false},  {true, true, true}};
  return c;
}

namespace {

void CheckKeys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config: " + where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw Error(ErrorCode::kConfig, "config: unknown key '" + where + "." + k + "'");
  }
}

template <typename T>
void Get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json OptimToJson(const nn::OptimizerConfig& o) {
  return {{"rule", o.rule == nn::UpdateRule::kAdam ? "adam" : "sgd"},
          {"learning_rate", o.learning_rate},
          {"clip_norm", o.clip_norm},
          {"decay_every", o.decay_every},
          {"decay_factor", o.decay_factor}};
}

void OptimFromJson(const json& j, nn::OptimizerConfig& o, const std::string& where) {
  CheckKeys(j, {"rule", "learning_rate", "clip_norm", "decay_every", "decay_factor"}, where);
  if (j.contains("rule")) {
    const auto r = j.at("rule").get<std::string>();
    if (r == "adam") {
      o.rule = nn::UpdateRule::kAdam;
    } else if (r == "sgd") {
      o.rule = nn::UpdateRule::kSgd;
    } else {
      throw Error(ErrorCode::kConfig, "config: " + where + ".rule must be sgd or adam");
    }
  }
  Get(j, "learning_rate", o.learning_rate);
  Get(j, "clip_norm", o.clip_norm);
  Get(j, "decay_every", o.decay_every);
  Get(j, "decay_factor", o.decay_factor);
}

json TrainToJson(const TrainConfig& t) {
  return {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"optim", OptimToJson(t.optim)}};
}

void TrainFromJson(const json& j, TrainConfig& t, const std::string& where) {
  CheckKeys(j, {"epochs", "batch_size", "optim"}, where);
  Get(j, "epochs", t.epochs);
  Get(j, "batch_size", t.batch_size);
  if (j.contains("optim")) OptimFromJson(j.at("optim"), t.optim, where + ".optim");
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  json conds = json::array();
  for (const auto& k : c.conditions) {
    conds.push_back({{"spec_aug", k.spec_aug}, {"syn_data", k.syn_data}, {"lm", k.lm}});
  }
  const auto& sa = c.spec_augment;
  j = json{
      {"work_dir", c.work_dir},
      {"seed", c.seed},
      {"corpora",
       {{"generate_toy", c.corpora.generate_toy},
        {"train", c.corpora.train},
        {"dev_clean", c.corpora.dev_clean},
        {"dev_other", c.corpora.dev_other},
        {"test_clean", c.corpora.test_clean},
        {"test_other", c.corpora.test_other},
        {"text", c.corpora.text}}},
      {"dsp",
       {{"window_s", c.features.stft.window_len_s},
        {"hop_s", c.features.stft.hop_s},
        {"fft_size", c.features.stft.fft_size},
        {"preemphasis", c.features.stft.preemphasis_alpha},
        {"n_mels", c.features.n_mels},
        {"n_mfcc", c.features.n_mfcc},
        {"f_min", c.features.f_min}}},
      {"augment",
       {{"min_freq_masks", sa.min_freq_masks},
        {"max_freq_masks", sa.max_freq_masks},
        {"min_freq_width", sa.min_freq_width},
        {"max_freq_width", sa.max_freq_width},
        {"time_mask_count_max_frac", sa.time_mask_count_max_frac},
        {"time_mask_max_len", sa.time_mask_max_len},
        {"mask_value", sa.mask_value}}},
      {"tts",
       {{"model", c.tts.model},
        {"train", TrainToJson(c.tts.train)},
        {"max_steps", c.tts.max_steps},
        {"griffin_lim_iters", c.tts.griffin_lim_iters},
        {"deemphasize", c.tts.deemphasize}}},
      {"mel2lin", {{"model", c.mel2lin.model}, {"train", TrainToJson(c.mel2lin.train)}}},
      {"asr",
       {{"model", c.asr.model},
        {"bpe_merges", c.asr.bpe_merges},
        {"batch_size", c.asr.batch_size},
        {"optim", OptimToJson(c.asr.optim)},
        {"beam_size", c.asr.beam_size},
        {"max_len", c.asr.max_len}}},
      {"schedule",
       {{"phase1_checkpoints", c.schedule.phase1_checkpoints},
        {"phase1_epochs", c.schedule.phase1_epochs},
        {"phase2_checkpoints", c.schedule.phase2_checkpoints},
        {"lr_reset", c.schedule.lr_reset}}},
      {"mix", {{"real", c.mix.real}, {"synthetic", c.mix.synthetic}}},
      {"lm_sweep", c.lm_sweep},
      {"conditions", conds}};
}

void from_json(const json& j, ExperimentConfig& c) {
  CheckKeys(j, {"work_dir", "seed", "corpora", "dsp", "augment", "tts", "mel2lin", "asr", "schedule", "mix",
                "lm_sweep", "conditions"},
            "root");
  Get(j, "work_dir", c.work_dir);
  Get(j, "seed", c.seed);
  if (j.contains("corpora")) {
    const auto& s = j.at("corpora");
    CheckKeys(s, {"generate_toy", "train", "dev_clean", "dev_other", "test_clean", "test_other", "text"},
              "corpora");
    Get(s, "generate_toy", c.corpora.generate_toy);
    Get(s, "train", c.corpora.train);
    Get(s, "dev_clean", c.corpora.dev_clean);
    Get(s, "dev_other", c.corpora.dev_other);
    Get(s, "test_clean", c.corpora.test_clean);
    Get(s, "test_other", c.corpora.test_other);
    Get(s, "text", c.corpora.text);
  }
  if (j.contains("dsp")) {
    const auto& s = j.at("dsp");
    CheckKeys(s, {"window_s", "hop_s", "fft_size", "preemphasis", "n_mels", "n_mfcc", "f_min"}, "dsp");
    Get(s, "window_s", c.features.stft.window_len_s);
    Get(s, "hop_s", c.features.stft.hop_s);
    Get(s, "fft_size", c.features.stft.fft_size);
    Get(s, "preemphasis", c.features.stft.preemphasis_alpha);
    Get(s, "n_mels", c.features.n_mels);
    Get(s, "n_mfcc", c.features.n_mfcc);
    Get(s, "f_min", c.features.f_min);
  }
  if (j.contains("augment")) {
    const auto& s = j.at("augment");
    auto& sa = c.spec_augment;
    CheckKeys(s, {"min_freq_masks", "max_freq_masks", "min_freq_width", "max_freq_width",
                  "time_mask_count_max_frac", "time_mask_max_len", "mask_value"},
              "augment");
    Get(s, "min_freq_masks", sa.min_freq_masks);
    Get(s, "max_freq_masks", sa.max_freq_masks);
    Get(s, "min_freq_width", sa.min_freq_width);
    Get(s, "max_freq_width", sa.max_freq_width);
    Get(s, "time_mask_count_max_frac", sa.time_mask_count_max_frac);
    Get(s, "time_mask_max_len", sa.time_mask_max_len);
    Get(s, "mask_value", sa.mask_value);
  }
  if (j.contains("tts")) {
    const auto& s = j.at("tts");
    CheckKeys(s, {"model", "train", "max_steps", "griffin_lim_iters", "deemphasize"}, "tts");
    if (s.contains("model")) c.tts.model = s.at("model").get<tts::TtsConfig>();
    if (s.contains("train")) TrainFromJson(s.at("train"), c.tts.train, "tts.train");
    Get(s, "max_steps", c.tts.max_steps);
    Get(s, "griffin_lim_iters", c.tts.griffin_lim_iters);
    Get(s, "deemphasize", c.tts.deemphasize);
  }
  if (j.contains("mel2lin")) {
    const auto& s = j.at("mel2lin");
    CheckKeys(s, {"model", "train"}, "mel2lin");
    if (s.contains("model")) c.mel2lin.model = s.at("model").get<tts::Mel2LinConfig>();
    if (s.contains("train")) TrainFromJson(s.at("train"), c.mel2lin.train, "mel2lin.train");
  }
  if (j.contains("asr")) {
    const auto& s = j.at("asr");
    CheckKeys(s, {"model", "bpe_merges", "batch_size", "optim", "beam_size", "max_len"}, "asr");
    if (s.contains("model")) c.asr.model = s.at("model").get<asr::AsrConfig>();
    Get(s, "bpe_merges", c.asr.bpe_merges);
    Get(s, "batch_size", c.asr.batch_size);
    if (s.contains("optim")) OptimFromJson(s.at("optim"), c.asr.optim, "asr.optim");
    Get(s, "beam_size", c.asr.beam_size);
    Get(s, "max_len", c.asr.max_len);
  }
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    CheckKeys(s, {"phase1_checkpoints", "phase1_epochs", "phase2_checkpoints", "lr_reset"}, "schedule");
    Get(s, "phase1_checkpoints", c.schedule.phase1_checkpoints);
    Get(s, "phase1_epochs", c.schedule.phase1_epochs);
    Get(s, "phase2_checkpoints", c.schedule.phase2_checkpoints);
    Get(s, "lr_reset", c.schedule.lr_reset);
  }
  if (j.contains("mix")) {
    const auto& s = j.at("mix");
    CheckKeys(s, {"real", "synthetic"}, "mix");
    Get(s, "real", c.mix.real);
    Get(s, "synthetic", c.mix.synthetic);
  }
  Get(j, "lm_sweep", c.lm_sweep);
  if (j.contains("conditions")) {
    c.conditions.clear();
    for (const auto& k : j.at("conditions")) {
      CheckKeys(k, {"spec_aug", "syn_data", "lm"}, "conditions[]");
      c.conditions.push_back({k.value("spec_aug", false), k.value("syn_data", false), k.value("lm", false)});
    }
  }
}

ExperimentConfig LoadExperimentConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config " + path.string());
  ExperimentConfig cfg;
  try {
    cfg = json::parse(in).get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "config " + path.string() + ": " + e.what());
  }
  // Relative corpus paths are taken relative to the config file.
  const fs::path base = path.parent_path();
  for (std::string* p : {&cfg.corpora.train, &cfg.corpora.dev_clean, &cfg.corpora.dev_other,
                         &cfg.corpora.test_clean, &cfg.corpora.test_other, &cfg.corpora.text}) {
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  cfg.Validate();
  return cfg;
}

void SaveExperimentConfig(const fs::path& path, const ExperimentConfig& cfg) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << json(cfg).dump(2) << '\n';
}

}  // namespace synthasr::pipeline
