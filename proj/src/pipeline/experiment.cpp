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


#include "synthasr/pipeline/experiment.hpp"

#include <array>
#include <chrono>
#include <fstream>
#include <functional>
#include <set>

#include "json.hpp"
#include "synthasr/dsp/io.hpp"
#include "synthasr/error.hpp"
#include "synthasr/log.hpp"
#include "synthasr/nn/trainer.hpp"
#include "synthasr/pipeline/toy_corpus.hpp"

namespace synthasr::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json TrainJson(const TrainResult& t) {
  return {{"initial_loss", t.initial_loss}, {"epoch_losses", t.epoch_losses}, {"final_loss", t.final_loss}};
}

TrainResult TrainFromJson(const json& j) {
  return {j.at("initial_loss").get<double>(), j.at("epoch_losses").get<std::vector<double>>(),
          j.at("final_loss").get<double>()};
}

json PhaseJson(const AsrPhaseLog& p) {
  return {{"checkpoint_losses", p.checkpoint_losses}, {"skipped", p.skipped}};
}

AsrPhaseLog PhaseFromJson(const json& j) {
  return {j.at("checkpoint_losses").get<std::vector<double>>(), j.at("skipped").get<std::size_t>()};
}

json RunJson(const AsrRunLog& a) {
  return {{"key", a.key},
          {"spec_aug", a.spec_aug},
          {"syn_data", a.syn_data},
          {"phase1", PhaseJson(a.phase1)},
          {"phase2", PhaseJson(a.phase2)},
          {"eval_initial", a.eval_initial},
          {"eval_after_phase1", a.eval_after_phase1},
          {"eval_after_phase2", a.eval_after_phase2}};
}

AsrRunLog RunFromJson(const json& j) {
  AsrRunLog a;
  a.key = j.at("key").get<std::string>();
  a.spec_aug = j.at("spec_aug").get<bool>();
  a.syn_data = j.at("syn_data").get<bool>();
  a.phase1 = PhaseFromJson(j.at("phase1"));
  a.phase2 = PhaseFromJson(j.at("phase2"));
  a.eval_initial = j.at("eval_initial").get<double>();
  a.eval_after_phase1 = j.at("eval_after_phase1").get<double>();
  a.eval_after_phase2 = j.at("eval_after_phase2").get<double>();
  return a;
}

json RowJson(const ReportRow& row) {
  return {{"spec_aug", row.condition.spec_aug},
          {"syn_data", row.condition.syn_data},
          {"lm", row.condition.lm},
          {"lm_weight", row.lm_weight},
          {"wer", std::vector<double>(row.wer, row.wer + kEvalSets)}};
}

ReportRow RowFromJson(const json& j) {
  ReportRow r;
  r.condition = {j.at("spec_aug").get<bool>(), j.at("syn_data").get<bool>(), j.at("lm").get<bool>()};
  r.lm_weight = j.at("lm_weight").get<double>();
  const auto w = j.at("wer").get<std::vector<double>>();
  Require(w.size() == kEvalSets, "results: wrong WER count", ErrorCode::kFormat);
  std::copy(w.begin(), w.end(), r.wer);
  return r;
}

json SweepJson(const SweepRow& s) {
  return {{"condition", s.condition}, {"lm_weight", s.lm_weight}, {"wer", std::vector<double>(s.wer, s.wer + kEvalSets)}};
}

SweepRow SweepFromJson(const json& j) {
  SweepRow s;
  s.condition = j.at("condition").get<std::size_t>();
  s.lm_weight = j.at("lm_weight").get<double>();
  const auto w = j.at("wer").get<std::vector<double>>();
  Require(w.size() == kEvalSets, "results: wrong WER count", ErrorCode::kFormat);
  std::copy(w.begin(), w.end(), s.wer);
  return s;
}

void WriteText(const fs::path& path, const std::string& s) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << s;
}

json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

// Artifact produced by an earlier stage; missing ones name that stage.
fs::path Needed(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kStage, "missing " + path.string() + "; run stage " + stage + " first");
  }
  return path;
}

std::vector<std::string> DistinctKeys(const std::vector<Condition>& conds) {
  std::vector<std::string> keys;
  for (const auto& c : conds) {
    const auto k = RunKey(c.spec_aug, c.syn_data);
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  return keys;
}

}  // namespace

std::string RunKey(bool spec_aug, bool syn_data) {
  return std::string(spec_aug ? "specaug" : "plain") + (syn_data ? "-syn" : "-real");
}

const std::vector<std::string>& StageNames() {
  static const std::vector<std::string> names = {"ingest",    "featurize-tts", "train-tts",  "train-mel2lin",
                                                 "synthesize", "mix",          "featurize-asr", "train-asr",
                                                 "decode",    "report"};
  return names;
}

void SaveResults(const fs::path& path, const ExperimentResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back(RowJson(row));
  json sweep = json::array();
  for (const auto& s : r.sweep) sweep.push_back(SweepJson(s));
  json runs = json::array();
  for (const auto& a : r.asr_runs) runs.push_back(RunJson(a));
  json stages = json::array();
  for (const auto& [name, sec] : r.stage_seconds) stages.push_back({{"stage", name}, {"seconds", sec}});
  json plan = json::array();
  for (const auto& c : r.phase2_plan.checkpoints) {
    plan.push_back({{"real_hours", c.real_hours}, {"synthetic_hours", c.synthetic_hours}, {"repeats", c.repeats}});
  }
  const json j{{"rows", rows},
               {"sweep", sweep},
               {"tts", TrainJson(r.tts)},
               {"mel2lin", TrainJson(r.mel2lin)},
               {"mel2lin_baseline", r.mel2lin_baseline},
               {"synthetic_chars", r.synthetic_chars},
               {"synthetic_frames", r.synthetic_frames},
               {"duration_correlation", r.duration_correlation},
               {"asr_runs", runs},
               {"phase2_plan", plan},
               {"stage_seconds", stages},
               {"failed_stage", r.failed_stage},
               {"error", r.error}};
  WriteText(path, j.dump(1) + "\n");
}

ExperimentResult LoadResults(const fs::path& path) {
  const json j = ReadJson(path);
  ExperimentResult r;
  try {
    for (const auto& row : j.at("rows")) r.rows.push_back(RowFromJson(row));
    for (const auto& s : j.at("sweep")) r.sweep.push_back(SweepFromJson(s));
    r.tts = TrainFromJson(j.at("tts"));
    r.mel2lin = TrainFromJson(j.at("mel2lin"));
    r.mel2lin_baseline = j.at("mel2lin_baseline").get<double>();
    r.synthetic_chars = j.at("synthetic_chars").get<std::vector<std::size_t>>();
    r.synthetic_frames = j.at("synthetic_frames").get<std::vector<std::size_t>>();
    r.duration_correlation = j.at("duration_correlation").get<double>();
    for (const auto& a : j.at("asr_runs")) r.asr_runs.push_back(RunFromJson(a));
    for (const auto& c : j.at("phase2_plan")) {
      CheckpointPlan cp;
      cp.real_hours = c.at("real_hours").get<double>();
      cp.synthetic_hours = c.at("synthetic_hours").get<double>();
      cp.repeats = c.at("repeats").get<std::size_t>();
      r.phase2_plan.checkpoints.push_back(cp);
    }
    for (const auto& s : j.at("stage_seconds")) {
      r.stage_seconds.emplace_back(s.at("stage").get<std::string>(), s.at("seconds").get<double>());
    }
    r.failed_stage = j.at("failed_stage").get<std::string>();
    r.error = j.at("error").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  return r;
}

Experiment::Experiment(ExperimentConfig cfg, int workers)
    : cfg_(std::move(cfg)), workers_(std::max(1, workers)), work_(cfg_.work_dir), evals_(kEvalSets),
      eval_data_(kEvalSets) {
  cfg_.Validate();
  fs::create_directories(work_);
  SaveExperimentConfig(work_ / "config.json", cfg_);
}

bool Experiment::needs_synthetic() const {
  return std::any_of(cfg_.conditions.begin(), cfg_.conditions.end(), [](const Condition& c) { return c.syn_data; });
}

void Experiment::WriteLog(const std::string& stage, const json& j) const {
  WriteText(work_ / "logs" / (stage + ".json"), j.dump(1) + "\n");
}

std::optional<json> Experiment::ReadLog(const std::string& stage) const {
  const fs::path p = work_ / "logs" / (stage + ".json");
  if (!fs::exists(p)) return std::nullopt;
  return ReadJson(p);
}

void Experiment::RunStage(const std::string& name) {
  static const std::map<std::string, void (Experiment::*)()> stages = {
      {"ingest", &Experiment::Ingest},
      {"featurize-tts", &Experiment::FeaturizeTts},
      {"train-tts", &Experiment::TrainTts},
      {"train-mel2lin", &Experiment::TrainMel2Lin},
      {"synthesize", &Experiment::Synthesize},
      {"mix", &Experiment::Mix},
      {"featurize-asr", &Experiment::FeaturizeAsr},
      {"train-asr", &Experiment::TrainAsr},
      {"decode", &Experiment::Decode},
      {"report", &Experiment::Report}};
  const auto it = stages.find(name);
  Require(it != stages.end(), "unknown stage '" + name + "'", ErrorCode::kConfig);
  LogInfo("stage ", name);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    (this->*(it->second))();
  } catch (const std::exception& e) {
    result_.failed_stage = name;
    result_.error = e.what();
    LogMessage(LogLevel::kError, "stage " + name + " failed: " + e.what());
    try {
      Collect();
      WriteText(work_ / "report.txt",
                ReportTable(result_.rows) + "FAILED at stage " + name + ": " + e.what() + "\n");
    } catch (const std::exception& inner) {
      LogWarn("could not record the failure: ", inner.what());
    }
    const auto* err = dynamic_cast<const Error*>(&e);
    if (err != nullptr && err->code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kStage, "stage " + name + " failed: " + e.what());
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json timing = ReadLog("timing").value_or(json::object());
  timing[name] = sec;
  WriteLog("timing", timing);
}

const ExperimentResult& Experiment::Run() {
  const std::set<std::string> synthetic_only = {"featurize-tts", "train-tts", "train-mel2lin", "synthesize"};
  fs::remove_all(work_ / "logs");
  for (const auto& name : StageNames()) {
    if (!needs_synthetic() && synthetic_only.count(name)) continue;
    RunStage(name);
  }
  return Collect();
}

const ExperimentResult& Experiment::Collect() {
  ExperimentResult r;
  r.failed_stage = result_.failed_stage;
  r.error = result_.error;
  if (auto j = ReadLog("train-tts")) r.tts = TrainFromJson(*j);
  if (auto j = ReadLog("train-mel2lin")) {
    r.mel2lin = TrainFromJson(j->at("result"));
    r.mel2lin_baseline = j->at("baseline").get<double>();
  }
  if (auto j = ReadLog("synthesize")) {
    r.synthetic_chars = j->at("chars").get<std::vector<std::size_t>>();
    r.synthetic_frames = j->at("frames").get<std::vector<std::size_t>>();
    r.duration_correlation = j->at("correlation").get<double>();
  }
  if (auto j = ReadLog("mix")) {
    const auto key = j->at("phase2_key").get<std::string>();
    if (!key.empty()) r.phase2_plan = LoadMixPlan(work_ / "asr" / key / "plan-phase2.json");
  }
  if (auto j = ReadLog("train-asr")) {
    for (const auto& a : j->at("runs")) r.asr_runs.push_back(RunFromJson(a));
  }
  if (auto j = ReadLog("decode")) {
    for (const auto& row : j->at("rows")) r.rows.push_back(RowFromJson(row));
    for (const auto& s : j->at("sweep")) r.sweep.push_back(SweepFromJson(s));
  }
  if (auto j = ReadLog("timing")) {
    for (const auto& name : StageNames()) {
      if (j->contains(name)) r.stage_seconds.emplace_back(name, j->at(name).get<double>());
    }
  }
  result_ = std::move(r);
  SaveResults(work_ / "results.json", result_);
  return result_;
}

// ---- corpora ----------------------------------------------------------------

void Experiment::Ingest() {
  auto& c = cfg_.corpora;
  if (c.generate_toy) {
    auto toy = ToyCorpusConfig::Default();
    toy.seed = cfg_.seed;
    const fs::path dir = fs::absolute(work_ / "corpus");
    GenerateToyCorpus(dir, toy);
    c.train = (dir / "train.jsonl").string();
    c.dev_clean = (dir / "dev_clean.jsonl").string();
    c.dev_other = (dir / "dev_other.jsonl").string();
    c.test_clean = (dir / "test_clean.jsonl").string();
    c.test_other = (dir / "test_other.jsonl").string();
    c.text = (dir / "text.txt").string();
  }
  Require(!c.train.empty(), "config: corpora.train is required", ErrorCode::kConfig);
  const std::string* paths[] = {&c.dev_clean, &c.dev_other, &c.test_clean, &c.test_other};
  for (std::size_t k = 0; k < kEvalSets; ++k) {
    Require(!paths[k]->empty(), "config: corpora." + EvalSetNames()[k] + " is required", ErrorCode::kConfig);
  }
  Require(!needs_synthetic() || !c.text.empty(), "config: corpora.text is required for synthetic data",
          ErrorCode::kConfig);

  auto absolute = [](Manifest m) {
    for (auto& r : m) r.audio_path = fs::absolute(r.audio_path).string();
    return m;
  };
  const fs::path dir = work_ / "manifests";
  fs::create_directories(dir);
  train_ = absolute(pipeline::Ingest(c.train).manifest);
  WriteManifest(dir / "train.jsonl", *train_);
  json sizes;
  for (std::size_t k = 0; k < kEvalSets; ++k) {
    evals_[k] = absolute(pipeline::Ingest(*paths[k]).manifest);
    WriteManifest(dir / (EvalSetNames()[k] + ".jsonl"), evals_[k]);
    sizes[EvalSetNames()[k]] = evals_[k].size();
  }
  text_lines_ = c.text.empty() ? std::vector<std::string>{} : ReadLines(c.text);
  std::string text;
  for (const auto& l : text_lines_) text += l + "\n";
  WriteText(dir / "text.txt", text);
  SaveExperimentConfig(work_ / "config.json", cfg_);
  WriteLog("ingest", {{"train", train_->size()}, {"train_hours", TotalHours(*train_)}, {"eval", sizes},
                      {"text_lines", text_lines_.size()}});
}

void Experiment::EnsureCorpora() {
  if (train_) return;
  const fs::path dir = work_ / "manifests";
  if (!fs::exists(dir / "train.jsonl")) {
    Ingest();
    return;
  }
  train_ = ReadManifest(dir / "train.jsonl");
  for (std::size_t k = 0; k < kEvalSets; ++k) {
    evals_[k] = ReadManifest(Needed(dir / (EvalSetNames()[k] + ".jsonl"), "ingest"));
  }
  text_lines_ = ReadLines(Needed(dir / "text.txt", "ingest"));
}

// ---- TTS side -----------------------------------------------------------------

void Experiment::FeaturizeTts() {
  EnsureCorpora();
  const fs::path dir = work_ / "tts";
  fs::create_directories(dir);
  mels_ = ExtractFeatures(*train_, dsp::FeatureKind::kLogMel, cfg_.features, workers_);
  lins_ = ExtractFeatures(*train_, dsp::FeatureKind::kLinearMag, cfg_.features, workers_);
  mel_stats_ = dsp::EstimateNormStats(mels_);
  lin_stats_ = dsp::EstimateNormStats(lins_);
  mels_ = Normalize(std::move(mels_), *mel_stats_);
  lins_ = Normalize(std::move(lins_), *lin_stats_);
  dsp::WriteNormStats(dir / "mel.stats", *mel_stats_);
  dsp::WriteNormStats(dir / "lin.stats", *lin_stats_);
}

void Experiment::EnsureTtsFeatures() {
  if (!mels_.empty()) return;
  EnsureCorpora();
  const fs::path dir = work_ / "tts";
  if (!fs::exists(dir / "mel.stats") || !fs::exists(dir / "lin.stats")) {
    FeaturizeTts();
    return;
  }
  mel_stats_ = dsp::ReadNormStats(dir / "mel.stats");
  lin_stats_ = dsp::ReadNormStats(dir / "lin.stats");
  mels_ = Normalize(ExtractFeatures(*train_, dsp::FeatureKind::kLogMel, cfg_.features, workers_), *mel_stats_);
  lins_ = Normalize(ExtractFeatures(*train_, dsp::FeatureKind::kLinearMag, cfg_.features, workers_), *lin_stats_);
}

void Experiment::TrainTts() {
  EnsureTtsFeatures();
  static const text::CharVocab vocab;
  std::vector<std::vector<int>> chars;
  for (const auto& r : *train_) chars.push_back(vocab.Encode(r.transcript));
  auto model = tts::TtsModel::Create(cfg_.tts.model, DeriveSeed(cfg_.seed, 10));
  const auto res = pipeline::TrainTts(model, chars, mels_, cfg_.tts.train, DeriveSeed(cfg_.seed, 11), workers_);
  model.Save(work_ / "tts" / "tts.ckpt");
  WriteLog("train-tts", TrainJson(res));
}

void Experiment::TrainMel2Lin() {
  EnsureTtsFeatures();
  auto model = tts::Mel2LinModel::Create(cfg_.mel2lin.model, DeriveSeed(cfg_.seed, 12));
  const auto res = pipeline::TrainMel2Lin(model, mels_, lins_, cfg_.mel2lin.train, DeriveSeed(cfg_.seed, 13), workers_);
  model.Save(work_ / "tts" / "mel2lin.ckpt");
  WriteLog("train-mel2lin", {{"result", TrainJson(res)}, {"baseline", ConstantMeanL1(lins_)}});
}

void Experiment::Synthesize() {
  EnsureTtsFeatures();
  Require(!text_lines_.empty(), "synthesize: no text-only lines", ErrorCode::kStage);
  const auto tts_model = tts::TtsModel::Load(Needed(work_ / "tts" / "tts.ckpt", "train-tts"));
  const auto m2l = tts::Mel2LinModel::Load(Needed(work_ / "tts" / "mel2lin.ckpt", "train-mel2lin"));
  const Vocoder v{tts_model, m2l, *lin_stats_, cfg_.features, cfg_.tts.max_steps, cfg_.tts.griffin_lim_iters,
                  cfg_.tts.deemphasize};
  const auto speakers = DonorSpeakers(tts_model, *train_, mels_, text_lines_.size());
  const auto syn = GenerateSynthetic(text_lines_, v, speakers, work_ / "synthetic", workers_);
  std::vector<double> x(syn.chars.begin(), syn.chars.end());
  std::vector<double> y(syn.frames.begin(), syn.frames.end());
  const double r = x.size() >= 2 ? Pearson(x, y) : 0.0;
  LogInfo("synthesize: ", syn.manifest.size(), " utterances, duration/char r = ", r);
  synthetic_ = syn.manifest;
  WriteLog("synthesize", {{"utterances", syn.manifest.size()},
                          {"hours", TotalHours(syn.manifest)},
                          {"skipped", syn.skipped},
                          {"truncated", syn.truncated},
                          {"chars", syn.chars},
                          {"frames", syn.frames},
                          {"correlation", r}});
}

void Experiment::EnsureSynthetic() {
  if (synthetic_) return;
  synthetic_ = ReadManifest(Needed(work_ / "synthetic" / "synthetic.jsonl", "synthesize"));
}

// ---- ASR side -----------------------------------------------------------------

void Experiment::Mix() {
  EnsureCorpora();
  if (needs_synthetic()) EnsureSynthetic();
  const Manifest none;
  const Manifest& syn = synthetic_ ? *synthetic_ : none;
  const double budget =
      cfg_.schedule.phase1_epochs * TotalHours(*train_) / static_cast<double>(cfg_.schedule.phase1_checkpoints);
  const fs::path dir = work_ / "asr";
  const MixPlan plan1 = BuildTrainingMix(*train_, {}, MixPolicy{1.0, 0.0}, budget, cfg_.schedule.phase1_checkpoints,
                                         DeriveSeed(cfg_.seed, 30));
  SaveMixPlan(dir / "plan-phase1.json", plan1);
  std::string phase2_key;
  for (const auto& key : DistinctKeys(cfg_.conditions)) {
    const bool with_syn = key.ends_with("-syn");
    const MixPlan plan2 = BuildTrainingMix(*train_, syn, with_syn ? cfg_.mix : MixPolicy{1.0, 0.0}, budget,
                                           cfg_.schedule.phase2_checkpoints, DeriveSeed(cfg_.seed, 31));
    SaveMixPlan(dir / key / "plan-phase2.json", plan2);
    if (with_syn && phase2_key.empty()) phase2_key = key;
  }
  WriteLog("mix", {{"budget_hours_per_checkpoint", budget},
                   {"phase1_hours", plan1.total_hours()},
                   {"phase2_key", phase2_key}});
}

void Experiment::FeaturizeAsr() {
  EnsureCorpora();
  const fs::path dir = work_ / "asr";
  fs::create_directories(dir);
  std::vector<std::string> lines;
  for (const auto& r : *train_) lines.push_back(r.transcript);
  lines.insert(lines.end(), text_lines_.begin(), text_lines_.end());
  const auto bpe = LearnBpe(lines, cfg_.asr.bpe_merges);
  text::SaveBpe(dir / "bpe.txt", bpe);
  vocab_ = text::BpeVocab(bpe);
  lm_ = TrainBigram(lines, *vocab_);
  lm_->Save(dir / "bigram.txt");
  const auto stats =
      dsp::EstimateNormStats(ExtractFeatures(*train_, dsp::FeatureKind::kMfcc, cfg_.features, workers_));
  dsp::WriteNormStats(dir / "mfcc.stats", stats);
  cfg_.asr.model.vocab = vocab_->size();
  real_data_ = LoadAsrData(*train_, *vocab_, cfg_.features, stats, workers_);
  if (needs_synthetic()) {
    EnsureSynthetic();
    syn_data_ = LoadAsrData(*synthetic_, *vocab_, cfg_.features, stats, workers_);
  }
  for (std::size_t k = 0; k < kEvalSets; ++k) {
    eval_data_[k] = LoadAsrData(evals_[k], *vocab_, cfg_.features, stats, workers_);
  }
}

void Experiment::EnsureAsrData() {
  if (vocab_) return;
  const fs::path dir = work_ / "asr";
  if (!fs::exists(dir / "bpe.txt") || !fs::exists(dir / "bigram.txt") || !fs::exists(dir / "mfcc.stats")) {
    FeaturizeAsr();
    return;
  }
  EnsureCorpora();
  vocab_ = text::BpeVocab(text::LoadBpe(dir / "bpe.txt"));
  lm_ = asr::BigramLm::Load(dir / "bigram.txt");
  const auto stats = dsp::ReadNormStats(dir / "mfcc.stats");
  cfg_.asr.model.vocab = vocab_->size();
  real_data_ = LoadAsrData(*train_, *vocab_, cfg_.features, stats, workers_);
  if (needs_synthetic()) {
    EnsureSynthetic();
    syn_data_ = LoadAsrData(*synthetic_, *vocab_, cfg_.features, stats, workers_);
  }
  for (std::size_t k = 0; k < kEvalSets; ++k) {
    eval_data_[k] = LoadAsrData(evals_[k], *vocab_, cfg_.features, stats, workers_);
  }
}

void Experiment::TrainAsr() {
  EnsureAsrData();
  const fs::path dir = work_ / "asr";
  const MixPlan plan1 = LoadMixPlan(Needed(dir / "plan-phase1.json", "mix"));
  std::map<bool, fs::path> phase1_state;
  std::map<bool, AsrPhaseLog> phase1_log;
  json runs = json::array();
  for (const auto& key : DistinctKeys(cfg_.conditions)) {
    AsrRunLog run;
    run.key = key;
    run.spec_aug = key.starts_with("specaug");
    run.syn_data = key.ends_with("-syn");
    LogInfo("asr run ", key);
    const MixPlan plan2 = LoadMixPlan(Needed(dir / key / "plan-phase2.json", "mix"));
    Require(!plan2.checkpoints.empty(), "train-asr: empty phase-2 plan", ErrorCode::kStage);
    const AsrData* syn = run.syn_data ? &syn_data_ : nullptr;
    const augment::SpecAugmentParams* sa = run.spec_aug ? &cfg_.spec_augment : nullptr;

    auto model = asr::AsrModel::Create(cfg_.asr.model, DeriveSeed(cfg_.seed, 20));
    const auto& probe = plan2.checkpoints.front().entries;
    const double ctc_w = cfg_.asr.model.ctc_weight;
    run.eval_initial = EvaluateAsrLoss(model, real_data_, syn, probe, ctc_w, workers_);
    const TrainConfig tc{0, cfg_.asr.batch_size, cfg_.asr.optim};
    nn::Trainer trainer(model.params(), MakeTrainerConfig(tc, DeriveSeed(cfg_.seed, 21), workers_));
    const std::string meta = json{{"kind", "asr"}, {"config", cfg_.asr.model}}.dump();
    // Phase 1 sees only real data, so runs sharing the SpecAugment setting share it.
    if (const auto cached = phase1_state.find(run.spec_aug); cached != phase1_state.end()) {
      trainer.Load(cached->second);
      run.phase1 = phase1_log.at(run.spec_aug);
    } else {
      run.phase1 = RunAsrPhase(model, trainer, real_data_, nullptr, plan1, cfg_.asr.batch_size, sa,
                               DeriveSeed(cfg_.seed, 40), 0);
      const fs::path state = dir / (std::string("phase1-") + (run.spec_aug ? "specaug" : "plain") + ".state");
      trainer.Save(state, meta);
      phase1_state[run.spec_aug] = state;
      phase1_log[run.spec_aug] = run.phase1;
    }
    run.eval_after_phase1 = EvaluateAsrLoss(model, real_data_, syn, probe, ctc_w, workers_);
    if (cfg_.schedule.lr_reset) trainer.ResetOptimizer();
    run.phase2 = RunAsrPhase(model, trainer, real_data_, syn, plan2, cfg_.asr.batch_size, sa,
                             DeriveSeed(cfg_.seed, 40), cfg_.schedule.phase1_checkpoints);
    run.eval_after_phase2 = EvaluateAsrLoss(model, real_data_, syn, probe, ctc_w, workers_);
    LogInfo("asr run ", key, ": probe loss ", run.eval_initial, " -> ", run.eval_after_phase1, " -> ",
            run.eval_after_phase2);
    model.Save(dir / key / "asr.ckpt");
    runs.push_back(RunJson(run));
  }
  WriteLog("train-asr", {{"runs", runs}});
}

void Experiment::Decode() {
  EnsureAsrData();
  const fs::path dir = work_ / "asr";
  std::map<std::string, asr::AsrModel> models;
  for (const auto& key : DistinctKeys(cfg_.conditions)) {
    models.emplace(key, asr::AsrModel::Load(Needed(dir / key / "asr.ckpt", "train-asr")));
  }
  const asr::BeamOptions opts{cfg_.asr.beam_size, cfg_.asr.max_len};
  std::map<std::pair<std::string, double>, std::array<double, kEvalSets>> cache;
  auto wer_of = [&](const std::string& key, double lambda) {
    if (const auto it = cache.find({key, lambda}); it != cache.end()) return it->second;
    std::array<double, kEvalSets> w{};
    for (std::size_t k = 0; k < kEvalSets; ++k) {
      const auto out = DecodeSet(models.at(key), *vocab_, eval_data_[k], lambda == 0.0 ? nullptr : &*lm_, lambda,
                                 opts, workers_);
      w[k] = 100.0 * out.total.rate;
      std::string hyps;
      for (std::size_t i = 0; i < out.hyps.size(); ++i) {
        hyps += eval_data_[k].manifest[i].utterance_id + '\t' + out.hyps[i] + '\n';
      }
      WriteText(dir / key / ("hyp-" + EvalSetNames()[k] + "-" + std::to_string(lambda) + ".txt"), hyps);
    }
    cache.emplace(std::make_pair(key, lambda), w);
    return w;
  };
  json rows = json::array(), sweep = json::array();
  for (std::size_t c = 0; c < cfg_.conditions.size(); ++c) {
    const auto& cond = cfg_.conditions[c];
    const std::string key = RunKey(cond.spec_aug, cond.syn_data);
    ReportRow row;
    row.condition = cond;
    if (cond.lm) {
      std::vector<SweepRow> cand;
      for (double lambda : cfg_.lm_sweep) {
        SweepRow s;
        s.condition = c;
        s.lm_weight = lambda;
        const auto w = wer_of(key, lambda);
        std::copy(w.begin(), w.end(), s.wer);
        cand.push_back(s);
        sweep.push_back(SweepJson(s));
      }
      const SweepRow& best = cand[SelectLmWeight(cand)];
      row.lm_weight = best.lm_weight;
      std::copy(best.wer, best.wer + kEvalSets, row.wer);
    } else {
      const auto w = wer_of(key, 0.0);
      std::copy(w.begin(), w.end(), row.wer);
    }
    rows.push_back(RowJson(row));
  }
  WriteLog("decode", {{"rows", rows}, {"sweep", sweep}});
}

void Experiment::Report() {
  const json j = ReadJson(Needed(work_ / "logs" / "decode.json", "decode"));
  std::vector<ReportRow> rows;
  std::vector<SweepRow> sweep;
  for (const auto& row : j.at("rows")) rows.push_back(RowFromJson(row));
  for (const auto& s : j.at("sweep")) sweep.push_back(SweepFromJson(s));
  WriteText(work_ / "report.csv", ReportCsv(rows));
  WriteText(work_ / "report.txt", ReportTable(rows));
  WriteText(work_ / "sweep.csv", SweepCsv(sweep));
  Collect();
}

ExperimentResult RunExperiment(ExperimentConfig cfg, int workers) {
  Experiment e(std::move(cfg), workers);
  return e.Run();
}

}  // namespace synthasr::pipeline
