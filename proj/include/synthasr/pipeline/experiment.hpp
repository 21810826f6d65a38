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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "synthasr/pipeline/stages.hpp"

namespace synthasr::pipeline {

struct AsrRunLog {
  std::string key;  // plain-real, specaug-real, plain-syn or specaug-syn
  bool spec_aug = false;
  bool syn_data = false;
  AsrPhaseLog phase1;
  AsrPhaseLog phase2;
  double eval_initial = 0.0;  // phase-2 mix of the first checkpoint, fresh model
  double eval_after_phase1 = 0.0;
  double eval_after_phase2 = 0.0;
};

struct ExperimentResult {
  std::vector<ReportRow> rows;
  std::vector<SweepRow> sweep;
  TrainResult tts;
  TrainResult mel2lin;
  double mel2lin_baseline = 0.0;
  std::vector<std::size_t> synthetic_chars;
  std::vector<std::size_t> synthetic_frames;
  double duration_correlation = 0.0;
  std::vector<AsrRunLog> asr_runs;
  MixPlan phase2_plan;  // of the first run that used synthetic data
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::string failed_stage;  // empty on success
  std::string error;
};

void SaveResults(const std::filesystem::path& path, const ExperimentResult& r);
ExperimentResult LoadResults(const std::filesystem::path& path);

// Stage names in execution order.
const std::vector<std::string>& StageNames();

// One experiment rooted at cfg.work_dir. Each stage writes its artifacts
// and a log under the work directory and reads earlier stages' outputs
// from there, so stages may run in one process or one per invocation.
//
// Layout:
//   manifests/{train,dev_clean,dev_other,test_clean,test_other}.jsonl, text.txt
//   tts/{mel.stats,lin.stats,tts.ckpt,mel2lin.ckpt}
//   synthetic/{wav/,synthetic.jsonl}
//   asr/{bpe.txt,bigram.txt,mfcc.stats,plan-phase1.json}
//   asr/<run>/{plan-phase2.json,asr.ckpt,hyp-*.txt}
//   logs/<stage>.json, report.csv, report.txt, sweep.csv, results.json
class Experiment {
 public:
  Experiment(ExperimentConfig cfg, int workers);

  // Runs one stage by name with timing; failures are recorded in
  // results.json and report.txt and rethrown as stage errors.
  void RunStage(const std::string& name);
  // Every stage in order; returns the collected results.
  const ExperimentResult& Run();
  // Gathers all stage logs found on disk and writes results.json.
  const ExperimentResult& Collect();

  bool needs_synthetic() const;
  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& work_dir() const { return work_; }

  void Ingest();
  void FeaturizeTts();
  void TrainTts();
  void TrainMel2Lin();
  void Synthesize();
  void Mix();
  void FeaturizeAsr();
  void TrainAsr();
  void Decode();
  void Report();

 private:
  void EnsureCorpora();
  void EnsureTtsFeatures();
  void EnsureSynthetic();
  void EnsureAsrData();
  void WriteLog(const std::string& stage, const nlohmann::json& j) const;
  std::optional<nlohmann::json> ReadLog(const std::string& stage) const;

  ExperimentConfig cfg_;
  int workers_;
  std::filesystem::path work_;
  ExperimentResult result_;

  std::optional<Manifest> train_;
  std::vector<Manifest> evals_;
  std::vector<std::string> text_lines_;
  std::vector<dsp::FeatureMatrix> mels_, lins_;
  std::optional<dsp::NormStats> mel_stats_, lin_stats_;
  std::optional<Manifest> synthetic_;
  std::optional<text::BpeVocab> vocab_;
  std::optional<asr::BigramLm> lm_;
  AsrData real_data_, syn_data_;
  std::vector<AsrData> eval_data_;
};

// Convenience wrapper: Experiment(cfg, workers).Run().
ExperimentResult RunExperiment(ExperimentConfig cfg, int workers);

// Key of the ASR model trained for a condition.
std::string RunKey(bool spec_aug, bool syn_data);

}  // namespace synthasr::pipeline
