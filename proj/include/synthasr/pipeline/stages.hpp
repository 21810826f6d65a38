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
#include <optional>
#include <string>
#include <vector>

#include "synthasr/asr/asr.hpp"
#include "synthasr/augment.hpp"
#include "synthasr/dsp/dsp.hpp"
#include "synthasr/nn/trainer.hpp"
#include "synthasr/pipeline/config.hpp"
#include "synthasr/pipeline/manifest.hpp"
#include "synthasr/text/text.hpp"
#include "synthasr/tts/tts.hpp"

namespace synthasr::pipeline {

// ---- features -------------------------------------------------------------

dsp::MelFilterbank MakeFilterbank(const FeatureConfig& cfg, int sample_rate = dsp::kDefaultSampleRate);
dsp::FeatureMatrix ComputeFeatures(const dsp::Waveform& w, dsp::FeatureKind kind, const FeatureConfig& cfg);
// Reads every record's audio; parallel over utterances.
std::vector<dsp::FeatureMatrix> ExtractFeatures(const Manifest& m, dsp::FeatureKind kind,
                                                const FeatureConfig& cfg, int workers);
std::vector<dsp::FeatureMatrix> Normalize(std::vector<dsp::FeatureMatrix> feats, const dsp::NormStats& s);

// Writes <out_dir>/<id>.fea per record and <out_dir>/stats.txt. Features are
// normalized with `stats` when given, else with statistics of `m` itself
// when `normalize` is set.
dsp::NormStats Featurize(const Manifest& m, dsp::FeatureKind kind, const FeatureConfig& cfg,
                         const std::filesystem::path& out_dir, bool normalize,
                         const dsp::NormStats* stats, int workers);

// ---- augmentation ---------------------------------------------------------

struct AudioAugmentOptions {
  std::vector<double> speeds;                 // one output per factor; none keeps the input rate
  std::optional<double> silence_threshold_db;  // silence removal when set
};

// Writes augmented WAVs into out_dir and returns their manifest. Speed
// copies get the id suffix "-sp<factor>".
Manifest AugmentAudio(const Manifest& m, const AudioAugmentOptions& opts,
                      const std::filesystem::path& out_dir, int workers);

// Seed of the SpecAugment draw for one utterance visit.
std::uint64_t SpecAugmentSeed(std::uint64_t seed, std::uint64_t visit, std::uint64_t utterance);

// Masks every <id>.fea of in_dir into out_dir.
void SpecAugmentFeatures(const Manifest& m, const std::filesystem::path& in_dir,
                         const augment::SpecAugmentParams& p, std::uint64_t seed,
                         const std::filesystem::path& out_dir, int workers);

// ---- TTS and mel-to-linear training ---------------------------------------

struct TrainResult {
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;  // mean batch loss while training
  double final_loss = 0.0;           // re-evaluated after the last epoch
};

nn::TrainerConfig MakeTrainerConfig(const TrainConfig& t, std::uint64_t seed, int workers);

// `mels` are normalized log-mel targets; speaker style comes from each
// target itself.
TrainResult TrainTts(tts::TtsModel& model, const std::vector<std::vector<int>>& chars,
                     const std::vector<dsp::FeatureMatrix>& mels, const TrainConfig& cfg,
                     std::uint64_t seed, int workers);

// Normalized (mel, linear) pairs from the same audio; L1 objective.
TrainResult TrainMel2Lin(tts::Mel2LinModel& model, const std::vector<dsp::FeatureMatrix>& mels,
                         const std::vector<dsp::FeatureMatrix>& lins, const TrainConfig& cfg,
                         std::uint64_t seed, int workers);

// Baseline that always predicts the normalized mean (zero): mean |target|.
double ConstantMeanL1(const std::vector<dsp::FeatureMatrix>& lins);

// ---- synthesis ------------------------------------------------------------

struct Vocoder {
  const tts::TtsModel& tts;
  const tts::Mel2LinModel& mel2lin;
  const dsp::NormStats& lin_stats;
  FeatureConfig features;
  std::size_t max_steps = 400;
  std::size_t griffin_lim_iters = 1;
  bool deemphasize = false;
};

struct SpeakerRef {
  std::string speaker_id;
  std::vector<double> embedding;
};

struct Synthesized {
  dsp::Waveform wav;
  std::size_t frames = 0;
  bool truncated = false;
};

// normalize_text -> synthesize -> mel_to_linear -> Griffin-Lim -> WAV.
Synthesized SynthesizeLine(const Vocoder& v, const std::string& line, const std::vector<double>& speaker);

// Round-robin over speakers in order of first appearance; within a speaker
// the donor utterances are cycled. `norm_mels` are the normalized log-mels
// of `donors`.
std::vector<SpeakerRef> DonorSpeakers(const tts::TtsModel& model, const Manifest& donors,
                                      const std::vector<dsp::FeatureMatrix>& norm_mels,
                                      std::size_t n_lines);

struct SyntheticCorpus {
  Manifest manifest;
  std::vector<std::size_t> chars;   // normalized character count per record
  std::vector<std::size_t> frames;  // synthesized mel frames per record
  std::size_t skipped = 0;          // lines with no usable characters
  std::size_t truncated = 0;
};

// Writes <out_dir>/wav/syn-<i>.wav and <out_dir>/synthetic.jsonl.
SyntheticCorpus GenerateSynthetic(const std::vector<std::string>& lines, const Vocoder& v,
                                  const std::vector<SpeakerRef>& speakers,
                                  const std::filesystem::path& out_dir, int workers);

double Pearson(const std::vector<double>& x, const std::vector<double>& y);

// ---- mixing ---------------------------------------------------------------

struct PlanEntry {
  Origin origin = Origin::kReal;
  std::size_t index = 0;  // into the manifest of that origin
  double duration_s = 0.0;
};

struct CheckpointPlan {
  std::vector<PlanEntry> entries;
  double real_hours = 0.0;
  double synthetic_hours = 0.0;
  std::size_t repeats = 0;  // entries drawn twice within this checkpoint
  double total_hours() const { return real_hours + synthetic_hours; }
};

struct MixPlan {
  std::vector<CheckpointPlan> checkpoints;
  double total_hours() const;
};

// Per checkpoint, each origin receives budget * part / (real + synthetic)
// hours drawn from its own shuffled stream; the stream reshuffles when it
// runs out, so consecutive checkpoints cover the data like epochs.
MixPlan BuildTrainingMix(const Manifest& real, const Manifest& synthetic, const MixPolicy& policy,
                         double budget_hours, std::size_t checkpoints, std::uint64_t seed);

void SaveMixPlan(const std::filesystem::path& path, const MixPlan& plan);
MixPlan LoadMixPlan(const std::filesystem::path& path);

// ---- ASR ------------------------------------------------------------------

struct AsrData {
  Manifest manifest;
  std::vector<dsp::FeatureMatrix> feats;  // normalized MFCC
  std::vector<std::vector<int>> labels;
};

AsrData LoadAsrData(const Manifest& m, const text::BpeVocab& vocab, const FeatureConfig& cfg,
                    const dsp::NormStats& stats, int workers);

text::BpeModel LearnBpe(const std::vector<std::string>& lines, std::size_t merges);
asr::BigramLm TrainBigram(const std::vector<std::string>& lines, const text::BpeVocab& vocab);

struct AsrPhaseLog {
  std::vector<double> checkpoint_losses;  // mean batch loss per checkpoint
  std::size_t skipped = 0;                // CTC-infeasible utterance visits
};

// Trains over the plan in order. SpecAugment is applied on the fly when
// `spec_aug` is non-null.
AsrPhaseLog RunAsrPhase(asr::AsrModel& model, nn::Trainer& trainer, const AsrData& real,
                        const AsrData* synthetic, const MixPlan& plan, std::size_t batch_size,
                        const augment::SpecAugmentParams* spec_aug, std::uint64_t seed,
                        std::uint64_t visit_offset);

// Mean loss over plan entries without augmentation or updates.
double EvaluateAsrLoss(asr::AsrModel& model, const AsrData& real, const AsrData* synthetic,
                       const std::vector<PlanEntry>& entries, double ctc_weight, int workers);

struct DecodeOutput {
  std::vector<std::string> hyps;
  asr::WerResult total;  // summed counts; rate over all reference words
};

DecodeOutput DecodeSet(const asr::AsrModel& model, const text::BpeVocab& vocab, const AsrData& data,
                       const asr::LmScorer* lm, double lm_weight, const asr::BeamOptions& opts,
                       int workers);

// ---- report ---------------------------------------------------------------

inline constexpr std::size_t kEvalSets = 4;
const std::vector<std::string>& EvalSetNames();  // dev_clean, dev_other, test_clean, test_other

struct ReportRow {
  Condition condition;
  double lm_weight = 0.0;
  double wer[kEvalSets] = {0, 0, 0, 0};  // percent
};

struct SweepRow {
  std::size_t condition = 0;
  double lm_weight = 0.0;
  double wer[kEvalSets] = {0, 0, 0, 0};
};

// Index of the row with the lowest dev_clean WER; ties keep the first.
std::size_t SelectLmWeight(const std::vector<SweepRow>& rows);

std::string ReportCsv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> ParseReportCsv(const std::string& csv);
std::string ReportTable(const std::vector<ReportRow>& rows);
std::string SweepCsv(const std::vector<SweepRow>& rows);

// ---- text -----------------------------------------------------------------

std::vector<std::string> ReadLines(const std::filesystem::path& path);

}  // namespace synthasr::pipeline
