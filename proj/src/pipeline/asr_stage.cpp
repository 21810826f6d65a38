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

#include <atomic>

#include "synthasr/error.hpp"
#include "synthasr/log.hpp"
#include "synthasr/nn/batch.hpp"
#include "synthasr/nn/trainer.hpp"
#include "synthasr/parallel.hpp"
#include "synthasr/pipeline/stages.hpp"

namespace synthasr::pipeline {

AsrData LoadAsrData(const Manifest& m, const text::BpeVocab& vocab, const FeatureConfig& cfg,
                    const dsp::NormStats& stats, int workers) {
  AsrData d;
  d.manifest = m;
  d.feats = Normalize(ExtractFeatures(m, dsp::FeatureKind::kMfcc, cfg, workers), stats);
  for (const auto& r : m) d.labels.push_back(vocab.Encode(r.transcript));
  return d;
}

text::BpeModel LearnBpe(const std::vector<std::string>& lines, std::size_t merges) {
  std::vector<std::string> norm;
  for (const auto& l : lines) norm.push_back(text::NormalizeTranscript(l));
  return text::BpeLearn(text::CountWords(norm), merges);
}

asr::BigramLm TrainBigram(const std::vector<std::string>& lines, const text::BpeVocab& vocab) {
  std::vector<std::vector<int>> sents;
  for (const auto& l : lines) sents.push_back(vocab.Encode(l));
  return asr::BigramLm::Train(sents, vocab.size() + 1, static_cast<int>(vocab.size()));
}

namespace {

const AsrData& Source(const AsrData& real, const AsrData* synthetic, Origin o) {
  if (o == Origin::kReal) return real;
  Require(synthetic != nullptr, "asr: plan references synthetic data that was not loaded", ErrorCode::kStage);
  return *synthetic;
}

}  // namespace

AsrPhaseLog RunAsrPhase(asr::AsrModel& model, nn::Trainer& trainer, const AsrData& real,
                        const AsrData* synthetic, const MixPlan& plan, std::size_t batch_size,
                        const augment::SpecAugmentParams* spec_aug, std::uint64_t seed,
                        std::uint64_t visit_offset) {
  Require(batch_size > 0, "asr: batch size must be positive");
  const double ctc_weight = model.config().ctc_weight;
  AsrPhaseLog log;
  for (std::size_t c = 0; c < plan.checkpoints.size(); ++c) {
    const auto& entries = plan.checkpoints[c].entries;
    std::atomic<std::size_t> used{0}, skipped{0};
    auto loss = [&](nn::Ctx& ctx, std::size_t k) -> nn::Var {
      const PlanEntry& e = entries[k];
      const AsrData& src = Source(real, synthetic, e.origin);
      const dsp::FeatureMatrix* f = &src.feats[e.index];
      dsp::FeatureMatrix masked;
      if (spec_aug) {
        const std::uint64_t key = (e.origin == Origin::kReal ? 0 : (1ULL << 40)) + e.index;
        masked = augment::SpecAugment(*f, *spec_aug, SpecAugmentSeed(seed, visit_offset + c, key)).first;
        f = &masked;
      }
      try {
        auto out = model.Loss(ctx, f->data, src.labels[e.index], ctc_weight).total;
        ++used;
        return out;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kInfeasible) throw;
        ++skipped;
        LogWarn("asr: utterance ", src.manifest[e.index].utterance_id, " skipped: ", err.what());
        return {};
      }
    };
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < entries.size(); b += batch_size) {
      std::vector<std::size_t> batch;
      for (std::size_t k = b; k < std::min(entries.size(), b + batch_size); ++k) batch.push_back(k);
      const std::size_t before = used;
      const double l = trainer.Step(batch, loss);
      if (used > before) {
        total += l;
        ++batches;
      }
    }
    log.skipped += skipped;
    log.checkpoint_losses.push_back(batches ? total / static_cast<double>(batches) : 0.0);
    LogInfo("asr: checkpoint ", c + 1, "/", plan.checkpoints.size(), " loss ", log.checkpoint_losses.back());
  }
  return log;
}

double EvaluateAsrLoss(asr::AsrModel& model, const AsrData& real, const AsrData* synthetic,
                       const std::vector<PlanEntry>& entries, double ctc_weight, int workers) {
  auto loss = [&](nn::Ctx& ctx, std::size_t k) -> nn::Var {
    const PlanEntry& e = entries[k];
    const AsrData& src = Source(real, synthetic, e.origin);
    try {
      return model.Loss(ctx, src.feats[e.index].data, src.labels[e.index], ctc_weight).total;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kInfeasible) throw;
      return {};
    }
  };
  return nn::ComputeBatch(model.params(), entries.size(), loss, workers, false).loss;
}

DecodeOutput DecodeSet(const asr::AsrModel& model, const text::BpeVocab& vocab, const AsrData& data,
                       const asr::LmScorer* lm, double lm_weight, const asr::BeamOptions& opts, int workers) {
  DecodeOutput out;
  out.hyps.resize(data.feats.size());
  std::vector<asr::WerResult> wers(data.feats.size());
  ParallelFor(data.feats.size(), workers, [&](std::size_t i) {
    asr::AsrStepModel step(model, data.feats[i].data);
    const auto res = asr::BeamSearch(step, lm, lm_weight, opts);
    out.hyps[i] = vocab.Decode(res.tokens);
    wers[i] = asr::Wer(out.hyps[i], text::NormalizeTranscript(data.manifest[i].transcript));
  });
  for (const auto& w : wers) {
    out.total.substitutions += w.substitutions;
    out.total.insertions += w.insertions;
    out.total.deletions += w.deletions;
    out.total.ref_words += w.ref_words;
  }
  out.total.empty_reference = out.total.ref_words == 0;
  out.total.rate = static_cast<double>(out.total.errors()) /
                   static_cast<double>(std::max<std::size_t>(1, out.total.ref_words));
  return out;
}

}  // namespace synthasr::pipeline
