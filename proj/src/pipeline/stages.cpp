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

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "synthasr/dsp/io.hpp"
#include "synthasr/error.hpp"
#include "synthasr/log.hpp"
#include "synthasr/nn/ops.hpp"
#include "synthasr/nn/trainer.hpp"
#include "synthasr/parallel.hpp"
#include "synthasr/pipeline/stages.hpp"
#include "synthasr/vocoder.hpp"

namespace synthasr::pipeline {

namespace fs = std::filesystem;

dsp::MelFilterbank MakeFilterbank(const FeatureConfig& cfg, int sample_rate) {
  return dsp::MakeMelFilterbank(sample_rate, cfg.stft.fft_size, static_cast<int>(cfg.n_mels), cfg.f_min);
}

dsp::FeatureMatrix ComputeFeatures(const dsp::Waveform& w, dsp::FeatureKind kind, const FeatureConfig& cfg) {
  switch (kind) {
    case dsp::FeatureKind::kLinearMag:
      return dsp::LinearMagnitude(w, cfg.stft);
    case dsp::FeatureKind::kLogMel:
      return dsp::LogMel(w, cfg.stft, MakeFilterbank(cfg, w.sample_rate));
    case dsp::FeatureKind::kMfcc:
      return dsp::Mfcc(w, cfg.stft, MakeFilterbank(cfg, w.sample_rate), cfg.n_mfcc);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown feature kind");
}

std::vector<dsp::FeatureMatrix> ExtractFeatures(const Manifest& m, dsp::FeatureKind kind,
                                                const FeatureConfig& cfg, int workers) {
  std::vector<dsp::FeatureMatrix> out(m.size());
  ParallelFor(m.size(), workers,
              [&](std::size_t i) { out[i] = ComputeFeatures(dsp::ReadWav(m[i].audio_path), kind, cfg); });
  return out;
}

std::vector<dsp::FeatureMatrix> Normalize(std::vector<dsp::FeatureMatrix> feats, const dsp::NormStats& s) {
  for (auto& f : feats) f = dsp::ApplyNorm(f, s);
  return feats;
}

dsp::NormStats Featurize(const Manifest& m, dsp::FeatureKind kind, const FeatureConfig& cfg,
                         const fs::path& out_dir, bool normalize, const dsp::NormStats* stats,
                         int workers) {
  auto feats = ExtractFeatures(m, kind, cfg, workers);
  const dsp::NormStats s = stats ? *stats : dsp::EstimateNormStats(feats);
  if (normalize || stats) feats = Normalize(std::move(feats), s);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < m.size(); ++i) dsp::WriteFeatures(out_dir / (m[i].utterance_id + ".fea"), feats[i]);
  dsp::WriteNormStats(out_dir / "stats.txt", s);
  return s;
}

Manifest AugmentAudio(const Manifest& m, const AudioAugmentOptions& opts, const fs::path& out_dir,
                      int workers) {
  for (double f : opts.speeds) Require(f > 0.0, "augment: speed factors must be positive", ErrorCode::kConfig);
  const std::vector<double> speeds = opts.speeds.empty() ? std::vector<double>{1.0} : opts.speeds;
  fs::create_directories(out_dir);
  std::vector<Record> out(m.size() * speeds.size());
  std::vector<bool> keep(out.size(), false);
  ParallelFor(m.size(), workers, [&](std::size_t i) {
    dsp::Waveform w = dsp::ReadWav(m[i].audio_path);
    if (opts.silence_threshold_db) {
      augment::SilenceRemoveParams p;
      p.threshold_db = *opts.silence_threshold_db;
      w = augment::SilenceRemove(w, p);
    }
    for (std::size_t k = 0; k < speeds.size(); ++k) {
      const dsp::Waveform v = speeds[k] == 1.0 ? w : augment::SpeedPerturb(w, speeds[k]);
      if (v.samples.empty()) continue;
      Record r = m[i];
      if (!opts.speeds.empty()) {
        std::ostringstream id;
        id << r.utterance_id << "-sp" << speeds[k];
        r.utterance_id = id.str();
      }
      const fs::path path = out_dir / (r.utterance_id + ".wav");
      dsp::WriteWav(path, v);
      r.audio_path = path.string();
      r.duration_s = dsp::ReadWavInfo(path).duration_s();
      out[i * speeds.size() + k] = std::move(r);
      keep[i * speeds.size() + k] = true;
    }
  });
  Manifest result;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (keep[i]) {
      result.push_back(std::move(out[i]));
    } else {
      LogWarn("augment: ", m[i / speeds.size()].utterance_id, " is silent after processing; dropped");
    }
  }
  Require(!result.empty(), "augment: no audio left", ErrorCode::kStage);
  return result;
}

std::uint64_t SpecAugmentSeed(std::uint64_t seed, std::uint64_t visit, std::uint64_t utterance) {
  return DeriveSeed(DeriveSeed(seed, visit), utterance);
}

void SpecAugmentFeatures(const Manifest& m, const fs::path& in_dir, const augment::SpecAugmentParams& p,
                         std::uint64_t seed, const fs::path& out_dir, int workers) {
  fs::create_directories(out_dir);
  ParallelFor(m.size(), workers, [&](std::size_t i) {
    const auto f = dsp::ReadFeatures(in_dir / (m[i].utterance_id + ".fea"));
    dsp::WriteFeatures(out_dir / (m[i].utterance_id + ".fea"),
                       augment::SpecAugment(f, p, SpecAugmentSeed(seed, 0, i)).first);
  });
}

nn::TrainerConfig MakeTrainerConfig(const TrainConfig& t, std::uint64_t seed, int workers) {
  nn::TrainerConfig c;
  c.optim = t.optim;
  c.batch_size = t.batch_size;
  c.seed = seed;
  c.workers = workers;
  return c;
}

namespace {

TrainResult RunTraining(nn::ParameterStore& params, std::size_t n, const nn::ExampleLoss& loss,
                        const TrainConfig& cfg, std::uint64_t seed, int workers, const char* what) {
  Require(n > 0, std::string(what) + ": empty training set", ErrorCode::kStage);
  nn::Trainer trainer(params, MakeTrainerConfig(cfg, seed, workers));
  TrainResult r;
  r.initial_loss = trainer.Evaluate(n, loss);
  LogInfo(what, ": initial loss ", r.initial_loss);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    r.epoch_losses.push_back(trainer.RunEpoch(n, loss));
    LogInfo(what, ": epoch ", e + 1, "/", cfg.epochs, " loss ", r.epoch_losses.back());
  }
  r.final_loss = trainer.Evaluate(n, loss);
  LogInfo(what, ": final loss ", r.final_loss);
  return r;
}

}  // namespace

TrainResult TrainTts(tts::TtsModel& model, const std::vector<std::vector<int>>& chars,
                     const std::vector<dsp::FeatureMatrix>& mels, const TrainConfig& cfg, std::uint64_t seed,
                     int workers) {
  Require(chars.size() == mels.size(), "train_tts: text and audio counts differ");
  auto loss = [&](nn::Ctx& c, std::size_t i) { return tts::TtsModel::Loss(model.Forward(c, chars[i], mels[i])); };
  return RunTraining(model.params(), chars.size(), loss, cfg, seed, workers, "tts");
}

TrainResult TrainMel2Lin(tts::Mel2LinModel& model, const std::vector<dsp::FeatureMatrix>& mels,
                         const std::vector<dsp::FeatureMatrix>& lins, const TrainConfig& cfg,
                         std::uint64_t seed, int workers) {
  Require(mels.size() == lins.size(), "train_mel2lin: mel and linear counts differ");
  auto loss = [&](nn::Ctx& c, std::size_t i) {
    return nn::L1Loss(model.Forward(c, c.tape.Constant(mels[i].data)), c.tape.Constant(lins[i].data));
  };
  return RunTraining(model.params(), mels.size(), loss, cfg, seed, workers, "mel2lin");
}

double ConstantMeanL1(const std::vector<dsp::FeatureMatrix>& lins) {
  // Mean over utterances of the per-utterance mean, matching the training
  // loss reduction.
  double total = 0.0;
  for (const auto& f : lins) {
    double s = 0.0;
    for (double v : f.data.data) s += std::abs(v);
    total += s / static_cast<double>(f.data.data.size());
  }
  return total / static_cast<double>(std::max<std::size_t>(1, lins.size()));
}

Synthesized SynthesizeLine(const Vocoder& v, const std::string& line, const std::vector<double>& speaker) {
  static const text::CharVocab vocab;
  const auto ids = vocab.Encode(line);
  Require(ids.size() > 1, "synthesize: no characters left after normalization: '" + line + "'");
  tts::SynthesisOptions opts;
  opts.max_steps = v.max_steps;
  const auto res = v.tts.Synthesize(ids, speaker, opts);
  const Matrix lin = v.mel2lin.Predict(res.mel, v.lin_stats);
  vocoder::GriffinLimConfig gl;
  gl.n_iters = static_cast<int>(v.griffin_lim_iters);
  dsp::Waveform w = vocoder::GriffinLim(vocoder::WithDcBin(lin), gl, v.features.stft, dsp::kDefaultSampleRate);
  if (v.deemphasize) w = dsp::Deemphasize(w, v.features.stft.preemphasis_alpha);
  return {dsp::PeakNormalize(w, 0.95), res.mel.frames(), res.truncated};
}

std::vector<SpeakerRef> DonorSpeakers(const tts::TtsModel& model, const Manifest& donors,
                                      const std::vector<dsp::FeatureMatrix>& norm_mels, std::size_t n_lines) {
  Require(!donors.empty() && donors.size() == norm_mels.size(), "synthesize: no donor utterances",
          ErrorCode::kStage);
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < donors.size(); ++i) {
    auto& list = by_speaker[donors[i].speaker_id];
    if (list.empty()) order.push_back(donors[i].speaker_id);
    list.push_back(i);
  }
  std::vector<SpeakerRef> refs(n_lines);
  std::map<std::size_t, std::vector<double>> cache;
  for (std::size_t i = 0; i < n_lines; ++i) {
    const std::string& spk = order[i % order.size()];
    const auto& list = by_speaker[spk];
    const std::size_t donor = list[(i / order.size()) % list.size()];
    auto it = cache.find(donor);
    if (it == cache.end()) it = cache.emplace(donor, model.SpeakerEmbedding(norm_mels[donor])).first;
    refs[i] = {spk, it->second};
  }
  return refs;
}

SyntheticCorpus GenerateSynthetic(const std::vector<std::string>& lines, const Vocoder& v,
                                  const std::vector<SpeakerRef>& speakers, const fs::path& out_dir,
                                  int workers) {
  Require(speakers.size() == lines.size(), "synthesize: one speaker per line required");
  fs::create_directories(out_dir / "wav");
  std::vector<std::optional<Synthesized>> outs(lines.size());
  ParallelFor(lines.size(), workers, [&](std::size_t i) {
    try {
      outs[i] = SynthesizeLine(v, lines[i], speakers[i].embedding);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInvalidArgument) throw;
      LogWarn("synthesize: line ", i + 1, " skipped: ", e.what());
    }
  });
  SyntheticCorpus c;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!outs[i]) {
      ++c.skipped;
      continue;
    }
    std::ostringstream id;
    id << "syn-" << std::setw(5) << std::setfill('0') << i;
    const fs::path path = out_dir / "wav" / (id.str() + ".wav");
    dsp::WriteWav(path, outs[i]->wav);
    Record r;
    r.utterance_id = id.str();
    r.audio_path = path.string();
    r.transcript = text::NormalizeTranscript(lines[i]);
    r.speaker_id = speakers[i].speaker_id;
    r.duration_s = dsp::ReadWavInfo(path).duration_s();
    r.origin = Origin::kSynthetic;
    r.truncated = outs[i]->truncated;
    if (r.truncated) {
      ++c.truncated;
      LogWarn("synthesize: ", r.utterance_id, " hit max_steps; kept and flagged");
    }
    c.manifest.push_back(std::move(r));
    c.chars.push_back(text::NormalizeText(lines[i], false).size());
    c.frames.push_back(outs[i]->frames);
  }
  Require(!c.manifest.empty(), "synthesize: no utterances produced", ErrorCode::kStage);
  WriteManifest(out_dir / "synthetic.jsonl", c.manifest);
  return c;
}

double Pearson(const std::vector<double>& x, const std::vector<double>& y) {
  Require(x.size() == y.size() && x.size() >= 2, "pearson: need two equal-length samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<std::string> ReadLines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) out.push_back(line);
  }
  return out;
}

}  // namespace synthasr::pipeline
