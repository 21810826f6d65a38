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

#include "synthasr/pipeline/toy_corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "synthasr/dsp/io.hpp"
#include "synthasr/error.hpp"
#include "synthasr/pipeline/manifest.hpp"
#include "synthasr/rng.hpp"

namespace synthasr::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

const std::vector<std::string> kDet = {"the", "a", "one", "two"};
const std::vector<std::string> kAdj = {"red", "blue", "green", "big", "small", "old"};
const std::vector<std::string> kNoun = {"cat", "dog", "bird", "fish", "box", "tree", "house", "car"};
const std::vector<std::string> kVerb = {"sees", "likes", "finds", "takes"};
const std::vector<std::string> kPrep = {"near", "by", "under"};

const std::string& Pick(const std::vector<std::string>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.UniformInt(0, static_cast<std::int64_t>(v.size()) - 1))];
}

double LetterHz(char c) {
  if (c == '\'') return 1500.0;
  const double idx = c - 'a';
  return 180.0 * std::pow(1400.0 / 180.0, idx / 25.0);
}

}  // namespace

ToyCorpusConfig ToyCorpusConfig::Default() {
  ToyCorpusConfig c;
  c.speakers = {{"spk0", 1.00, 0.30, 1.00},
                {"spk1", 0.92, 0.50, 1.08},
                {"spk2", 1.08, 0.20, 0.94},
                {"spk3", 0.96, 0.40, 1.03},
                {"spk4", 1.04, 0.60, 0.97}};
  return c;
}

std::vector<std::string> ToyVocabulary() {
  std::set<std::string> all;
  for (const auto* v : {&kDet, &kAdj, &kNoun, &kVerb, &kPrep}) all.insert(v->begin(), v->end());
  return {all.begin(), all.end()};
}

std::string ToySentence(std::uint64_t seed) {
  Rng rng(seed);
  std::string s = Pick(kDet, rng);
  if (rng.Uniform() < 0.5) s += " " + Pick(kAdj, rng);
  s += " " + Pick(kNoun, rng);
  switch (rng.UniformInt(0, 2)) {
    case 0:
      s += " " + Pick(kVerb, rng) + " " + Pick(kDet, rng) + " " + Pick(kNoun, rng);
      break;
    case 1:
      s += " " + Pick(kVerb, rng) + " " + Pick(kDet, rng) + " " + Pick(kAdj, rng) + " " + Pick(kNoun, rng);
      break;
    default:
      s += " " + Pick(kPrep, rng) + " " + Pick(kDet, rng) + " " + Pick(kNoun, rng);
      break;
  }
  return s;
}

dsp::Waveform RenderToyUtterance(const std::string& text, const ToySpeaker& spk, double noise,
                                 const ToyCorpusConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const double sr = cfg.sample_rate;
  dsp::Waveform w;
  w.sample_rate = cfg.sample_rate;
  auto silence = [&](double seconds) {
    w.samples.insert(w.samples.end(), static_cast<std::size_t>(seconds * sr), 0.0);
  };
  silence(cfg.edge_silence_s);
  const auto ramp = static_cast<std::size_t>(0.008 * sr);
  for (char c : text) {
    const double jitter = rng.Uniform(0.9, 1.1);
    if (c == ' ') {
      silence(0.6 * cfg.char_s * spk.rate * jitter);
      continue;
    }
    const auto n = static_cast<std::size_t>(cfg.char_s * spk.rate * jitter * sr);
    const double f = LetterHz(c) * spk.pitch;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sr;
      double env = 1.0;
      if (i < ramp) env = 0.5 - 0.5 * std::cos(kPi * static_cast<double>(i) / ramp);
      if (n - i <= ramp) env = std::min(env, 0.5 - 0.5 * std::cos(kPi * static_cast<double>(n - i) / ramp));
      const double v = std::sin(2 * kPi * f * t) + spk.harmonic * std::sin(4 * kPi * f * t);
      w.samples.push_back(0.4 * env * v);
    }
  }
  silence(cfg.edge_silence_s);
  for (double& s : w.samples) s += noise * rng.Normal();
  return w;
}

void GenerateToyCorpus(const fs::path& dir, const ToyCorpusConfig& cfg) {
  Require(cfg.speakers.size() >= 2, "toy corpus: need at least two speakers", ErrorCode::kConfig);
  Require(cfg.train > 0 && cfg.per_eval_set > 0, "toy corpus: empty split", ErrorCode::kConfig);
  fs::create_directories(dir / "wav");
  const std::size_t n_train_spk = cfg.speakers.size() - 1;
  std::uint64_t key = 0;
  std::set<std::string> used;
  auto next_sentence = [&] {
    for (;;) {
      std::string s = ToySentence(DeriveSeed(cfg.seed, key++));
      if (used.insert(s).second) return s;
    }
  };
  auto make_set = [&](const std::string& name, std::size_t count, bool other) {
    Manifest m;
    for (std::size_t i = 0; i < count; ++i) {
      const ToySpeaker& spk =
          other && i % 2 == 0 ? cfg.speakers.back() : cfg.speakers[i % n_train_spk];
      const std::string text = next_sentence();
      const std::string id = spk.id + "-" + name + "-" + std::to_string(i);
      const auto wav = RenderToyUtterance(text, spk, other ? cfg.other_noise : cfg.clean_noise, cfg,
                                          DeriveSeed(cfg.seed, 1000000 + key));
      const fs::path path = dir / "wav" / (id + ".wav");
      dsp::WriteWav(path, wav);
      m.push_back({id, fs::path("wav") / (id + ".wav"), text, spk.id,
                   dsp::ReadWavInfo(path).duration_s(), Origin::kReal, false});
    }
    WriteManifest(dir / (name + ".jsonl"), m);
  };
  make_set("train", cfg.train, false);
  make_set("dev_clean", cfg.per_eval_set, false);
  make_set("dev_other", cfg.per_eval_set, true);
  make_set("test_clean", cfg.per_eval_set, false);
  make_set("test_other", cfg.per_eval_set, true);
  std::ofstream text(dir / "text.txt");
  for (std::size_t i = 0; i < cfg.text_lines; ++i) text << next_sentence() << '\n';
  if (!text) throw Error(ErrorCode::kIo, "cannot write " + (dir / "text.txt").string());
}

}  // namespace synthasr::pipeline
