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
#include <string>
#include <vector>

#include "synthasr/dsp/dsp.hpp"

namespace synthasr::pipeline {

// A deterministic stand-in for read speech: every letter is a short
// harmonic tone whose pitch depends on the letter and the speaker; spaces
// are pauses. Transcripts come from a small template grammar.
struct ToySpeaker {
  std::string id;
  double pitch = 1.0;     // scales every letter frequency
  double harmonic = 0.3;  // relative level of the second harmonic
  double rate = 1.0;      // scales letter durations
};

struct ToyCorpusConfig {
  std::uint64_t seed = 7;
  int sample_rate = dsp::kDefaultSampleRate;
  double char_s = 0.085;
  double edge_silence_s = 0.1;
  double clean_noise = 0.003;
  double other_noise = 0.04;
  std::size_t train = 40;
  std::size_t per_eval_set = 6;
  std::size_t text_lines = 120;
  std::vector<ToySpeaker> speakers;  // last one is held out for the "other" sets
  static ToyCorpusConfig Default();
};

std::vector<std::string> ToyVocabulary();
std::string ToySentence(std::uint64_t seed);
dsp::Waveform RenderToyUtterance(const std::string& text, const ToySpeaker& spk, double noise,
                                 const ToyCorpusConfig& cfg, std::uint64_t seed);

// Writes wav/ plus train, dev_clean, dev_other, test_clean and test_other
// manifests and a text-only corpus (text.txt) under `dir`.
void GenerateToyCorpus(const std::filesystem::path& dir, const ToyCorpusConfig& cfg);

}  // namespace synthasr::pipeline
