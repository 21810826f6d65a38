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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "synthasr/dsp/io.hpp"
#include "synthasr/error.hpp"
#include "synthasr/pipeline/stages.hpp"
#include "synthasr/pipeline/toy_corpus.hpp"
#include "test_util.hpp"

using namespace synthasr;
using namespace synthasr::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path TempDir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("synthasr_test_pipeline_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void WriteText(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

// Synthetic manifest with durations cycling through `durations`.
Manifest FakeManifest(std::size_t n, Origin origin, const std::vector<double>& durations) {
  Manifest m;
  for (std::size_t i = 0; i < n; ++i) {
    Record r;
    r.utterance_id = (origin == Origin::kReal ? "r" : "s") + std::to_string(i);
    r.audio_path = "/nonexistent/" + r.utterance_id + ".wav";
    r.transcript = "x";
    r.speaker_id = "spk";
    r.duration_s = durations[i % durations.size()];
    r.origin = origin;
    m.push_back(r);
  }
  return m;
}

}  // namespace

TEST_CASE("ingest directory") {
  const fs::path d = TempDir("ingest");
  CHECK_THROWS_AS(Ingest(d), Error);
  // Directory order: spk0-utt0, spk0-utt1, spk1-utt2, then spk1-utt3 without a transcript.
  const std::size_t lengths[] = {16000, 8000, 12345, 4000};
  for (int i = 0; i < 4; ++i) {
    const std::string stem = "spk" + std::to_string(i / 2) + "-utt" + std::to_string(i);
    auto w = testing::Tone(300.0 + 50 * i, 1.0);
    w.samples.resize(lengths[i]);
    dsp::WriteWav(d / (stem + ".wav"), w);
    if (i != 3) WriteText(d / (stem + ".txt"), "hello world " + std::to_string(i) + "\n");
  }
  const auto rep = Ingest(d);
  REQUIRE(rep.manifest.size() == 3);
  CHECK(rep.rejected.size() == 1);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& r = rep.manifest[i];
    CHECK(std::abs(r.duration_s - static_cast<double>(lengths[i]) / 16000.0) < 1e-3);
    CHECK(r.speaker_id == "spk" + std::to_string(i / 2));
    CHECK(r.origin == Origin::kReal);
  }
  CHECK(rep.manifest[0].transcript == "hello world 0");
  CHECK(TotalHours(rep.manifest) ==
        doctest::Approx((16000.0 + 8000.0 + 12345.0) / 16000.0 / 3600.0).epsilon(1e-12));
}

TEST_CASE("manifest round trip and validation") {
  const fs::path d = TempDir("manifest");
  const auto w = testing::Tone(440.0, 0.5);
  dsp::WriteWav(d / "a.wav", w);
  Manifest m;
  Record r;
  r.utterance_id = "a";
  r.audio_path = (d / "a.wav").string();
  r.transcript = "a cat";
  r.speaker_id = "s1";
  r.duration_s = 0.5;
  r.origin = Origin::kSynthetic;
  r.truncated = true;
  m.push_back(r);
  WriteManifest(d / "m.jsonl", m);
  const auto back = ReadManifest(d / "m.jsonl");
  REQUIRE(back.size() == 1);
  CHECK(back[0].utterance_id == "a");
  CHECK(fs::equivalent(back[0].audio_path, r.audio_path));
  CHECK(back[0].transcript == "a cat");
  CHECK(back[0].speaker_id == "s1");
  CHECK(back[0].duration_s == 0.5);
  CHECK(back[0].origin == Origin::kSynthetic);
  CHECK(back[0].truncated);

  // Ingest of a listing re-measures durations.
  CHECK(Ingest(d / "m.jsonl").manifest.size() == 1);

  Manifest dup = {r, r};
  CHECK_THROWS_AS(ValidateManifest(dup), Error);
  CHECK_THROWS_AS(ParseOrigin("imagined"), Error);
}

TEST_CASE("mix ratio and budget") {
  const auto real = FakeManifest(300, Origin::kReal, {5.0, 7.0, 11.0, 13.0});
  const auto syn = FakeManifest(300, Origin::kSynthetic, {3.0, 6.0, 9.0});
  const double budget = 5.0 / 17.0;  // hours per checkpoint
  const auto plan = BuildTrainingMix(real, syn, MixPolicy{3.0, 2.0}, budget, 17, 5);
  REQUIRE(plan.checkpoints.size() == 17);
  double total = 0.0;
  for (const auto& c : plan.checkpoints) {
    // Hours oracle: sum of entry durations per origin.
    double rs = 0.0, ss = 0.0;
    for (const auto& e : c.entries) {
      const auto& m = e.origin == Origin::kReal ? real : syn;
      CHECK(e.duration_s == m[e.index].duration_s);
      (e.origin == Origin::kReal ? rs : ss) += e.duration_s;
    }
    CHECK(c.real_hours == doctest::Approx(rs / 3600.0).epsilon(1e-12));
    CHECK(c.synthetic_hours == doctest::Approx(ss / 3600.0).epsilon(1e-12));
    const double frac = c.real_hours / c.total_hours();
    CHECK(std::abs(frac - 0.6) < 0.6 * 0.05);
    CHECK(std::abs(c.total_hours() - budget) < 0.05 * budget);
    total += c.total_hours();
  }
  CHECK(plan.total_hours() == doctest::Approx(total).epsilon(1e-12));
  CHECK(std::abs(total - 5.0) < 0.25);
}

TEST_CASE("mix real only and determinism") {
  const auto real = FakeManifest(50, Origin::kReal, {2.0, 3.0});
  const auto syn = FakeManifest(50, Origin::kSynthetic, {2.0});
  const auto a = BuildTrainingMix(real, syn, MixPolicy{1.0, 0.0}, 0.01, 4, 9);
  for (const auto& c : a.checkpoints) {
    CHECK(c.synthetic_hours == 0.0);
    for (const auto& e : c.entries) CHECK(e.origin == Origin::kReal);
  }
  const auto b = BuildTrainingMix(real, syn, MixPolicy{1.0, 0.0}, 0.01, 4, 9);
  REQUIRE(a.checkpoints.size() == b.checkpoints.size());
  for (std::size_t c = 0; c < a.checkpoints.size(); ++c) {
    REQUIRE(a.checkpoints[c].entries.size() == b.checkpoints[c].entries.size());
    for (std::size_t i = 0; i < a.checkpoints[c].entries.size(); ++i) {
      CHECK(a.checkpoints[c].entries[i].index == b.checkpoints[c].entries[i].index);
    }
  }
  // Different seeds reorder the draws.
  const auto other = BuildTrainingMix(real, syn, MixPolicy{1.0, 0.0}, 0.01, 4, 10);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.checkpoints[0].entries.size(), other.checkpoints[0].entries.size()); ++i) {
    differs |= a.checkpoints[0].entries[i].index != other.checkpoints[0].entries[i].index;
  }
  CHECK(differs);

  // A budget beyond the data repeats utterances and says so.
  const auto big = BuildTrainingMix(real, syn, MixPolicy{1.0, 0.0}, 200.0 / 3600.0, 1, 9);
  CHECK(big.checkpoints[0].repeats > 0);

  CHECK_THROWS_AS(BuildTrainingMix(real, {}, MixPolicy{3.0, 2.0}, 0.01, 4, 9), Error);
  CHECK_THROWS_AS(BuildTrainingMix(real, syn, MixPolicy{-1.0, 2.0}, 0.01, 4, 9), Error);
  CHECK_THROWS_AS(BuildTrainingMix(real, syn, MixPolicy{0.0, 0.0}, 0.01, 4, 9), Error);

  const fs::path d = TempDir("mix");
  SaveMixPlan(d / "plan.json", a);
  const auto back = LoadMixPlan(d / "plan.json");
  REQUIRE(back.checkpoints.size() == a.checkpoints.size());
  CHECK(back.total_hours() == doctest::Approx(a.total_hours()).epsilon(1e-12));
  CHECK(back.checkpoints[1].entries.size() == a.checkpoints[1].entries.size());
}

TEST_CASE("report csv") {
  std::vector<ReportRow> rows;
  const bool flags[][3] = {{false, false, false}, {false, false, true}, {true, true, true}};
  for (int i = 0; i < 3; ++i) {
    ReportRow r;
    r.condition = {flags[i][0], flags[i][1], flags[i][2]};
    r.lm_weight = 0.1 * i;
    for (std::size_t k = 0; k < kEvalSets; ++k) r.wer[k] = 10.0 * i + 1.25 * static_cast<double>(k) + 1.0 / 3.0;
    rows.push_back(r);
  }
  const std::string csv = ReportCsv(rows);
  CHECK(csv.rfind("spec_aug,syn_data,lm,dev_clean,dev_other,test_clean,test_other\n", 0) == 0);
  CHECK(csv.find("\nno,no,yes,") != std::string::npos);
  const auto back = ParseReportCsv(csv);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].condition.spec_aug == rows[i].condition.spec_aug);
    CHECK(back[i].condition.syn_data == rows[i].condition.syn_data);
    CHECK(back[i].condition.lm == rows[i].condition.lm);
    for (std::size_t k = 0; k < kEvalSets; ++k) CHECK(back[i].wer[k] == rows[i].wer[k]);
  }
  CHECK(ParseReportCsv(ReportCsv({rows[0]})).size() == 1);
  CHECK_THROWS_AS(ParseReportCsv("a,b\n1,2\n"), Error);
}

TEST_CASE("lm weight selection") {
  const double lambdas[] = {0.0, 0.1, 0.2, 0.4};
  const double dev_clean[] = {30.0, 25.0, 25.0, 27.0};
  std::vector<SweepRow> rows;
  for (int i = 0; i < 4; ++i) {
    SweepRow s;
    s.lm_weight = lambdas[i];
    s.wer[0] = dev_clean[i];
    s.wer[2] = 100.0 - dev_clean[i];  // other sets never drive the choice
    rows.push_back(s);
  }
  // Table scan: first index with the minimum dev_clean value.
  std::size_t oracle = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].wer[0] < rows[oracle].wer[0]) oracle = i;
  }
  CHECK(SelectLmWeight(rows) == oracle);
  CHECK(oracle == 1);
  CHECK_THROWS_AS(SelectLmWeight({}), Error);
}

TEST_CASE("config") {
  const fs::path d = TempDir("config");
  auto cfg = ToyExperimentConfig();
  cfg.corpora.generate_toy = true;
  SaveExperimentConfig(d / "c.json", cfg);
  const auto back = LoadExperimentConfig(d / "c.json");
  CHECK(back.conditions.size() == cfg.conditions.size());
  CHECK(back.schedule.phase1_epochs == cfg.schedule.phase1_epochs);
  CHECK(back.asr.model.enc_hidden == cfg.asr.model.enc_hidden);
  CHECK(back.tts.model.gst_tokens == cfg.tts.model.gst_tokens);
  CHECK(back.lm_sweep == cfg.lm_sweep);

  auto expect_config_error = [&](const std::string& body) {
    WriteText(d / "bad.json", body);
    try {
      LoadExperimentConfig(d / "bad.json");
      FAIL("expected a config error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfig);
    }
  };
  expect_config_error(R"({"seed": 1, "bogus": 2})");
  expect_config_error(R"({"schedule": {"phase1_checkpoints": 8, "typo": 1}})");
  expect_config_error(R"({"mix": {"real": -1, "synthetic": 2}})");
  expect_config_error("{not json");
}

TEST_CASE("toy corpus") {
  const fs::path d = TempDir("toy");
  auto cfg = ToyCorpusConfig::Default();
  cfg.train = 6;
  cfg.per_eval_set = 2;
  cfg.text_lines = 5;
  GenerateToyCorpus(d, cfg);
  const auto train = Ingest(d / "train.jsonl").manifest;
  CHECK(train.size() == 6);
  for (const char* set : {"dev_clean", "dev_other", "test_clean", "test_other"}) {
    CHECK(Ingest(d / (std::string(set) + ".jsonl")).manifest.size() == 2);
  }
  CHECK(ReadLines(d / "text.txt").size() == 5);
  // Deterministic in the seed.
  CHECK(ToySentence(3) == ToySentence(3));
  const auto a = RenderToyUtterance("a cat", cfg.speakers[0], 0.003, cfg, 1);
  const auto b = RenderToyUtterance("a cat", cfg.speakers[0], 0.003, cfg, 1);
  CHECK(a.samples == b.samples);
}

TEST_CASE("synthesis is deterministic") {
  tts::TtsConfig tc;
  tc.embed_dim = 8;
  tc.conv_filters = 8;
  tc.enc_hidden = 4;
  tc.speaker_dim = 4;
  tc.gst_tokens = 3;
  tc.gst_filters = {2, 2, 2, 2, 2, 2};
  tc.gst_hidden = 4;
  tc.att_dim = 4;
  tc.posenc_dim = 4;
  tc.feedback_filters = 2;
  tc.feedback_width = 5;
  tc.dec_hidden = 8;
  const auto tts_model = tts::TtsModel::Create(tc, 1);
  tts::Mel2LinConfig mc;
  mc.hidden = 4;
  const auto m2l = tts::Mel2LinModel::Create(mc, 2);
  dsp::NormStats lin;
  lin.mean.assign(mc.out_dim, 1.0);
  lin.std.assign(mc.out_dim, 1.0);
  FeatureConfig fc;
  const Vocoder v{tts_model, m2l, lin, fc, 12, 1, false};
  const std::vector<double> spk(tc.speaker_dim, 0.1);
  const auto a = SynthesizeLine(v, "a red cat", spk);
  const auto b = SynthesizeLine(v, "a red cat", spk);
  REQUIRE(!a.wav.samples.empty());
  CHECK(a.wav.samples == b.wav.samples);
  CHECK(a.frames <= 12 * tc.stack);
  double peak = 0.0;
  for (double s : a.wav.samples) peak = std::max(peak, std::abs(s));
  CHECK(peak == doctest::Approx(0.95));

  const fs::path d = TempDir("synth");
  const std::vector<SpeakerRef> speakers = {{"s0", spk}, {"s1", spk}};
  const std::vector<std::string> lines = {"a cat", "%%%", "the dog"};
  const auto c1 = GenerateSynthetic(lines, v, {speakers[0], speakers[1], speakers[0]}, d / "one", 1);
  const auto c2 = GenerateSynthetic(lines, v, {speakers[0], speakers[1], speakers[0]}, d / "two", 1);
  CHECK(c1.manifest.size() == 2);
  CHECK(c1.skipped == 1);
  REQUIRE(c2.manifest.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(c1.manifest[i].origin == Origin::kSynthetic);
    CHECK(dsp::ReadWav(c1.manifest[i].audio_path).samples == dsp::ReadWav(c2.manifest[i].audio_path).samples);
  }
}

TEST_CASE("pearson") {
  CHECK(Pearson({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
  CHECK(Pearson({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));
  // Hand-computed: x = 1..4, y = 1,3,2,4 gives r = 0.8.
  CHECK(Pearson({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
}
