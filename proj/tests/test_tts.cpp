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
#include <set>

#include "gradcheck.hpp"
#include "synthasr/error.hpp"
#include "synthasr/nn/ops.hpp"
#include "synthasr/nn/trainer.hpp"
#include "synthasr/text/text.hpp"
#include "synthasr/tts/tts.hpp"
#include "test_util.hpp"

using namespace synthasr;
using namespace synthasr::nn;
using namespace synthasr::tts;
using synthasr::testing::GradCheck;
using synthasr::testing::RandomVector;

namespace {

TtsConfig TinyConfig() {
  TtsConfig c;
  c.n_mels = 4;
  c.embed_dim = 3;
  c.conv_filters = 3;
  c.conv_width = 3;
  c.enc_hidden = 2;
  c.speaker_dim = 3;
  c.gst_tokens = 5;
  c.gst_filters = {2, 2, 2, 2, 2, 2};
  c.gst_hidden = 3;
  c.gst_min_frames = 64;
  c.att_dim = 3;
  c.posenc_dim = 4;
  c.feedback_filters = 2;
  c.feedback_width = 5;
  c.dec_hidden = 3;
  return c;
}

dsp::FeatureMatrix RandomMel(std::size_t frames, std::size_t dim, std::uint64_t seed) {
  dsp::FeatureMatrix f;
  f.data = Matrix(frames, dim);
  f.data.data = RandomVector(frames * dim, seed);
  return f;
}

void Randomize(ParameterStore& ps, std::uint64_t seed, double scale = 0.7) {
  Rng rng(seed);
  for (auto* p : ps.All()) {
    for (double& v : p->value) v = rng.Uniform(-scale, scale);
  }
}

void ExpectGrad(ParameterStore& ps, const std::function<Var(Ctx&)>& fn) {
  const auto r = GradCheck(ps, fn);
  INFO(r.worst);
  CHECK(r.max_rel_error < 1e-4);
}

Var Probe(Ctx& ctx, Var y) {
  return Sum(Mul(y, ctx.tape.Constant(y.shape(), RandomVector(y.size(), 4242))));
}

AttentionConfig SmallAttention() {
  AttentionConfig ac;
  ac.query_dim = 4;
  ac.memory_dim = 5;
  ac.att_dim = 6;
  ac.posenc_dim = 8;
  ac.feedback_filters = 3;
  ac.feedback_width = 31;
  return ac;
}

}  // namespace

TEST_CASE("posenc") {
  const auto p0 = PosEnc(0, 64);
  for (std::size_t i = 0; i < 64; ++i) CHECK(p0[i] == (i % 2 == 0 ? 0.0 : 1.0));
  const Matrix table = PosEncTable(1000, 64);
  for (double v : table.data) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  std::set<std::vector<double>> seen;
  for (std::size_t j = 0; j < 1000; ++j) seen.insert({table.Row(j).begin(), table.Row(j).end()});
  CHECK(seen.size() == 1000);
}

TEST_CASE("stop targets and rule") {
  CHECK(StopTargets(8) == std::vector<double>{0, 0, 0, 0.2, 0.4, 0.6, 0.8, 1.0});
  CHECK(StopTargets(5) == std::vector<double>{0.2, 0.4, 0.6, 0.8, 1.0});
  CHECK(StopTargets(3) == std::vector<double>{0.6, 0.8, 1.0});

  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    StopRule rule(0.4, 5);
    std::size_t first = 0;
    std::size_t step = 0;
    bool done = false;
    while (!done && step < 1000) {
      const double v = rng.Uniform() < 0.05 ? rng.Uniform(0.41, 1.0) : rng.Uniform(0.0, 0.4);
      ++step;
      if (first == 0 && v > 0.4) first = step;
      done = rule.Observe(v);
    }
    REQUIRE(done);
    CHECK(step == first + 5);
    CHECK(rule.crossing() == first);
  }
}

TEST_CASE("attention contract") {
  ParameterStore ps;
  Rng rng(2);
  const auto ac = SmallAttention();
  auto att = Attention::Create(ps, "att", ac, rng);
  const std::size_t len = 7;
  const auto mem_values = RandomVector(len * ac.memory_dim, 3);

  SUBCASE("zero parameters give uniform weights") {
    for (auto* p : ps.All()) std::fill(p->value.begin(), p->value.end(), 0.0);
    Tape tape;
    Ctx ctx{tape, ps};
    const auto mem = att.Prepare(ctx, tape.Constant({len, ac.memory_dim}, mem_values));
    const auto step = att.Attend(ctx, mem, tape.Constant({1, 4}, RandomVector(4, 4)), tape.Zeros({len, 1}));
    for (double w : step.weights.value()) CHECK(w == doctest::Approx(1.0 / len).epsilon(1e-15));
    for (std::size_t d = 0; d < ac.memory_dim; ++d) {
      double mean = 0.0;
      for (std::size_t j = 0; j < len; ++j) mean += mem_values[j * ac.memory_dim + d];
      CHECK(step.context.value()[d] == doctest::Approx(mean / len).epsilon(1e-12));
    }
  }

  SUBCASE("ones padding at the first step matches a direct convolution") {
    // Dyadic weights keep every partial sum exact, so the comparison is
    // independent of summation order.
    auto& fb = ps.Get(att.feedback).value;
    for (std::size_t i = 0; i < fb.size(); ++i) fb[i] = static_cast<double>(static_cast<int>(i % 13) - 6) / 64.0;
    Tape tape;
    Ctx ctx{tape, ps};
    const Var gamma = att.Feedback(ctx, tape.Zeros({len, 1}));
    const std::size_t half = ac.feedback_width / 2;
    std::vector<double> padded(half, 1.0);
    padded.resize(half + len + half, 0.0);
    for (std::size_t j = 0; j < len; ++j) {
      for (std::size_t f = 0; f < ac.feedback_filters; ++f) {
        double acc = 0.0;
        for (std::size_t k = 0; k < ac.feedback_width; ++k) acc += fb[f * ac.feedback_width + k] * padded[j + k];
        CHECK(gamma.value()[j * ac.feedback_filters + f] == acc);
      }
    }
    // Differencing against zero padding isolates the response to the ones.
    auto zero_pad = att;
    zero_pad.cfg.left_pad_value = 0.0;
    const auto accum = RandomVector(len, 5, 0.0, 1.0);
    const Var a = att.Feedback(ctx, tape.Constant({len, 1}, accum));
    const Var b = zero_pad.Feedback(ctx, tape.Constant({len, 1}, accum));
    for (std::size_t j = 0; j < len; ++j) {
      for (std::size_t f = 0; f < ac.feedback_filters; ++f) {
        double ones = 0.0;
        for (std::size_t k = 0; k + j < half; ++k) ones += fb[f * ac.feedback_width + k];
        const std::size_t idx = j * ac.feedback_filters + f;
        CHECK(a.value()[idx] - b.value()[idx] == doctest::Approx(ones).epsilon(1e-12));
      }
    }
  }

  SUBCASE("weights sum to one and accumulate") {
    Tape tape;
    Ctx ctx{tape, ps};
    const auto mem = att.Prepare(ctx, tape.Constant({len, ac.memory_dim}, mem_values));
    Var accum = tape.Zeros({len, 1});
    for (int i = 1; i <= 20; ++i) {
      const auto step = att.Attend(ctx, mem, tape.Constant({1, 4}, RandomVector(4, 10 + i)), accum);
      double sum = 0.0;
      for (double w : step.weights.value()) {
        CHECK(w >= 0.0);
        sum += w;
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
      accum = step.accum;
      double total = 0.0;
      for (double v : accum.value()) total += v;
      CHECK(std::abs(total - i) < 1e-9);
    }
  }

  SUBCASE("without W_p tied states give position-independent energies") {
    std::fill(ps.Get(att.w_p).value.begin(), ps.Get(att.w_p).value.end(), 0.0);
    std::fill(ps.Get(att.feedback).value.begin(), ps.Get(att.feedback).value.end(), 0.0);
    std::vector<double> tied;
    const auto row = RandomVector(ac.memory_dim, 6);
    for (std::size_t j = 0; j < len; ++j) tied.insert(tied.end(), row.begin(), row.end());
    Tape tape;
    Ctx ctx{tape, ps};
    const auto mem = att.Prepare(ctx, tape.Constant({len, ac.memory_dim}, tied));
    const auto step = att.Attend(ctx, mem, tape.Constant({1, 4}, RandomVector(4, 7)), tape.Zeros({len, 1}));
    for (double w : step.weights.value()) CHECK(w == doctest::Approx(1.0 / len).epsilon(1e-12));
  }

  SUBCASE("gradients through energies, weights and context") {
    Randomize(ps, 8);
    synthasr::testing::AddRandom(ps, "mem", {len, ac.memory_dim}, 9);
    synthasr::testing::AddRandom(ps, "q1", {1, 4}, 10);
    synthasr::testing::AddRandom(ps, "q2", {1, 4}, 11);
    ExpectGrad(ps, [&](Ctx& c) {
      const auto mem = att.Prepare(c, c.P("mem"));
      const auto s1 = att.Attend(c, mem, c.P("q1"), c.tape.Zeros({len, 1}));
      const auto s2 = att.Attend(c, mem, c.P("q2"), s1.accum);
      const Var parts[] = {s1.context, s2.context, s2.weights};
      return Probe(c, ConcatCols(parts));
    });
  }

  SUBCASE("length mismatch") {
    Tape tape;
    Ctx ctx{tape, ps};
    const auto mem = att.Prepare(ctx, tape.Constant({len, ac.memory_dim}, mem_values));
    CHECK_THROWS_AS(att.Attend(ctx, mem, tape.Zeros({1, 4}), tape.Zeros({len + 1, 1})), Error);
  }
}

TEST_CASE("encoder") {
  TtsConfig cfg;
  cfg.embed_dim = 8;
  cfg.conv_filters = 8;
  cfg.enc_hidden = 4;
  auto model = TtsModel::Create(cfg, 3);
  text::CharVocab vocab;
  const auto ids = vocab.Encode("abc de");
  Tape tape(false);
  Ctx ctx{tape, model.params()};
  const Var h = model.Encode(ctx, ids, tape.Zeros({1, cfg.speaker_dim}));
  CHECK(h.rows() == ids.size());
  CHECK(h.cols() == 2 * cfg.enc_hidden + cfg.speaker_dim);
  for (std::size_t j = 0; j < h.rows(); ++j) {
    for (std::size_t d = 2 * cfg.enc_hidden; d < h.cols(); ++d) CHECK(h.value()[j * h.cols() + d] == 0.0);
  }
  CHECK_THROWS_AS(model.Encode(ctx, std::vector<int>{}, tape.Zeros({1, cfg.speaker_dim})), Error);
}

TEST_CASE("style tokens") {
  TtsConfig cfg;
  cfg.embed_dim = 4;
  cfg.conv_filters = 4;
  cfg.enc_hidden = 2;
  auto model = TtsModel::Create(cfg, 4);
  CHECK(model.params().Get("gst/tokens").shape == Shape{100, 128});
  const auto ref = RandomMel(90, 80, 5);
  Tape tape(false);
  Ctx ctx{tape, model.params()};
  const auto out = model.Style(ctx, ref);
  CHECK(out.embedding.size() == 128);
  double sum = 0.0;
  for (double w : out.weights.value()) sum += w;
  CHECK(std::abs(sum - 1.0) < 1e-6);
  const auto& bank = model.params().Get("gst/tokens").value;
  for (std::size_t d = 0; d < 128; ++d) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t k = 0; k < 100; ++k) {
      lo = std::min(lo, bank[k * 128 + d]);
      hi = std::max(hi, bank[k * 128 + d]);
    }
    CHECK(out.embedding.value()[d] >= lo - 1e-12);
    CHECK(out.embedding.value()[d] <= hi + 1e-12);
  }
  CHECK(model.SpeakerEmbedding(ref) == model.SpeakerEmbedding(ref));
  // Short references are padded rather than rejected.
  CHECK(model.SpeakerEmbedding(RandomMel(10, 80, 6)).size() == 128);
  CHECK_THROWS_AS(model.SpeakerEmbedding(RandomMel(10, 40, 6)), Error);
}

TEST_CASE("full-model gradients") {
  auto model = TtsModel::Create(TinyConfig(), 5);
  Randomize(model.params(), 6);
  text::CharVocab vocab;
  const auto ids = vocab.Encode("ab c");
  const auto target = RandomMel(8, 4, 7);

  SUBCASE("encoder") {
    ExpectGrad(model.params(), [&](Ctx& c) {
      return Probe(c, model.Encode(c, ids, c.tape.Constant({1, 3}, {0.3, -0.2, 0.5})));
    });
  }
  SUBCASE("style tokens") {
    const auto ref = RandomMel(20, 4, 8);
    ExpectGrad(model.params(), [&](Ctx& c) { return Probe(c, model.Style(c, ref).embedding); });
  }
  SUBCASE("decoder and combined loss") {
    ExpectGrad(model.params(), [&](Ctx& c) { return TtsModel::Loss(model.Forward(c, ids, target)); });
  }
}

TEST_CASE("decoder step shapes and loss") {
  TtsConfig cfg;
  cfg.embed_dim = 8;
  cfg.conv_filters = 8;
  cfg.enc_hidden = 8;
  cfg.dec_hidden = 16;
  cfg.att_dim = 8;
  auto model = TtsModel::Create(cfg, 9);
  text::CharVocab vocab;
  const auto ids = vocab.Encode("hello");
  Tape tape;
  Ctx ctx{tape, model.params()};
  const auto target = RandomMel(10, 80, 10);
  const auto out = model.Forward(ctx, ids, target);
  CHECK(out.mel.rows() == 12);  // padded to a multiple of 3
  CHECK(out.stop.rows() == 4);
  for (double s : out.stop.value()) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  const Var step_out = model.MelHead(ctx, tape.Zeros({1, cfg.dec_hidden + cfg.memory_dim()}));
  CHECK(step_out.size() == 240);
  CHECK(TtsModel::Loss(out).item() >= 0.0);

  // Padding repeats the last frame.
  const Matrix padded = PadToMultiple(target.data, 3);
  for (std::size_t d = 0; d < 80; ++d) CHECK(padded(11, d) == target.data(9, d));

  TeacherForced perfect = out;
  perfect.mel = out.target;
  const Var l1 = L1Loss(perfect.mel, perfect.target);
  CHECK(l1.item() == 0.0);
}

TEST_CASE("synthesis stop behaviour") {
  TtsConfig cfg;
  cfg.embed_dim = 8;
  cfg.conv_filters = 8;
  cfg.enc_hidden = 8;
  cfg.dec_hidden = 16;
  cfg.att_dim = 8;
  auto model = TtsModel::Create(cfg, 11);
  text::CharVocab vocab;
  const auto ids = vocab.Encode("hi there");
  const std::vector<double> spk(128, 0.1);
  auto& bias = model.params().Get("tts/stop_out/b").value[0];

  bias = 30.0;
  auto res = model.Synthesize(ids, spk);
  CHECK(res.steps == 6);
  CHECK(res.mel.frames() == 18);
  CHECK(!res.truncated);

  bias = -30.0;
  SynthesisOptions opts;
  opts.max_steps = 23;
  res = model.Synthesize(ids, spk, opts);
  CHECK(res.steps == 23);
  CHECK(res.truncated);
  CHECK(res.mel.frames() == 69);

  // Randomized stop behaviour through the real decoding path.
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cross = static_cast<std::size_t>(rng.UniformInt(0, 30));
    opts.max_steps = 100;
    opts.stop_override = [&, cross](std::size_t step, double) {
      return step < cross ? rng.Uniform(0.0, 0.4) : rng.Uniform(0.0, 1.0) * 0.2 + (step == cross ? 0.5 : 0.0);
    };
    res = model.Synthesize(ids, spk, opts);
    CHECK(res.steps == cross + 1 + 5);
    CHECK(res.mel.frames() % 3 == 0);
  }
}

TEST_CASE("mel to linear") {
  Mel2LinConfig cfg;
  cfg.hidden = 8;
  auto model = Mel2LinModel::Create(cfg, 13);
  const auto mel = RandomMel(9, 80, 14);
  Tape tape(false);
  Ctx ctx{tape, model.params()};
  const Var y = model.Forward(ctx, tape.Constant(mel.data));
  CHECK(y.rows() == 9);
  CHECK(y.cols() == 512);

  for (auto* p : model.params().All()) {
    if (p->name.rfind("m2l/blstm0", 0) == 0) std::fill(p->value.begin(), p->value.end(), 0.0);
  }
  Tape fresh(false);
  Ctx fresh_ctx{fresh, model.params()};
  const auto x = fresh.Constant({9, 16}, RandomVector(9 * 16, 15));
  CHECK(model.Block(fresh_ctx, 0, x).value() == x.value());

  dsp::NormStats stats;
  stats.mean.assign(512, 0.0);
  stats.std.assign(512, 1.0);
  for (double v : model.Predict(mel, stats).data) CHECK(v >= 0.0);
  CHECK_THROWS_AS(model.Forward(ctx, tape.Constant(RandomMel(3, 40, 1).data)), Error);

  Mel2LinConfig tiny;
  tiny.n_mels = 3;
  tiny.hidden = 2;
  tiny.out_dim = 4;
  auto small = Mel2LinModel::Create(tiny, 16);
  Randomize(small.params(), 17);
  const auto in = RandomMel(5, 3, 18);
  const auto tgt = RandomMel(5, 4, 19);
  ExpectGrad(small.params(), [&](Ctx& c) {
    return L1Loss(small.Forward(c, c.tape.Constant(in.data)), c.tape.Constant(tgt.data));
  });
}

TEST_CASE("checkpoints and resumed training") {
  auto make = [] { return TtsModel::Create(TinyConfig(), 20); };
  text::CharVocab vocab;
  const std::vector<std::vector<int>> texts = {vocab.Encode("ab"), vocab.Encode("ba c"), vocab.Encode("c")};
  const std::vector<dsp::FeatureMatrix> mels = {RandomMel(7, 4, 21), RandomMel(9, 4, 22), RandomMel(4, 4, 23)};
  TrainerConfig tc;
  tc.batch_size = 2;
  tc.seed = 5;
  tc.optim.rule = UpdateRule::kAdam;
  tc.optim.learning_rate = 0.01;

  auto loss_for = [&](TtsModel& m) {
    return [&](Ctx& c, std::size_t i) { return TtsModel::Loss(m.Forward(c, texts[i], mels[i])); };
  };

  auto straight = make();
  Trainer t1(straight.params(), tc);
  const auto batches = t1.EpochBatches(3);
  t1.Step(batches[0], loss_for(straight));
  t1.Step(batches[1], loss_for(straight));

  auto first = make();
  Trainer t2(first.params(), tc);
  t2.Step(batches[0], loss_for(first));
  const auto path = std::filesystem::temp_directory_path() / "synthasr_tts_state.ckpt";
  t2.Save(path, nlohmann::json{{"kind", "tts"}, {"config", TinyConfig()}}.dump());

  auto resumed = TtsModel::Load(path);
  Trainer t3(resumed.params(), tc);
  t3.Load(path);
  t3.Step(batches[1], loss_for(resumed));
  for (const auto* p : straight.params().All()) CHECK(resumed.params().Get(p->name).value == p->value);
  std::filesystem::remove(path);

  const auto model_path = std::filesystem::temp_directory_path() / "synthasr_tts.ckpt";
  straight.Save(model_path);
  const auto back = TtsModel::Load(model_path);
  for (const auto* p : straight.params().All()) CHECK(back.params().Get(p->name).value == p->value);
  std::filesystem::remove(model_path);
}
