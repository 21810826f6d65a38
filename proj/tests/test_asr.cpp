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
#include <functional>
#include <limits>

#include "gradcheck.hpp"
#include "synthasr/asr/asr.hpp"
#include "synthasr/error.hpp"
#include "synthasr/nn/ops.hpp"
#include "synthasr/nn/trainer.hpp"

using namespace synthasr;
using namespace synthasr::nn;
using namespace synthasr::asr;
using synthasr::testing::GradCheck;

namespace {

AsrConfig TinyConfig(std::size_t vocab = 2) {
  AsrConfig c;
  c.input_dim = 3;
  c.enc_hidden = 2;
  c.embed_dim = 2;
  c.dec_hidden = 3;
  c.att_dim = 3;
  c.vocab = vocab;
  return c;
}

Matrix RandomFeatures(std::size_t frames, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(frames, dim);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = rng.Uniform(-1.0, 1.0);
  }
  return m;
}

// Next-token distribution is a fixed pseudo-random function of the prefix.
struct TableModel {
  struct State {
    std::vector<int> prefix;
    std::vector<double> log_probs;
  };
  std::size_t n = 3;
  std::uint64_t seed = 1;

  std::size_t classes() const { return n; }
  int eos() const { return static_cast<int>(n) - 1; }
  std::vector<double> Dist(const std::vector<int>& prefix) const {
    std::uint64_t s = seed;
    for (int t : prefix) s = s * 1000003u + static_cast<std::uint64_t>(t) + 7u;
    Rng rng(s);
    std::vector<double> z(n);
    double norm = 0.0;
    for (auto& v : z) {
      v = rng.Uniform(-2.0, 2.0);
      norm += std::exp(v);
    }
    for (auto& v : z) v -= std::log(norm);
    return z;
  }
  State Start() { return {{}, Dist({})}; }
  State Advance(const State& s, int token) {
    State r{s.prefix, {}};
    r.prefix.push_back(token);
    r.log_probs = Dist(r.prefix);
    return r;
  }
};

struct ConstantLm : LmScorer {
  double LogProb(std::span<const int>, int) const override { return -1.25; }
};

std::vector<int> Greedy(TableModel& m, std::size_t max_len) {
  auto s = m.Start();
  std::vector<int> out;
  for (std::size_t i = 0; i < max_len; ++i) {
    const auto best = static_cast<int>(std::max_element(s.log_probs.begin(), s.log_probs.end()) -
                                       s.log_probs.begin());
    if (best == m.eos()) break;
    out.push_back(best);
    s = m.Advance(s, best);
  }
  return out;
}

// Best fused score over every end-terminated sequence of at most max_len
// steps.
template <typename Model>
std::pair<double, std::vector<int>> Enumerate(Model& m, const LmScorer* lm, double w,
                                              std::size_t max_len, std::size_t* count) {
  std::pair<double, std::vector<int>> best{-std::numeric_limits<double>::infinity(), {}};
  std::function<void(const typename Model::State&, std::vector<int>&, double, double)> rec =
      [&](const typename Model::State& s, std::vector<int>& prefix, double asr, double lmv) {
        for (int t = 0; t < static_cast<int>(m.classes()); ++t) {
          const double a = asr + s.log_probs[static_cast<std::size_t>(t)];
          const double l = lm ? lmv + lm->LogProb(prefix, t) : 0.0;
          if (t == m.eos()) {
            ++*count;
            if (a + w * l > best.first) best = {a + w * l, prefix};
          } else if (prefix.size() + 1 < max_len) {
            prefix.push_back(t);
            rec(m.Advance(s, t), prefix, a, l);
            prefix.pop_back();
          }
        }
      };
  std::vector<int> prefix;
  rec(m.Start(), prefix, 0.0, 0.0);
  return best;
}

std::size_t BruteEdits(std::span<const std::string> a, std::span<const std::string> b,
                       std::size_t* subs) {
  // Enumerates every alignment path; returns min edits and the fewest
  // substitutions among those.
  if (a.empty() || b.empty()) {
    *subs = 0;
    return a.size() + b.size();
  }
  std::size_t s1, s2, s3;
  const std::size_t same = a[0] == b[0] ? 0 : 1;
  std::pair<std::size_t, std::size_t> opts[] = {
      {BruteEdits(a.subspan(1), b.subspan(1), &s1) + same, 0},
      {BruteEdits(a.subspan(1), b, &s2) + 1, 0},
      {BruteEdits(a, b.subspan(1), &s3) + 1, 0}};
  opts[0].second = s1 + same;
  opts[1].second = s2;
  opts[2].second = s3;
  const auto best = *std::min_element(std::begin(opts), std::end(opts));
  *subs = best.second;
  return best.first;
}

}  // namespace

TEST_CASE("encoder length") {
  CHECK(EncodedLength(80) == 10);
  CHECK(EncodedLength(81) == 11);
  CHECK(EncodedLength(1) == 1);
  const auto model = AsrModel::Create(TinyConfig(), 1);
  for (std::size_t t : {8u, 9u, 17u, 80u, 81u}) {
    Tape tape(false);
    Ctx ctx{tape, const_cast<ParameterStore&>(model.params())};
    const auto enc = model.Encode(ctx, tape.Constant(RandomFeatures(t, 3, t)));
    CHECK(enc.rows() == EncodedLength(t));
    CHECK(enc.rows() == static_cast<std::size_t>(std::ceil(std::ceil(std::ceil(t / 2.0) / 2.0) / 2.0)));
    CHECK(enc.cols() == 4);
  }
  Tape tape(false);
  Ctx ctx{tape, const_cast<ParameterStore&>(model.params())};
  CHECK_THROWS_AS(model.Encode(ctx, tape.Constant(Matrix(0, 3))), Error);
  CHECK_THROWS_AS(model.Encode(ctx, tape.Constant(Matrix(4, 2))), Error);
}

TEST_CASE("config validation") {
  AsrConfig c = TinyConfig();
  c.vocab = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = TinyConfig();
  c.pool_layers = 7;
  CHECK_THROWS_AS(c.Validate(), Error);
  const nlohmann::json j = TinyConfig(5);
  CHECK(j.get<AsrConfig>().vocab == 5);
  CHECK(j.get<AsrConfig>().eos() == 5);
}

TEST_CASE("asr gradients") {
  auto model = AsrModel::Create(TinyConfig(), 3);
  const Matrix x = RandomFeatures(9, 3, 4);
  const std::vector<int> labels = {1, 0};
  SUBCASE("encoder") {
    const auto r = GradCheck(model.params(), [&](Ctx& c) {
      const Var e = model.Encode(c, c.tape.Constant(x));
      return Sum(Mul(e, e));
    });
    CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst);
  }
  SUBCASE("joint loss") {
    const auto r = GradCheck(model.params(), [&](Ctx& c) { return model.Loss(c, x, labels, 0.5).total; });
    CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst);
  }
}

TEST_CASE("loss composition") {
  const auto model = AsrModel::Create(TinyConfig(), 5);
  auto& ps = const_cast<ParameterStore&>(model.params());
  const Matrix x = RandomFeatures(16, 3, 6);
  const std::vector<int> labels = {0, 1};
  Tape t0(false), t1(false);
  Ctx c0{t0, ps}, c1{t1, ps};
  const auto pure = model.Loss(c0, x, labels, 0.0);
  CHECK_FALSE(pure.ctc_used);
  CHECK(pure.total.item() == pure.ce);
  const auto joint = model.Loss(c1, x, labels, 0.5);
  CHECK(joint.ce == pure.ce);
  CHECK(joint.total.item() == doctest::Approx(joint.ce + 0.5 * joint.ctc).epsilon(1e-12));

  // 16 frames -> 2 encoder states; three distinct labels need 3.
  Tape t2(false);
  Ctx c2{t2, ps};
  const std::vector<int> longer = {0, 1, 0};
  try {
    model.Loss(c2, x, longer, 0.5);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInfeasible);
  }
  Tape t3(false);
  Ctx c3{t3, ps};
  CHECK_NOTHROW(model.Loss(c3, x, longer, 0.0));
  CHECK_THROWS_AS(model.Loss(c3, x, std::vector<int>{2}, 0.0), Error);
}

TEST_CASE("one-step cross-entropy by hand") {
  auto model = AsrModel::Create(TinyConfig(1), 7);
  auto& w = model.params().Get("asr/out/w");
  std::fill(w.value.begin(), w.value.end(), 0.0);
  auto& b = model.params().Get("asr/out/b");
  b.value = {0.3, -0.4};
  const Matrix x = RandomFeatures(8, 3, 8);
  Tape tape(false);
  Ctx ctx{tape, model.params()};
  const auto loss = model.Loss(ctx, x, {}, 0.0);
  const double expect = -(-0.4 - std::log(std::exp(0.3) + std::exp(-0.4)));
  CHECK(loss.total.item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("toy training halves the loss") {
  auto model = AsrModel::Create(TinyConfig(), 11);
  std::vector<Matrix> feats;
  std::vector<std::vector<int>> labels;
  for (std::size_t i = 0; i < 20; ++i) {
    std::vector<int> l = {static_cast<int>(i % 2), static_cast<int>((i / 2) % 2)};
    Matrix m(32, 3);
    for (std::size_t t = 0; t < 32; ++t) {
      const int sym = l[t < 16 ? 0 : 1];
      m(t, 0) = sym == 0 ? 1.0 : -1.0;
      m(t, 1) = sym == 1 ? 1.0 : -1.0;
      m(t, 2) = 0.05 * static_cast<double>(i % 5);
    }
    feats.push_back(m);
    labels.push_back(l);
  }
  TrainerConfig tc;
  tc.optim.rule = UpdateRule::kAdam;
  tc.optim.learning_rate = 0.02;
  tc.batch_size = 4;
  tc.seed = 3;
  Trainer trainer(model.params(), tc);
  auto loss = [&](Ctx& c, std::size_t i) { return model.Loss(c, feats[i], labels[i], 0.5).total; };
  const double before = trainer.Evaluate(feats.size(), loss);
  for (int e = 0; e < 50; ++e) trainer.RunEpoch(feats.size(), loss);
  const double after = trainer.Evaluate(feats.size(), loss);
  MESSAGE("toy asr loss " << before << " -> " << after);
  CHECK(after <= 0.5 * before);
}

TEST_CASE("beam search on an enumerable model") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    TableModel m;
    m.seed = seed;
    const BeamOptions opts{81, 4};
    std::vector<std::vector<int>> sents = {{0, 1}, {1}, {0, 0, 1}};
    const auto lm = BigramLm::Train(sents, 3, 2);
    for (double w : {0.0, 0.5, 2.0}) {
      std::size_t count = 0;
      const auto oracle = Enumerate(m, &lm, w, 4, &count);
      CHECK(count == 15);
      const auto got = BeamSearch(m, &lm, w, opts);
      CHECK(got.tokens == oracle.second);
      CHECK(got.score == doctest::Approx(oracle.first).epsilon(1e-12));
      CHECK(got.finished);
    }
  }
}

TEST_CASE("beam width one is greedy") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    TableModel m;
    m.n = 4;
    m.seed = seed;
    const auto got = BeamSearch(m, nullptr, 0.0, BeamOptions{1, 6});
    CHECK(got.tokens == Greedy(m, 6));
  }
}

TEST_CASE("fusion identity and constant scorer") {
  const auto model = AsrModel::Create(TinyConfig(3), 13);
  std::vector<std::vector<int>> sents = {{0, 1, 2}, {2, 2}, {1}};
  const auto lm = BigramLm::Train(sents, 4, 3);
  const ConstantLm flat;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix x = RandomFeatures(24, 3, 100 + s);
    AsrStepModel a(model, x), b(model, x);
    const BeamOptions opts{3, 8};
    const auto plain = BeamSearch(a, nullptr, 0.0, opts);
    const auto fused = BeamSearch(b, &lm, 0.0, opts);
    CHECK(plain.tokens == fused.tokens);
    CHECK(plain.score == fused.score);
    // Constant LM scores shift every equal-length hypothesis equally, so the
    // argmax over exhaustive enumeration does not move.
    AsrStepModel c(model, x), d(model, x);
    std::size_t n1 = 0, n2 = 0;
    const auto e0 = Enumerate(c, nullptr, 0.0, 3, &n1);
    const auto e1 = Enumerate(d, &flat, 0.0, 3, &n2);
    CHECK(e0.second == e1.second);
  }
  TableModel m;
  CHECK_THROWS_AS(BeamSearch(m, nullptr, 0.0, BeamOptions{0, 4}), Error);
}

TEST_CASE("real model exhaustive fusion") {
  const auto model = AsrModel::Create(TinyConfig(2), 17);
  std::vector<std::vector<int>> sents = {{0, 1}, {1, 1}};
  const auto lm = BigramLm::Train(sents, 3, 2);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix x = RandomFeatures(16, 3, 200 + s);
    AsrStepModel a(model, x), b(model, x);
    std::size_t count = 0;
    const auto oracle = Enumerate(a, &lm, 0.8, 4, &count);
    const auto got = BeamSearch(b, &lm, 0.8, BeamOptions{count, 4});
    CHECK(got.tokens == oracle.second);
    CHECK(got.score == doctest::Approx(oracle.first).epsilon(1e-12));
  }
}

TEST_CASE("bigram table") {
  std::vector<std::vector<int>> sents = {{0, 1}, {0}, {2, 1, 0}};
  const auto lm = BigramLm::Train(sents, 4, 3);
  for (int p = 0; p < 4; ++p) {
    double total = 0.0;
    std::vector<int> prefix = {p};
    for (int t = 0; t < 4; ++t) total += std::exp(lm.LogProb(prefix, t));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  // After the start symbol: counts 2 (token 0), 1 (token 2), plus one each.
  CHECK(lm.LogProb({}, 0) == doctest::Approx(std::log(3.0 / 7.0)).epsilon(1e-12));
  const auto path = std::filesystem::temp_directory_path() / "synthasr_bigram_test.txt";
  lm.Save(path);
  const auto back = BigramLm::Load(path);
  for (int p = 0; p < 4; ++p) {
    for (int t = 0; t < 4; ++t) {
      std::vector<int> prefix = {p};
      CHECK(back.LogProb(prefix, t) == lm.LogProb(prefix, t));
    }
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(lm.LogProb({}, 4), Error);
}

TEST_CASE("checkpoint round trip") {
  const auto model = AsrModel::Create(TinyConfig(), 19);
  const auto path = std::filesystem::temp_directory_path() / "synthasr_asr_test.ckpt";
  model.Save(path);
  const auto back = AsrModel::Load(path);
  CHECK(back.config().vocab == model.config().vocab);
  for (const auto* p : model.params().All()) CHECK(back.params().Get(p->name).value == p->value);
  std::filesystem::remove(path);
}

TEST_CASE("wer examples") {
  auto r = Wer("a b c", "a b c");
  CHECK(r.errors() == 0);
  CHECK(r.rate == 0.0);
  r = Wer("a x c", "a b c");
  CHECK(r.substitutions == 1);
  CHECK(r.insertions == 0);
  CHECK(r.deletions == 0);
  CHECK(r.rate == doctest::Approx(1.0 / 3.0));
  r = Wer("a b", "");
  CHECK(r.empty_reference);
  CHECK(r.insertions == 2);
  CHECK(r.rate == 2.0);
  r = Wer("", "a b c");
  CHECK(r.deletions == 3);
  CHECK(r.rate == 1.0);
}

TEST_CASE("wer against path enumeration") {
  Rng rng(42);
  const std::string words[] = {"a", "b", "c"};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t max_len = trial < 280 ? 6 : 8;
    std::vector<std::string> h(rng.Next() % (max_len + 1)), r(rng.Next() % (max_len + 1));
    for (auto& w : h) w = words[rng.Next() % 3];
    for (auto& w : r) w = words[rng.Next() % 3];
    std::size_t subs = 0;
    const std::size_t edits = BruteEdits(r, h, &subs);
    const auto got = Wer(std::span<const std::string>(h), std::span<const std::string>(r));
    REQUIRE(got.errors() == edits);
    CHECK(got.substitutions == subs);
    CHECK(static_cast<long>(got.insertions) - static_cast<long>(got.deletions) ==
          static_cast<long>(h.size()) - static_cast<long>(r.size()));
    const auto swapped = Wer(std::span<const std::string>(r), std::span<const std::string>(h));
    CHECK(swapped.errors() == got.errors());
    CHECK(swapped.substitutions == got.substitutions);
    CHECK(swapped.insertions == got.deletions);
    CHECK(swapped.deletions == got.insertions);
  }
}
