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

#include <cctype>
#include <filesystem>

#include "synthasr/error.hpp"
#include "synthasr/rng.hpp"
#include "synthasr/text/text.hpp"

using namespace synthasr;
using namespace synthasr::text;

namespace {

// Random toy corpus and the merges produced by an independent Python
// implementation of greedy BPE with lexicographic tie-breaking.
const WordCounts kToyCorpus = {
    {"bda", 1},   {"acaba", 1},  {"daba", 5},   {"aaba", 5},   {"dabab", 3},  {"bacb", 1},
    {"bcaaa", 5}, {"dd", 3},     {"dccb", 2},   {"bacdcd", 3}, {"aadbc", 2},  {"daac", 3},
    {"cddaac", 4}, {"aacdcd", 3}, {"d", 5},      {"ad", 1},     {"cb", 2},     {"ddab", 4},
    {"cbdc", 4},  {"dbb", 1},    {"bb", 2},     {"cc", 1},     {"dc", 5},     {"cbadd", 4},
    {"dadd", 1},  {"ab", 4},     {"ac", 5},     {"a", 1},      {"bacaa", 2},  {"dbccc", 4}};

const std::vector<std::pair<std::string, std::string>> kToyMerges = {
    {"a", "a"},      {"b", "a"},       {"d", "a"},       {"b", "a</w>"},    {"c", "d"},
    {"b", "c"},      {"d", "c</w>"},   {"d", "d</w>"},   {"aa", "c</w>"},   {"d", "aac</w>"},
    {"c", "d</w>"},  {"cd", "cd</w>"}, {"a", "c</w>"},   {"aa", "a</w>"},   {"aa", "ba</w>"},
    {"bc", "aaa</w>"}, {"c", "b</w>"}, {"c", "c</w>"},   {"da", "ba</w>"},  {"a", "b</w>"},
    {"b", "dc</w>"}, {"ba", "dd</w>"}, {"bc", "cc</w>"}, {"c", "badd</w>"}, {"c", "bdc</w>"}};

}  // namespace

TEST_CASE("char vocabulary") {
  CharVocab v;
  CHECK(v.size() == 29);
  CHECK(std::count(v.symbols().begin(), v.symbols().end(), '~') == 1);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.Index(v.Symbol(static_cast<int>(i))) == static_cast<int>(i));
  const auto ids = v.Encode("Hello");
  CHECK(v.Decode(ids) == "hello~");
  CHECK(ids.back() == v.end_id());
  CHECK_THROWS_AS(v.Index('#'), Error);
}

TEST_CASE("normalization") {
  CHECK(NormalizeText("Hello") == "hello~");
  const std::string norm = "it's a test";
  CHECK(NormalizeText(norm, false) == norm);
  CHECK(NormalizeText(NormalizeText("Mixed Case", true), true) == "mixed case~");
  std::string dropped;
  CHECK(NormalizeText("  Hi,   THERE 42! ", false, &dropped) == "hi there");
  CHECK(dropped == ",42!");

  Rng rng(3);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ'";
  for (int trial = 0; trial < 50; ++trial) {
    std::string line;
    for (int i = 0; i < 40; ++i) {
      line.push_back(rng.Uniform() < 0.15 ? ' ' : alphabet[rng.UniformInt(0, alphabet.size() - 1)]);
    }
    std::string expect;
    for (char c : line) expect.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    // Collapse spaces to compare against the whitespace rule.
    std::string collapsed;
    for (const auto& w : SplitWords(expect)) collapsed += (collapsed.empty() ? "" : " ") + w;
    CHECK(NormalizeTranscript(line) == collapsed);
  }
}

TEST_CASE("bpe learning") {
  SUBCASE("overlapping pair counts") {
    const auto m = BpeLearn({{"aaab", 1}}, 1);
    REQUIRE(m.merges.size() == 1);
    CHECK(m.merges[0] == std::pair<std::string, std::string>{"a", "a"});
  }
  SUBCASE("no merges gives characters") {
    const auto m = BpeLearn({{"hello", 2}}, 0);
    CHECK(BpeApply(m, "hello") == std::vector<std::string>{"h@@", "e@@", "l@@", "l@@", "o"});
  }
  SUBCASE("stops early") {
    CHECK(BpeLearn({{"ab", 1}}, 10).merges.size() == 1);
  }
  SUBCASE("matches the reference implementation") {
    const auto m = BpeLearn(kToyCorpus, 25);
    CHECK(m.merges == kToyMerges);
    CHECK(BpeLearn(kToyCorpus, 25).merges == m.merges);
    CHECK(BpeSegment(m, "bacaa") == std::vector<std::string>{"ba", "c", "a", "a</w>"});
    CHECK(BpeSegment(m, "aadbc") == std::vector<std::string>{"aa", "d", "b", "c</w>"});
    CHECK(BpeSegment(m, "cddaac") == std::vector<std::string>{"cd", "daac</w>"});
  }
  CHECK_THROWS_AS(BpeLearn({}, 3), Error);
}

TEST_CASE("bpe apply and decode") {
  const auto m = BpeLearn(kToyCorpus, 25);
  SUBCASE("round trip") {
    for (const auto& [w, n] : kToyCorpus) {
      const auto pieces = BpeApply(m, w);
      CHECK(BpeDecode(pieces) == w);
    }
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      std::string w;
      const auto len = rng.UniformInt(1, 12);
      for (int i = 0; i < len; ++i) w.push_back(kBaseChars[rng.UniformInt(0, 26)]);
      CHECK(BpeDecode(BpeApply(m, w)) == w);
    }
  }
  SUBCASE("unseen word falls back to characters") {
    CHECK(BpeApply(m, "xyz") == std::vector<std::string>{"x@@", "y@@", "z"});
  }
  SUBCASE("segment count is non-increasing in the number of merges") {
    for (const char* w : {"bacdcd", "dabab", "cbadd", "abcdabcd"}) {
      std::size_t prev = std::string(w).size();
      for (std::size_t n = 0; n <= 25; ++n) {
        BpeModel prefix;
        prefix.merges.assign(m.merges.begin(), m.merges.begin() + n);
        const auto count = BpeSegment(prefix, w).size();
        CHECK(count <= prev);
        prev = count;
      }
    }
  }
  SUBCASE("sentences") {
    const std::vector<std::string> pieces = {"da@@", "ba", "c@@", "d"};
    CHECK(BpeDecode(pieces) == "daba cd");
  }
}

TEST_CASE("bpe vocabulary and model file") {
  const auto m = BpeLearn(kToyCorpus, 25);
  BpeVocab vocab(m);
  CHECK(vocab.Id("a") >= 0);
  CHECK(vocab.Id("a@@") >= 0);
  CHECK(vocab.Id("daba") >= 0);
  CHECK(vocab.Id("zz") == -1);
  const auto ids = vocab.Encode("Daba CDDAAC xyz");
  CHECK(vocab.Decode(ids) == "daba cddaac xyz");

  const auto path = std::filesystem::temp_directory_path() / "synthasr_test.bpe";
  SaveBpe(path, m);
  CHECK(LoadBpe(path).merges == m.merges);
  std::filesystem::remove(path);
}
