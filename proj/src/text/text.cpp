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

#include "synthasr/text/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "synthasr/error.hpp"
#include "synthasr/log.hpp"

namespace synthasr::text {

namespace {

bool IsBase(char c) { return (c >= 'a' && c <= 'z') || c == '\''; }

std::string Clean(const std::string& s, std::string* dropped) {
  std::string out;
  bool pending_space = false;
  for (char raw : s) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (!IsBase(c)) {
      if (c != kEndToken && dropped) dropped->push_back(raw);
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> InitialSymbols(const std::string& word) {
  std::vector<std::string> syms;
  for (std::size_t i = 0; i < word.size(); ++i) {
    std::string s(1, word[i]);
    if (i + 1 == word.size()) s += kWordEnd;
    syms.push_back(std::move(s));
  }
  return syms;
}

void ApplyMerge(std::vector<std::string>& syms, const std::string& a, const std::string& b) {
  std::vector<std::string> out;
  out.reserve(syms.size());
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (i + 1 < syms.size() && syms[i] == a && syms[i + 1] == b) {
      out.push_back(a + b);
      ++i;
    } else {
      out.push_back(std::move(syms[i]));
    }
  }
  syms = std::move(out);
}

std::string External(const std::string& sym) {
  if (EndsWith(sym, kWordEnd)) return sym.substr(0, sym.size() - 4);
  return sym + kContinuation;
}

}  // namespace

CharVocab::CharVocab() : symbols_("abcdefghijklmnopqrstuvwxyz '~") {
  std::fill(std::begin(index_), std::end(index_), -1);
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    index_[static_cast<unsigned char>(symbols_[i])] = static_cast<int>(i);
  }
}

int CharVocab::Index(char c) const {
  const int id = index_[static_cast<unsigned char>(c)];
  Require(id >= 0, std::string("character not in vocabulary: '") + c + "'");
  return id;
}

char CharVocab::Symbol(int id) const {
  Require(id >= 0 && static_cast<std::size_t>(id) < symbols_.size(),
          "symbol id out of range: " + std::to_string(id));
  return symbols_[static_cast<std::size_t>(id)];
}

std::vector<int> CharVocab::Encode(const std::string& s) const {
  std::string dropped;
  const std::string norm = NormalizeText(s, true, &dropped);
  if (!dropped.empty()) LogWarn("dropped characters \"", dropped, "\" from \"", s, "\"");
  std::vector<int> ids;
  ids.reserve(norm.size());
  for (char c : norm) ids.push_back(Index(c));
  return ids;
}

std::string CharVocab::Decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) out.push_back(Symbol(id));
  return out;
}

std::string NormalizeText(const std::string& s, bool append_end, std::string* dropped) {
  std::string out = Clean(s, dropped);
  if (append_end) out.push_back(kEndToken);
  return out;
}

std::string NormalizeTranscript(const std::string& s, std::string* dropped) {
  return Clean(s, dropped);
}

std::vector<std::string> SplitWords(const std::string& s) {
  std::vector<std::string> words;
  std::istringstream is(s);
  for (std::string w; is >> w;) words.push_back(w);
  return words;
}

WordCounts CountWords(std::span<const std::string> lines) {
  WordCounts counts;
  for (const auto& line : lines) {
    for (const auto& w : SplitWords(NormalizeTranscript(line))) ++counts[w];
  }
  return counts;
}

BpeModel BpeLearn(const WordCounts& corpus, std::size_t n_merges) {
  Require(!corpus.empty(), "bpe_learn: empty corpus");
  std::vector<std::pair<std::vector<std::string>, long>> words;
  for (const auto& [w, n] : corpus) {
    if (!w.empty() && n > 0) words.emplace_back(InitialSymbols(w), n);
  }
  BpeModel model;
  while (model.merges.size() < n_merges) {
    std::map<std::pair<std::string, std::string>, long> counts;
    for (const auto& [syms, n] : words) {
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) counts[{syms[i], syms[i + 1]}] += n;
    }
    if (counts.empty()) break;
    // std::map iterates in lexicographic order, so the first maximum wins
    // ties.
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    model.merges.push_back(best->first);
    for (auto& entry : words) ApplyMerge(entry.first, best->first.first, best->first.second);
  }
  return model;
}

std::vector<std::string> BpeSegment(const BpeModel& model, const std::string& word) {
  auto syms = InitialSymbols(word);
  for (const auto& [a, b] : model.merges) {
    if (syms.size() < 2) break;
    ApplyMerge(syms, a, b);
  }
  return syms;
}

std::vector<std::string> BpeApply(const BpeModel& model, const std::string& word) {
  std::vector<std::string> pieces;
  for (const auto& s : BpeSegment(model, word)) pieces.push_back(External(s));
  return pieces;
}

std::string BpeDecode(std::span<const std::string> pieces) {
  std::string out;
  bool continued = false;
  for (const auto& p : pieces) {
    if (!out.empty() && !continued) out.push_back(' ');
    continued = EndsWith(p, kContinuation);
    out += continued ? p.substr(0, p.size() - 2) : p;
  }
  return out;
}

void SaveBpe(const std::filesystem::path& path, const BpeModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& [a, b] : model.merges) out << a << ' ' << b << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

BpeModel LoadBpe(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  BpeModel model;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string a, b, extra;
    if (!(is >> a >> b) || (is >> extra)) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": bad merge line");
    }
    model.merges.emplace_back(a, b);
  }
  return model;
}

BpeVocab::BpeVocab(const BpeModel& model) : model_(model) {
  auto add = [&](const std::string& t) {
    if (ids_.count(t)) return;
    ids_[t] = static_cast<int>(tokens_.size());
    tokens_.push_back(t);
  };
  for (const char* c = kBaseChars; *c; ++c) {
    add(std::string(1, *c));
    add(std::string(1, *c) + kContinuation);
  }
  for (const auto& [a, b] : model_.merges) add(External(a + b));
}

int BpeVocab::Id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? -1 : it->second;
}

std::vector<int> BpeVocab::Encode(const std::string& transcript) const {
  std::string dropped;
  const std::string norm = NormalizeTranscript(transcript, &dropped);
  if (!dropped.empty()) LogWarn("dropped characters \"", dropped, "\" from transcript");
  std::vector<int> ids;
  for (const auto& word : SplitWords(norm)) {
    for (const auto& piece : BpeApply(model_, word)) {
      const int id = Id(piece);
      if (id >= 0) {
        ids.push_back(id);
        continue;
      }
      const bool continued = EndsWith(piece, kContinuation);
      const std::string chars = continued ? piece.substr(0, piece.size() - 2) : piece;
      for (std::size_t i = 0; i < chars.size(); ++i) {
        const bool last = i + 1 == chars.size() && !continued;
        ids.push_back(Id(std::string(1, chars[i]) + (last ? "" : kContinuation)));
      }
    }
  }
  return ids;
}

std::string BpeVocab::Decode(std::span<const int> ids) const {
  std::vector<std::string> pieces;
  for (int id : ids) pieces.push_back(Token(id));
  return BpeDecode(pieces);
}

}  // namespace synthasr::text
