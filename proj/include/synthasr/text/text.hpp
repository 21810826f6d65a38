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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace synthasr::text {

inline constexpr char kEndToken = '~';

// TTS input symbols: a-z, space, apostrophe, and the end token.
class CharVocab {
 public:
  CharVocab();

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbols() const { return symbols_; }
  bool Contains(char c) const { return index_[static_cast<unsigned char>(c)] >= 0; }
  int Index(char c) const;
  char Symbol(int id) const;
  int end_id() const { return Index(kEndToken); }

  // Normalizes then maps to ids; the end token is appended.
  std::vector<int> Encode(const std::string& s) const;
  std::string Decode(std::span<const int> ids) const;

 private:
  std::string symbols_;
  int index_[256];
};

// Lowercases, maps whitespace runs to single spaces, trims, and drops
// characters outside a-z and apostrophe (reported through `dropped`). A
// trailing end token is appended when `append_end` is set and not already
// present.
std::string NormalizeText(const std::string& s, bool append_end = true,
                          std::string* dropped = nullptr);

// Same as NormalizeText without the end token, for ASR transcripts.
std::string NormalizeTranscript(const std::string& s, std::string* dropped = nullptr);

std::vector<std::string> SplitWords(const std::string& s);

using WordCounts = std::map<std::string, long>;
WordCounts CountWords(std::span<const std::string> lines);

// Subword symbols carry an internal "</w>" suffix on word-final pieces
// while learning. Externally non-final pieces end in "@@".
inline constexpr const char* kWordEnd = "</w>";
inline constexpr const char* kContinuation = "@@";

struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;
};

// Greedy pair merging. Pair counts include overlapping occurrences; ties
// go to the lexicographically smallest pair. Stops early when no pair
// remains.
BpeModel BpeLearn(const WordCounts& corpus, std::size_t n_merges);

// Internal segmentation (with "</w>") after applying merges in order.
std::vector<std::string> BpeSegment(const BpeModel& model, const std::string& word);
// External pieces: non-final ones end in "@@".
std::vector<std::string> BpeApply(const BpeModel& model, const std::string& word);
std::string BpeDecode(std::span<const std::string> pieces);

void SaveBpe(const std::filesystem::path& path, const BpeModel& model);
BpeModel LoadBpe(const std::filesystem::path& path);

// Maps external pieces to dense ids: every base character in both
// final and continued forms, then one entry per merge result.
class BpeVocab {
 public:
  BpeVocab() = default;
  explicit BpeVocab(const BpeModel& model);

  std::size_t size() const { return tokens_.size(); }
  const std::string& Token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int Id(const std::string& token) const;  // -1 when absent

  // Transcript -> token ids. Pieces missing from the vocabulary fall back
  // to characters; characters outside the base set are dropped.
  std::vector<int> Encode(const std::string& transcript) const;
  std::string Decode(std::span<const int> ids) const;

  const BpeModel& model() const { return model_; }

 private:
  BpeModel model_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Base characters of the subword alphabet.
inline constexpr const char* kBaseChars = "abcdefghijklmnopqrstuvwxyz'";

}  // namespace synthasr::text
