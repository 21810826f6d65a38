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
#include <string>
#include <vector>

namespace synthasr::pipeline {

enum class Origin { kReal, kSynthetic };

std::string ToString(Origin o);
Origin ParseOrigin(const std::string& s);

struct Record {
  std::string utterance_id;
  std::string audio_path;  // absolute after loading
  std::string transcript;
  std::string speaker_id;
  double duration_s = 0.0;
  Origin origin = Origin::kReal;
  bool truncated = false;  // synthesis hit max_steps
};

using Manifest = std::vector<Record>;

// Throws kFormat on duplicate ids or non-positive durations.
void ValidateManifest(const Manifest& m);

// One JSON object per line. Relative audio paths resolve against the
// manifest's directory.
Manifest ReadManifest(const std::filesystem::path& path);
void WriteManifest(const std::filesystem::path& path, const Manifest& m);

struct IngestReport {
  Manifest manifest;
  std::vector<std::string> rejected;  // one reason per dropped entry
};

// Accepts a JSONL listing or a directory. In a directory every *.wav with
// a sibling *.txt transcript becomes a record; the speaker is the part of
// the file stem before the first '-'. Durations always come from the WAV
// header. Throws kIo when nothing valid remains.
IngestReport Ingest(const std::filesystem::path& source);

double TotalHours(const Manifest& m);

}  // namespace synthasr::pipeline
