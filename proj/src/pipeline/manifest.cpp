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

#include "synthasr/pipeline/manifest.hpp"

#include <fstream>
#include <set>

#include "json.hpp"
#include "synthasr/dsp/io.hpp"
#include "synthasr/error.hpp"
#include "synthasr/log.hpp"

namespace synthasr::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string ToString(Origin o) { return o == Origin::kReal ? "real" : "synthetic"; }

Origin ParseOrigin(const std::string& s) {
  if (s == "real") return Origin::kReal;
  if (s == "synthetic") return Origin::kSynthetic;
  throw Error(ErrorCode::kFormat, "unknown origin '" + s + "'");
}

void ValidateManifest(const Manifest& m) {
  std::set<std::string> ids;
  for (const auto& r : m) {
    Require(!r.utterance_id.empty(), "manifest: empty utterance id", ErrorCode::kFormat);
    Require(ids.insert(r.utterance_id).second, "manifest: duplicate id " + r.utterance_id,
            ErrorCode::kFormat);
    Require(r.duration_s > 0.0, "manifest: non-positive duration for " + r.utterance_id,
            ErrorCode::kFormat);
  }
}

namespace {

Record FromJson(const json& j, const fs::path& base) {
  Record r;
  r.utterance_id = j.at("utterance_id").get<std::string>();
  fs::path audio = j.at("audio_path").get<std::string>();
  if (audio.is_relative()) audio = base / audio;
  r.audio_path = audio.lexically_normal().string();
  r.transcript = j.value("transcript", "");
  r.speaker_id = j.value("speaker_id", "");
  r.duration_s = j.value("duration_s", 0.0);
  r.origin = ParseOrigin(j.value("origin", "real"));
  r.truncated = j.value("truncated", false);
  return r;
}

}  // namespace

Manifest ReadManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read manifest " + path.string());
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      m.push_back(FromJson(json::parse(line), path.parent_path()));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  ValidateManifest(m);
  return m;
}

void WriteManifest(const fs::path& path, const Manifest& m) {
  ValidateManifest(m);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest " + path.string());
  for (const auto& r : m) {
    json j{{"utterance_id", r.utterance_id}, {"audio_path", r.audio_path},
           {"transcript", r.transcript},     {"speaker_id", r.speaker_id},
           {"duration_s", r.duration_s},     {"origin", ToString(r.origin)}};
    if (r.truncated) j["truncated"] = true;
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

IngestReport Ingest(const fs::path& source) {
  IngestReport rep;
  std::vector<Record> candidates;
  if (fs::is_directory(source)) {
    std::vector<fs::path> wavs;
    for (const auto& e : fs::directory_iterator(source)) {
      if (e.is_regular_file() && e.path().extension() == ".wav") wavs.push_back(e.path());
    }
    std::sort(wavs.begin(), wavs.end());
    for (const auto& w : wavs) {
      Record r;
      const std::string stem = w.stem().string();
      r.utterance_id = stem;
      r.audio_path = w.string();
      r.speaker_id = stem.substr(0, stem.find('-'));
      auto txt = w;
      txt.replace_extension(".txt");
      std::ifstream in(txt);
      if (!in) {
        rep.rejected.push_back(stem + ": missing transcript " + txt.string());
        continue;
      }
      std::getline(in, r.transcript);
      candidates.push_back(std::move(r));
    }
  } else {
    std::ifstream in(source);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + source.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        candidates.push_back(FromJson(json::parse(line), source.parent_path()));
      } catch (const std::exception& e) {
        rep.rejected.push_back("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  std::set<std::string> ids;
  for (auto& r : candidates) {
    if (!ids.insert(r.utterance_id).second) {
      rep.rejected.push_back(r.utterance_id + ": duplicate id");
      continue;
    }
    try {
      r.duration_s = dsp::ReadWavInfo(r.audio_path).duration_s();
    } catch (const std::exception& e) {
      rep.rejected.push_back(r.utterance_id + ": " + e.what());
      continue;
    }
    if (r.duration_s <= 0.0) {
      rep.rejected.push_back(r.utterance_id + ": empty audio");
      continue;
    }
    rep.manifest.push_back(std::move(r));
  }
  for (const auto& why : rep.rejected) LogWarn("ingest: rejected ", why);
  if (rep.manifest.empty()) {
    throw Error(ErrorCode::kIo, "ingest: no valid records in " + source.string());
  }
  return rep;
}

double TotalHours(const Manifest& m) {
  double s = 0.0;
  for (const auto& r : m) s += r.duration_s;
  return s / 3600.0;
}

}  // namespace synthasr::pipeline
