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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "synthasr/error.hpp"
#include "synthasr/log.hpp"
#include "synthasr/pipeline/stages.hpp"
#include "synthasr/rng.hpp"

namespace synthasr::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

double MixPlan::total_hours() const {
  double h = 0.0;
  for (const auto& c : checkpoints) h += c.total_hours();
  return h;
}

namespace {

// Endless shuffled pass over one manifest.
class Stream {
 public:
  Stream(const Manifest& m, std::uint64_t seed) : m_(m), seed_(seed) { Refill(); }

  std::size_t Peek() const { return order_[pos_]; }
  void Pop() {
    if (++pos_ == order_.size()) Refill();
  }

 private:
  void Refill() {
    order_.resize(m_.size());
    std::iota(order_.begin(), order_.end(), 0);
    Rng rng(DeriveSeed(seed_, pass_++));
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[static_cast<std::size_t>(rng.UniformInt(0, static_cast<std::int64_t>(i) - 1))]);
    }
    pos_ = 0;
  }

  const Manifest& m_;
  std::uint64_t seed_;
  std::uint64_t pass_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace

MixPlan BuildTrainingMix(const Manifest& real, const Manifest& synthetic, const MixPolicy& policy,
                         double budget_hours, std::size_t checkpoints, std::uint64_t seed) {
  policy.Validate();
  Require(budget_hours > 0.0 && checkpoints > 0, "mix: budget and checkpoint count must be positive",
          ErrorCode::kConfig);
  Require(policy.real == 0.0 || !real.empty(), "mix: real data required by the ratio", ErrorCode::kStage);
  Require(policy.synthetic == 0.0 || !synthetic.empty(), "mix: synthetic data required by the ratio",
          ErrorCode::kStage);
  const double parts = policy.real + policy.synthetic;
  struct Source {
    Origin origin;
    const Manifest* m;
    double target_s;
    std::optional<Stream> stream;
  };
  std::vector<Source> sources;
  if (policy.real > 0.0) sources.push_back({Origin::kReal, &real, budget_hours * 3600.0 * policy.real / parts, {}});
  if (policy.synthetic > 0.0) {
    sources.push_back({Origin::kSynthetic, &synthetic, budget_hours * 3600.0 * policy.synthetic / parts, {}});
  }
  for (auto& s : sources) s.stream.emplace(*s.m, DeriveSeed(seed, s.origin == Origin::kReal ? 1 : 2));

  MixPlan plan;
  std::size_t repeats = 0;
  for (std::size_t c = 0; c < checkpoints; ++c) {
    CheckpointPlan cp;
    for (auto& s : sources) {
      double acc = 0.0;
      std::set<std::size_t> seen;
      for (;;) {
        const std::size_t idx = s.stream->Peek();
        const double d = (*s.m)[idx].duration_s;
        // Stop at the draw that brings the total closest to the target.
        if (acc + d > s.target_s && acc + d - s.target_s >= s.target_s - acc) break;
        s.stream->Pop();
        if (!seen.insert(idx).second) ++cp.repeats;
        cp.entries.push_back({s.origin, idx, d});
        acc += d;
        if (acc >= s.target_s) break;
      }
      double hours = 0.0;
      for (const auto& e : cp.entries) {
        if (e.origin == s.origin) hours += e.duration_s / 3600.0;
      }
      (s.origin == Origin::kReal ? cp.real_hours : cp.synthetic_hours) = hours;
      if (std::abs(acc - s.target_s) > 0.05 * s.target_s) {
        LogWarn("mix: checkpoint ", c, " ", ToString(s.origin), " audio ", acc, " s misses the target ",
                s.target_s, " s by more than 5%");
      }
    }
    repeats += cp.repeats;
    plan.checkpoints.push_back(std::move(cp));
  }
  if (repeats > 0) LogWarn("mix: ", repeats, " utterance draws repeat within a checkpoint");
  return plan;
}

void SaveMixPlan(const fs::path& path, const MixPlan& plan) {
  json cps = json::array();
  for (const auto& c : plan.checkpoints) {
    json entries = json::array();
    for (const auto& e : c.entries) {
      entries.push_back({{"origin", ToString(e.origin)}, {"index", e.index}, {"duration_s", e.duration_s}});
    }
    cps.push_back({{"entries", entries},
                   {"real_hours", c.real_hours},
                   {"synthetic_hours", c.synthetic_hours},
                   {"repeats", c.repeats}});
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << json{{"checkpoints", cps}, {"total_hours", plan.total_hours()}}.dump(1) << '\n';
}

MixPlan LoadMixPlan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  MixPlan plan;
  try {
    const json j = json::parse(in);
    for (const auto& c : j.at("checkpoints")) {
      CheckpointPlan cp;
      for (const auto& e : c.at("entries")) {
        cp.entries.push_back({ParseOrigin(e.at("origin").get<std::string>()), e.at("index").get<std::size_t>(),
                              e.at("duration_s").get<double>()});
      }
      cp.real_hours = c.at("real_hours").get<double>();
      cp.synthetic_hours = c.at("synthetic_hours").get<double>();
      cp.repeats = c.at("repeats").get<std::size_t>();
      plan.checkpoints.push_back(std::move(cp));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  return plan;
}

}  // namespace synthasr::pipeline
