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

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <vector>

#include "synthasr/asr/asr.hpp"
#include "synthasr/error.hpp"

namespace synthasr::asr {

// Beam search with log-linear LM fusion: score = asr + lm_weight * lm.
// `Model` provides classes(), eos(), Start() and Advance(state, token),
// where a State exposes `log_probs` for the next token. All tokens are
// expanded at every step; ties resolve towards the earlier hypothesis and
// the smaller token id. No length normalization is applied.
template <typename Model>
BeamResult BeamSearch(Model& model, const LmScorer* lm, double lm_weight, const BeamOptions& opts) {
  using State = typename Model::State;
  Require(opts.beam_size >= 1, "beam search: beam size must be >= 1");
  Require(opts.max_len >= 1, "beam search: max_len must be >= 1");
  Require(lm_weight >= 0.0, "beam search: lm weight must be non-negative");
  const bool use_lm = lm != nullptr && lm_weight != 0.0;
  const int eos = model.eos();
  const auto classes = static_cast<int>(model.classes());

  struct Hyp {
    std::vector<int> tokens;
    double asr = 0.0;
    double lm = 0.0;
    double score = 0.0;
    State state;
  };
  struct Candidate {
    double score;
    std::size_t hyp;
    int token;
    double asr;
    double lm;
  };

  std::vector<Hyp> active;
  active.push_back({{}, 0.0, 0.0, 0.0, model.Start()});
  std::vector<BeamResult> finished;
  auto best_finished = [&] {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& f : finished) best = std::max(best, f.score);
    return best;
  };

  for (std::size_t step = 0; step < opts.max_len && !active.empty(); ++step) {
    std::vector<Candidate> cands;
    cands.reserve(active.size() * static_cast<std::size_t>(classes));
    for (std::size_t h = 0; h < active.size(); ++h) {
      const Hyp& hyp = active[h];
      for (int t = 0; t < classes; ++t) {
        const double asr = hyp.asr + hyp.state.log_probs[static_cast<std::size_t>(t)];
        const double lmv = use_lm ? hyp.lm + lm->LogProb(hyp.tokens, t) : 0.0;
        const double score = use_lm ? asr + lm_weight * lmv : asr;
        cands.push_back({score, h, t, asr, lmv});
      }
    }
    const std::size_t keep = std::min(opts.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        return std::tie(a.hyp, a.token) < std::tie(b.hyp, b.token);
                      });
    std::vector<Hyp> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      const Hyp& parent = active[c.hyp];
      if (c.token == eos) {
        finished.push_back({parent.tokens, c.asr, c.lm, c.score, true});
        continue;
      }
      Hyp child{parent.tokens, c.asr, c.lm, c.score, model.Advance(parent.state, c.token)};
      child.tokens.push_back(c.token);
      next.push_back(std::move(child));
    }
    active = std::move(next);
    // Scores only decrease as hypotheses grow, so nothing active can beat
    // the best finished hypothesis any more.
    if (!finished.empty() && !active.empty()) {
      double best_active = -std::numeric_limits<double>::infinity();
      for (const auto& h : active) best_active = std::max(best_active, h.score);
      if (best_finished() >= best_active) break;
    }
  }

  if (finished.empty()) {
    Require(!active.empty(), "beam search: no hypotheses");
    const auto best = std::max_element(active.begin(), active.end(),
                                       [](const Hyp& a, const Hyp& b) { return a.score < b.score; });
    return {best->tokens, best->asr, best->lm, best->score, false};
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < finished.size(); ++i) {
    if (finished[i].score > finished[best].score) best = i;
  }
  return finished[best];
}

}  // namespace synthasr::asr
