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

#include "synthasr/nn/optim.hpp"

#include <cmath>

#include "synthasr/error.hpp"

namespace synthasr::nn {

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
  Require(cfg_.learning_rate > 0.0, "optimizer: learning rate must be positive");
}

double Optimizer::learning_rate() const {
  if (cfg_.decay_every <= 0) return cfg_.learning_rate;
  return cfg_.learning_rate *
         std::pow(cfg_.decay_factor, static_cast<double>(steps_ / cfg_.decay_every));
}

void Optimizer::Step(ParameterStore& params, const Gradients& grads) {
  double scale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    const double norm = grads.GlobalNorm();
    if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
  }
  const double lr = learning_rate();
  const long t = steps_ + 1;
  for (Parameter* p : params.All()) {
    const auto* g = grads.Find(p->name);
    if (g == nullptr) continue;
    Require(g->size() == p->value.size(), "optimizer: gradient size mismatch for " + p->name);
    if (cfg_.rule == UpdateRule::kSgd) {
      for (std::size_t i = 0; i < g->size(); ++i) p->value[i] -= lr * scale * (*g)[i];
    } else {
      auto& m = m_[p->name];
      auto& v = v_[p->name];
      if (m.empty()) {
        m.assign(g->size(), 0.0);
        v.assign(g->size(), 0.0);
      }
      const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
      for (std::size_t i = 0; i < g->size(); ++i) {
        const double gi = scale * (*g)[i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        p->value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
      }
      if (cfg_.single_precision) {
        RoundToSingle(m);
        RoundToSingle(v);
      }
    }
    if (cfg_.single_precision) RoundToSingle(p->value);
  }
  ++steps_;
}

void Optimizer::Reset() {
  steps_ = 0;
  m_.clear();
  v_.clear();
}

ParameterStore Optimizer::ExportState() const {
  ParameterStore s;
  auto& steps = s.Add("optim/steps", {1, 1});
  steps.value[0] = static_cast<double>(steps_);
  for (const auto& [name, m] : m_) {
    s.Add("optim/m/" + name, {1, m.size()}).value = m;
    s.Add("optim/v/" + name, {1, m.size()}).value = v_.at(name);
  }
  return s;
}

void Optimizer::ImportState(const ParameterStore& state) {
  Reset();
  if (state.Has("optim/steps")) steps_ = static_cast<long>(state.Get("optim/steps").value[0]);
  for (const Parameter* p : state.All()) {
    const std::string& n = p->name;
    if (n.rfind("optim/m/", 0) == 0) m_[n.substr(8)] = p->value;
    if (n.rfind("optim/v/", 0) == 0) v_[n.substr(8)] = p->value;
  }
}

}  // namespace synthasr::nn
