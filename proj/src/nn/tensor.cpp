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

#include "synthasr/nn/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "synthasr/error.hpp"

namespace synthasr::nn {

std::size_t NumElements(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string ShapeString(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

ParameterStore::ParameterStore(const ParameterStore& other) { *this = other; }

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this == &other) return *this;
  params_.clear();
  index_ = other.index_;
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
  return *this;
}

Parameter& ParameterStore::Add(const std::string& name, Shape shape) {
  Require(!Has(name), "parameter '" + name + "' already exists");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value.assign(NumElements(shape), 0.0);
  p->shape = std::move(shape);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::Get(const std::string& name) {
  auto it = index_.find(name);
  Require(it != index_.end(), "unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParameterStore::Get(const std::string& name) const {
  auto it = index_.find(name);
  Require(it != index_.end(), "unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::vector<Parameter*> ParameterStore::All() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::All() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::TotalElements() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void RoundToSingle(std::span<double> xs) {
  for (double& x : xs) x = static_cast<double>(static_cast<float>(x));
}

void InitUniform(Parameter& p, double limit, Rng& rng) {
  for (double& v : p.value) v = rng.Uniform(-limit, limit);
  RoundToSingle(p.value);
}

void InitGlorot(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  InitUniform(p, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

std::vector<double>& Gradients::For(const std::string& name, std::size_t size) {
  auto& g = grads_[name];
  if (g.empty()) g.assign(size, 0.0);
  Require(g.size() == size, "gradient size mismatch for '" + name + "'");
  return g;
}

const std::vector<double>* Gradients::Find(const std::string& name) const {
  auto it = grads_.find(name);
  return it == grads_.end() ? nullptr : &it->second;
}

void Gradients::Accumulate(const Gradients& other) {
  for (const auto& [name, g] : other.grads_) {
    auto& dst = For(name, g.size());
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
}

void Gradients::Scale(double factor) {
  for (auto& [name, g] : grads_) {
    for (double& x : g) x *= factor;
  }
}

double Gradients::GlobalNorm() const {
  double sq = 0.0;
  for (const auto& [name, g] : grads_) {
    for (double x : g) sq += x * x;
  }
  return std::sqrt(sq);
}

const Shape& Var::shape() const { return tape_->node(id_).shape; }
std::size_t Var::rows() const { return shape().size() >= 2 ? shape()[0] : 1; }
std::size_t Var::cols() const {
  const auto& s = shape();
  if (s.size() >= 2) return NumElements(s) / s[0];
  return s.empty() ? 1 : s[0];
}
std::size_t Var::size() const { return tape_->node(id_).value.size(); }
const std::vector<double>& Var::value() const { return tape_->node(id_).value; }
const std::vector<double>& Var::grad() const { return tape_->node(id_).grad; }
bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

double Var::item() const {
  Require(size() == 1, "item() on a non-scalar of shape " + ShapeString(shape()));
  return value()[0];
}

Matrix Var::ToMatrix() const {
  Matrix m;
  m.rows = rows();
  m.cols = cols();
  m.data = value();
  return m;
}

Var Tape::Constant(Shape shape, std::vector<double> value) {
  Require(NumElements(shape) == value.size(),
          "constant: value size does not match shape " + ShapeString(shape),
          ErrorCode::kShapeMismatch);
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::Constant(const Matrix& m) { return Constant({m.rows, m.cols}, m.data); }

Var Tape::Zeros(Shape shape) {
  const auto n = NumElements(shape);
  return Constant(std::move(shape), std::vector<double>(n, 0.0));
}

Var Tape::Input(Shape shape, std::vector<double> value) {
  Var v = Constant(std::move(shape), std::move(value));
  nodes_[v.id()].requires_grad = grad_enabled_;
  return v;
}

Var Tape::Param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.shape = p.shape;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  param_nodes_[&p] = nodes_.size() - 1;
  return {this, nodes_.size() - 1};
}

Var Tape::Push(Shape shape, std::vector<double> value, std::initializer_list<Var> inputs,
               BackwardFn fn) {
  return Push(std::move(shape), std::move(value),
              std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::Push(Shape shape, std::vector<double> value, std::span<const Var> inputs,
               BackwardFn fn) {
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(value);
  bool needs = false;
  for (const auto& v : inputs) {
    if (v.valid()) {
      Require(v.tape() == this, "op mixes values from different tapes");
      needs = needs || nodes_[v.id()].requires_grad;
    }
  }
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

std::vector<double>& Tape::GradOf(std::size_t id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::Backward(Var loss) {
  Require(loss.tape() == this, "backward: loss belongs to another tape");
  Require(loss.size() == 1,
          "backward: loss must be a scalar, got shape " + ShapeString(loss.shape()));
  Require(std::isfinite(loss.item()), "backward: loss is not finite");
  for (auto& n : nodes_) n.grad.clear();
  GradOf(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

Gradients Tape::ParamGradients() const {
  Gradients g;
  for (const auto& [param, id] : param_nodes_) {
    const auto& n = nodes_[id];
    auto& dst = g.For(param->name, param->value.size());
    if (n.grad.empty()) continue;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
  }
  return g;
}

}  // namespace synthasr::nn
