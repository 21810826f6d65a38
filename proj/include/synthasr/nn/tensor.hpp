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

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "synthasr/dsp/matrix.hpp"
#include "synthasr/rng.hpp"

namespace synthasr::nn {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& s);
std::string ShapeString(const Shape& s);

// A named trainable array. Values live here; a Tape only reads them.
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> value;
};

class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  // Zero-initialised. Names must be unique.
  Parameter& Add(const std::string& name, Shape shape);
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Has(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  std::size_t size() const { return params_.size(); }
  std::size_t TotalElements() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

// Rounds every value to the nearest float so that float32 checkpoints
// reload bit-exactly.
void RoundToSingle(std::span<double> xs);

void InitUniform(Parameter& p, double limit, Rng& rng);
// Glorot/Xavier uniform: limit sqrt(6 / (fan_in + fan_out)).
void InitGlorot(Parameter& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Per-parameter gradients keyed by name.
class Gradients {
 public:
  std::vector<double>& For(const std::string& name, std::size_t size);
  const std::vector<double>* Find(const std::string& name) const;
  void Accumulate(const Gradients& other);
  void Scale(double factor);
  double GlobalNorm() const;
  bool empty() const { return grads_.empty(); }
  const std::map<std::string, std::vector<double>>& items() const { return grads_; }

 private:
  std::map<std::string, std::vector<double>> grads_;
};

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

  const Shape& shape() const;
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const;
  const std::vector<double>& value() const;
  const std::vector<double>& grad() const;
  double item() const;
  bool requires_grad() const;
  Matrix ToMatrix() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using BackwardFn = std::function<void(Tape&, std::size_t self)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  BackwardFn backward;
  Parameter* param = nullptr;
  bool requires_grad = false;
};

// Records operations for reverse-mode differentiation. Single-threaded;
// independent tapes over the same ParameterStore may run concurrently.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var Constant(Shape shape, std::vector<double> value);
  Var Constant(const Matrix& m);
  Var Zeros(Shape shape);
  // A differentiable leaf that is not a parameter (used for input
  // gradients).
  Var Input(Shape shape, std::vector<double> value);
  // The same Parameter always maps to the same node on one tape.
  Var Param(Parameter& p);

  // Creates a node. `fn` is dropped when no input needs a gradient.
  Var Push(Shape shape, std::vector<double> value, std::initializer_list<Var> inputs,
           BackwardFn fn);
  Var Push(Shape shape, std::vector<double> value, std::span<const Var> inputs,
           BackwardFn fn);

  void Backward(Var loss);

  // Parameter gradients accumulated by the last Backward call.
  Gradients ParamGradients() const;

  Node& node(std::size_t id) { return nodes_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  // Gradient buffer of a node, allocated on first use.
  std::vector<double>& GradOf(std::size_t id);
  std::size_t size() const { return nodes_.size(); }

 private:
  bool grad_enabled_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
};

}  // namespace synthasr::nn
