/*
 * Copyright 2026 The tsgrec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Reverse-mode differentiation over Matrix-valued operations.
//
// A Tape records every operation applied to Vars. Parameters live in a
// ParameterSet; binding a set onto a tape yields one leaf Var per parameter,
// and Backward() accumulates d(loss)/d(parameter) into Parameter::grad.
// Ops whose inputs are all constants record no backward work.

#ifndef TSGREC_AUTODIFF_HPP_
#define TSGREC_AUTODIFF_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tsgrec/numerics.hpp"

namespace tsgrec {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// Ordered, named collection of trainable matrices. Element addresses are
// stable across Add() calls.
class ParameterSet {
 public:
  Parameter& Add(std::string name, Matrix init);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void ZeroGrad();
  std::size_t ScalarCount() const;
  // Plain gradient step: value -= lr * grad.
  void Step(double learning_rate);

 private:
  std::deque<Parameter> params_;
};

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  double scalar() const;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Matrix value);
  Var Param(Parameter& parameter);
  // One leaf per parameter, in set order.
  std::vector<Var> Bind(ParameterSet& parameters);

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1 and finite.
  void Backward(Var loss);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;
  Var Record(Matrix value, std::vector<Var> inputs, BackwardFn backward);
  const Matrix& grad_of(std::size_t id) const { return nodes_[id].grad; }
  // Zero-initialised on first access.
  Matrix& mutable_grad(std::size_t id);
  const Matrix& value_of(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad_of(std::size_t id) const { return nodes_[id].needs_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* parameter = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

namespace ad {

Var MatMul(Var a, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
// Adds a 1 x c row to every row of `a`.
Var AddRow(Var a, Var row);
// Element-wise product.
Var Mul(Var a, Var b);
Var Scale(Var a, double factor);
Var LeakyRelu(Var a, double slope);
Var Tanh(Var a);
Var Transpose(Var a);
Var VStack(std::span<const Var> blocks);
// out[k] = a[index[k]]
Var GatherRows(Var a, std::vector<std::size_t> index);
// 1 x c mean over rows.
Var MeanRows(Var a);
// Sum of all entries, 1x1.
Var Sum(Var a);
// `scores` is m x 1; softmax taken independently within each segment.
Var SegmentSoftmax(Var scores, std::vector<std::size_t> segment,
                   std::size_t num_segments);
// out[s] = sum over k with segment[k] == s of weights[k] * values[k].
Var SegmentWeightedSum(Var weights, Var values,
                       std::vector<std::size_t> segment,
                       std::size_t num_segments);
// Mean cross-entropy of softmax(logits) against class labels, computed with
// log-sum-exp. Returns 1x1.
Var SoftmaxCrossEntropy(Var logits, std::vector<std::size_t> labels);
// Euclidean distance between two 1 x c rows. The gradient at distance zero
// is taken as zero.
Var EuclideanDistance(Var a, Var b);
// 1 - cosine similarity between two 1 x c rows.
Var CosineDistance(Var a, Var b);
// max(0, margin - a) for a 1x1 input.
Var Hinge(Var a, double margin);

}  // namespace ad

// Full-batch gradient descent with step rejection: a step that would raise
// the loss is undone and retried at half the learning rate. `evaluate(true)`
// returns the loss at the current values and fills Parameter::grad;
// `evaluate(false)` only returns the loss. Returns the loss after each epoch,
// which is non-increasing.
std::vector<double> DescendMonotone(ParameterSet& parameters,
                                    const std::function<double(bool)>& evaluate,
                                    double learning_rate, int epochs);

// Maximum over every parameter entry of
//   |analytic - central_difference| / max(1, |analytic|).
// `loss` must bind `parameters` onto the tape it is given and return a 1x1
// Var. Throws InvalidArgument if any evaluated loss is non-finite.
double GradCheck(const std::function<Var(Tape&)>& loss,
                 ParameterSet& parameters, double eps);

}  // namespace tsgrec

#endif  // TSGREC_AUTODIFF_HPP_
