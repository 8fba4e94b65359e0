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

#include "tsgrec/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "tsgrec/error.hpp"

namespace tsgrec {

Parameter& ParameterSet::Add(std::string name, Matrix init) {
  if (contains(name)) throw InvalidArgument("duplicate parameter " + name);
  Matrix grad(init.rows(), init.cols());
  params_.push_back(Parameter{std::move(name), std::move(init), std::move(grad)});
  return params_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
  for (Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("unknown parameter " + name);
}

const Parameter& ParameterSet::at(const std::string& name) const {
  for (const Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("unknown parameter " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.name == name; });
}

void ParameterSet::ZeroGrad() {
  for (Parameter& p : params_) {
    if (!p.grad.SameShape(p.value)) p.grad = Matrix(p.value.rows(), p.value.cols());
    p.grad.Fill(0.0);
  }
}

std::size_t ParameterSet::ScalarCount() const {
  std::size_t total = 0;
  for (const Parameter& p : params_) total += p.value.size();
  return total;
}

void ParameterSet::Step(double learning_rate) {
  for (Parameter& p : params_) {
    auto value = p.value.data();
    auto grad = p.grad.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      value[i] -= learning_rate * grad[i];
    }
  }
}

const Matrix& Var::value() const { return tape->value(*this); }

double Var::scalar() const {
  const Matrix& m = value();
  if (m.size() != 1) throw InvalidArgument("Var::scalar on a non-scalar value");
  return m(0, 0);
}

Var Tape::Constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::Param(Parameter& parameter) {
  nodes_.push_back(Node{parameter.value, {}, nullptr, &parameter, true});
  return Var{this, nodes_.size() - 1};
}

std::vector<Var> Tape::Bind(ParameterSet& parameters) {
  std::vector<Var> vars;
  vars.reserve(parameters.size());
  for (Parameter& p : parameters) vars.push_back(Param(p));
  return vars;
}

Var Tape::Record(Matrix value, std::vector<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw InvalidArgument("Var from a different tape");
    needs = needs || nodes_[v.id].needs_grad;
  }
  nodes_.push_back(
      Node{std::move(value), {}, needs ? std::move(backward) : nullptr, nullptr,
           needs});
  return Var{this, nodes_.size() - 1};
}

Matrix& Tape::mutable_grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad.SameShape(n.value)) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::Backward(Var loss) {
  if (loss.tape != this) throw InvalidArgument("loss from a different tape");
  const Matrix& lv = value(loss);
  if (lv.size() != 1) throw InvalidArgument("Backward needs a 1x1 loss");
  if (!std::isfinite(lv(0, 0))) throw ModelError("loss is not finite");
  for (Node& n : nodes_) n.grad = Matrix();
  mutable_grad(loss.id)(0, 0) = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) {
      n.backward(*this, id);
    } else if (n.parameter != nullptr) {
      n.parameter->grad += n.grad;
    }
  }
}

namespace ad {

namespace {

void RequireShape(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw InvalidArgument(std::string(op) + ": incompatible shapes " +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " and " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
}

}  // namespace

Var MatMul(Var a, Var b) {
  Tape& t = *a.tape;
  Matrix out = tsgrec::MatMul(a.value(), b.value());
  return t.Record(std::move(out), {a, b}, [a, b](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad_of(self);
    if (tape.needs_grad_of(a.id)) {
      tape.mutable_grad(a.id) += MatMulNT(g, tape.value_of(b.id));
    }
    if (tape.needs_grad_of(b.id)) {
      tape.mutable_grad(b.id) += MatMulTN(tape.value_of(a.id), g);
    }
  });
}

Var Add(Var a, Var b) {
  RequireShape(a.value().SameShape(b.value()), "add", a.value(), b.value());
  Matrix out = a.value();
  out += b.value();
  return a.tape->Record(std::move(out), {a, b},
                        [a, b](Tape& tape, std::size_t self) {
                          const Matrix& g = tape.grad_of(self);
                          if (tape.needs_grad_of(a.id)) tape.mutable_grad(a.id) += g;
                          if (tape.needs_grad_of(b.id)) tape.mutable_grad(b.id) += g;
                        });
}

Var Sub(Var a, Var b) {
  RequireShape(a.value().SameShape(b.value()), "sub", a.value(), b.value());
  Matrix out = a.value();
  out -= b.value();
  return a.tape->Record(std::move(out), {a, b},
                        [a, b](Tape& tape, std::size_t self) {
                          const Matrix& g = tape.grad_of(self);
                          if (tape.needs_grad_of(a.id)) tape.mutable_grad(a.id) += g;
                          if (tape.needs_grad_of(b.id)) tape.mutable_grad(b.id) -= g;
                        });
}

Var AddRow(Var a, Var row) {
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  RequireShape(rv.rows() == 1 && rv.cols() == av.cols(), "add_row", av, rv);
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < out.cols(); ++c) dst[c] += rv(0, c);
  }
  return a.tape->Record(std::move(out), {a, row},
                        [a, row](Tape& tape, std::size_t self) {
                          const Matrix& g = tape.grad_of(self);
                          if (tape.needs_grad_of(a.id)) tape.mutable_grad(a.id) += g;
                          if (tape.needs_grad_of(row.id)) {
                            Matrix& rg = tape.mutable_grad(row.id);
                            for (std::size_t r = 0; r < g.rows(); ++r) {
                              for (std::size_t c = 0; c < g.cols(); ++c) {
                                rg(0, c) += g(r, c);
                              }
                            }
                          }
                        });
}

Var Mul(Var a, Var b) {
  RequireShape(a.value().SameShape(b.value()), "mul", a.value(), b.value());
  Matrix out = a.value();
  auto bv = b.value().data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= bv[i];
  return a.tape->Record(std::move(out), {a, b},
                        [a, b](Tape& tape, std::size_t self) {
                          auto g = tape.grad_of(self).data();
                          if (tape.needs_grad_of(a.id)) {
                            auto other = tape.value_of(b.id).data();
                            auto dst = tape.mutable_grad(a.id).data();
                            for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * other[i];
                          }
                          if (tape.needs_grad_of(b.id)) {
                            auto other = tape.value_of(a.id).data();
                            auto dst = tape.mutable_grad(b.id).data();
                            for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * other[i];
                          }
                        });
}

Var Scale(Var a, double factor) {
  Matrix out = a.value();
  out *= factor;
  return a.tape->Record(std::move(out), {a},
                        [a, factor](Tape& tape, std::size_t self) {
                          auto g = tape.grad_of(self).data();
                          auto dst = tape.mutable_grad(a.id).data();
                          for (std::size_t i = 0; i < g.size(); ++i) dst[i] += factor * g[i];
                        });
}

Var LeakyRelu(Var a, double slope) {
  Matrix out = a.value();
  for (double& v : out.data()) v = tsgrec::LeakyRelu(v, slope);
  return a.tape->Record(std::move(out), {a},
                        [a, slope](Tape& tape, std::size_t self) {
                          auto g = tape.grad_of(self).data();
                          auto x = tape.value_of(a.id).data();
                          auto dst = tape.mutable_grad(a.id).data();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            dst[i] += g[i] * (x[i] > 0 ? 1.0 : slope);
                          }
                        });
}

Var Tanh(Var a) {
  Matrix out = a.value();
  for (double& v : out.data()) v = std::tanh(v);
  return a.tape->Record(std::move(out), {a}, [a](Tape& tape, std::size_t self) {
    auto g = tape.grad_of(self).data();
    auto y = tape.value_of(self).data();
    auto dst = tape.mutable_grad(a.id).data();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Transpose(Var a) {
  return a.tape->Record(tsgrec::Transpose(a.value()), {a},
                        [a](Tape& tape, std::size_t self) {
                          tape.mutable_grad(a.id) += tsgrec::Transpose(tape.grad_of(self));
                        });
}

Var VStack(std::span<const Var> blocks) {
  if (blocks.empty()) throw InvalidArgument("vstack of nothing");
  std::vector<Matrix> values;
  values.reserve(blocks.size());
  for (const Var& b : blocks) values.push_back(b.value());
  std::vector<Var> inputs(blocks.begin(), blocks.end());
  return blocks.front().tape->Record(
      tsgrec::VStack(values), inputs, [inputs](Tape& tape, std::size_t self) {
        auto g = tape.grad_of(self).data();
        std::size_t offset = 0;
        for (const Var& b : inputs) {
          const std::size_t n = tape.value_of(b.id).size();
          if (tape.needs_grad_of(b.id)) {
            auto dst = tape.mutable_grad(b.id).data();
            for (std::size_t i = 0; i < n; ++i) dst[i] += g[offset + i];
          }
          offset += n;
        }
      });
}

Var GatherRows(Var a, std::vector<std::size_t> index) {
  const Matrix& av = a.value();
  Matrix out(index.size(), av.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= av.rows()) throw InvalidArgument("gather index out of range");
    std::copy(av.row(index[k]).begin(), av.row(index[k]).end(), out.row(k).begin());
  }
  return a.tape->Record(std::move(out), {a},
                        [a, index = std::move(index)](Tape& tape, std::size_t self) {
                          const Matrix& g = tape.grad_of(self);
                          Matrix& dst = tape.mutable_grad(a.id);
                          for (std::size_t k = 0; k < index.size(); ++k) {
                            auto src = g.row(k);
                            auto row = dst.row(index[k]);
                            for (std::size_t c = 0; c < src.size(); ++c) row[c] += src[c];
                          }
                        });
}

Var MeanRows(Var a) {
  const Matrix& av = a.value();
  if (av.rows() == 0) throw InvalidArgument("mean of zero rows");
  Matrix out(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out(0, c) += av(r, c);
  }
  const double inv = 1.0 / static_cast<double>(av.rows());
  out *= inv;
  return a.tape->Record(std::move(out), {a}, [a, inv](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad_of(self);
    Matrix& dst = tape.mutable_grad(a.id);
    for (std::size_t r = 0; r < dst.rows(); ++r) {
      for (std::size_t c = 0; c < dst.cols(); ++c) dst(r, c) += inv * g(0, c);
    }
  });
}

Var Sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape->Record(Matrix(1, 1, total), {a}, [a](Tape& tape, std::size_t self) {
    const double g = tape.grad_of(self)(0, 0);
    for (double& v : tape.mutable_grad(a.id).data()) v += g;
  });
}

Var SegmentSoftmax(Var scores, std::vector<std::size_t> segment,
                   std::size_t num_segments) {
  const Matrix& s = scores.value();
  if (s.cols() != 1 || s.rows() != segment.size()) {
    throw InvalidArgument("segment_softmax expects an m x 1 score column");
  }
  std::vector<double> seg_max(num_segments,
                              -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < segment.size(); ++k) {
    if (segment[k] >= num_segments) throw InvalidArgument("segment id out of range");
    seg_max[segment[k]] = std::max(seg_max[segment[k]], s(k, 0));
  }
  Matrix out(s.rows(), 1);
  std::vector<double> seg_sum(num_segments, 0.0);
  for (std::size_t k = 0; k < segment.size(); ++k) {
    out(k, 0) = std::exp(s(k, 0) - seg_max[segment[k]]);
    seg_sum[segment[k]] += out(k, 0);
  }
  for (std::size_t k = 0; k < segment.size(); ++k) out(k, 0) /= seg_sum[segment[k]];
  return scores.tape->Record(
      std::move(out), {scores},
      [scores, segment = std::move(segment), num_segments](Tape& tape,
                                                           std::size_t self) {
        const Matrix& g = tape.grad_of(self);
        const Matrix& y = tape.value_of(self);
        // d s_k = y_k (g_k - sum_{j in seg} g_j y_j)
        std::vector<double> dot(num_segments, 0.0);
        for (std::size_t k = 0; k < segment.size(); ++k) {
          dot[segment[k]] += g(k, 0) * y(k, 0);
        }
        Matrix& dst = tape.mutable_grad(scores.id);
        for (std::size_t k = 0; k < segment.size(); ++k) {
          dst(k, 0) += y(k, 0) * (g(k, 0) - dot[segment[k]]);
        }
      });
}

Var SegmentWeightedSum(Var weights, Var values, std::vector<std::size_t> segment,
                       std::size_t num_segments) {
  const Matrix& w = weights.value();
  const Matrix& v = values.value();
  if (w.cols() != 1 || w.rows() != segment.size() || v.rows() != segment.size()) {
    throw InvalidArgument("segment_weighted_sum shape mismatch");
  }
  Matrix out(num_segments, v.cols());
  for (std::size_t k = 0; k < segment.size(); ++k) {
    if (segment[k] >= num_segments) throw InvalidArgument("segment id out of range");
    auto dst = out.row(segment[k]);
    auto src = v.row(k);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += w(k, 0) * src[c];
  }
  return weights.tape->Record(
      std::move(out), {weights, values},
      [weights, values, segment = std::move(segment)](Tape& tape,
                                                      std::size_t self) {
        const Matrix& g = tape.grad_of(self);
        const Matrix& wv = tape.value_of(weights.id);
        const Matrix& vv = tape.value_of(values.id);
        const bool need_w = tape.needs_grad_of(weights.id);
        const bool need_v = tape.needs_grad_of(values.id);
        for (std::size_t k = 0; k < segment.size(); ++k) {
          auto gs = g.row(segment[k]);
          if (need_w) {
            double acc = 0.0;
            auto src = vv.row(k);
            for (std::size_t c = 0; c < gs.size(); ++c) acc += gs[c] * src[c];
            tape.mutable_grad(weights.id)(k, 0) += acc;
          }
          if (need_v) {
            auto dst = tape.mutable_grad(values.id).row(k);
            for (std::size_t c = 0; c < gs.size(); ++c) dst[c] += wv(k, 0) * gs[c];
          }
        }
      });
}

Var SoftmaxCrossEntropy(Var logits, std::vector<std::size_t> labels) {
  const Matrix& z = logits.value();
  if (labels.size() != z.rows() || z.rows() == 0) {
    throw InvalidArgument("softmax_cross_entropy: label count mismatch");
  }
  Matrix probs(z.rows(), z.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    if (labels[r] >= z.cols()) throw InvalidArgument("label out of range");
    auto row = z.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double x : row) sum += std::exp(x - m);
    const double lse = m + std::log(sum);
    total += lse - row[labels[r]];
    for (std::size_t c = 0; c < z.cols(); ++c) probs(r, c) = std::exp(row[c] - lse);
  }
  const double inv = 1.0 / static_cast<double>(z.rows());
  return logits.tape->Record(
      Matrix(1, 1, total * inv), {logits},
      [logits, labels = std::move(labels), probs = std::move(probs), inv](
          Tape& tape, std::size_t self) {
        const double g = tape.grad_of(self)(0, 0) * inv;
        Matrix& dst = tape.mutable_grad(logits.id);
        for (std::size_t r = 0; r < probs.rows(); ++r) {
          for (std::size_t c = 0; c < probs.cols(); ++c) {
            dst(r, c) += g * (probs(r, c) - (c == labels[r] ? 1.0 : 0.0));
          }
        }
      });
}

Var EuclideanDistance(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  RequireShape(av.SameShape(bv) && av.rows() == 1, "euclidean_distance", av, bv);
  double sq = 0.0;
  for (std::size_t c = 0; c < av.cols(); ++c) {
    const double diff = av(0, c) - bv(0, c);
    sq += diff * diff;
  }
  const double d = std::sqrt(sq);
  return a.tape->Record(Matrix(1, 1, d), {a, b}, [a, b](Tape& tape, std::size_t self) {
    const double dist = tape.value_of(self)(0, 0);
    if (dist == 0.0) return;
    const double g = tape.grad_of(self)(0, 0) / dist;
    const Matrix& x = tape.value_of(a.id);
    const Matrix& y = tape.value_of(b.id);
    if (tape.needs_grad_of(a.id)) {
      Matrix& dst = tape.mutable_grad(a.id);
      for (std::size_t c = 0; c < x.cols(); ++c) dst(0, c) += g * (x(0, c) - y(0, c));
    }
    if (tape.needs_grad_of(b.id)) {
      Matrix& dst = tape.mutable_grad(b.id);
      for (std::size_t c = 0; c < x.cols(); ++c) dst(0, c) -= g * (x(0, c) - y(0, c));
    }
  });
}

Var CosineDistance(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  RequireShape(av.SameShape(bv) && av.rows() == 1, "cosine_distance", av, bv);
  constexpr double kTiny = 1e-12;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t c = 0; c < av.cols(); ++c) {
    dot += av(0, c) * bv(0, c);
    na += av(0, c) * av(0, c);
    nb += bv(0, c) * bv(0, c);
  }
  const double norm_a = std::max(std::sqrt(na), kTiny);
  const double norm_b = std::max(std::sqrt(nb), kTiny);
  const double cosine = dot / (norm_a * norm_b);
  return a.tape->Record(
      Matrix(1, 1, 1.0 - cosine), {a, b},
      [a, b, dot, norm_a, norm_b, cosine](Tape& tape, std::size_t self) {
        const double g = -tape.grad_of(self)(0, 0);
        const Matrix& x = tape.value_of(a.id);
        const Matrix& y = tape.value_of(b.id);
        // d cos / dx = y / (|x||y|) - cos * x / |x|^2
        if (tape.needs_grad_of(a.id)) {
          Matrix& dst = tape.mutable_grad(a.id);
          for (std::size_t c = 0; c < x.cols(); ++c) {
            dst(0, c) += g * (y(0, c) / (norm_a * norm_b) -
                              cosine * x(0, c) / (norm_a * norm_a));
          }
        }
        if (tape.needs_grad_of(b.id)) {
          Matrix& dst = tape.mutable_grad(b.id);
          for (std::size_t c = 0; c < x.cols(); ++c) {
            dst(0, c) += g * (x(0, c) / (norm_a * norm_b) -
                              cosine * y(0, c) / (norm_b * norm_b));
          }
        }
        (void)dot;
      });
}

Var Hinge(Var a, double margin) {
  const double x = a.scalar();
  const double y = std::max(0.0, margin - x);
  return a.tape->Record(Matrix(1, 1, y), {a}, [a, margin](Tape& tape, std::size_t self) {
    const double x = tape.value_of(a.id)(0, 0);
    if (margin - x > 0.0) tape.mutable_grad(a.id)(0, 0) -= tape.grad_of(self)(0, 0);
  });
}

}  // namespace ad

std::vector<double> DescendMonotone(ParameterSet& parameters,
                                    const std::function<double(bool)>& evaluate,
                                    double learning_rate, int epochs) {
  constexpr int kMaxBacktracks = 40;
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(std::max(epochs, 0)));
  double current = evaluate(true);
  double lr = learning_rate;
  std::vector<Matrix> values, grads;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    values.clear();
    grads.clear();
    for (const Parameter& p : parameters) {
      values.push_back(p.value);
      grads.push_back(p.grad);
    }
    for (int attempt = 0; attempt < kMaxBacktracks; ++attempt) {
      parameters.Step(lr);
      const double next = evaluate(true);
      if (next <= current) {
        current = next;
        break;
      }
      for (std::size_t i = 0; i < parameters.size(); ++i) {
        parameters[i].value = values[i];
        parameters[i].grad = grads[i];
      }
      lr *= 0.5;
    }
    losses.push_back(current);
  }
  return losses;
}

double GradCheck(const std::function<Var(Tape&)>& loss, ParameterSet& parameters,
                 double eps) {
  parameters.ZeroGrad();
  {
    Tape tape;
    Var l = loss(tape);
    if (!std::isfinite(l.scalar())) throw InvalidArgument("grad_check: loss is not finite");
    tape.Backward(l);
  }
  auto evaluate = [&]() {
    Tape tape;
    const double v = loss(tape).scalar();
    if (!std::isfinite(v)) throw InvalidArgument("grad_check: loss is not finite");
    return v;
  };
  double worst = 0.0;
  for (Parameter& p : parameters) {
    auto values = p.value.data();
    auto grads = p.grad.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double plus = evaluate();
      values[i] = saved - eps;
      const double minus = evaluate();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double err =
          std::abs(grads[i] - numeric) / std::max(1.0, std::abs(grads[i]));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace tsgrec
