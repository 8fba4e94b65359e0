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

#include "tsgrec/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "tsgrec/error.hpp"

namespace tsgrec {

namespace {

Var Aggregate(Tape& tape, const AggregationPlan& plan, Var input) {
  Var gathered = ad::GatherRows(input, plan.source);
  Matrix w(plan.weight.size(), 1, plan.weight);
  return ad::SegmentWeightedSum(tape.Constant(std::move(w)), gathered,
                                plan.target, plan.num_nodes);
}

double Accuracy(const Matrix& logits, const std::vector<std::size_t>& labels) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const auto best = static_cast<std::size_t>(
        std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[r]) ++hits;
  }
  return logits.rows() == 0 ? 0.0
                            : static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace

Matrix InitFeatures(const ProvenanceGraph& graph) {
  Matrix features(graph.node_count(), kFeatureWidth);
  for (const Edge& e : graph.edges()) {
    features(e.dst, e.type.index()) += 1.0;
    features(e.src, kNumEdgeTypes + e.type.index()) += 1.0;
  }
  return features;
}

AggregationPlan AncestorMeanPlan(const ProvenanceGraph& graph) {
  AggregationPlan plan;
  plan.num_nodes = graph.node_count();
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    std::set<std::size_t> members{i};
    for (std::size_t e : graph.in_edges(i)) members.insert(graph.edges()[e].src);
    const double w = 1.0 / static_cast<double>(members.size());
    for (std::size_t m : members) {
      plan.target.push_back(i);
      plan.source.push_back(m);
      plan.weight.push_back(w);
    }
  }
  return plan;
}

Matrix GnnLayerForward(const ProvenanceGraph& graph, const Matrix& input,
                       const Matrix& weights, Activation activation,
                       double leaky_slope) {
  if (input.rows() != graph.node_count()) {
    throw InvalidArgument("gnn layer: " + std::to_string(input.rows()) +
                          " feature rows for " +
                          std::to_string(graph.node_count()) + " nodes");
  }
  if (input.cols() != weights.rows()) {
    throw InvalidArgument("gnn layer: input width " + std::to_string(input.cols()) +
                          " does not match weight rows " +
                          std::to_string(weights.rows()));
  }
  Tape tape;
  const AggregationPlan plan = AncestorMeanPlan(graph);
  Var out = ad::MatMul(Aggregate(tape, plan, tape.Constant(input)),
                       tape.Constant(weights));
  if (activation == Activation::kLeakyRelu) out = ad::LeakyRelu(out, leaky_slope);
  return out.value();
}

GnnEncoder::GnnEncoder(const EncoderConfig& config, std::size_t input_width)
    : config_(config) {
  if (config.layers < 1) throw InvalidArgument("encoder needs at least one layer");
  if (config.hidden == 0) throw InvalidArgument("encoder hidden width is zero");
  Rng rng(DeriveSeed(config.seed, "gnn-init"));
  std::size_t width = input_width;
  for (int t = 0; t < config.layers; ++t) {
    params_.Add("W" + std::to_string(t), GlorotUniform(width, config.hidden, rng));
    width = config.hidden;
  }
  params_.Add("classifier", GlorotUniform(width, kNumEntityTypes, rng));
}

GnnEncoder::GnnEncoder(const EncoderConfig& config,
                       std::vector<Matrix> layer_weights, Matrix classifier)
    : config_(config) {
  config_.layers = static_cast<int>(layer_weights.size());
  for (std::size_t t = 0; t < layer_weights.size(); ++t) {
    params_.Add("W" + std::to_string(t), std::move(layer_weights[t]));
  }
  params_.Add("classifier", std::move(classifier));
  if (!layer_weights.empty()) config_.hidden = params_[params_.size() - 2].value.cols();
  Validate();
}

void GnnEncoder::Validate() const {
  if (config_.layers < 1) throw InvalidArgument("encoder needs at least one layer");
  for (int t = 1; t < config_.layers; ++t) {
    if (layer_weight(t).rows() != layer_weight(t - 1).cols()) {
      throw InvalidArgument("encoder layer " + std::to_string(t) +
                            " input width does not match the previous layer");
    }
  }
  if (classifier().rows() != layer_weight(config_.layers - 1).cols() ||
      classifier().cols() != kNumEntityTypes) {
    throw InvalidArgument("encoder classifier must be hidden x 4");
  }
}

std::size_t GnnEncoder::input_width() const { return layer_weight(0).rows(); }

std::size_t GnnEncoder::output_width() const {
  return layer_weight(config_.layers - 1).cols();
}

const Matrix& GnnEncoder::layer_weight(int t) const {
  return params_[static_cast<std::size_t>(t)].value;
}

const Matrix& GnnEncoder::classifier() const {
  return params_[params_.size() - 1].value;
}

Matrix PrepareFeatures(const EncoderConfig& config, const Matrix& raw_counts) {
  return config.log1p ? Log1p(raw_counts) : raw_counts;
}

Var EncoderForward(Tape& tape, std::span<const Var> weights,
                   const AggregationPlan& plan, Var input, int layers,
                   double leaky_slope) {
  Var h = input;
  for (int t = 0; t < layers; ++t) {
    h = ad::LeakyRelu(
        ad::MatMul(Aggregate(tape, plan, h), weights[static_cast<std::size_t>(t)]),
        leaky_slope);
  }
  return h;
}

Var EncoderLoss(Tape& tape, std::span<const Var> weights,
                const AggregationPlan& plan, const Matrix& scaled_input,
                const std::vector<std::size_t>& type_labels, int layers,
                double leaky_slope) {
  Var h = EncoderForward(tape, weights, plan, tape.Constant(scaled_input), layers,
                         leaky_slope);
  Var logits = ad::MatMul(h, weights[static_cast<std::size_t>(layers)]);
  return ad::SoftmaxCrossEntropy(logits, type_labels);
}

std::vector<std::size_t> NodeTypeLabels(const ProvenanceGraph& graph) {
  std::vector<std::size_t> labels;
  labels.reserve(graph.node_count());
  for (const EntityNode& n : graph.nodes()) {
    labels.push_back(static_cast<std::size_t>(n.type));
  }
  return labels;
}

GnnEncoder TrainEncoder(const ProvenanceGraph& graph, const Matrix& raw_counts,
                        const EncoderConfig& config, TrainingTrace* trace) {
  const std::vector<std::size_t> labels = NodeTypeLabels(graph);
  if (std::set<std::size_t>(labels.begin(), labels.end()).size() < 2) {
    throw InvalidArgument("encoder training needs at least two entity types present");
  }
  if (raw_counts.rows() != graph.node_count()) {
    throw InvalidArgument("feature rows do not match graph nodes");
  }
  GnnEncoder encoder(config, raw_counts.cols());
  const Matrix input = PrepareFeatures(config, raw_counts);
  const AggregationPlan plan = AncestorMeanPlan(graph);
  ParameterSet& params = encoder.parameters();

  auto evaluate = [&](bool with_grad) {
    Tape tape;
    std::vector<Var> w = tape.Bind(params);
    Var loss = EncoderLoss(tape, w, plan, input, labels, config.layers,
                           config.leaky_slope);
    const double value = loss.scalar();
    if (!std::isfinite(value)) {
      throw ModelError("encoder training diverged (loss is not finite); "
                       "reduce the learning rate");
    }
    if (with_grad) {
      params.ZeroGrad();
      tape.Backward(loss);
    }
    return value;
  };

  TrainingTrace local;
  local.losses = DescendMonotone(params, evaluate, config.learning_rate,
                                 config.epochs);

  Tape tape;
  std::vector<Var> w = tape.Bind(params);
  Var h = EncoderForward(tape, w, plan, tape.Constant(input), config.layers,
                         config.leaky_slope);
  local.final_accuracy =
      Accuracy(MatMul(h.value(), encoder.classifier()), labels);
  if (trace != nullptr) *trace = std::move(local);
  return encoder;
}

Matrix ExtractEmbeddings(const GnnEncoder& encoder, const ProvenanceGraph& graph,
                         const Matrix& raw_counts) {
  if (raw_counts.cols() != encoder.input_width()) {
    throw InvalidArgument("feature width " + std::to_string(raw_counts.cols()) +
                          " does not match encoder input width " +
                          std::to_string(encoder.input_width()));
  }
  if (raw_counts.rows() != graph.node_count()) {
    throw InvalidArgument("feature rows do not match graph nodes");
  }
  Tape tape;
  std::vector<Var> w;
  for (const Parameter& p : encoder.parameters()) w.push_back(tape.Constant(p.value));
  const AggregationPlan plan = AncestorMeanPlan(graph);
  Var h = EncoderForward(tape, w, plan,
                         tape.Constant(PrepareFeatures(encoder.config(), raw_counts)),
                         encoder.layers(), encoder.config().leaky_slope);
  return h.value();
}

std::vector<std::size_t> PredictNodeTypes(const GnnEncoder& encoder,
                                          const ProvenanceGraph& graph,
                                          const Matrix& raw_counts) {
  const Matrix logits =
      MatMul(ExtractEmbeddings(encoder, graph, raw_counts), encoder.classifier());
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    out.push_back(static_cast<std::size_t>(
        std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

}  // namespace tsgrec
