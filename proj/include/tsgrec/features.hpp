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

// Behavioural node features and the self-supervised GNN encoder.
//
// Each node starts from 42 edge-type counts: columns 0..20 count incoming
// edges of type 1..21, columns 21..41 count outgoing edges. The encoder
// stacks mean-aggregation layers over {self} + in-neighbours (ancestors),
// followed by a linear softmax classifier over the four entity types, and is
// trained on node-type labels only.

#ifndef TSGREC_FEATURES_HPP_
#define TSGREC_FEATURES_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tsgrec/autodiff.hpp"
#include "tsgrec/graph.hpp"
#include "tsgrec/numerics.hpp"

namespace tsgrec {

inline constexpr std::size_t kFeatureWidth = 2 * kNumEdgeTypes;

// Raw integer counts, n x 42.
Matrix InitFeatures(const ProvenanceGraph& graph);

enum class Activation { kLeakyRelu, kNone };

// Row-normalised aggregation over {i} + distinct in-neighbours of i, stored
// as (target, source, weight) triples sorted by target then source.
struct AggregationPlan {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> target;
  std::vector<std::size_t> source;
  std::vector<double> weight;
};

AggregationPlan AncestorMeanPlan(const ProvenanceGraph& graph);

// E_out(i) = act(mean over {i} + in-neighbours of E_in(.) * W).
Matrix GnnLayerForward(const ProvenanceGraph& graph, const Matrix& input,
                       const Matrix& weights,
                       Activation activation = Activation::kLeakyRelu,
                       double leaky_slope = 0.01);

struct EncoderConfig {
  int layers = 2;
  std::size_t hidden = 64;
  int epochs = 200;
  double learning_rate = 0.3;
  std::uint64_t seed = 0;
  bool log1p = true;
  double leaky_slope = 0.01;
};

class GnnEncoder {
 public:
  GnnEncoder() = default;
  // Glorot-initialised weights drawn from config.seed.
  explicit GnnEncoder(const EncoderConfig& config,
                      std::size_t input_width = kFeatureWidth);
  // Explicit weights: layer_weights[t] and a classifier of width 4.
  GnnEncoder(const EncoderConfig& config, std::vector<Matrix> layer_weights,
             Matrix classifier);

  const EncoderConfig& config() const { return config_; }
  std::size_t input_width() const;
  std::size_t output_width() const;
  int layers() const { return config_.layers; }

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const Matrix& layer_weight(int t) const;
  const Matrix& classifier() const;

 private:
  void Validate() const;

  EncoderConfig config_;
  ParameterSet params_;  // "W0".."W{T-1}", then "classifier"
};

// Applies the configured scaling to raw counts.
Matrix PrepareFeatures(const EncoderConfig& config, const Matrix& raw_counts);

// Graph layers on a tape; `input` must already be scaled. Returns E^(T).
Var EncoderForward(Tape& tape, std::span<const Var> weights,
                   const AggregationPlan& plan, Var input, int layers,
                   double leaky_slope);

// Mean cross-entropy of the node-type classifier, for training and
// gradient checks. `weights` are the bound encoder parameters in order.
Var EncoderLoss(Tape& tape, std::span<const Var> weights,
                const AggregationPlan& plan, const Matrix& scaled_input,
                const std::vector<std::size_t>& type_labels, int layers,
                double leaky_slope);

std::vector<std::size_t> NodeTypeLabels(const ProvenanceGraph& graph);

struct TrainingTrace {
  std::vector<double> losses;  // loss at the accepted parameters per epoch
  double final_accuracy = 0.0;
};

// Full-batch gradient descent. A step that would raise the loss is
// rejected and retried at half the learning rate, so the recorded losses
// never increase. Throws InvalidArgument when fewer than two entity types are
// present, ModelError when the loss becomes non-finite.
GnnEncoder TrainEncoder(const ProvenanceGraph& graph, const Matrix& raw_counts,
                        const EncoderConfig& config,
                        TrainingTrace* trace = nullptr);

// E^(T), one row per node in graph order.
Matrix ExtractEmbeddings(const GnnEncoder& encoder, const ProvenanceGraph& graph,
                         const Matrix& raw_counts);

std::vector<std::size_t> PredictNodeTypes(const GnnEncoder& encoder,
                                          const ProvenanceGraph& graph,
                                          const Matrix& raw_counts);

}  // namespace tsgrec

#endif  // TSGREC_FEATURES_HPP_
