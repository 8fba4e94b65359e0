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

// Hierarchical meta-path attention over a technique subgraph: node-level
// attention within each meta-path neighbourhood, path-level attention
// across meta-paths, graph-level attention across nodes.
//
// Meta-paths, all starting and ending at a process:
//   0  process -launch-> process
//   1  process -file op-> file <-file op- process
//   2  process -registry op-> registry <-registry op- process
//   3  process -socket op-> socket <-socket op- process
// Every neighbourhood includes the node itself; non-process nodes have only
// themselves.

#ifndef TSGREC_EMBEDDING_HPP_
#define TSGREC_EMBEDDING_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsgrec/autodiff.hpp"
#include "tsgrec/graph.hpp"
#include "tsgrec/numerics.hpp"
#include "tsgrec/sampling.hpp"

namespace tsgrec {

inline constexpr std::size_t kNumMetaPaths = 4;
using MetaPathMask = std::array<bool, kNumMetaPaths>;

// Sorted node indices reachable from v by one instance of meta-path `path`,
// including v. Throws InvalidArgument for path >= 4.
std::vector<std::size_t> MetaPathNeighbors(const ProvenanceGraph& graph,
                                           std::size_t v, std::size_t path);

// The ablation combinations, 1-based: {0}, {0,1}, {0,1,3}, {0,1,2}, {0,2,3},
// all four.
MetaPathMask MetaPathCombination(int index);

struct HanConfig {
  std::size_t dim = 128;
  double leaky_slope = 0.01;
  MetaPathMask metapaths{true, true, true, true};
  bool log1p = true;
};

// Everything the forward pass needs from a subgraph, computed once.
struct HanPlan {
  std::size_t num_nodes = 0;
  Matrix input;  // scaled 42-dim behaviour counts
  // Per meta-path (target, source) pairs, grouped by target.
  std::array<std::vector<std::size_t>, kNumMetaPaths> target;
  std::array<std::vector<std::size_t>, kNumMetaPaths> source;
};

// Throws InvalidArgument for an empty subgraph or misaligned counts.
HanPlan PlanSubgraph(const ProvenanceGraph& graph, const Matrix& raw_counts,
                     const HanConfig& config);
HanPlan PlanSubgraph(const TechniqueSubgraph& subgraph, const HanConfig& config);

// Adds the attention parameters: "han.proj" (42 x d), per meta-path j
// "han.att<j>.wl", "han.att<j>.wr" (d x d) and "han.att<j>.a" (d x 1),
// "han.path.w1" (d x d), "han.path.b" (1 x d), "han.path.q" (d x 1),
// "han.graph.w2" (d x d).
void AddHanParameters(ParameterSet& params, const HanConfig& config,
                      std::size_t input_width, Rng& rng);

struct HanVars {
  Var proj;
  std::array<Var, kNumMetaPaths> wl, wr, a;
  Var w1, b, q, w2;
};

// Trainable leaves.
HanVars BindHan(Tape& tape, ParameterSet& params);
// Constants, for inference.
HanVars HanConstants(Tape& tape, const ParameterSet& params);

// Attention weights observed during one forward pass.
struct AttentionTrace {
  // alpha[j][k] pairs with plan.target[j][k], plan.source[j][k].
  std::array<std::vector<double>, kNumMetaPaths> alpha;
  Matrix beta;                // n x (enabled meta-paths)
  std::vector<double> gamma;  // n
};

// h_i = act(sum over k in N_i of alpha_ki e_k), with
// alpha_ki = softmax over k of a' leaky(Wl e_k + Wr e_i).
// `e` is n x d. Optionally writes the attention weights.
Var NodeLevelAttention(Var e, Var wl, Var wr, Var a,
                       const std::vector<std::size_t>& target,
                       const std::vector<std::size_t>& source, double slope,
                       std::vector<double>* alpha = nullptr);

// h_i = sum_j beta_ij h_i^j, beta_i = softmax_j(q' tanh(W1 h_i^j + b)).
Var PathLevelFuse(std::span<const Var> per_path, Var w1, Var b, Var q,
                  Matrix* beta = nullptr);

// c = tanh(W2 mean_i h_i), gamma = softmax_i(h_i' c), returns the 1 x d
// sum_i gamma_i h_i.
Var GraphLevelEmbed(Var h, Var w2, std::vector<double>* gamma = nullptr);

// Full composition, 1 x d.
Var HanForward(Tape& tape, const HanVars& vars, const HanPlan& plan,
               const HanConfig& config, AttentionTrace* trace = nullptr);

class HanEncoder {
 public:
  HanEncoder() = default;
  HanEncoder(const HanConfig& config, std::uint64_t seed);

  const HanConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  std::vector<double> Embed(const TechniqueSubgraph& subgraph,
                            AttentionTrace* trace = nullptr) const;

 private:
  HanConfig config_;
  ParameterSet params_;
};

}  // namespace tsgrec

#endif  // TSGREC_EMBEDDING_HPP_
