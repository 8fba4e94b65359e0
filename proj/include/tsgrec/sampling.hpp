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

// Technique subgraph segmentation around correlated nodes of interest
// (NOIs), and overlap metrics against ground-truth subgraphs.

#ifndef TSGREC_SAMPLING_HPP_
#define TSGREC_SAMPLING_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsgrec/graph.hpp"
#include "tsgrec/numerics.hpp"

namespace tsgrec {

struct TechniqueLabel {
  std::string technique;
  std::string tactic;
  friend bool operator==(const TechniqueLabel&, const TechniqueLabel&) = default;
};

// Self-contained: `graph` holds the member nodes and the edges induced
// among them in the parent graph; `features` holds each member's 42 raw
// behaviour counts measured in the parent graph, in graph node order. An
// empty `features` means "count within the subgraph itself".
struct TechniqueSubgraph {
  ProvenanceGraph graph;
  Matrix features;
  std::vector<std::string> nois;  // sorted
  std::string seed;
  std::optional<TechniqueLabel> label;
};

// Node subset with every parent edge whose endpoints are both inside.
ProvenanceGraph InducedSubgraph(const ProvenanceGraph& graph,
                                std::span<const std::size_t> members);

// Induced subgraph carrying the members' rows of `parent_counts`.
TechniqueSubgraph MakeSubgraph(const ProvenanceGraph& graph,
                               const Matrix& parent_counts,
                               std::span<const std::size_t> members);

// The whole graph as one subgraph, with its own counts.
TechniqueSubgraph WholeGraph(const ProvenanceGraph& graph);

// `features` if present, otherwise counts within the subgraph.
Matrix SubgraphCounts(const TechniqueSubgraph& subgraph);

// Highest in + out degree; ties go to the smallest id. Throws
// InvalidArgument on an empty set.
std::size_t SelectSeed(const ProvenanceGraph& graph,
                       std::span<const std::size_t> nois);

// Expands from `seed` over edges in both directions. From every NOI reached
// so far, each simple path of at most `lambda` hops that ends at another
// NOI (and passes through none) is kept; newly reached NOIs are expanded in
// turn. Returns the sorted node indices on kept paths, plus the seed.
// Throws InvalidArgument if the seed is not a NOI or lambda < 1.
std::vector<std::size_t> LambdaDfs(const ProvenanceGraph& graph,
                                   std::size_t seed,
                                   std::span<const std::size_t> nois, int lambda);

struct SamplerConfig {
  int lambda = 3;
  std::size_t min_nois = 5;
};

// Repeats seed selection and expansion over the pool of unconsumed NOIs,
// keeping subgraphs that gather at least min_nois of them. NOI ids that do
// not name a graph node raise InvalidArgument.
std::vector<TechniqueSubgraph> SampleSubgraphs(const ProvenanceGraph& graph,
                                               std::span<const std::string> nois,
                                               const SamplerConfig& config);

// Sampled and ground-truth NOI sets of one graph. Matching never crosses
// graphs.
struct SamplingCase {
  std::vector<std::vector<std::string>> sampled;
  std::vector<std::vector<std::string>> truth;
};

struct PairScore {
  std::size_t case_index = 0;
  std::size_t sampled_index = 0;
  std::optional<std::size_t> truth_index;  // unset when unmatched
  double precision = 0.0;
  double coverage = 0.0;
  bool correct = false;
};

struct SamplingMetrics {
  double precision = 0.0;
  double coverage = 0.0;
  double tpr = 0.0;
  double far = 0.0;
  bool precision_defined = false;  // false when nothing was sampled
  bool tpr_defined = false;        // false when there is no ground truth
  bool far_defined = false;        // false when nothing was sampled
  std::size_t sampled = 0;
  std::size_t truth = 0;
  std::size_t correct = 0;
  std::vector<PairScore> pairs;
};

// Greedy one-to-one matching by decreasing NOI overlap (ties by sampled
// index, then truth index). Unmatched samples score zero precision and
// coverage. A pair is correct when both exceed 0.8.
SamplingMetrics ComputeSamplingMetrics(std::span<const SamplingCase> cases);

SamplingMetrics ComputeSamplingMetrics(
    const std::vector<std::vector<std::string>>& sampled,
    const std::vector<std::vector<std::string>>& truth);

}  // namespace tsgrec

#endif  // TSGREC_SAMPLING_HPP_
