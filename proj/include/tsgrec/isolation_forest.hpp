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

// Isolation forest anomaly scoring and process-node NOI detection.

#ifndef TSGREC_ISOLATION_FOREST_HPP_
#define TSGREC_ISOLATION_FOREST_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsgrec/graph.hpp"
#include "tsgrec/numerics.hpp"

namespace tsgrec {

// Average unsuccessful-search path length of a binary search tree over n
// points: c(n) = 2 H(n-1) - 2 (n-1) / n with H(i) ~ ln(i) + 0.5772156649,
// c(2) = 1, c(n <= 1) = 0.
double AveragePathLength(std::size_t n);

// One node of an isolation tree. A leaf has feature < 0 and records how
// many training points reached it.
struct IsolationNode {
  int feature = -1;
  double split = 0.0;
  int left = -1;   // taken when x[feature] < split
  int right = -1;
  std::size_t size = 0;

  bool is_leaf() const { return feature < 0; }
};

class IsolationTree {
 public:
  IsolationTree() = default;
  // Node 0 is the root. Throws InvalidArgument on dangling children or
  // cycles.
  explicit IsolationTree(std::vector<IsolationNode> nodes);

  // Edges from the root to the leaf reached by x, plus c(leaf size).
  double PathLength(std::span<const double> x) const;
  std::size_t depth() const;
  const std::vector<IsolationNode>& nodes() const { return nodes_; }

 private:
  std::vector<IsolationNode> nodes_;
};

struct ForestConfig {
  std::size_t num_trees = 100;
  std::size_t subsample = 256;
  std::uint64_t seed = 0;
};

class IsolationForest {
 public:
  IsolationForest() = default;
  // `sample_size` is the per-tree subsample size used in the normaliser.
  IsolationForest(std::vector<IsolationTree> trees, std::size_t sample_size,
                  std::size_t width);

  // Throws InvalidArgument for fewer than two points, subsample < 2,
  // num_trees == 0 or non-finite input. When points.rows() < subsample the
  // whole set feeds every tree.
  static IsolationForest Fit(const Matrix& points, const ForestConfig& config);

  double ExpectedPathLength(std::span<const double> x) const;
  // 2^(-E[h(x)] / c(sample_size)), in (0, 1).
  double Score(std::span<const double> x) const;
  std::vector<double> ScoreRows(const Matrix& points) const;

  const std::vector<IsolationTree>& trees() const { return trees_; }
  std::size_t sample_size() const { return sample_size_; }
  std::size_t width() const { return width_; }

 private:
  std::vector<IsolationTree> trees_;
  std::size_t sample_size_ = 0;
  std::size_t width_ = 0;
};

struct NoiConfig {
  std::size_t num_trees = 100;
  std::size_t subsample = 256;
  double score_threshold = 0.6;
  // When set, flags the round(contamination * #processes) highest scores
  // instead of applying score_threshold.
  std::optional<double> contamination;
  std::uint64_t seed = 0;
};

struct NoiScore {
  std::string node_id;
  double score = 0.0;
};

struct NoiReport {
  std::vector<NoiScore> scores;      // every process node, descending score
  std::vector<std::string> flagged;  // sorted ids with score > threshold
  double threshold = 0.0;
};

// Fits a forest on the process rows of `embeddings` and scores them.
// Throws InvalidArgument when the graph has no process nodes or the rows do
// not line up with the graph.
NoiReport DetectNois(const ProvenanceGraph& graph, const Matrix& embeddings,
                     const NoiConfig& config);

// Same, scoring with a forest fitted elsewhere (for example on benign
// training nodes only).
NoiReport DetectNois(const ProvenanceGraph& graph, const Matrix& embeddings,
                     const NoiConfig& config, const IsolationForest& forest);

}  // namespace tsgrec

#endif  // TSGREC_ISOLATION_FOREST_HPP_
