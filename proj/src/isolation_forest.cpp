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

#include "tsgrec/isolation_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsgrec/error.hpp"

namespace tsgrec {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

struct TreeBuilder {
  const Matrix& points;
  std::size_t height_limit;
  Rng& rng;
  std::vector<IsolationNode> nodes;

  int Build(std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
            std::size_t depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(IsolationNode{-1, 0.0, -1, -1, end - begin});
    if (depth >= height_limit || end - begin <= 1) return id;

    std::vector<std::size_t> candidates;
    std::vector<std::pair<double, double>> ranges;
    for (std::size_t f = 0; f < points.cols(); ++f) {
      double lo = points(rows[begin], f), hi = lo;
      for (std::size_t k = begin + 1; k < end; ++k) {
        lo = std::min(lo, points(rows[k], f));
        hi = std::max(hi, points(rows[k], f));
      }
      if (hi > lo) {
        candidates.push_back(f);
        ranges.emplace_back(lo, hi);
      }
    }
    if (candidates.empty()) return id;

    const std::size_t pick = rng.Index(candidates.size());
    const std::size_t feature = candidates[pick];
    const auto [lo, hi] = ranges[pick];
    double split = rng.Uniform(lo, hi);
    while (split <= lo) split = rng.Uniform(lo, hi);

    auto mid = std::partition(
        rows.begin() + static_cast<std::ptrdiff_t>(begin),
        rows.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t r) { return points(r, feature) < split; });
    const auto m = static_cast<std::size_t>(mid - rows.begin());

    nodes[id].feature = static_cast<int>(feature);
    nodes[id].split = split;
    const int left = Build(rows, begin, m, depth + 1);
    const int right = Build(rows, m, end, depth + 1);
    nodes[id].left = left;
    nodes[id].right = right;
    return id;
  }
};

}  // namespace

double AveragePathLength(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  return 2.0 * (std::log(m) + kEulerGamma) - 2.0 * m / static_cast<double>(n);
}

IsolationTree::IsolationTree(std::vector<IsolationNode> nodes)
    : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvalidArgument("isolation tree has no nodes");
  std::vector<int> parents(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const IsolationNode& n = nodes_[i];
    if (n.is_leaf()) continue;
    for (int child : {n.left, n.right}) {
      if (child <= static_cast<int>(i) ||
          child >= static_cast<int>(nodes_.size())) {
        throw InvalidArgument("isolation tree node " + std::to_string(i) +
                              " has an invalid child");
      }
      if (++parents[static_cast<std::size_t>(child)] > 1) {
        throw InvalidArgument("isolation tree node " + std::to_string(child) +
                              " has two parents");
      }
    }
  }
}

double IsolationTree::PathLength(std::span<const double> x) const {
  std::size_t i = 0;
  double edges = 0.0;
  while (!nodes_[i].is_leaf()) {
    const IsolationNode& n = nodes_[i];
    if (static_cast<std::size_t>(n.feature) >= x.size()) {
      throw InvalidArgument("point too narrow for isolation tree");
    }
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.split
                                     ? n.left
                                     : n.right);
    edges += 1.0;
  }
  return edges + AveragePathLength(nodes_[i].size);
}

std::size_t IsolationTree::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes_[i].is_leaf()) continue;
    level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
    level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
  }
  return deepest;
}

IsolationForest::IsolationForest(std::vector<IsolationTree> trees,
                                 std::size_t sample_size, std::size_t width)
    : trees_(std::move(trees)), sample_size_(sample_size), width_(width) {
  if (trees_.empty()) throw InvalidArgument("isolation forest has no trees");
  if (sample_size_ < 2) throw InvalidArgument("isolation forest sample size < 2");
}

IsolationForest IsolationForest::Fit(const Matrix& points,
                                     const ForestConfig& config) {
  if (config.subsample < 2) throw InvalidArgument("subsample size must be at least 2");
  if (config.num_trees == 0) throw InvalidArgument("num_trees must be positive");
  if (points.rows() < 2) throw InvalidArgument("isolation forest needs at least 2 points");
  RequireFinite(points, "isolation forest input");

  const std::size_t psi = std::min(config.subsample, points.rows());
  const auto height_limit =
      static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi))));
  Rng rng(DeriveSeed(config.seed, "iforest"));
  std::vector<IsolationTree> trees;
  trees.reserve(config.num_trees);
  std::vector<std::size_t> all(points.rows());
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t t = 0; t < config.num_trees; ++t) {
    // Partial Fisher-Yates: the first psi entries are a uniform subsample.
    for (std::size_t k = 0; k < psi; ++k) {
      std::swap(all[k], all[k + rng.Index(all.size() - k)]);
    }
    std::vector<std::size_t> rows(all.begin(),
                                  all.begin() + static_cast<std::ptrdiff_t>(psi));
    TreeBuilder builder{points, height_limit, rng, {}};
    builder.Build(rows, 0, rows.size(), 0);
    trees.emplace_back(std::move(builder.nodes));
  }
  return IsolationForest(std::move(trees), psi, points.cols());
}

double IsolationForest::ExpectedPathLength(std::span<const double> x) const {
  if (x.size() != width_) {
    throw InvalidArgument("point width " + std::to_string(x.size()) +
                          " does not match forest width " + std::to_string(width_));
  }
  double total = 0.0;
  for (const IsolationTree& t : trees_) total += t.PathLength(x);
  return total / static_cast<double>(trees_.size());
}

double IsolationForest::Score(std::span<const double> x) const {
  return std::exp2(-ExpectedPathLength(x) / AveragePathLength(sample_size_));
}

std::vector<double> IsolationForest::ScoreRows(const Matrix& points) const {
  std::vector<double> out;
  out.reserve(points.rows());
  for (std::size_t r = 0; r < points.rows(); ++r) out.push_back(Score(points.row(r)));
  return out;
}

namespace {

Matrix ProcessRows(const ProvenanceGraph& graph, const Matrix& embeddings,
                   std::vector<std::size_t>& processes) {
  if (embeddings.rows() != graph.node_count()) {
    throw InvalidArgument("embedding rows (" + std::to_string(embeddings.rows()) +
                          ") do not match graph nodes (" +
                          std::to_string(graph.node_count()) + ")");
  }
  processes = graph.NodesOfType(EntityType::kProcess);
  if (processes.empty()) throw InvalidArgument("graph has no process nodes");
  Matrix rows(processes.size(), embeddings.cols());
  for (std::size_t k = 0; k < processes.size(); ++k) {
    std::ranges::copy(embeddings.row(processes[k]), rows.row(k).begin());
  }
  return rows;
}

NoiReport BuildReport(const ProvenanceGraph& graph,
                      const std::vector<std::size_t>& processes,
                      const std::vector<double>& scores, const NoiConfig& config) {
  NoiReport report;
  for (std::size_t k = 0; k < processes.size(); ++k) {
    report.scores.push_back(NoiScore{graph.node(processes[k]).id, scores[k]});
  }
  std::stable_sort(report.scores.begin(), report.scores.end(),
                   [](const NoiScore& a, const NoiScore& b) { return a.score > b.score; });
  if (config.contamination) {
    const double c = *config.contamination;
    if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("contamination must lie in [0, 1]");
    const auto k = static_cast<std::size_t>(
        std::llround(c * static_cast<double>(report.scores.size())));
    // Flag everything strictly above the best unflagged score.
    report.threshold = k < report.scores.size() ? report.scores[k].score : 0.0;
  } else {
    report.threshold = config.score_threshold;
  }
  for (const NoiScore& s : report.scores) {
    if (s.score > report.threshold) report.flagged.push_back(s.node_id);
  }
  std::sort(report.flagged.begin(), report.flagged.end());
  return report;
}

}  // namespace

NoiReport DetectNois(const ProvenanceGraph& graph, const Matrix& embeddings,
                     const NoiConfig& config) {
  std::vector<std::size_t> processes;
  const Matrix rows = ProcessRows(graph, embeddings, processes);
  const IsolationForest forest = IsolationForest::Fit(
      rows, ForestConfig{config.num_trees, config.subsample, config.seed});
  return BuildReport(graph, processes, forest.ScoreRows(rows), config);
}

NoiReport DetectNois(const ProvenanceGraph& graph, const Matrix& embeddings,
                     const NoiConfig& config, const IsolationForest& forest) {
  std::vector<std::size_t> processes;
  const Matrix rows = ProcessRows(graph, embeddings, processes);
  return BuildReport(graph, processes, forest.ScoreRows(rows), config);
}

}  // namespace tsgrec
