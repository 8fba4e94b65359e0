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

#include "tsgrec/sampling.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "tsgrec/error.hpp"
#include "tsgrec/features.hpp"

namespace tsgrec {

namespace {

std::vector<std::vector<std::size_t>> UndirectedNeighbours(const ProvenanceGraph& graph) {
  std::vector<std::vector<std::size_t>> adj(graph.node_count());
  for (const Edge& e : graph.edges()) {
    if (e.src == e.dst) continue;
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

struct PathSearch {
  const std::vector<std::vector<std::size_t>>& adj;
  const std::vector<char>& is_noi;
  int lambda;
  std::vector<std::size_t> path;
  std::vector<char> on_path;
  std::vector<char> kept;
  std::vector<std::size_t> reached_nois;

  void From(std::size_t start) {
    path.assign(1, start);
    on_path[start] = 1;
    Extend(start);
    on_path[start] = 0;
  }

  void Extend(std::size_t u) {
    if (static_cast<int>(path.size()) > lambda) return;
    for (std::size_t w : adj[u]) {
      if (on_path[w]) continue;
      if (is_noi[w]) {
        for (std::size_t p : path) kept[p] = 1;
        kept[w] = 1;
        reached_nois.push_back(w);
        continue;
      }
      path.push_back(w);
      on_path[w] = 1;
      Extend(w);
      on_path[w] = 0;
      path.pop_back();
    }
  }
};

std::size_t Overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end());
  std::size_t n = 0;
  for (const std::string& x : std::set<std::string>(b.begin(), b.end())) n += sa.count(x);
  return n;
}

std::size_t DistinctCount(const std::vector<std::string>& a) {
  return std::set<std::string>(a.begin(), a.end()).size();
}

}  // namespace

ProvenanceGraph InducedSubgraph(const ProvenanceGraph& graph,
                                std::span<const std::size_t> members) {
  std::vector<std::size_t> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> local(graph.node_count(), graph.node_count());
  std::vector<EntityNode> nodes;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (sorted[k] >= graph.node_count()) {
      throw InvalidArgument("subgraph member index out of range");
    }
    local[sorted[k]] = k;
    nodes.push_back(graph.node(sorted[k]));
  }
  std::vector<Edge> edges;
  for (const Edge& e : graph.edges()) {
    if (local[e.src] < nodes.size() && local[e.dst] < nodes.size()) {
      edges.push_back(Edge{local[e.src], local[e.dst], e.type, e.timestamp});
    }
  }
  return ProvenanceGraph(std::move(nodes), std::move(edges));
}

TechniqueSubgraph MakeSubgraph(const ProvenanceGraph& graph,
                               const Matrix& parent_counts,
                               std::span<const std::size_t> members) {
  if (parent_counts.rows() != graph.node_count()) {
    throw InvalidArgument("feature rows do not match graph nodes");
  }
  std::vector<std::size_t> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  TechniqueSubgraph out;
  out.graph = InducedSubgraph(graph, sorted);
  out.features = Matrix(sorted.size(), parent_counts.cols());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    std::ranges::copy(parent_counts.row(sorted[k]), out.features.row(k).begin());
  }
  return out;
}

TechniqueSubgraph WholeGraph(const ProvenanceGraph& graph) {
  TechniqueSubgraph out;
  out.graph = graph;
  out.features = InitFeatures(graph);
  return out;
}

Matrix SubgraphCounts(const TechniqueSubgraph& subgraph) {
  if (subgraph.features.empty()) return InitFeatures(subgraph.graph);
  if (subgraph.features.rows() != subgraph.graph.node_count()) {
    throw InvalidArgument("subgraph feature rows do not match its nodes");
  }
  return subgraph.features;
}

std::size_t SelectSeed(const ProvenanceGraph& graph,
                       std::span<const std::size_t> nois) {
  if (nois.empty()) throw InvalidArgument("seed selection needs at least one NOI");
  std::size_t best = nois[0];
  std::size_t best_degree = 0;
  bool first = true;
  for (std::size_t v : nois) {
    if (v >= graph.node_count()) throw InvalidArgument("NOI index out of range");
    const std::size_t degree = graph.in_edges(v).size() + graph.out_edges(v).size();
    if (first || degree > best_degree || (degree == best_degree && v < best)) {
      best = v;
      best_degree = degree;
      first = false;
    }
  }
  return best;
}

std::vector<std::size_t> LambdaDfs(const ProvenanceGraph& graph, std::size_t seed,
                                   std::span<const std::size_t> nois, int lambda) {
  if (lambda < 1) throw InvalidArgument("lambda must be at least 1");
  std::vector<char> is_noi(graph.node_count(), 0);
  for (std::size_t v : nois) {
    if (v >= graph.node_count()) throw InvalidArgument("NOI index out of range");
    is_noi[v] = 1;
  }
  if (seed >= graph.node_count() || !is_noi[seed]) {
    throw InvalidArgument("seed is not a NOI");
  }
  const auto adj = UndirectedNeighbours(graph);
  PathSearch search{adj, is_noi, lambda, {}, std::vector<char>(graph.node_count(), 0),
                    std::vector<char>(graph.node_count(), 0), {}};
  std::vector<char> expanded(graph.node_count(), 0);
  std::vector<std::size_t> frontier{seed};
  expanded[seed] = 1;
  search.kept[seed] = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.back();
    frontier.pop_back();
    search.reached_nois.clear();
    search.From(u);
    for (std::size_t w : search.reached_nois) {
      if (!expanded[w]) {
        expanded[w] = 1;
        frontier.push_back(w);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < graph.node_count(); ++v) {
    if (search.kept[v]) out.push_back(v);
  }
  return out;
}

std::vector<TechniqueSubgraph> SampleSubgraphs(const ProvenanceGraph& graph,
                                               std::span<const std::string> nois,
                                               const SamplerConfig& config) {
  if (config.lambda < 1) throw InvalidArgument("lambda must be at least 1");
  std::set<std::size_t> pool;
  for (const std::string& id : nois) pool.insert(graph.index_of(id));
  std::vector<TechniqueSubgraph> out;
  const Matrix counts = InitFeatures(graph);
  while (!pool.empty()) {
    const std::vector<std::size_t> current(pool.begin(), pool.end());
    const std::size_t seed = SelectSeed(graph, current);
    const std::vector<std::size_t> visited =
        LambdaDfs(graph, seed, current, config.lambda);
    std::vector<std::string> consumed;
    for (std::size_t v : visited) {
      if (pool.erase(v) > 0) consumed.push_back(graph.node(v).id);
    }
    if (consumed.size() >= config.min_nois) {
      std::sort(consumed.begin(), consumed.end());
      TechniqueSubgraph sub = MakeSubgraph(graph, counts, visited);
      sub.nois = std::move(consumed);
      sub.seed = graph.node(seed).id;
      out.push_back(std::move(sub));
    }
  }
  return out;
}

SamplingMetrics ComputeSamplingMetrics(std::span<const SamplingCase> cases) {
  SamplingMetrics m;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const SamplingCase& sc = cases[c];
    m.sampled += sc.sampled.size();
    m.truth += sc.truth.size();

    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < sc.sampled.size(); ++i) {
      for (std::size_t j = 0; j < sc.truth.size(); ++j) {
        const std::size_t o = Overlap(sc.sampled[i], sc.truth[j]);
        if (o > 0) candidates.emplace_back(o, i, j);
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      return std::make_pair(std::get<1>(a), std::get<2>(a)) <
             std::make_pair(std::get<1>(b), std::get<2>(b));
    });
    std::vector<std::optional<std::size_t>> match(sc.sampled.size());
    std::vector<char> truth_used(sc.truth.size(), 0);
    for (const auto& [o, i, j] : candidates) {
      if (match[i] || truth_used[j]) continue;
      match[i] = j;
      truth_used[j] = 1;
    }
    for (std::size_t i = 0; i < sc.sampled.size(); ++i) {
      PairScore p;
      p.case_index = c;
      p.sampled_index = i;
      p.truth_index = match[i];
      if (match[i]) {
        const double o = static_cast<double>(Overlap(sc.sampled[i], sc.truth[*match[i]]));
        p.precision = o / static_cast<double>(DistinctCount(sc.sampled[i]));
        p.coverage = o / static_cast<double>(DistinctCount(sc.truth[*match[i]]));
        p.correct = p.precision > 0.8 && p.coverage > 0.8;
      }
      m.precision += p.precision;
      m.coverage += p.coverage;
      if (p.correct) ++m.correct;
      m.pairs.push_back(p);
    }
  }
  if (m.sampled > 0) {
    m.precision /= static_cast<double>(m.sampled);
    m.coverage /= static_cast<double>(m.sampled);
    m.far = static_cast<double>(m.sampled - m.correct) / static_cast<double>(m.sampled);
    m.precision_defined = true;
    m.far_defined = true;
  }
  if (m.truth > 0) {
    m.tpr = static_cast<double>(m.correct) / static_cast<double>(m.truth);
    m.tpr_defined = true;
  }
  return m;
}

SamplingMetrics ComputeSamplingMetrics(
    const std::vector<std::vector<std::string>>& sampled,
    const std::vector<std::vector<std::string>>& truth) {
  const SamplingCase one{sampled, truth};
  return ComputeSamplingMetrics(std::span<const SamplingCase>(&one, 1));
}

}  // namespace tsgrec
