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

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "tsgrec/error.hpp"
#include "tsgrec/isolation_forest.hpp"

using namespace tsgrec;
using tsgrec::testing::Graph;
using tsgrec::testing::RandomMatrix;

namespace {

IsolationNode Split(int feature, double split, int left, int right) {
  IsolationNode n;
  n.feature = feature;
  n.split = split;
  n.left = left;
  n.right = right;
  return n;
}

IsolationNode Leaf(std::size_t size) {
  IsolationNode n;
  n.size = size;
  return n;
}

double Harmonic(std::size_t n) { return std::log(static_cast<double>(n)) + 0.5772156649015329; }

}  // namespace

TEST_CASE("average path length normaliser") {
  CHECK(AveragePathLength(0) == 0.0);
  CHECK(AveragePathLength(1) == 0.0);
  CHECK(AveragePathLength(2) == 1.0);
  for (std::size_t n : {3u, 4u, 10u, 256u}) {
    const double expected = 2.0 * Harmonic(n - 1) - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
    CHECK(AveragePathLength(n) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("hand-built single tree on four points") {
  // x0 < 0.5 isolates one point; x0 < 2.5 then leaves two points together.
  IsolationTree tree({Split(0, 0.5, 1, 2), Leaf(1), Split(0, 2.5, 3, 4), Leaf(2), Leaf(1)});
  IsolationForest forest({tree}, 4, 1);
  const double c4 = 2.0 * (std::log(3.0) + 0.5772156649015329) - 1.5;
  const double a[] = {0.0}, b[] = {2.0}, c[] = {3.0};
  CHECK(forest.ExpectedPathLength(a) == 1.0);
  CHECK(forest.ExpectedPathLength(b) == 3.0);
  CHECK(forest.ExpectedPathLength(c) == 2.0);
  CHECK(forest.Score(a) == doctest::Approx(std::pow(2.0, -1.0 / c4)));
  CHECK(forest.Score(b) == doctest::Approx(std::pow(2.0, -3.0 / c4)));
  CHECK(forest.Score(c) == doctest::Approx(std::pow(2.0, -2.0 / c4)));
  CHECK(forest.Score(a) > forest.Score(c));
  CHECK(forest.Score(c) > forest.Score(b));
  CHECK(tree.depth() == 2);
}

TEST_CASE("expected path equal to c(n) scores one half; deeper scores lower") {
  IsolationForest half({IsolationTree({Split(0, 0.0, 1, 2), Leaf(1), Leaf(1)})}, 2, 1);
  const double x[] = {1.0};
  CHECK(half.Score(x) == 0.5);
  IsolationForest deep({IsolationTree({Split(0, 0.0, 1, 2), Leaf(1), Split(0, 5.0, 3, 4), Leaf(1), Leaf(1)})}, 2, 1);
  CHECK(deep.Score(x) < 0.5);
  const double wrong[] = {1.0, 2.0};
  CHECK_THROWS_AS(half.Score(wrong), InvalidArgument);
}

TEST_CASE("malformed trees are rejected") {
  CHECK_THROWS_AS(IsolationTree({Split(0, 0.0, 1, 7), Leaf(1)}), InvalidArgument);
  CHECK_THROWS_AS(IsolationTree({Split(0, 0.0, 0, 1), Leaf(1)}), InvalidArgument);
}

TEST_CASE("fit argument errors") {
  CHECK_THROWS_AS(IsolationForest::Fit(Matrix(1, 3), {}), InvalidArgument);
  ForestConfig small;
  small.subsample = 1;
  CHECK_THROWS_AS(IsolationForest::Fit(Matrix(5, 3), small), InvalidArgument);
  ForestConfig none;
  none.num_trees = 0;
  CHECK_THROWS_AS(IsolationForest::Fit(Matrix(5, 3), none), InvalidArgument);
  Matrix bad(5, 2);
  bad(2, 1) = std::nan("");
  CHECK_THROWS_AS(IsolationForest::Fit(bad, {}), InvalidArgument);
}

TEST_CASE("two identical points score equally") {
  const Matrix pts = Matrix::FromRows({{1.0, 2.0}, {1.0, 2.0}});
  const IsolationForest f = IsolationForest::Fit(pts, {});
  const std::vector<double> s = f.ScoreRows(pts);
  CHECK(s[0] == s[1]);
}

TEST_CASE("fitting is seed-deterministic and bounded in depth") {
  Rng rng(50);
  const Matrix pts = RandomMatrix(rng, 300, 4);
  ForestConfig cfg;
  cfg.seed = 77;
  cfg.subsample = 64;
  const IsolationForest a = IsolationForest::Fit(pts, cfg);
  const IsolationForest b = IsolationForest::Fit(pts, cfg);
  CHECK(a.ScoreRows(pts) == b.ScoreRows(pts));
  CHECK(a.sample_size() == 64);
  for (const IsolationTree& t : a.trees()) CHECK(t.depth() <= 6);
  cfg.seed = 78;
  CHECK(IsolationForest::Fit(pts, cfg).ScoreRows(pts) != a.ScoreRows(pts));
  for (double s : a.ScoreRows(pts)) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("small inputs use the full set and its own normaliser") {
  Rng rng(51);
  const Matrix pts = RandomMatrix(rng, 20, 3);
  const IsolationForest f = IsolationForest::Fit(pts, {});
  CHECK(f.sample_size() == 20);
  for (const IsolationTree& t : f.trees()) {
    CHECK(t.depth() <= 5);
    std::size_t total = 0;
    for (const IsolationNode& n : t.nodes()) {
      if (n.is_leaf()) total += n.size;
    }
    CHECK(total == 20);
  }
}

TEST_CASE("planted far outliers take the top scores") {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    Matrix pts = RandomMatrix(rng, 505, 4);
    for (std::size_t i = 500; i < 505; ++i) {
      for (std::size_t c = 0; c < 4; ++c) pts(i, c) = (rng.Bernoulli(0.5) ? 10.0 : -10.0) + 0.1 * rng.Normal();
    }
    ForestConfig cfg;
    cfg.seed = seed;
    const std::vector<double> s = IsolationForest::Fit(pts, cfg).ScoreRows(pts);
    std::vector<std::size_t> order(s.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    const std::set<std::size_t> top(order.begin(), order.begin() + 5);
    hits += top == std::set<std::size_t>{500, 501, 502, 503, 504};
  }
  CHECK(hits >= 4);
}

TEST_CASE("score falls as isolation gets deeper") {
  Rng rng(52);
  const Matrix pts = RandomMatrix(rng, 200, 2);
  const IsolationForest f = IsolationForest::Fit(pts, {});
  const std::vector<double> s = f.ScoreRows(pts);
  for (std::size_t i = 0; i + 1 < pts.rows(); ++i) {
    const double hi = f.ExpectedPathLength(pts.row(i));
    const double hj = f.ExpectedPathLength(pts.row(i + 1));
    if (hi < hj) CHECK(s[i] > s[i + 1]);
    if (hi > hj) CHECK(s[i] < s[i + 1]);
  }
}

TEST_CASE("detection considers only process nodes") {
  Rng rng(53);
  const ProvenanceGraph g = BuildGraph(testing::RandomEvents(rng, 30, 20, 80));
  const Matrix emb = RandomMatrix(rng, g.node_count(), 3);
  NoiConfig cfg;
  cfg.score_threshold = 0.0;
  const NoiReport r = DetectNois(g, emb, cfg);
  CHECK(r.scores.size() == g.NodesOfType(EntityType::kProcess).size());
  CHECK(r.flagged.size() == r.scores.size());
  for (const std::string& id : r.flagged) CHECK(g.node(g.index_of(id)).type == EntityType::kProcess);
  CHECK(std::is_sorted(r.flagged.begin(), r.flagged.end()));
  for (std::size_t i = 1; i < r.scores.size(); ++i) CHECK(r.scores[i - 1].score >= r.scores[i].score);

  cfg.score_threshold = 1.0;
  CHECK(DetectNois(g, emb, cfg).flagged.empty());

  cfg.score_threshold = 0.6;
  const NoiReport d = DetectNois(g, emb, cfg);
  CHECK(d.threshold == 0.6);
  for (const NoiScore& s : d.scores) {
    const bool flagged = std::binary_search(d.flagged.begin(), d.flagged.end(), s.node_id);
    CHECK(flagged == (s.score > 0.6));
  }

  cfg.contamination = 0.1;
  CHECK(DetectNois(g, emb, cfg).flagged.size() == 3);
}

TEST_CASE("identical process rows are never flagged") {
  const ProvenanceGraph g = Graph({{"p:a", "write", "f:1"}, {"p:b", "write", "f:2"}, {"p:c", "write", "f:3"}, {"p:d", "write", "f:4"}});
  Matrix emb(g.node_count(), 3, 1.0);
  const NoiReport r = DetectNois(g, emb, {});
  CHECK(r.flagged.empty());
  CHECK(r.scores.size() == 4);
}

TEST_CASE("detection errors") {
  const ProvenanceGraph none({EntityNode{"f:a", EntityType::kFile, {}}, EntityNode{"s:b", EntityType::kSocket, {}}}, {});
  CHECK_THROWS_AS(DetectNois(none, Matrix(2, 3), {}), InvalidArgument);
  const ProvenanceGraph g = Graph({{"p:a", "launch", "p:b"}});
  CHECK_THROWS_AS(DetectNois(g, Matrix(3, 3), {}), InvalidArgument);
}
