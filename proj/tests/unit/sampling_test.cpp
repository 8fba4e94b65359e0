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
#include <functional>
#include <set>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"
#include "tsgrec/error.hpp"
#include "tsgrec/features.hpp"
#include "tsgrec/sampling.hpp"

using namespace tsgrec;
using namespace tsgrec::testing;

TEST_CASE("seed selection") {
  const ProvenanceGraph single = Graph({{"p:a", "launch", "p:b"}});
  const std::vector<std::size_t> one{single.index_of("p:b")};
  CHECK(SelectSeed(single, one) == single.index_of("p:b"));

  std::vector<testing::Triple> t;
  for (int i = 0; i < 3; ++i) t.emplace_back("p:x", "write", "f:x" + std::to_string(i));
  for (int i = 0; i < 7; ++i) t.emplace_back("p:n", "write", "f:n" + std::to_string(i));
  for (int i = 0; i < 7; ++i) t.emplace_back("p:m", "write", "f:m" + std::to_string(i));
  const ProvenanceGraph g = Graph(t);
  const std::vector<std::size_t> nois = Indices(g, {"p:x", "p:n", "p:m"});
  CHECK(g.node(SelectSeed(g, nois)).id == "p:m");
  CHECK_THROWS_AS(SelectSeed(g, std::vector<std::size_t>{}), InvalidArgument);
}

TEST_CASE("seed selection matches a brute-force scan") {
  Rng rng(60);
  for (int trial = 0; trial < 30; ++trial) {
    const ProvenanceGraph g = BuildGraph(RandomEvents(rng, 12, 10, 40));
    std::vector<std::size_t> nois;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      if (rng.Bernoulli(0.4)) nois.push_back(i);
    }
    if (nois.empty()) nois.push_back(0);
    std::size_t best = nois[0];
    for (std::size_t v : nois) {
      const Degree d = DegreeOf(g, g.node(v).id), b = DegreeOf(g, g.node(best).id);
      const std::size_t dv = d.in + d.out, db = b.in + b.out;
      if (dv > db || (dv == db && g.node(v).id < g.node(best).id)) best = v;
    }
    CHECK(SelectSeed(g, nois) == best);
  }
}

TEST_CASE("reference topology expansion at lambda three") {
  const ProvenanceGraph g = ReferenceTopology();
  const std::vector<std::size_t> nois = Indices(g, kReferenceNois);
  const std::vector<std::size_t> visited = LambdaDfs(g, g.index_of("p:v0"), nois, 3);
  CHECK(std::is_sorted(visited.begin(), visited.end()));
  CHECK(Ids(g, visited) ==
        std::set<std::string>{"p:v0", "f:a", "p:v1", "p:b", "f:c", "p:v2", "r:d", "p:v3"});
  const std::vector<std::size_t> wider = LambdaDfs(g, g.index_of("p:v0"), nois, 4);
  CHECK(Ids(g, wider).count("p:v4") == 1);
  CHECK(Ids(g, wider).count("f:h") == 0);
  const std::vector<std::size_t> narrow = LambdaDfs(g, g.index_of("p:v0"), nois, 2);
  CHECK(Ids(g, narrow) == std::set<std::string>{"p:v0", "f:a", "p:v1", "r:d", "p:v3"});
}

TEST_CASE("isolated seed returns only itself") {
  const ProvenanceGraph g = ReferenceTopology();
  const std::vector<std::size_t> nois = Indices(g, {"p:v0", "p:v4"});
  CHECK(Ids(g, LambdaDfs(g, g.index_of("p:v0"), nois, 3)) == std::set<std::string>{"p:v0"});
}

TEST_CASE("expansion argument errors") {
  const ProvenanceGraph g = ReferenceTopology();
  const std::vector<std::size_t> nois = Indices(g, kReferenceNois);
  CHECK_THROWS_AS(LambdaDfs(g, g.index_of("f:a"), nois, 3), InvalidArgument);
  CHECK_THROWS_AS(LambdaDfs(g, g.index_of("p:v0"), nois, 0), InvalidArgument);
}

TEST_CASE("expansion equals the path-closure oracle on random graphs") {
  Rng rng(61);
  for (int trial = 0; trial < 40; ++trial) {
    const ProvenanceGraph g = BuildGraph(RandomEvents(rng, 20, 30, 55));
    std::set<std::size_t> noiset;
    for (std::size_t i : g.NodesOfType(EntityType::kProcess)) {
      if (rng.Bernoulli(0.35)) noiset.insert(i);
    }
    if (noiset.empty()) continue;
    const std::vector<std::size_t> nois(noiset.begin(), noiset.end());
    const std::size_t seed = nois[rng.Index(nois.size())];
    for (int lambda : {1, 2, 3}) {
      const std::vector<std::size_t> got = LambdaDfs(g, seed, nois, lambda);
      const std::set<std::size_t> oracle = ClosureOracle(g, seed, noiset, lambda);
      CHECK(std::set<std::size_t>(got.begin(), got.end()) == oracle);
    }
  }
}

TEST_CASE("visited sets grow with lambda") {
  Rng rng(62);
  for (int trial = 0; trial < 30; ++trial) {
    const ProvenanceGraph g = BuildGraph(RandomEvents(rng, 25, 30, 60));
    std::vector<std::size_t> nois;
    for (std::size_t i : g.NodesOfType(EntityType::kProcess)) {
      if (rng.Bernoulli(0.3)) nois.push_back(i);
    }
    if (nois.empty()) continue;
    std::vector<std::size_t> prev = LambdaDfs(g, nois[0], nois, 1);
    for (int lambda = 2; lambda <= 5; ++lambda) {
      const std::vector<std::size_t> next = LambdaDfs(g, nois[0], nois, lambda);
      CHECK(std::includes(next.begin(), next.end(), prev.begin(), prev.end()));
      prev = next;
    }
  }
}

TEST_CASE("sampling an empty pool yields nothing") {
  const ProvenanceGraph g = ReferenceTopology();
  CHECK(SampleSubgraphs(g, std::vector<std::string>{}, {}).empty());
  const std::vector<std::string> bad{"p:zzz"};
  CHECK_THROWS_AS(SampleSubgraphs(g, bad, {}), InvalidArgument);
}

TEST_CASE("dense and separated clusters") {
  std::vector<testing::Triple> t;
  std::vector<std::string> nois;
  for (const char* cluster : {"a", "b"}) {
    for (int i = 0; i < 6; ++i) {
      const std::string p = std::string("p:") + cluster + std::to_string(i);
      t.emplace_back(p, "write", std::string("f:hub") + cluster);
      nois.push_back(p);
    }
  }
  t.emplace_back("p:c0", "read", "f:huba");
  for (int i = 0; i < 8; ++i) t.emplace_back("p:c" + std::to_string(i), "launch", "p:c" + std::to_string(i + 1));
  t.emplace_back("p:c8", "read", "f:hubb");
  const ProvenanceGraph g = Graph(t);

  const std::vector<std::string> first(nois.begin(), nois.begin() + 6);
  const std::vector<TechniqueSubgraph> one = SampleSubgraphs(g, first, {});
  REQUIRE(one.size() == 1);
  CHECK(one[0].nois == first);
  CHECK(one[0].graph.node_count() == 7);
  CHECK(one[0].graph.edge_count() == 6);

  const std::vector<TechniqueSubgraph> two = SampleSubgraphs(g, nois, {});
  REQUIRE(two.size() == 2);
  std::set<std::string> seen;
  for (const TechniqueSubgraph& s : two) {
    CHECK(s.nois.size() == 6);
    CHECK(std::binary_search(s.nois.begin(), s.nois.end(), s.seed));
    for (const std::string& n : s.nois) CHECK(seen.insert(n).second);
    for (const Edge& e : s.graph.edges()) {
      CHECK(e.src < s.graph.node_count());
      CHECK(e.dst < s.graph.node_count());
    }
  }

  SamplerConfig strict;
  strict.min_nois = 7;
  CHECK(SampleSubgraphs(g, nois, strict).empty());
}

TEST_CASE("sampled subgraphs carry parent-graph counts") {
  const ProvenanceGraph g = ReferenceTopology();
  SamplerConfig cfg;
  cfg.min_nois = 4;
  const std::vector<TechniqueSubgraph> out = SampleSubgraphs(g, kReferenceNois, cfg);
  REQUIRE(out.size() == 1);
  const TechniqueSubgraph& s = out[0];
  const Matrix parent = InitFeatures(g);
  REQUIRE(s.features.rows() == s.graph.node_count());
  for (std::size_t i = 0; i < s.graph.node_count(); ++i) {
    const std::size_t p = g.index_of(s.graph.node(i).id);
    for (std::size_t c = 0; c < 42; ++c) CHECK(s.features(i, c) == parent(p, c));
  }
  CHECK(s.seed == "p:v0");
  CHECK(SubgraphCounts(WholeGraph(g)) == parent);
}

TEST_CASE("metrics: identical sets score perfectly") {
  const std::vector<std::vector<std::string>> sets{{"a", "b", "c"}, {"d", "e"}};
  const SamplingMetrics m = ComputeSamplingMetrics(sets, sets);
  CHECK(m.precision == 1.0);
  CHECK(m.coverage == 1.0);
  CHECK(m.tpr == 1.0);
  CHECK(m.far == 0.0);
  CHECK(m.correct == 2);
}

TEST_CASE("metrics: three-of-four overlap is not correct") {
  const SamplingMetrics m = ComputeSamplingMetrics({{"a", "b", "c", "x"}}, {{"a", "b", "c", "d"}});
  CHECK(m.precision == 0.75);
  CHECK(m.coverage == 0.75);
  CHECK(m.correct == 0);
  CHECK(m.tpr == 0.0);
  CHECK(m.far == 1.0);
}

TEST_CASE("metrics: three samples against four truths worksheet") {
  const std::vector<std::vector<std::string>> truth{
      {"a", "b", "c", "d", "e"}, {"f", "g", "h", "i", "j"}, {"k", "l", "m", "n", "o"}, {"p", "q", "r", "s", "t"}};
  const std::vector<std::vector<std::string>> sampled{
      {"a", "b", "c", "d", "e", "f"}, {"f", "g", "h", "i", "j"}, {"k", "l", "x", "y"}};
  const SamplingMetrics m = ComputeSamplingMetrics(sampled, truth);
  REQUIRE(m.pairs.size() == 3);
  CHECK(m.pairs[0].truth_index == 0u);
  CHECK(m.pairs[1].truth_index == 1u);
  CHECK(m.pairs[2].truth_index == 2u);
  CHECK(m.pairs[0].precision == doctest::Approx(5.0 / 6.0));
  CHECK(m.pairs[2].coverage == doctest::Approx(0.4));
  CHECK(m.precision == doctest::Approx((5.0 / 6.0 + 1.0 + 0.5) / 3.0));
  CHECK(m.coverage == doctest::Approx(0.8));
  CHECK(m.correct == 2);
  CHECK(m.tpr == doctest::Approx(0.5));
  CHECK(m.far == doctest::Approx(1.0 / 3.0));
  for (double v : {m.precision, m.coverage, m.tpr, m.far}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("metrics: undefined ratios are flagged") {
  const SamplingMetrics none = ComputeSamplingMetrics({}, {{"a"}});
  CHECK_FALSE(none.far_defined);
  CHECK_FALSE(none.precision_defined);
  CHECK(none.far == 0.0);
  CHECK(none.tpr == 0.0);
  CHECK(none.tpr_defined);
  const SamplingMetrics no_truth = ComputeSamplingMetrics({{"a"}}, {});
  CHECK_FALSE(no_truth.tpr_defined);
  CHECK(no_truth.far_defined);
  CHECK(no_truth.far == 1.0);
  CHECK_FALSE(no_truth.pairs[0].truth_index.has_value());
}

TEST_CASE("matching never crosses graphs") {
  const std::vector<SamplingCase> cases{{{{"a", "b"}}, {{"c", "d"}}}, {{{"c", "d"}}, {{"a", "b"}}}};
  const SamplingMetrics m = ComputeSamplingMetrics(cases);
  CHECK(m.precision == 0.0);
  CHECK(m.correct == 0);
  CHECK(m.truth == 2);
}
