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
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "tsgrec/embedding.hpp"
#include "tsgrec/error.hpp"
#include "tsgrec/features.hpp"

using namespace tsgrec;
using tsgrec::testing::Graph;
using tsgrec::testing::RandomEvents;
using tsgrec::testing::RandomMatrix;

namespace {

double Leaky(double x, double slope) { return x > 0 ? x : slope * x; }

std::vector<double> Softmax(const std::vector<double>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  double z = 0;
  std::vector<double> out;
  for (double v : s) z += std::exp(v - m);
  for (double v : s) out.push_back(std::exp(v - m) / z);
  return out;
}

// row r of m times column c of w
double Dot(const Matrix& m, std::size_t r, const Matrix& w, std::size_t c) {
  double acc = 0;
  for (std::size_t k = 0; k < m.cols(); ++k) acc += m(r, k) * w(k, c);
  return acc;
}


TechniqueSubgraph Relabelled(const ProvenanceGraph& g, Rng& rng) {
  std::vector<std::size_t> perm(g.node_count());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.Shuffle(perm);
  std::map<std::string, std::string> rename;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    rename[g.node(i).id] = g.node(i).id.substr(0, 2) + "r" + std::to_string(100 + perm[i]);
  }
  std::vector<Event> events = ToEvents(g);
  for (Event& e : events) {
    e.subject_id = rename[e.subject_id];
    e.object_id = rename[e.object_id];
  }
  return WholeGraph(BuildGraph(events));
}

}  // namespace

TEST_CASE("meta-path neighbours") {
  ProvenanceGraph lonely({EntityNode{"p:a", EntityType::kProcess, {}}}, {});
  for (std::size_t j = 0; j < 4; ++j) CHECK(MetaPathNeighbors(lonely, 0, j) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(MetaPathNeighbors(lonely, 0, 4), InvalidArgument);

  const ProvenanceGraph g = Graph({{"p:a", "write", "f:x"}, {"p:b", "read", "f:x"}, {"p:a", "launch", "p:c"}});
  const std::size_t a = g.index_of("p:a"), b = g.index_of("p:b"), c = g.index_of("p:c");
  const auto file_a = MetaPathNeighbors(g, a, 1);
  const auto file_b = MetaPathNeighbors(g, b, 1);
  CHECK(std::find(file_a.begin(), file_a.end(), b) != file_a.end());
  CHECK(std::find(file_b.begin(), file_b.end(), a) != file_b.end());
  CHECK(MetaPathNeighbors(g, a, 0) == std::vector<std::size_t>{std::min(a, c), std::max(a, c)});
  CHECK(MetaPathNeighbors(g, c, 0) == std::vector<std::size_t>{c});
  CHECK(MetaPathNeighbors(g, g.index_of("f:x"), 1) == std::vector<std::size_t>{g.index_of("f:x")});
}

TEST_CASE("meta-path neighbours match a two-hop enumeration") {
  Rng rng(70);
  const EntityType via[] = {EntityType::kProcess, EntityType::kFile, EntityType::kRegistry, EntityType::kSocket};
  for (int trial = 0; trial < 20; ++trial) {
    const ProvenanceGraph g = BuildGraph(RandomEvents(rng, 8, 10, 30));
    for (std::size_t v = 0; v < g.node_count(); ++v) {
      for (std::size_t j = 0; j < 4; ++j) {
        std::set<std::size_t> oracle{v};
        if (g.node(v).type == EntityType::kProcess) {
          for (const Edge& e1 : g.edges()) {
            if (e1.src != v || g.node(e1.dst).type != via[j]) continue;
            if (j == 0) {
              oracle.insert(e1.dst);
              continue;
            }
            for (const Edge& e2 : g.edges()) {
              if (e2.dst == e1.dst) oracle.insert(e2.src);
            }
          }
        }
        const auto got = MetaPathNeighbors(g, v, j);
        CHECK(std::vector<std::size_t>(oracle.begin(), oracle.end()) == got);
      }
    }
  }
}

TEST_CASE("node-level attention over a singleton is the activated input") {
  Tape tape;
  Rng rng(71);
  const Matrix e = RandomMatrix(rng, 2, 3);
  std::vector<double> alpha;
  const Var h = NodeLevelAttention(tape.Constant(e), tape.Constant(RandomMatrix(rng, 3, 3)),
                                   tape.Constant(RandomMatrix(rng, 3, 3)), tape.Constant(RandomMatrix(rng, 3, 1)),
                                   {0, 1}, {0, 1}, 0.01, &alpha);
  CHECK(alpha == std::vector<double>{1.0, 1.0});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(h.value()(i, c) == Leaky(e(i, c), 0.01));
  }
}

TEST_CASE("identical neighbours share attention equally") {
  Tape tape;
  Rng rng(72);
  Matrix e = RandomMatrix(rng, 3, 4);
  for (std::size_t c = 0; c < 4; ++c) e(2, c) = e(1, c);
  std::vector<double> alpha;
  NodeLevelAttention(tape.Constant(e), tape.Constant(RandomMatrix(rng, 4, 4)), tape.Constant(RandomMatrix(rng, 4, 4)),
                     tape.Constant(RandomMatrix(rng, 4, 1)), {0, 0}, {1, 2}, 0.01, &alpha);
  CHECK(alpha[0] == doctest::Approx(0.5));
  CHECK(alpha[1] == doctest::Approx(0.5));
}

TEST_CASE("node-level attention matches a scalar recomputation") {
  Rng rng(73);
  const std::size_t d = 3;
  const Matrix e = RandomMatrix(rng, 4, d), wl = RandomMatrix(rng, d, d), wr = RandomMatrix(rng, d, d),
               a = RandomMatrix(rng, d, 1);
  // Neighbourhoods: 0 <- {0,1,2}, 1 <- {1}, 2 <- {0,2,3}, 3 <- {1,3}
  const std::vector<std::size_t> target{0, 0, 0, 1, 2, 2, 2, 3, 3};
  const std::vector<std::size_t> source{0, 1, 2, 1, 0, 2, 3, 1, 3};
  Tape tape;
  std::vector<double> alpha;
  const Var h = NodeLevelAttention(tape.Constant(e), tape.Constant(wl), tape.Constant(wr), tape.Constant(a), target,
                                   source, 0.2, &alpha);
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<std::size_t> ks;
    std::vector<double> scores;
    for (std::size_t m = 0; m < target.size(); ++m) {
      if (target[m] != i) continue;
      const std::size_t k = source[m];
      double s = 0;
      for (std::size_t c = 0; c < d; ++c) s += a(c, 0) * Leaky(Dot(e, k, wl, c) + Dot(e, i, wr, c), 0.2);
      ks.push_back(k);
      scores.push_back(s);
    }
    const std::vector<double> w = Softmax(scores);
    std::size_t pos = 0;
    for (std::size_t m = 0; m < target.size(); ++m) {
      if (target[m] == i) CHECK(alpha[m] == doctest::Approx(w[pos++]).epsilon(1e-12));
    }
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0;
      for (std::size_t p = 0; p < ks.size(); ++p) acc += w[p] * e(ks[p], c);
      CHECK(h.value()(i, c) == doctest::Approx(Leaky(acc, 0.2)).epsilon(1e-12));
    }
  }
}

TEST_CASE("path-level fusion symmetry cases") {
  Rng rng(74);
  const Matrix common = RandomMatrix(rng, 3, 4);
  Tape tape;
  std::vector<Var> paths(4, tape.Constant(common));
  Matrix beta;
  const Var h = PathLevelFuse(paths, tape.Constant(RandomMatrix(rng, 4, 4)), tape.Constant(RandomMatrix(rng, 1, 4)),
                              tape.Constant(RandomMatrix(rng, 4, 1)), &beta);
  for (double b : beta.data()) CHECK(b == doctest::Approx(0.25));
  for (std::size_t i = 0; i < common.size(); ++i) CHECK(h.value().data()[i] == doctest::Approx(common.data()[i]));

  std::vector<Var> distinct;
  for (int j = 0; j < 4; ++j) distinct.push_back(tape.Constant(RandomMatrix(rng, 3, 4)));
  PathLevelFuse(distinct, tape.Constant(RandomMatrix(rng, 4, 4)), tape.Constant(RandomMatrix(rng, 1, 4)),
                tape.Constant(Matrix(4, 1)), &beta);
  for (double b : beta.data()) CHECK(b == 0.25);
}

TEST_CASE("path-level fusion matches a scalar recomputation") {
  Rng rng(75);
  const std::size_t n = 3, d = 4, paths = 3;
  std::vector<Matrix> hs;
  Tape tape;
  std::vector<Var> vars;
  for (std::size_t j = 0; j < paths; ++j) {
    hs.push_back(RandomMatrix(rng, n, d));
    vars.push_back(tape.Constant(hs.back()));
  }
  const Matrix w1 = RandomMatrix(rng, d, d), b = RandomMatrix(rng, 1, d), q = RandomMatrix(rng, d, 1);
  Matrix beta;
  const Var h = PathLevelFuse(vars, tape.Constant(w1), tape.Constant(b), tape.Constant(q), &beta);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> scores;
    for (std::size_t j = 0; j < paths; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < d; ++c) s += q(c, 0) * std::tanh(Dot(hs[j], i, w1, c) + b(0, c));
      scores.push_back(s);
    }
    const std::vector<double> w = Softmax(scores);
    double total = 0;
    for (std::size_t j = 0; j < paths; ++j) {
      CHECK(beta(i, j) == doctest::Approx(w[j]).epsilon(1e-12));
      total += beta(i, j);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0;
      for (std::size_t j = 0; j < paths; ++j) acc += w[j] * hs[j](i, c);
      CHECK(h.value()(i, c) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("graph-level embedding symmetry cases") {
  Rng rng(76);
  Tape tape;
  std::vector<double> gamma;
  const Matrix one = RandomMatrix(rng, 1, 5);
  const Var h1 = GraphLevelEmbed(tape.Constant(one), tape.Constant(RandomMatrix(rng, 5, 5)), &gamma);
  CHECK(gamma == std::vector<double>{1.0});
  CHECK(h1.value() == one);

  Matrix same(4, 5);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 5; ++c) same(r, c) = one(0, c);
  }
  const Var h4 = GraphLevelEmbed(tape.Constant(same), tape.Constant(RandomMatrix(rng, 5, 5)), &gamma);
  for (double g : gamma) CHECK(g == doctest::Approx(0.25));
  for (std::size_t c = 0; c < 5; ++c) CHECK(h4.value()(0, c) == doctest::Approx(one(0, c)));
  CHECK_THROWS_AS(GraphLevelEmbed(tape.Constant(Matrix(0, 5)), tape.Constant(Matrix(5, 5))), InvalidArgument);
}

TEST_CASE("graph-level embedding matches a scalar recomputation") {
  Rng rng(77);
  const std::size_t n = 5, d = 3;
  const Matrix h = RandomMatrix(rng, n, d), w2 = RandomMatrix(rng, d, d);
  Tape tape;
  std::vector<double> gamma;
  const Var out = GraphLevelEmbed(tape.Constant(h), tape.Constant(w2), &gamma);
  std::vector<double> mean(d, 0.0), context(d, 0.0), scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += h(i, c) / static_cast<double>(n);
  }
  for (std::size_t c = 0; c < d; ++c) {
    double acc = 0;
    for (std::size_t k = 0; k < d; ++k) acc += mean[k] * w2(k, c);
    context[c] = std::tanh(acc);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) scores[i] += h(i, c) * context[c];
  }
  const std::vector<double> w = Softmax(scores);
  for (std::size_t i = 0; i < n; ++i) CHECK(gamma[i] == doctest::Approx(w[i]).epsilon(1e-12));
  for (std::size_t c = 0; c < d; ++c) {
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += w[i] * h(i, c);
    CHECK(out.value()(0, c) == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("single-process subgraph collapses to the projected row") {
  const ProvenanceGraph g({EntityNode{"p:solo", EntityType::kProcess, {}}}, {});
  TechniqueSubgraph s = WholeGraph(g);
  s.features = Matrix(1, 42);
  s.features(0, 3) = 2;
  s.features(0, 30) = 5;
  HanConfig cfg;
  cfg.dim = 16;
  const HanEncoder enc(cfg, 4);
  const std::vector<double> h = enc.Embed(s);
  const Matrix projected = MatMul(Log1p(s.features), enc.parameters().at("han.proj").value);
  REQUIRE(h.size() == 16);
  for (std::size_t c = 0; c < 16; ++c) CHECK(h[c] == doctest::Approx(Leaky(projected(0, c), cfg.leaky_slope)).epsilon(1e-12));
}

TEST_CASE("embedding is invariant under node relabelling") {
  Rng rng(78);
  HanConfig cfg;
  cfg.dim = 16;
  const HanEncoder enc(cfg, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const ProvenanceGraph g = BuildGraph(RandomEvents(rng, 6, 8, 20));
    const std::vector<double> a = enc.Embed(WholeGraph(g));
    const std::vector<double> b = enc.Embed(Relabelled(g, rng));
    REQUIRE(a.size() == b.size());
    for (std::size_t c = 0; c < a.size(); ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
  }
}

TEST_CASE("structurally different subgraphs embed apart") {
  HanConfig cfg;
  const HanEncoder enc(cfg, 2);
  const std::vector<double> a = enc.Embed(WholeGraph(Graph({{"p:a", "write", "f:x"}, {"p:b", "read", "f:x"}})));
  const std::vector<double> b = enc.Embed(WholeGraph(Graph({{"p:a", "connect", "s:x"}, {"p:a", "launch", "p:b"}})));
  CHECK(a.size() == 128);
  double dist = 0;
  for (std::size_t c = 0; c < a.size(); ++c) dist += (a[c] - b[c]) * (a[c] - b[c]);
  CHECK(std::sqrt(dist) > 1e-3);
}

TEST_CASE("every attention distribution sums to one") {
  Rng rng(79);
  HanConfig cfg;
  cfg.dim = 32;
  const HanEncoder enc(cfg, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const TechniqueSubgraph s = WholeGraph(BuildGraph(RandomEvents(rng, 10, 15, 40)));
    const HanPlan plan = PlanSubgraph(s, cfg);
    AttentionTrace trace;
    enc.Embed(s, &trace);
    for (std::size_t j = 0; j < kNumMetaPaths; ++j) {
      std::vector<double> sums(plan.num_nodes, 0.0);
      for (std::size_t m = 0; m < plan.target[j].size(); ++m) {
        CHECK(trace.alpha[j][m] >= 0.0);
        sums[plan.target[j][m]] += trace.alpha[j][m];
      }
      for (double v : sums) CHECK(std::abs(v - 1.0) <= 1e-6);
    }
    for (std::size_t i = 0; i < trace.beta.rows(); ++i) {
      double v = 0;
      for (double b : trace.beta.row(i)) v += b;
      CHECK(std::abs(v - 1.0) <= 1e-6);
    }
    double g = 0;
    for (double x : trace.gamma) g += x;
    CHECK(std::abs(g - 1.0) <= 1e-6);
  }
}

TEST_CASE("full composition passes the gradient check") {
  Rng rng(80);
  HanConfig cfg;
  cfg.dim = 4;
  for (int trial = 0; trial < 3; ++trial) {
    const TechniqueSubgraph s = WholeGraph(BuildGraph(RandomEvents(rng, 5, 6, 15)));
    const HanPlan plan = PlanSubgraph(s, cfg);
    ParameterSet params;
    AddHanParameters(params, cfg, 42, rng);
    const Matrix probe = RandomMatrix(rng, 4, 1);
    const double err = GradCheck(
        [&](Tape& tape) {
          const HanVars vars = BindHan(tape, params);
          return ad::Sum(ad::MatMul(HanForward(tape, vars, plan, cfg), tape.Constant(probe)));
        },
        params, 1e-6);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("meta-path ablation combinations") {
  CHECK(MetaPathCombination(1) == MetaPathMask{true, false, false, false});
  CHECK(MetaPathCombination(2) == MetaPathMask{true, true, false, false});
  CHECK(MetaPathCombination(3) == MetaPathMask{true, true, false, true});
  CHECK(MetaPathCombination(4) == MetaPathMask{true, true, true, false});
  CHECK(MetaPathCombination(5) == MetaPathMask{true, false, true, true});
  CHECK(MetaPathCombination(6) == MetaPathMask{true, true, true, true});
  CHECK_THROWS_AS(MetaPathCombination(0), InvalidArgument);
  CHECK_THROWS_AS(MetaPathCombination(7), InvalidArgument);

  Rng rng(81);
  const TechniqueSubgraph s = WholeGraph(BuildGraph(RandomEvents(rng, 8, 10, 30)));
  for (int combo = 1; combo <= 6; ++combo) {
    HanConfig cfg;
    cfg.dim = 8;
    cfg.metapaths = MetaPathCombination(combo);
    const HanEncoder enc(cfg, 5);
    AttentionTrace trace;
    CHECK(enc.Embed(s, &trace).size() == 8);
    const auto enabled = static_cast<std::size_t>(std::count(cfg.metapaths.begin(), cfg.metapaths.end(), true));
    CHECK(trace.beta.cols() == enabled);
  }
  HanConfig none;
  none.metapaths = {false, false, false, false};
  CHECK_THROWS_AS(HanEncoder(none, 1).Embed(s), InvalidArgument);
}

TEST_CASE("plan rejects empty and misaligned input") {
  HanConfig cfg;
  CHECK_THROWS_AS(PlanSubgraph(ProvenanceGraph{}, Matrix(0, 42), cfg), InvalidArgument);
  const ProvenanceGraph g = Graph({{"p:a", "launch", "p:b"}});
  CHECK_THROWS_AS(PlanSubgraph(g, Matrix(3, 42), cfg), InvalidArgument);
}
