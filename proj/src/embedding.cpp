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

#include "tsgrec/embedding.hpp"

#include <algorithm>

#include "tsgrec/error.hpp"
#include "tsgrec/features.hpp"

namespace tsgrec {

namespace {

constexpr std::array<EntityType, kNumMetaPaths> kVia = {
    EntityType::kProcess, EntityType::kFile, EntityType::kRegistry,
    EntityType::kSocket};

std::string AttName(std::size_t j, const char* part) {
  return "han.att" + std::to_string(j) + "." + part;
}

Var Leaf(Tape& tape, ParameterSet* mutable_params, const ParameterSet& params,
         const std::string& name) {
  if (mutable_params != nullptr) return tape.Param(mutable_params->at(name));
  return tape.Constant(params.at(name).value);
}

HanVars MakeVars(Tape& tape, ParameterSet* mutable_params, const ParameterSet& params) {
  HanVars v;
  v.proj = Leaf(tape, mutable_params, params, "han.proj");
  for (std::size_t j = 0; j < kNumMetaPaths; ++j) {
    v.wl[j] = Leaf(tape, mutable_params, params, AttName(j, "wl"));
    v.wr[j] = Leaf(tape, mutable_params, params, AttName(j, "wr"));
    v.a[j] = Leaf(tape, mutable_params, params, AttName(j, "a"));
  }
  v.w1 = Leaf(tape, mutable_params, params, "han.path.w1");
  v.b = Leaf(tape, mutable_params, params, "han.path.b");
  v.q = Leaf(tape, mutable_params, params, "han.path.q");
  v.w2 = Leaf(tape, mutable_params, params, "han.graph.w2");
  return v;
}

std::vector<double> Column(const Matrix& m) {
  return std::vector<double>(m.data().begin(), m.data().end());
}

}  // namespace

std::vector<std::size_t> MetaPathNeighbors(const ProvenanceGraph& graph,
                                           std::size_t v, std::size_t path) {
  if (path >= kNumMetaPaths) throw InvalidArgument("meta-path index out of range");
  if (v >= graph.node_count()) throw InvalidArgument("node index out of range");
  std::vector<std::size_t> out{v};
  if (graph.node(v).type == EntityType::kProcess) {
    for (std::size_t e : graph.out_edges(v)) {
      const Edge& edge = graph.edges()[e];
      if (graph.node(edge.dst).type != kVia[path]) continue;
      if (path == 0) {
        out.push_back(edge.dst);
        continue;
      }
      for (std::size_t back : graph.in_edges(edge.dst)) {
        out.push_back(graph.edges()[back].src);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MetaPathMask MetaPathCombination(int index) {
  switch (index) {
    case 1:
      return {true, false, false, false};
    case 2:
      return {true, true, false, false};
    case 3:
      return {true, true, false, true};
    case 4:
      return {true, true, true, false};
    case 5:
      return {true, false, true, true};
    case 6:
      return {true, true, true, true};
  }
  throw InvalidArgument("meta-path combination must be 1..6");
}

HanPlan PlanSubgraph(const ProvenanceGraph& subgraph, const Matrix& raw_counts,
                     const HanConfig& config) {
  if (subgraph.node_count() == 0) throw InvalidArgument("cannot embed an empty subgraph");
  if (raw_counts.rows() != subgraph.node_count() || raw_counts.cols() != kFeatureWidth) {
    throw InvalidArgument("subgraph counts must be " + std::to_string(subgraph.node_count()) +
                          " x " + std::to_string(kFeatureWidth));
  }
  RequireFinite(raw_counts, "subgraph counts");
  HanPlan plan;
  plan.num_nodes = subgraph.node_count();
  plan.input = config.log1p ? Log1p(raw_counts) : raw_counts;
  for (std::size_t j = 0; j < kNumMetaPaths; ++j) {
    if (!config.metapaths[j]) continue;
    for (std::size_t i = 0; i < plan.num_nodes; ++i) {
      for (std::size_t k : MetaPathNeighbors(subgraph, i, j)) {
        plan.target[j].push_back(i);
        plan.source[j].push_back(k);
      }
    }
  }
  return plan;
}

HanPlan PlanSubgraph(const TechniqueSubgraph& subgraph, const HanConfig& config) {
  return PlanSubgraph(subgraph.graph, SubgraphCounts(subgraph), config);
}

void AddHanParameters(ParameterSet& params, const HanConfig& config,
                      std::size_t input_width, Rng& rng) {
  const std::size_t d = config.dim;
  if (d == 0) throw InvalidArgument("embedding dimension is zero");
  params.Add("han.proj", GlorotUniform(input_width, d, rng));
  for (std::size_t j = 0; j < kNumMetaPaths; ++j) {
    params.Add(AttName(j, "wl"), GlorotUniform(d, d, rng));
    params.Add(AttName(j, "wr"), GlorotUniform(d, d, rng));
    params.Add(AttName(j, "a"), GlorotUniform(d, 1, rng));
  }
  params.Add("han.path.w1", GlorotUniform(d, d, rng));
  params.Add("han.path.b", Matrix(1, d));
  params.Add("han.path.q", GlorotUniform(d, 1, rng));
  params.Add("han.graph.w2", GlorotUniform(d, d, rng));
}

HanVars BindHan(Tape& tape, ParameterSet& params) {
  return MakeVars(tape, &params, params);
}

HanVars HanConstants(Tape& tape, const ParameterSet& params) {
  return MakeVars(tape, nullptr, params);
}

Var NodeLevelAttention(Var e, Var wl, Var wr, Var a,
                       const std::vector<std::size_t>& target,
                       const std::vector<std::size_t>& source, double slope,
                       std::vector<double>* alpha) {
  const std::size_t n = e.value().rows();
  Var left = ad::GatherRows(ad::MatMul(e, wl), source);
  Var right = ad::GatherRows(ad::MatMul(e, wr), target);
  Var scores = ad::MatMul(ad::LeakyRelu(ad::Add(left, right), slope), a);
  Var weights = ad::SegmentSoftmax(scores, target, n);
  if (alpha != nullptr) *alpha = Column(weights.value());
  return ad::LeakyRelu(
      ad::SegmentWeightedSum(weights, ad::GatherRows(e, source), target, n), slope);
}

Var PathLevelFuse(std::span<const Var> per_path, Var w1, Var b, Var q, Matrix* beta) {
  if (per_path.empty()) throw InvalidArgument("path-level fusion needs a meta-path");
  const std::size_t n = per_path[0].value().rows();
  std::vector<std::size_t> segment;
  segment.reserve(n * per_path.size());
  for (std::size_t j = 0; j < per_path.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) segment.push_back(i);
  }
  Var stacked = ad::VStack(per_path);
  Var scores = ad::MatMul(ad::Tanh(ad::AddRow(ad::MatMul(stacked, w1), b)), q);
  Var weights = ad::SegmentSoftmax(scores, segment, n);
  if (beta != nullptr) {
    *beta = Matrix(n, per_path.size());
    for (std::size_t j = 0; j < per_path.size(); ++j) {
      for (std::size_t i = 0; i < n; ++i) (*beta)(i, j) = weights.value()(j * n + i, 0);
    }
  }
  return ad::SegmentWeightedSum(weights, stacked, std::move(segment), n);
}

Var GraphLevelEmbed(Var h, Var w2, std::vector<double>* gamma) {
  const std::size_t n = h.value().rows();
  if (n == 0) throw InvalidArgument("graph-level attention over zero nodes");
  Var context = ad::Tanh(ad::MatMul(ad::MeanRows(h), w2));
  Var scores = ad::MatMul(h, ad::Transpose(context));
  std::vector<std::size_t> one(n, 0);
  Var weights = ad::SegmentSoftmax(scores, one, 1);
  if (gamma != nullptr) *gamma = Column(weights.value());
  return ad::SegmentWeightedSum(weights, h, std::move(one), 1);
}

Var HanForward(Tape& tape, const HanVars& vars, const HanPlan& plan,
               const HanConfig& config, AttentionTrace* trace) {
  Var e = ad::MatMul(tape.Constant(plan.input), vars.proj);
  std::vector<Var> per_path;
  for (std::size_t j = 0; j < kNumMetaPaths; ++j) {
    if (!config.metapaths[j]) continue;
    per_path.push_back(NodeLevelAttention(e, vars.wl[j], vars.wr[j], vars.a[j],
                                          plan.target[j], plan.source[j],
                                          config.leaky_slope,
                                          trace ? &trace->alpha[j] : nullptr));
  }
  if (per_path.empty()) throw InvalidArgument("no meta-path enabled");
  Var h = PathLevelFuse(per_path, vars.w1, vars.b, vars.q,
                        trace ? &trace->beta : nullptr);
  return GraphLevelEmbed(h, vars.w2, trace ? &trace->gamma : nullptr);
}

HanEncoder::HanEncoder(const HanConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng(DeriveSeed(seed, "han-init"));
  AddHanParameters(params_, config_, kFeatureWidth, rng);
}

std::vector<double> HanEncoder::Embed(const TechniqueSubgraph& subgraph,
                                      AttentionTrace* trace) const {
  Tape tape;
  const HanPlan plan = PlanSubgraph(subgraph, config_);
  Var out = HanForward(tape, HanConstants(tape, params_), plan, config_, trace);
  return Column(out.value());
}

}  // namespace tsgrec
