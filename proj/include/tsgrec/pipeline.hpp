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

// Stage orchestration and evaluation over a labeled synthetic dataset.
//
// The encoder trains on the disjoint union of the training graphs. The NOI
// forest fits on benign process embeddings drawn from every graph after a
// leave-malicious-out split. The matcher trains on the ground-truth
// subgraphs of the training graphs, whose medoids become the exemplars.
// Recognition is always scored on the held-out graphs.

#ifndef TSGREC_PIPELINE_HPP_
#define TSGREC_PIPELINE_HPP_

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsgrec/config.hpp"
#include "tsgrec/features.hpp"
#include "tsgrec/isolation_forest.hpp"
#include "tsgrec/matcher.hpp"
#include "tsgrec/sampling.hpp"
#include "tsgrec/scenario.hpp"

namespace tsgrec {

ScenarioSpec ScenarioFromConfig(const PipelineConfig& config);

struct NodeRef {
  std::size_t graph = 0;
  std::string node;
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

struct LmoSplit {
  std::vector<NodeRef> train;           // benign processes only
  std::vector<NodeRef> test;            // all malicious, then sampled benign
  std::vector<bool> test_malicious;     // parallel to `test`
};

// Process nodes only. Malicious = ground-truth NOIs. Throws InvalidArgument
// when there are fewer benign than malicious processes.
LmoSplit SplitLeaveMaliciousOut(const LabeledDataset& dataset, std::uint64_t seed);

struct NoiMetrics {
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when nothing is predicted positive
  double recall = 0.0;     // 0 when there are no positives
  double f1 = 0.0;         // 0 when precision + recall == 0
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Malicious is the positive class. Throws InvalidArgument on an empty or
// misaligned input.
NoiMetrics EvaluateNoi(const std::vector<bool>& predicted, const std::vector<bool>& truth);

struct TrainedModels {
  GnnEncoder encoder;
  IsolationForest forest;
  SiameseModel matcher;
  ExemplarSet exemplars;
};

// Union of the training graphs; all graphs when none is marked for training.
GnnEncoder FitEncoder(const LabeledDataset& dataset, const PipelineConfig& config,
                      TrainingTrace* trace = nullptr);

std::vector<Matrix> EmbedGraphs(const LabeledDataset& dataset, const GnnEncoder& encoder);

IsolationForest FitNoiForest(const LabeledDataset& dataset, std::span<const Matrix> embeddings,
                             const LmoSplit& split, const PipelineConfig& config);

// Scores every test node of the split with the configured threshold.
NoiMetrics EvaluateNoiSplit(const LabeledDataset& dataset, std::span<const Matrix> embeddings,
                            const LmoSplit& split, const IsolationForest& forest,
                            const PipelineConfig& config);

// NOI detection followed by subgraph sampling on one graph.
std::vector<TechniqueSubgraph> SampleGraph(const ProvenanceGraph& graph, const Matrix& embeddings,
                                           const IsolationForest& forest,
                                           const PipelineConfig& config,
                                           NoiReport* report = nullptr);

struct MatcherFit {
  SiameseModel model;
  ExemplarSet exemplars;
  MatcherTrace trace;
};

MatcherFit FitMatcher(const LabeledDataset& dataset, const PipelineConfig& config);

enum class EvalMode { kTrueGraph, kSampledGraph, kRawGraph };

inline constexpr std::array<EvalMode, 3> kAllModes = {EvalMode::kTrueGraph,
                                                      EvalMode::kSampledGraph,
                                                      EvalMode::kRawGraph};

std::string_view ToString(EvalMode mode);
// Accepts "true", "sampled", "raw" and the True_Graph style names.
EvalMode ParseEvalMode(std::string_view name);

struct QueryResult {
  std::string graph_id;
  TechniqueLabel truth;       // empty when the query overlaps no ground truth
  std::size_t noi_overlap = 0;
  Recognition recognition;    // empty ranking when the graph produced no sample
};

struct EndToEndReport {
  EvalMode mode = EvalMode::kTrueGraph;
  RecognitionMetrics metrics;
  std::optional<SamplingMetrics> sampling;  // Sampled_Graph only
  std::vector<QueryResult> queries;
};

// Queries come from the held-out graphs. In Sampled_Graph mode every
// sampled subgraph is a query labeled by its graph's ground truth when the
// two share a NOI; a query with no shared NOI, and a graph that yields no
// sample at all, each count as one wrong prediction. Throws ModelError for
// untrained or mismatched models.
EndToEndReport EvaluateEndToEnd(const LabeledDataset& dataset, EvalMode mode,
                                const TrainedModels& models, const PipelineConfig& config);

struct PipelineResult {
  TrainedModels models;
  TrainingTrace encoder_trace;
  MatcherTrace matcher_trace;
  LmoSplit split;
  NoiMetrics noi;
  std::vector<EndToEndReport> reports;  // kAllModes order
};

PipelineResult RunPipeline(const LabeledDataset& dataset, const PipelineConfig& config);

}  // namespace tsgrec

#endif  // TSGREC_PIPELINE_HPP_
