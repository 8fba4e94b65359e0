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

#include "tsgrec/pipeline.hpp"

#include <algorithm>
#include <set>

#include "tsgrec/error.hpp"

namespace tsgrec {

namespace {

std::vector<double> RowOf(const Matrix& m, std::size_t r) {
  auto row = m.row(r);
  return std::vector<double>(row.begin(), row.end());
}

void RequireModels(const TrainedModels& models, EvalMode mode) {
  if (models.matcher.parameters().size() == 0) throw ModelError("matcher is not trained");
  if (models.exemplars.entries.empty()) throw ModelError("exemplar set is empty");
  if (mode == EvalMode::kSampledGraph) {
    if (models.encoder.parameters().size() == 0) throw ModelError("encoder is not trained");
    if (models.forest.trees().empty()) throw ModelError("NOI forest is not fitted");
  }
}

}  // namespace

ScenarioSpec ScenarioFromConfig(const PipelineConfig& config) {
  ScenarioSpec spec = DefaultScenarioSpec(StageSeed(config, "scenario"));
  spec.samples_per_class = config.scenario.samples_per_class;
  spec.train_per_class = config.scenario.train_per_class;
  spec.background = config.scenario.background;
  spec.noise = config.scenario.noise;
  return spec;
}

LmoSplit SplitLeaveMaliciousOut(const LabeledDataset& dataset, std::uint64_t seed) {
  std::vector<NodeRef> malicious, benign;
  for (std::size_t k = 0; k < dataset.graphs.size(); ++k) {
    const LabeledGraph& g = dataset.graphs[k];
    const std::set<std::string> truth(g.truth_nois.begin(), g.truth_nois.end());
    for (std::size_t i : g.graph.NodesOfType(EntityType::kProcess)) {
      const std::string& id = g.graph.node(i).id;
      (truth.count(id) ? malicious : benign).push_back(NodeRef{k, id});
    }
  }
  if (benign.size() < malicious.size()) {
    throw InvalidArgument("leave-malicious-out split needs at least as many benign (" +
                          std::to_string(benign.size()) + ") as malicious (" +
                          std::to_string(malicious.size()) + ") processes");
  }
  Rng rng(seed);
  rng.Shuffle(benign);
  LmoSplit split;
  split.test = malicious;
  split.test_malicious.assign(malicious.size(), true);
  std::vector<NodeRef> held(benign.begin(), benign.begin() + static_cast<std::ptrdiff_t>(malicious.size()));
  std::sort(held.begin(), held.end());
  split.test.insert(split.test.end(), held.begin(), held.end());
  split.test_malicious.resize(split.test.size(), false);
  split.train.assign(benign.begin() + static_cast<std::ptrdiff_t>(malicious.size()), benign.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

NoiMetrics EvaluateNoi(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  if (predicted.size() != truth.size()) {
    throw InvalidArgument("NOI metrics: " + std::to_string(predicted.size()) +
                          " predictions for " + std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw InvalidArgument("NOI metrics: empty test set");
  NoiMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i]) {
      ++(truth[i] ? m.tp : m.fp);
    } else {
      ++(truth[i] ? m.fn : m.tn);
    }
  }
  const auto d = [](std::size_t x) { return static_cast<double>(x); };
  m.accuracy = d(m.tp + m.tn) / d(truth.size());
  m.precision = m.tp + m.fp == 0 ? 0.0 : d(m.tp) / d(m.tp + m.fp);
  m.recall = m.tp + m.fn == 0 ? 0.0 : d(m.tp) / d(m.tp + m.fn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

GnnEncoder FitEncoder(const LabeledDataset& dataset, const PipelineConfig& config,
                      TrainingTrace* trace) {
  std::vector<const ProvenanceGraph*> graphs;
  for (const LabeledGraph& g : dataset.graphs) {
    if (g.train) graphs.push_back(&g.graph);
  }
  if (graphs.empty()) {
    for (const LabeledGraph& g : dataset.graphs) graphs.push_back(&g.graph);
  }
  if (graphs.empty()) throw InvalidArgument("encoder training needs at least one graph");
  const ProvenanceGraph merged = DisjointUnion(graphs);
  return TrainEncoder(merged, InitFeatures(merged), config.encoder, trace);
}

std::vector<Matrix> EmbedGraphs(const LabeledDataset& dataset, const GnnEncoder& encoder) {
  std::vector<Matrix> out;
  out.reserve(dataset.graphs.size());
  for (const LabeledGraph& g : dataset.graphs) {
    out.push_back(ExtractEmbeddings(encoder, g.graph, InitFeatures(g.graph)));
  }
  return out;
}

IsolationForest FitNoiForest(const LabeledDataset& dataset, std::span<const Matrix> embeddings,
                             const LmoSplit& split, const PipelineConfig& config) {
  if (embeddings.size() != dataset.graphs.size()) {
    throw InvalidArgument("one embedding matrix per graph is required");
  }
  if (split.train.empty()) throw InvalidArgument("leave-malicious-out train set is empty");
  const std::size_t width = embeddings[split.train.front().graph].cols();
  Matrix points(split.train.size(), width);
  for (std::size_t r = 0; r < split.train.size(); ++r) {
    const NodeRef& ref = split.train[r];
    const std::size_t i = dataset.graphs[ref.graph].graph.index_of(ref.node);
    for (std::size_t c = 0; c < width; ++c) points(r, c) = embeddings[ref.graph](i, c);
  }
  return IsolationForest::Fit(points,
                              ForestConfig{config.noi.num_trees, config.noi.subsample,
                                           config.noi.seed});
}

NoiMetrics EvaluateNoiSplit(const LabeledDataset& dataset, std::span<const Matrix> embeddings,
                            const LmoSplit& split, const IsolationForest& forest,
                            const PipelineConfig& config) {
  std::vector<double> scores;
  scores.reserve(split.test.size());
  for (const NodeRef& ref : split.test) {
    const std::size_t i = dataset.graphs[ref.graph].graph.index_of(ref.node);
    scores.push_back(forest.Score(RowOf(embeddings[ref.graph], i)));
  }
  double threshold = config.noi.score_threshold;
  if (config.noi.contamination) {
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto k = static_cast<std::size_t>(
        std::llround(*config.noi.contamination * static_cast<double>(sorted.size())));
    threshold = k >= sorted.size() ? 0.0 : sorted[k];
  }
  std::vector<bool> predicted;
  for (double s : scores) predicted.push_back(s > threshold);
  return EvaluateNoi(predicted, split.test_malicious);
}

std::vector<TechniqueSubgraph> SampleGraph(const ProvenanceGraph& graph, const Matrix& embeddings,
                                           const IsolationForest& forest,
                                           const PipelineConfig& config, NoiReport* report) {
  NoiReport local = DetectNois(graph, embeddings, config.noi, forest);
  std::vector<TechniqueSubgraph> out = SampleSubgraphs(graph, local.flagged, config.sampler);
  if (report != nullptr) *report = std::move(local);
  return out;
}

MatcherFit FitMatcher(const LabeledDataset& dataset, const PipelineConfig& config) {
  std::vector<TechniqueSubgraph> subgraphs;
  std::vector<std::string> techniques;
  std::vector<TechniqueLabel> labels;
  for (const LabeledGraph& g : dataset.graphs) {
    if (!g.train) continue;
    subgraphs.push_back(TruthSubgraph(g));
    techniques.push_back(g.label.technique);
    labels.push_back(g.label);
  }
  MatcherFit fit;
  fit.model = TrainMatcher(subgraphs, techniques, config.matcher, &fit.trace);
  fit.exemplars = BuildExemplars(fit.model, subgraphs, labels);
  return fit;
}

std::string_view ToString(EvalMode mode) {
  switch (mode) {
    case EvalMode::kTrueGraph:
      return "True_Graph";
    case EvalMode::kSampledGraph:
      return "Sampled_Graph";
    case EvalMode::kRawGraph:
      return "Raw_Graph";
  }
  return "unknown";
}

EvalMode ParseEvalMode(std::string_view name) {
  if (name == "true" || name == "True_Graph") return EvalMode::kTrueGraph;
  if (name == "sampled" || name == "Sampled_Graph") return EvalMode::kSampledGraph;
  if (name == "raw" || name == "Raw_Graph") return EvalMode::kRawGraph;
  throw InvalidArgument("unknown evaluation mode '" + std::string(name) +
                        "' (expected true, sampled or raw)");
}

EndToEndReport EvaluateEndToEnd(const LabeledDataset& dataset, EvalMode mode,
                                const TrainedModels& models, const PipelineConfig& config) {
  RequireModels(models, mode);
  EndToEndReport report;
  report.mode = mode;
  std::vector<SamplingCase> cases;
  for (const LabeledGraph& g : dataset.graphs) {
    if (g.train) continue;
    auto recognize = [&](const TechniqueSubgraph& query) {
      return Recognize(query, models.exemplars, models.matcher, config.unknown_threshold);
    };
    switch (mode) {
      case EvalMode::kTrueGraph:
        report.queries.push_back(
            QueryResult{g.id, g.label, g.truth_nois.size(), recognize(TruthSubgraph(g))});
        break;
      case EvalMode::kRawGraph:
        report.queries.push_back(
            QueryResult{g.id, g.label, g.truth_nois.size(), recognize(WholeGraph(g.graph))});
        break;
      case EvalMode::kSampledGraph: {
        const Matrix embeddings = ExtractEmbeddings(models.encoder, g.graph, InitFeatures(g.graph));
        const std::vector<TechniqueSubgraph> samples =
            SampleGraph(g.graph, embeddings, models.forest, config);
        SamplingCase sc;
        sc.truth.push_back(g.truth_nodes);
        const std::set<std::string> truth(g.truth_nois.begin(), g.truth_nois.end());
        for (const TechniqueSubgraph& s : samples) {
          std::vector<std::string> ids;
          for (const EntityNode& n : s.graph.nodes()) ids.push_back(n.id);
          sc.sampled.push_back(std::move(ids));
          std::size_t overlap = 0;
          for (const std::string& id : s.nois) overlap += truth.count(id);
          report.queries.push_back(QueryResult{
              g.id, overlap > 0 ? g.label : TechniqueLabel{}, overlap, recognize(s)});
        }
        if (samples.empty()) {
          Recognition none;
          none.technique = std::string(kUnknown);
          none.tactic = std::string(kUnknown);
          report.queries.push_back(QueryResult{g.id, g.label, 0, std::move(none)});
        }
        cases.push_back(std::move(sc));
        break;
      }
    }
  }
  if (report.queries.empty()) throw InvalidArgument("dataset has no held-out graphs");
  std::vector<Recognition> predictions;
  std::vector<TechniqueLabel> truth;
  for (const QueryResult& q : report.queries) {
    predictions.push_back(q.recognition);
    truth.push_back(q.truth);
  }
  report.metrics = ComputeRecognitionMetrics(predictions, truth);
  if (mode == EvalMode::kSampledGraph) report.sampling = ComputeSamplingMetrics(cases);
  return report;
}

PipelineResult RunPipeline(const LabeledDataset& dataset, const PipelineConfig& config) {
  PipelineResult result;
  result.models.encoder = FitEncoder(dataset, config, &result.encoder_trace);
  const std::vector<Matrix> embeddings = EmbedGraphs(dataset, result.models.encoder);
  result.split = SplitLeaveMaliciousOut(dataset, StageSeed(config, "split"));
  result.models.forest = FitNoiForest(dataset, embeddings, result.split, config);
  result.noi = EvaluateNoiSplit(dataset, embeddings, result.split, result.models.forest, config);
  MatcherFit fit = FitMatcher(dataset, config);
  result.models.matcher = std::move(fit.model);
  result.models.exemplars = std::move(fit.exemplars);
  result.matcher_trace = std::move(fit.trace);
  for (EvalMode mode : kAllModes) {
    result.reports.push_back(EvaluateEndToEnd(dataset, mode, result.models, config));
  }
  return result;
}

}  // namespace tsgrec
