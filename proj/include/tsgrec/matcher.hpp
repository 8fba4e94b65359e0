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

// Siamese few-shot technique recognition: a shared subgraph encoder plus a
// fully connected projection, trained with a contrastive loss, and
// nearest-medoid matching at inference time.

#ifndef TSGREC_MATCHER_HPP_
#define TSGREC_MATCHER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsgrec/autodiff.hpp"
#include "tsgrec/embedding.hpp"
#include "tsgrec/features.hpp"
#include "tsgrec/sampling.hpp"

namespace tsgrec {

enum class DistanceKind { kEuclidean, kCosine };

std::string_view ToString(DistanceKind kind);
// Throws InvalidArgument for anything but "euclidean" or "cosine".
DistanceKind ParseDistanceKind(std::string_view name);

// Same class: d^2. Different class: max(0, margin - d). Throws
// InvalidArgument for negative or non-finite d or margin.
double ContrastiveLoss(double d, bool same_class, double margin);

double Distance(std::span<const double> a, std::span<const double> b,
                DistanceKind kind);

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};

// `passes` rounds over every sample whose class has at least two members.
// Positives are drawn from the anchor's class minus the anchor, negatives
// from all other classes. Throws InvalidArgument with fewer than two
// classes. `skipped_classes`, when given, receives the singleton classes.
std::vector<Triplet> BuildTriplets(std::span<const std::string> labels, Rng& rng,
                                   int passes = 1,
                                   std::vector<std::string>* skipped_classes = nullptr);

struct MatcherConfig {
  HanConfig han;
  double margin = 1.0;
  DistanceKind distance = DistanceKind::kEuclidean;
  int epochs = 60;
  double learning_rate = 0.01;
  int anchor_passes = 3;
  std::uint64_t seed = 0;
};

class SiameseModel {
 public:
  SiameseModel() = default;
  // Random initialisation from config.seed.
  explicit SiameseModel(const MatcherConfig& config);
  // Wraps existing weights (for loading). Throws ModelError if a parameter
  // is missing or mis-shaped.
  SiameseModel(const MatcherConfig& config, ParameterSet params);

  const MatcherConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  // Projection-layer output for one subgraph.
  std::vector<double> Embed(const TechniqueSubgraph& subgraph) const;
  double DistanceBetween(std::span<const double> a, std::span<const double> b) const {
    return Distance(a, b, config_.distance);
  }

  // FNV-1a over configuration, parameter names, shapes and values.
  std::uint64_t ContentHash() const;

 private:
  MatcherConfig config_;
  ParameterSet params_;  // "han.*", "fc.w", "fc.b"
};

// Projection of one subgraph on a tape, 1 x d.
Var SiameseBranch(Tape& tape, const HanVars& han, Var fc_w, Var fc_b,
                  const HanPlan& plan, const MatcherConfig& config);

// Contrastive loss of one pair through both branches of the shared model.
Var PairLoss(Tape& tape, ParameterSet& params, const MatcherConfig& config,
             const HanPlan& a, const HanPlan& b, bool same_class);

struct MatcherTrace {
  std::vector<double> losses;
  std::size_t triplets = 0;
  std::vector<std::string> skipped_classes;
};

// Full-batch gradient descent on the mean pair loss of every triplet.
// Throws InvalidArgument when no triplet can be formed, ModelError on a
// non-finite loss.
SiameseModel TrainMatcher(std::span<const TechniqueSubgraph> subgraphs,
                          std::span<const std::string> labels,
                          const MatcherConfig& config, MatcherTrace* trace = nullptr);

// Index of the sample minimising the summed distance to the others; ties go
// to the smallest index. Throws InvalidArgument on an empty class.
std::size_t MedoidIndex(std::span<const std::vector<double>> embeddings,
                        DistanceKind kind);

struct Exemplar {
  TechniqueLabel label;
  TechniqueSubgraph subgraph;
  std::vector<double> embedding;
};

struct ExemplarSet {
  std::vector<Exemplar> entries;
  std::uint64_t model_hash = 0;
};

// One medoid per technique, in first-appearance order. `labels[i]` labels
// subgraphs[i]. Throws InvalidArgument when one technique maps to two
// tactics.
ExemplarSet BuildExemplars(const SiameseModel& model,
                           std::span<const TechniqueSubgraph> subgraphs,
                           std::span<const TechniqueLabel> labels);

// Adds a class without touching the model. Throws InvalidArgument if the
// technique is already present.
void AddExemplar(ExemplarSet& set, const SiameseModel& model, TechniqueLabel label,
                 TechniqueSubgraph subgraph);

// Recomputes cached embeddings when the set was built by another model.
// Returns true if anything changed.
bool RefreshExemplars(ExemplarSet& set, const SiameseModel& model);

inline constexpr std::string_view kUnknown = "UNKNOWN";

struct RankedClass {
  TechniqueLabel label;
  double distance = 0.0;
};

struct Recognition {
  std::vector<RankedClass> ranking;  // ascending distance
  std::string technique;             // nearest class or UNKNOWN
  std::string tactic;                // tactic of `technique`, or UNKNOWN
};

// Throws InvalidArgument on an empty exemplar set and ModelError when the
// set's model hash does not match `model`.
Recognition Recognize(const std::vector<double>& query, const ExemplarSet& exemplars,
                      const SiameseModel& model,
                      std::optional<double> unknown_threshold = std::nullopt);

Recognition Recognize(const TechniqueSubgraph& query, const ExemplarSet& exemplars,
                      const SiameseModel& model,
                      std::optional<double> unknown_threshold = std::nullopt);

struct RecognitionMetrics {
  double acc = 0.0;
  double top3_acc = 0.0;
  double tactic_acc = 0.0;
  std::size_t count = 0;
};

// Rank-1 technique, truth among the first three, rank-1 tactic. An empty
// ranking counts as wrong. Throws InvalidArgument on a length mismatch.
RecognitionMetrics ComputeRecognitionMetrics(std::span<const Recognition> predictions,
                                             std::span<const TechniqueLabel> truth);

}  // namespace tsgrec

#endif  // TSGREC_MATCHER_HPP_
