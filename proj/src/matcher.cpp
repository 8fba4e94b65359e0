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

#include "tsgrec/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "tsgrec/error.hpp"

namespace tsgrec {

std::string_view ToString(DistanceKind kind) {
  return kind == DistanceKind::kCosine ? "cosine" : "euclidean";
}

DistanceKind ParseDistanceKind(std::string_view name) {
  if (name == "euclidean") return DistanceKind::kEuclidean;
  if (name == "cosine") return DistanceKind::kCosine;
  throw InvalidArgument("unknown distance '" + std::string(name) +
                        "' (expected euclidean or cosine)");
}

double ContrastiveLoss(double d, bool same_class, double margin) {
  if (!std::isfinite(d) || d < 0.0) throw InvalidArgument("distance must be finite and >= 0");
  if (!std::isfinite(margin) || margin < 0.0) {
    throw InvalidArgument("margin must be finite and >= 0");
  }
  return same_class ? d * d : std::max(0.0, margin - d);
}

double Distance(std::span<const double> a, std::span<const double> b, DistanceKind kind) {
  if (a.size() != b.size()) throw InvalidArgument("distance between vectors of unequal width");
  if (std::equal(a.begin(), a.end(), b.begin())) return 0.0;
  if (kind == DistanceKind::kEuclidean) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = a[i] - b[i];
      sq += diff * diff;
    }
    return std::sqrt(sq);
  }
  // Same arithmetic as the differentiable op.
  constexpr double kTiny = 1e-12;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double cosine =
      dot / (std::max(std::sqrt(na), kTiny) * std::max(std::sqrt(nb), kTiny));
  return std::max(0.0, 1.0 - cosine);
}

std::vector<Triplet> BuildTriplets(std::span<const std::string> labels, Rng& rng,
                                   int passes, std::vector<std::string>* skipped_classes) {
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  if (members.size() < 2) throw InvalidArgument("triplets need at least two classes");
  if (skipped_classes != nullptr) {
    skipped_classes->clear();
    for (const auto& [label, idx] : members) {
      if (idx.size() < 2) skipped_classes->push_back(label);
    }
  }
  std::vector<Triplet> out;
  for (int pass = 0; pass < passes; ++pass) {
    for (std::size_t a = 0; a < labels.size(); ++a) {
      const std::vector<std::size_t>& same = members[labels[a]];
      if (same.size() < 2) continue;
      std::size_t p = same[rng.Index(same.size() - 1)];
      if (p == a) p = same.back();
      std::size_t negative = rng.Index(labels.size() - same.size());
      std::size_t n = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == labels[a]) continue;
        if (negative-- == 0) {
          n = i;
          break;
        }
      }
      out.push_back(Triplet{a, p, n});
    }
  }
  return out;
}

namespace {

void RequireParameter(const ParameterSet& params, const std::string& name,
                      std::size_t rows, std::size_t cols) {
  if (!params.contains(name)) throw ModelError("matcher checkpoint lacks " + name);
  const Matrix& m = params.at(name).value;
  if (m.rows() != rows || m.cols() != cols) {
    throw ModelError("matcher parameter " + name + " has shape " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Var PairDistance(Var a, Var b, DistanceKind kind) {
  return kind == DistanceKind::kCosine ? ad::CosineDistance(a, b)
                                       : ad::EuclideanDistance(a, b);
}

Var PairContrastive(Var d, bool same_class, double margin) {
  return same_class ? ad::Mul(d, d) : ad::Hinge(d, margin);
}

}  // namespace

SiameseModel::SiameseModel(const MatcherConfig& config) : config_(config) {
  Rng rng(DeriveSeed(config.seed, "matcher-init"));
  AddHanParameters(params_, config_.han, kFeatureWidth, rng);
  params_.Add("fc.w", GlorotUniform(config_.han.dim, config_.han.dim, rng));
  params_.Add("fc.b", Matrix(1, config_.han.dim));
}

SiameseModel::SiameseModel(const MatcherConfig& config, ParameterSet params)
    : config_(config), params_(std::move(params)) {
  const std::size_t d = config_.han.dim;
  RequireParameter(params_, "han.proj", kFeatureWidth, d);
  for (std::size_t j = 0; j < kNumMetaPaths; ++j) {
    const std::string prefix = "han.att" + std::to_string(j) + ".";
    RequireParameter(params_, prefix + "wl", d, d);
    RequireParameter(params_, prefix + "wr", d, d);
    RequireParameter(params_, prefix + "a", d, 1);
  }
  RequireParameter(params_, "han.path.w1", d, d);
  RequireParameter(params_, "han.path.b", 1, d);
  RequireParameter(params_, "han.path.q", d, 1);
  RequireParameter(params_, "han.graph.w2", d, d);
  RequireParameter(params_, "fc.w", d, d);
  RequireParameter(params_, "fc.b", 1, d);
  for (const Parameter& p : params_) {
    if (!p.value.AllFinite()) throw ModelError("matcher parameter " + p.name + " is not finite");
  }
}

Var SiameseBranch(Tape& tape, const HanVars& han, Var fc_w, Var fc_b,
                  const HanPlan& plan, const MatcherConfig& config) {
  Var h = HanForward(tape, han, plan, config.han);
  return ad::LeakyRelu(ad::AddRow(ad::MatMul(h, fc_w), fc_b), config.han.leaky_slope);
}

std::vector<double> SiameseModel::Embed(const TechniqueSubgraph& subgraph) const {
  Tape tape;
  const HanPlan plan = PlanSubgraph(subgraph, config_.han);
  Var out = SiameseBranch(tape, HanConstants(tape, params_),
                          tape.Constant(params_.at("fc.w").value),
                          tape.Constant(params_.at("fc.b").value), plan, config_);
  const Matrix& v = out.value();
  return std::vector<double>(v.data().begin(), v.data().end());
}

std::uint64_t SiameseModel::ContentHash() const {
  Fnv1a h;
  h.Update(static_cast<std::uint64_t>(config_.han.dim));
  h.Update(config_.han.leaky_slope);
  for (bool on : config_.han.metapaths) h.Update(static_cast<std::uint64_t>(on));
  h.Update(static_cast<std::uint64_t>(config_.han.log1p));
  h.Update(ToString(config_.distance));
  for (const Parameter& p : params_) {
    h.Update(p.name);
    h.Update(p.value);
  }
  return h.value();
}

Var PairLoss(Tape& tape, ParameterSet& params, const MatcherConfig& config,
             const HanPlan& a, const HanPlan& b, bool same_class) {
  const HanVars han = BindHan(tape, params);
  Var fc_w = tape.Param(params.at("fc.w"));
  Var fc_b = tape.Param(params.at("fc.b"));
  Var ea = SiameseBranch(tape, han, fc_w, fc_b, a, config);
  Var eb = SiameseBranch(tape, han, fc_w, fc_b, b, config);
  return PairContrastive(PairDistance(ea, eb, config.distance), same_class, config.margin);
}

SiameseModel TrainMatcher(std::span<const TechniqueSubgraph> subgraphs,
                          std::span<const std::string> labels,
                          const MatcherConfig& config, MatcherTrace* trace) {
  if (subgraphs.size() != labels.size()) {
    throw InvalidArgument("matcher training: subgraph and label counts differ");
  }
  if (!(config.margin >= 0.0)) throw InvalidArgument("margin must be >= 0");
  MatcherTrace local;
  Rng rng(DeriveSeed(config.seed, "triplets"));
  const std::vector<Triplet> triplets =
      BuildTriplets(labels, rng, config.anchor_passes, &local.skipped_classes);
  if (triplets.empty()) {
    throw InvalidArgument("no training triplets: every class has a single sample");
  }
  local.triplets = triplets.size();

  std::vector<HanPlan> plans;
  plans.reserve(subgraphs.size());
  for (const TechniqueSubgraph& g : subgraphs) plans.push_back(PlanSubgraph(g, config.han));
  std::vector<char> used(subgraphs.size(), 0);
  for (const Triplet& t : triplets) used[t.anchor] = used[t.positive] = used[t.negative] = 1;

  SiameseModel model(config);
  ParameterSet& params = model.parameters();
  const double inv_pairs = 1.0 / static_cast<double>(2 * triplets.size());

  auto evaluate = [&](bool with_grad) {
    Tape tape;
    const HanVars han = BindHan(tape, params);
    Var fc_w = tape.Param(params.at("fc.w"));
    Var fc_b = tape.Param(params.at("fc.b"));
    std::vector<Var> branch(subgraphs.size());
    for (std::size_t i = 0; i < subgraphs.size(); ++i) {
      if (used[i]) branch[i] = SiameseBranch(tape, han, fc_w, fc_b, plans[i], config);
    }
    std::vector<Var> losses;
    losses.reserve(2 * triplets.size());
    for (const Triplet& t : triplets) {
      losses.push_back(PairContrastive(
          PairDistance(branch[t.anchor], branch[t.positive], config.distance), true,
          config.margin));
      losses.push_back(PairContrastive(
          PairDistance(branch[t.anchor], branch[t.negative], config.distance), false,
          config.margin));
    }
    Var loss = ad::Scale(ad::Sum(ad::VStack(losses)), inv_pairs);
    const double value = loss.scalar();
    if (!std::isfinite(value)) {
      throw ModelError("matcher training diverged (loss is not finite); "
                       "reduce the learning rate");
    }
    if (with_grad) {
      params.ZeroGrad();
      tape.Backward(loss);
    }
    return value;
  };

  local.losses = DescendMonotone(params, evaluate, config.learning_rate, config.epochs);
  if (trace != nullptr) *trace = std::move(local);
  return model;
}

std::size_t MedoidIndex(std::span<const std::vector<double>> embeddings, DistanceKind kind) {
  if (embeddings.empty()) throw InvalidArgument("medoid of an empty class");
  std::size_t best = 0;
  double best_total = 0.0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < embeddings.size(); ++j) {
      if (j != i) total += Distance(embeddings[i], embeddings[j], kind);
    }
    if (i == 0 || total < best_total) {
      best = i;
      best_total = total;
    }
  }
  return best;
}

ExemplarSet BuildExemplars(const SiameseModel& model,
                           std::span<const TechniqueSubgraph> subgraphs,
                           std::span<const TechniqueLabel> labels) {
  if (subgraphs.size() != labels.size()) {
    throw InvalidArgument("exemplars: subgraph and label counts differ");
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = members.try_emplace(labels[i].technique);
    if (inserted) order.push_back(labels[i].technique);
    if (!it->second.empty() && labels[it->second.front()].tactic != labels[i].tactic) {
      throw InvalidArgument("technique " + labels[i].technique +
                            " is labelled with two tactics");
    }
    it->second.push_back(i);
  }
  ExemplarSet set;
  set.model_hash = model.ContentHash();
  for (const std::string& technique : order) {
    const std::vector<std::size_t>& idx = members[technique];
    std::vector<std::vector<double>> embeddings;
    for (std::size_t i : idx) embeddings.push_back(model.Embed(subgraphs[i]));
    const std::size_t m = MedoidIndex(embeddings, model.config().distance);
    set.entries.push_back(
        Exemplar{labels[idx[m]], subgraphs[idx[m]], std::move(embeddings[m])});
  }
  return set;
}

void AddExemplar(ExemplarSet& set, const SiameseModel& model, TechniqueLabel label,
                 TechniqueSubgraph subgraph) {
  for (const Exemplar& e : set.entries) {
    if (e.label.technique == label.technique) {
      throw InvalidArgument("technique " + label.technique + " already has an exemplar");
    }
  }
  if (set.entries.empty()) set.model_hash = model.ContentHash();
  std::vector<double> embedding = model.Embed(subgraph);
  set.entries.push_back(Exemplar{std::move(label), std::move(subgraph), std::move(embedding)});
}

bool RefreshExemplars(ExemplarSet& set, const SiameseModel& model) {
  const std::uint64_t hash = model.ContentHash();
  if (set.model_hash == hash) return false;
  for (Exemplar& e : set.entries) e.embedding = model.Embed(e.subgraph);
  set.model_hash = hash;
  return true;
}

Recognition Recognize(const std::vector<double>& query, const ExemplarSet& exemplars,
                      const SiameseModel& model, std::optional<double> unknown_threshold) {
  if (exemplars.entries.empty()) throw InvalidArgument("exemplar set is empty");
  if (exemplars.model_hash != model.ContentHash()) {
    throw ModelError("exemplar embeddings were computed by a different model; refresh them");
  }
  Recognition r;
  for (const Exemplar& e : exemplars.entries) {
    r.ranking.push_back(RankedClass{e.label, model.DistanceBetween(query, e.embedding)});
  }
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [](const RankedClass& a, const RankedClass& b) {
                     return a.distance < b.distance;
                   });
  if (unknown_threshold && r.ranking.front().distance > *unknown_threshold) {
    r.technique = std::string(kUnknown);
    r.tactic = std::string(kUnknown);
  } else {
    r.technique = r.ranking.front().label.technique;
    r.tactic = r.ranking.front().label.tactic;
  }
  return r;
}

Recognition Recognize(const TechniqueSubgraph& query, const ExemplarSet& exemplars,
                      const SiameseModel& model, std::optional<double> unknown_threshold) {
  return Recognize(model.Embed(query), exemplars, model, unknown_threshold);
}

RecognitionMetrics ComputeRecognitionMetrics(std::span<const Recognition> predictions,
                                             std::span<const TechniqueLabel> truth) {
  if (predictions.size() != truth.size()) {
    throw InvalidArgument("recognition metrics: " + std::to_string(predictions.size()) +
                          " predictions for " + std::to_string(truth.size()) + " labels");
  }
  RecognitionMetrics m;
  m.count = truth.size();
  if (m.count == 0) return m;
  double acc = 0, top3 = 0, tactic = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::vector<RankedClass>& ranking = predictions[i].ranking;
    if (ranking.empty()) continue;
    if (ranking.front().label.technique == truth[i].technique) acc += 1;
    if (ranking.front().label.tactic == truth[i].tactic) tactic += 1;
    for (std::size_t k = 0; k < std::min<std::size_t>(3, ranking.size()); ++k) {
      if (ranking[k].label.technique == truth[i].technique) {
        top3 += 1;
        break;
      }
    }
  }
  const double n = static_cast<double>(m.count);
  m.acc = acc / n;
  m.top3_acc = top3 / n;
  m.tactic_acc = tactic / n;
  return m;
}

}  // namespace tsgrec
