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

// Synthetic labelled provenance data: each graph embeds one instance of a
// technique motif (a small tree of malicious processes with characteristic
// behaviour) in benign background activity.

#ifndef TSGREC_SCENARIO_HPP_
#define TSGREC_SCENARIO_HPP_

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "tsgrec/graph.hpp"
#include "tsgrec/sampling.hpp"

namespace tsgrec {

// `count` fresh objects of `object` type, each touched once by `operation`.
// With `shared` the objects are drawn from the graph's common pool (system
// libraries, well-known keys, popular addresses) instead.
struct Fanout {
  std::string operation;
  EntityType object = EntityType::kFile;
  int count = 0;
  bool shared = false;
};

struct RoleSpec {
  std::string image;
  int parent = -1;  // earlier role index; -1 attaches to a benign host
  std::vector<Fanout> fanout;
};

// A named object several roles interact with. Names are fixed so that
// blacklists can refer to them.
struct Artifact {
  EntityType type = EntityType::kFile;
  std::string name;
};

struct ArtifactUse {
  int role = 0;
  std::string operation;
  int artifact = 0;
  int repeat = 1;
};

struct TechniqueTemplate {
  std::string technique;
  std::string tactic;
  std::string description;
  std::vector<RoleSpec> roles;
  std::vector<Artifact> artifacts;
  std::vector<ArtifactUse> uses;
};

struct ScenarioSpec {
  std::vector<TechniqueTemplate> templates;
  int samples_per_class = 10;
  int train_per_class = 5;
  // Scales the benign background; 0 leaves only the motif.
  double background = 1.0;
  // Relative jitter applied to every fan-out count and repeat.
  double noise = 0.25;
  std::uint64_t seed = 0;
};

// Six templates over Credential Access, Persistence, Discovery and Command
// and Control.
std::vector<TechniqueTemplate> DefaultTemplates();
ScenarioSpec DefaultScenarioSpec(std::uint64_t seed);

// Blacklist text matching the sensitive objects used by the default
// templates.
std::string DefaultBlacklistText();

struct LabeledGraph {
  std::string id;
  std::vector<Event> events;
  ProvenanceGraph graph;
  TechniqueLabel label;
  std::vector<std::string> truth_nois;   // motif processes, sorted
  std::vector<std::string> truth_nodes;  // motif processes + objects shared by two of them, sorted
  bool train = false;
};

struct LabeledDataset {
  std::vector<LabeledGraph> graphs;
};

// Throws InvalidArgument on invalid templates or counts (fewer than two
// templates, a role parent that is not an earlier role, an operation that
// is not legal for its object, a dangling artifact reference, ...).
void ValidateScenario(const ScenarioSpec& spec);

// Deterministic in spec (including spec.seed). Graphs are ordered by
// template, then instance; the first train_per_class instances of each class
// are marked train.
LabeledDataset GenerateScenario(const ScenarioSpec& spec);

// The ground-truth technique subgraph of one labelled graph, carrying
// parent-graph behaviour counts.
TechniqueSubgraph TruthSubgraph(const LabeledGraph& g);

}  // namespace tsgrec

#endif  // TSGREC_SCENARIO_HPP_
