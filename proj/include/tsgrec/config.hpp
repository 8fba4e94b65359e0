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

// Pipeline configuration: every module default in one hierarchical JSON
// document. Missing keys keep their defaults; unknown keys are rejected.
//
//   seed                       0      root seed, split per stage by label
//   encoder.layers             2
//   encoder.hidden             64
//   encoder.epochs             200
//   encoder.learning_rate      0.3
//   encoder.leaky_slope        0.01
//   encoder.log1p              true
//   noi.num_trees              100
//   noi.subsample              256
//   noi.score_threshold        0.6
//   noi.contamination          null   fraction in (0, 0.5]; overrides the threshold
//   sampler.lambda             3
//   sampler.min_nois           5
//   matcher.dim                128
//   matcher.leaky_slope        0.01
//   matcher.log1p              true
//   matcher.metapaths          [true, true, true, true]
//   matcher.margin             1.0
//   matcher.distance           "euclidean" | "cosine"
//   matcher.epochs             60
//   matcher.learning_rate      0.01
//   matcher.anchor_passes      3
//   matcher.unknown_threshold  null   distance above which a query is UNKNOWN
//   scenario.samples_per_class 10
//   scenario.train_per_class   5
//   scenario.background        1.0
//   scenario.noise             0.25
//   paths.data                 "data"
//   paths.models               "models"
//   paths.reports              "reports"

#ifndef TSGREC_CONFIG_HPP_
#define TSGREC_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tsgrec/features.hpp"
#include "tsgrec/isolation_forest.hpp"
#include "tsgrec/matcher.hpp"
#include "tsgrec/sampling.hpp"

namespace tsgrec {

struct ScenarioSettings {
  int samples_per_class = 10;
  int train_per_class = 5;
  double background = 1.0;
  double noise = 0.25;
};

struct PathSettings {
  std::string data = "data";
  std::string models = "models";
  std::string reports = "reports";
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  NoiConfig noi;
  SamplerConfig sampler;
  MatcherConfig matcher;
  std::optional<double> unknown_threshold;
  ScenarioSettings scenario;
  PathSettings paths;
};

// Stage seeds derived from the root seed. Stage labels: "encoder", "noi",
// "matcher", "scenario", "split".
std::uint64_t StageSeed(const PipelineConfig& config, std::string_view stage);

// Copies StageSeed() into the module configs.
void ResolveSeeds(PipelineConfig& config);

// Range checks on every field; throws InvalidArgument naming the key.
void ValidateConfig(const PipelineConfig& config);

// Parses, validates and resolves seeds. Throws InvalidArgument on syntax
// errors, unknown keys, wrong value types or out-of-range values.
PipelineConfig ParseConfig(std::string_view json_text);
PipelineConfig LoadConfig(const std::string& path);

// `key` is a dotted path such as "encoder.hidden"; `value` is parsed as JSON
// and falls back to a plain string. Seeds are re-resolved.
void ApplyOverride(PipelineConfig& config, const std::string& key, const std::string& value);

// Full document with every key present.
std::string ConfigToJson(const PipelineConfig& config);

}  // namespace tsgrec

#endif  // TSGREC_CONFIG_HPP_
