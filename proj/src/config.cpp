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

#include "tsgrec/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tsgrec/error.hpp"

namespace tsgrec {

namespace {

using nlohmann::json;

json ToJson(const PipelineConfig& c) {
  json metapaths = json::array();
  for (bool b : c.matcher.han.metapaths) metapaths.push_back(b);
  return json{
      {"seed", c.seed},
      {"encoder",
       {{"layers", c.encoder.layers},
        {"hidden", c.encoder.hidden},
        {"epochs", c.encoder.epochs},
        {"learning_rate", c.encoder.learning_rate},
        {"leaky_slope", c.encoder.leaky_slope},
        {"log1p", c.encoder.log1p}}},
      {"noi",
       {{"num_trees", c.noi.num_trees},
        {"subsample", c.noi.subsample},
        {"score_threshold", c.noi.score_threshold},
        {"contamination", c.noi.contamination ? json(*c.noi.contamination) : json(nullptr)}}},
      {"sampler", {{"lambda", c.sampler.lambda}, {"min_nois", c.sampler.min_nois}}},
      {"matcher",
       {{"dim", c.matcher.han.dim},
        {"leaky_slope", c.matcher.han.leaky_slope},
        {"log1p", c.matcher.han.log1p},
        {"metapaths", metapaths},
        {"margin", c.matcher.margin},
        {"distance", std::string(ToString(c.matcher.distance))},
        {"epochs", c.matcher.epochs},
        {"learning_rate", c.matcher.learning_rate},
        {"anchor_passes", c.matcher.anchor_passes},
        {"unknown_threshold", c.unknown_threshold ? json(*c.unknown_threshold) : json(nullptr)}}},
      {"scenario",
       {{"samples_per_class", c.scenario.samples_per_class},
        {"train_per_class", c.scenario.train_per_class},
        {"background", c.scenario.background},
        {"noise", c.scenario.noise}}},
      {"paths",
       {{"data", c.paths.data}, {"models", c.paths.models}, {"reports", c.paths.reports}}},
  };
}

// Reads `key` of `obj` into `out` when present, with a type check.
template <typename T>
void Read(const json& obj, const std::string& section, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string name = section.empty() ? key : section + "." + key;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw InvalidArgument("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw InvalidArgument("");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && !it->is_number_unsigned()) throw InvalidArgument("");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw InvalidArgument("");
    } else {
      if (!it->is_string()) throw InvalidArgument("");
    }
    out = it->template get<T>();
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + name + "' has the wrong type");
  }
}

void ReadOptional(const json& obj, const std::string& section, const char* key,
                  std::optional<double>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (it->is_null()) {
    out.reset();
  } else if (it->is_number()) {
    out = it->get<double>();
  } else {
    throw InvalidArgument("config key '" + section + "." + key + "' must be a number or null");
  }
}

void RejectUnknown(const json& obj, const std::string& section,
                   std::initializer_list<const char*> known) {
  if (!obj.is_object()) {
    throw InvalidArgument("config section '" + section + "' must be an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) {
      throw InvalidArgument("unknown config key '" + (section.empty() ? key : section + "." + key) +
                            "'");
    }
  }
}

void FromJson(const json& doc, PipelineConfig& c) {
  RejectUnknown(doc, "", {"seed", "encoder", "noi", "sampler", "matcher", "scenario", "paths"});
  Read(doc, "", "seed", c.seed);
  if (doc.contains("encoder")) {
    const json& s = doc["encoder"];
    RejectUnknown(s, "encoder",
                  {"layers", "hidden", "epochs", "learning_rate", "leaky_slope", "log1p"});
    Read(s, "encoder", "layers", c.encoder.layers);
    Read(s, "encoder", "hidden", c.encoder.hidden);
    Read(s, "encoder", "epochs", c.encoder.epochs);
    Read(s, "encoder", "learning_rate", c.encoder.learning_rate);
    Read(s, "encoder", "leaky_slope", c.encoder.leaky_slope);
    Read(s, "encoder", "log1p", c.encoder.log1p);
  }
  if (doc.contains("noi")) {
    const json& s = doc["noi"];
    RejectUnknown(s, "noi", {"num_trees", "subsample", "score_threshold", "contamination"});
    Read(s, "noi", "num_trees", c.noi.num_trees);
    Read(s, "noi", "subsample", c.noi.subsample);
    Read(s, "noi", "score_threshold", c.noi.score_threshold);
    ReadOptional(s, "noi", "contamination", c.noi.contamination);
  }
  if (doc.contains("sampler")) {
    const json& s = doc["sampler"];
    RejectUnknown(s, "sampler", {"lambda", "min_nois"});
    Read(s, "sampler", "lambda", c.sampler.lambda);
    Read(s, "sampler", "min_nois", c.sampler.min_nois);
  }
  if (doc.contains("matcher")) {
    const json& s = doc["matcher"];
    RejectUnknown(s, "matcher",
                  {"dim", "leaky_slope", "log1p", "metapaths", "margin", "distance", "epochs",
                   "learning_rate", "anchor_passes", "unknown_threshold"});
    Read(s, "matcher", "dim", c.matcher.han.dim);
    Read(s, "matcher", "leaky_slope", c.matcher.han.leaky_slope);
    Read(s, "matcher", "log1p", c.matcher.han.log1p);
    if (s.contains("metapaths")) {
      const json& m = s["metapaths"];
      if (!m.is_array() || m.size() != kNumMetaPaths) {
        throw InvalidArgument("config key 'matcher.metapaths' must be an array of 4 booleans");
      }
      for (std::size_t j = 0; j < kNumMetaPaths; ++j) {
        if (!m[j].is_boolean()) {
          throw InvalidArgument("config key 'matcher.metapaths' must be an array of 4 booleans");
        }
        c.matcher.han.metapaths[j] = m[j].get<bool>();
      }
    }
    Read(s, "matcher", "margin", c.matcher.margin);
    std::string distance(ToString(c.matcher.distance));
    Read(s, "matcher", "distance", distance);
    try {
      c.matcher.distance = ParseDistanceKind(distance);
    } catch (const Error& e) {
      throw InvalidArgument(std::string("config key 'matcher.distance': ") + e.what());
    }
    Read(s, "matcher", "epochs", c.matcher.epochs);
    Read(s, "matcher", "learning_rate", c.matcher.learning_rate);
    Read(s, "matcher", "anchor_passes", c.matcher.anchor_passes);
    ReadOptional(s, "matcher", "unknown_threshold", c.unknown_threshold);
  }
  if (doc.contains("scenario")) {
    const json& s = doc["scenario"];
    RejectUnknown(s, "scenario", {"samples_per_class", "train_per_class", "background", "noise"});
    Read(s, "scenario", "samples_per_class", c.scenario.samples_per_class);
    Read(s, "scenario", "train_per_class", c.scenario.train_per_class);
    Read(s, "scenario", "background", c.scenario.background);
    Read(s, "scenario", "noise", c.scenario.noise);
  }
  if (doc.contains("paths")) {
    const json& s = doc["paths"];
    RejectUnknown(s, "paths", {"data", "models", "reports"});
    Read(s, "paths", "data", c.paths.data);
    Read(s, "paths", "models", c.paths.models);
    Read(s, "paths", "reports", c.paths.reports);
  }
}

void Require(bool ok, const char* key, const char* rule) {
  if (!ok) throw InvalidArgument(std::string("config key '") + key + "' " + rule);
}

bool Finite(double x) { return std::isfinite(x); }

}  // namespace

std::uint64_t StageSeed(const PipelineConfig& config, std::string_view stage) {
  return DeriveSeed(config.seed, stage);
}

void ResolveSeeds(PipelineConfig& config) {
  config.encoder.seed = StageSeed(config, "encoder");
  config.noi.seed = StageSeed(config, "noi");
  config.matcher.seed = StageSeed(config, "matcher");
}

void ValidateConfig(const PipelineConfig& c) {
  Require(c.encoder.layers >= 1, "encoder.layers", "must be >= 1");
  Require(c.encoder.hidden >= 1, "encoder.hidden", "must be >= 1");
  Require(c.encoder.epochs >= 0, "encoder.epochs", "must be >= 0");
  Require(Finite(c.encoder.learning_rate) && c.encoder.learning_rate > 0,
          "encoder.learning_rate", "must be positive");
  Require(Finite(c.encoder.leaky_slope) && c.encoder.leaky_slope >= 0,
          "encoder.leaky_slope", "must be >= 0");
  Require(c.noi.num_trees >= 1, "noi.num_trees", "must be >= 1");
  Require(c.noi.subsample >= 2, "noi.subsample", "must be >= 2");
  Require(Finite(c.noi.score_threshold) && c.noi.score_threshold > 0 &&
              c.noi.score_threshold < 1,
          "noi.score_threshold", "must lie in (0, 1)");
  Require(!c.noi.contamination || (*c.noi.contamination > 0 && *c.noi.contamination <= 0.5),
          "noi.contamination", "must lie in (0, 0.5]");
  Require(c.sampler.lambda >= 1, "sampler.lambda", "must be >= 1");
  Require(c.sampler.min_nois >= 1, "sampler.min_nois", "must be >= 1");
  Require(c.matcher.han.dim >= 1, "matcher.dim", "must be >= 1");
  Require(Finite(c.matcher.han.leaky_slope) && c.matcher.han.leaky_slope >= 0,
          "matcher.leaky_slope", "must be >= 0");
  Require(c.matcher.han.metapaths[0] || c.matcher.han.metapaths[1] ||
              c.matcher.han.metapaths[2] || c.matcher.han.metapaths[3],
          "matcher.metapaths", "must enable at least one meta-path");
  Require(Finite(c.matcher.margin) && c.matcher.margin > 0, "matcher.margin", "must be positive");
  Require(c.matcher.epochs >= 0, "matcher.epochs", "must be >= 0");
  Require(Finite(c.matcher.learning_rate) && c.matcher.learning_rate > 0,
          "matcher.learning_rate", "must be positive");
  Require(c.matcher.anchor_passes >= 1, "matcher.anchor_passes", "must be >= 1");
  Require(!c.unknown_threshold || (Finite(*c.unknown_threshold) && *c.unknown_threshold >= 0),
          "matcher.unknown_threshold", "must be >= 0");
  Require(c.scenario.samples_per_class >= 1, "scenario.samples_per_class", "must be >= 1");
  Require(c.scenario.train_per_class >= 1 &&
              c.scenario.train_per_class <= c.scenario.samples_per_class,
          "scenario.train_per_class", "must lie in [1, samples_per_class]");
  Require(Finite(c.scenario.background) && c.scenario.background >= 0, "scenario.background",
          "must be >= 0");
  Require(Finite(c.scenario.noise) && c.scenario.noise >= 0 && c.scenario.noise < 1,
          "scenario.noise", "must lie in [0, 1)");
  Require(!c.paths.data.empty(), "paths.data", "must not be empty");
  Require(!c.paths.models.empty(), "paths.models", "must not be empty");
  Require(!c.paths.reports.empty(), "paths.reports", "must not be empty");
}

PipelineConfig ParseConfig(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig config;
  FromJson(doc, config);
  ValidateConfig(config);
  ResolveSeeds(config);
  return config;
}

PipelineConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

void ApplyOverride(PipelineConfig& config, const std::string& key, const std::string& value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json patch = parsed;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t dot; (dot = rest.find('.')) != std::string::npos; rest = rest.substr(dot + 1)) {
    parts.push_back(rest.substr(0, dot));
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw InvalidArgument("malformed override key '" + key + "'");
    patch = json{{*it, patch}};
  }
  json doc = ToJson(config);
  doc.merge_patch(patch);
  // merge_patch deletes keys set to null; restore the explicit null.
  if (parsed.is_null() && parts.size() == 2) doc[parts[0]][parts[1]] = nullptr;
  PipelineConfig updated;
  FromJson(doc, updated);
  ValidateConfig(updated);
  ResolveSeeds(updated);
  config = std::move(updated);
}

std::string ConfigToJson(const PipelineConfig& config) { return ToJson(config).dump(2) + "\n"; }

}  // namespace tsgrec
