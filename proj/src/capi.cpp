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

#include "tsgrec/tsgrec.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"
#include "tsgrec/config.hpp"
#include "tsgrec/error.hpp"
#include "tsgrec/io.hpp"
#include "tsgrec/pipeline.hpp"
#include "tsgrec/rules.hpp"
#include "tsgrec/scenario.hpp"

struct tsgrec_config {
  tsgrec::PipelineConfig value;
};

struct tsgrec_dataset {
  tsgrec::LabeledDataset value;
};

struct tsgrec_graph {
  tsgrec::ProvenanceGraph value;
};

struct tsgrec_models {
  std::optional<tsgrec::GnnEncoder> encoder;
  std::optional<tsgrec::IsolationForest> forest;
  std::optional<tsgrec::SiameseModel> matcher;
  std::optional<tsgrec::ExemplarSet> exemplars;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

tsgrec_status Fail(tsgrec_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
tsgrec_status Guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return TSGREC_OK;
  } catch (const tsgrec::Error& e) {
    return Fail(static_cast<tsgrec_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(TSGREC_INTERNAL_ERROR, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return Fail(TSGREC_DATA_ERROR, e.what());
  } catch (const std::exception& e) {
    return Fail(TSGREC_INTERNAL_ERROR, e.what());
  }
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Emit(char** out, const std::string& s) {
  if (out != nullptr) *out = Dup(s);
}

void Require(const void* p, const char* name) {
  if (p == nullptr) throw tsgrec::InvalidArgument(std::string(name) + " must not be NULL");
}

const tsgrec::PipelineConfig& Config(const tsgrec_config* c) {
  Require(c, "config");
  return c->value;
}

tsgrec::TrainedModels Bundle(const tsgrec_models* m, bool need_detector) {
  tsgrec::TrainedModels t;
  if (need_detector) {
    if (!m->encoder) throw tsgrec::ModelError("encoder is not loaded; run train-encoder first");
    if (!m->forest) throw tsgrec::ModelError("NOI forest is not loaded; run detect-noi first");
    t.encoder = *m->encoder;
    t.forest = *m->forest;
  }
  if (!m->matcher) throw tsgrec::ModelError("matcher is not loaded; run train-matcher first");
  if (!m->exemplars) throw tsgrec::ModelError("exemplars are not loaded; run train-matcher first");
  t.matcher = *m->matcher;
  t.exemplars = *m->exemplars;
  return t;
}

std::string Format(const char* fmt, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string Table(const std::vector<tsgrec::EndToEndReport>& reports) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %7s %8s %10s %8s %10s %9s %6s %6s\n", "mode", "ACC",
                "Top3ACC", "TacticACC", "queries", "Precision", "Coverage", "TPR", "FAR");
  out << line;
  for (const tsgrec::EndToEndReport& r : reports) {
    auto cell = [&](bool defined, double v) { return defined ? Format("%.4f", v) : std::string("-"); };
    const bool s = r.sampling.has_value();
    std::snprintf(line, sizeof(line), "%-14s %7.4f %8.4f %10.4f %8zu %10s %9s %6s %6s\n",
                  std::string(tsgrec::ToString(r.mode)).c_str(), r.metrics.acc, r.metrics.top3_acc,
                  r.metrics.tactic_acc, r.metrics.count,
                  cell(s && r.sampling->precision_defined, s ? r.sampling->precision : 0).c_str(),
                  cell(s && r.sampling->precision_defined, s ? r.sampling->coverage : 0).c_str(),
                  cell(s && r.sampling->tpr_defined, s ? r.sampling->tpr : 0).c_str(),
                  cell(s && r.sampling->far_defined, s ? r.sampling->far : 0).c_str());
    out << line;
  }
  return out.str();
}

json StatsJson(const tsgrec::IngestStats& stats) {
  return json{{"lines", stats.lines},
              {"accepted", stats.accepted},
              {"rejected", stats.rejected},
              {"reasons", stats.reasons},
              {"examples", stats.examples}};
}

}  // namespace

extern "C" {

const char* tsgrec_version(void) { return "1.0.0"; }

const char* tsgrec_last_error(void) { return g_last_error.c_str(); }

void tsgrec_string_free(char* s) { std::free(s); }

tsgrec_status tsgrec_config_new(tsgrec_config** out) {
  return Guard([&] {
    Require(out, "out");
    auto c = std::make_unique<tsgrec_config>();
    tsgrec::ResolveSeeds(c->value);
    *out = c.release();
  });
}

tsgrec_status tsgrec_config_load(const char* path, tsgrec_config** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new tsgrec_config{tsgrec::LoadConfig(path)};
  });
}

tsgrec_status tsgrec_config_set(tsgrec_config* config, const char* key, const char* value) {
  return Guard([&] {
    Require(config, "config");
    Require(key, "key");
    Require(value, "value");
    tsgrec::ApplyOverride(config->value, key, value);
  });
}

tsgrec_status tsgrec_config_to_json(const tsgrec_config* config, char** out_json) {
  return Guard([&] {
    Require(out_json, "out_json");
    *out_json = Dup(tsgrec::ConfigToJson(Config(config)));
  });
}

void tsgrec_config_free(tsgrec_config* config) { delete config; }

tsgrec_status tsgrec_dataset_generate(const tsgrec_config* config, tsgrec_dataset** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new tsgrec_dataset{tsgrec::GenerateScenario(tsgrec::ScenarioFromConfig(Config(config)))};
  });
}

tsgrec_status tsgrec_dataset_load(const char* dir, tsgrec_dataset** out) {
  return Guard([&] {
    Require(dir, "dir");
    Require(out, "out");
    *out = new tsgrec_dataset{tsgrec::ReadDataset(dir)};
  });
}

tsgrec_status tsgrec_dataset_save(const tsgrec_dataset* dataset, const char* dir, int overwrite) {
  return Guard([&] {
    Require(dataset, "dataset");
    Require(dir, "dir");
    const auto manifest = std::filesystem::path(dir) / "manifest.json";
    if (!overwrite && std::filesystem::exists(manifest)) {
      throw tsgrec::InvalidArgument("'" + manifest.string() +
                                    "' already exists (pass --overwrite to replace it)");
    }
    tsgrec::WriteDataset(dir, dataset->value);
  });
}

size_t tsgrec_dataset_size(const tsgrec_dataset* dataset) {
  return dataset == nullptr ? 0 : dataset->value.graphs.size();
}

tsgrec_status tsgrec_dataset_truth_subgraphs(const tsgrec_dataset* dataset, char** out_json) {
  return Guard([&] {
    Require(dataset, "dataset");
    Require(out_json, "out_json");
    std::vector<tsgrec::TechniqueSubgraph> subgraphs;
    for (const tsgrec::LabeledGraph& g : dataset->value.graphs) {
      subgraphs.push_back(tsgrec::TruthSubgraph(g));
    }
    *out_json = Dup(tsgrec::SubgraphsToJson(subgraphs));
  });
}

void tsgrec_dataset_free(tsgrec_dataset* dataset) { delete dataset; }

tsgrec_status tsgrec_graph_ingest(const char* events_path, tsgrec_graph** out,
                                  char** out_stats_json) {
  return Guard([&] {
    Require(events_path, "events_path");
    Require(out, "out");
    tsgrec::IngestResult r = tsgrec::ReadEventsFile(events_path);
    auto g = std::make_unique<tsgrec_graph>(tsgrec_graph{tsgrec::BuildGraph(r.events)});
    Emit(out_stats_json, StatsJson(r.stats).dump(1) + "\n");
    *out = g.release();
  });
}

tsgrec_status tsgrec_graph_load(const char* path, tsgrec_graph** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new tsgrec_graph{tsgrec::GraphFromJson(tsgrec::ReadTextFile(path))};
  });
}

tsgrec_status tsgrec_graph_to_json(const tsgrec_graph* graph, char** out_json) {
  return Guard([&] {
    Require(graph, "graph");
    Require(out_json, "out_json");
    *out_json = Dup(tsgrec::GraphToJson(graph->value));
  });
}

size_t tsgrec_graph_node_count(const tsgrec_graph* graph) {
  return graph == nullptr ? 0 : graph->value.node_count();
}

size_t tsgrec_graph_edge_count(const tsgrec_graph* graph) {
  return graph == nullptr ? 0 : graph->value.edge_count();
}

void tsgrec_graph_free(tsgrec_graph* graph) { delete graph; }

tsgrec_status tsgrec_models_new(tsgrec_models** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new tsgrec_models();
  });
}

tsgrec_status tsgrec_models_load_part(tsgrec_models* models, const char* part, const char* path) {
  return Guard([&] {
    Require(models, "models");
    Require(part, "part");
    Require(path, "path");
    const std::string p = part;
    std::string text;
    try {
      text = tsgrec::ReadTextFile(path);
    } catch (const tsgrec::DataError& e) {
      throw tsgrec::ModelError(e.what());
    }
    if (p == "encoder") {
      models->encoder = tsgrec::EncoderFromJson(text);
    } else if (p == "forest") {
      models->forest = tsgrec::ForestFromJson(text);
    } else if (p == "matcher") {
      models->matcher = tsgrec::MatcherFromJson(text);
    } else if (p == "exemplars") {
      models->exemplars = tsgrec::ExemplarsFromJson(text);
    } else {
      throw tsgrec::InvalidArgument("unknown model part '" + p + "'");
    }
  });
}

tsgrec_status tsgrec_models_save_part(const tsgrec_models* models, const char* part,
                                      const char* path, int overwrite) {
  return Guard([&] {
    Require(models, "models");
    Require(part, "part");
    Require(path, "path");
    const std::string p = part;
    std::string text;
    auto missing = [&] { return tsgrec::ModelError("model part '" + p + "' is not present"); };
    if (p == "encoder") {
      if (!models->encoder) throw missing();
      text = tsgrec::EncoderToJson(*models->encoder);
    } else if (p == "forest") {
      if (!models->forest) throw missing();
      text = tsgrec::ForestToJson(*models->forest);
    } else if (p == "matcher") {
      if (!models->matcher) throw missing();
      text = tsgrec::MatcherToJson(*models->matcher);
    } else if (p == "exemplars") {
      if (!models->exemplars) throw missing();
      text = tsgrec::ExemplarsToJson(*models->exemplars);
    } else {
      throw tsgrec::InvalidArgument("unknown model part '" + p + "'");
    }
    tsgrec::WriteTextFile(path, text, overwrite != 0);
  });
}

int tsgrec_models_has_part(const tsgrec_models* models, const char* part) {
  if (models == nullptr || part == nullptr) return 0;
  const std::string p = part;
  if (p == "encoder") return models->encoder.has_value();
  if (p == "forest") return models->forest.has_value();
  if (p == "matcher") return models->matcher.has_value();
  if (p == "exemplars") return models->exemplars.has_value();
  return 0;
}

void tsgrec_models_free(tsgrec_models* models) { delete models; }

tsgrec_status tsgrec_train_encoder(tsgrec_models* models, const tsgrec_config* config,
                                   const tsgrec_dataset* dataset, char** out_log_json) {
  return Guard([&] {
    Require(models, "models");
    Require(dataset, "dataset");
    tsgrec::TrainingTrace trace;
    models->encoder = tsgrec::FitEncoder(dataset->value, Config(config), &trace);
    Emit(out_log_json, json{{"stage", "train-encoder"},
                            {"epochs", trace.losses.size()},
                            {"initial_loss", trace.losses.empty() ? json(nullptr) : json(trace.losses.front())},
                            {"final_loss", trace.losses.empty() ? json(nullptr) : json(trace.losses.back())},
                            {"node_type_accuracy", trace.final_accuracy},
                            {"losses", trace.losses}}
                           .dump(1) + "\n");
  });
}

tsgrec_status tsgrec_fit_noi(tsgrec_models* models, const tsgrec_config* config,
                             const tsgrec_dataset* dataset, char** out_metrics_json) {
  return Guard([&] {
    Require(models, "models");
    Require(dataset, "dataset");
    if (!models->encoder) throw tsgrec::ModelError("encoder is not loaded; run train-encoder first");
    const tsgrec::PipelineConfig& c = Config(config);
    const std::vector<tsgrec::Matrix> embeddings = tsgrec::EmbedGraphs(dataset->value, *models->encoder);
    const tsgrec::LmoSplit split =
        tsgrec::SplitLeaveMaliciousOut(dataset->value, tsgrec::StageSeed(c, "split"));
    tsgrec::IsolationForest forest = tsgrec::FitNoiForest(dataset->value, embeddings, split, c);
    const tsgrec::NoiMetrics metrics =
        tsgrec::EvaluateNoiSplit(dataset->value, embeddings, split, forest, c);
    models->forest = std::move(forest);
    Emit(out_metrics_json, tsgrec::NoiMetricsToJson(metrics));
  });
}

tsgrec_status tsgrec_detect_noi(const tsgrec_models* models, const tsgrec_config* config,
                                const tsgrec_graph* graph, char** out_report_json) {
  return Guard([&] {
    Require(models, "models");
    Require(graph, "graph");
    Require(out_report_json, "out_report_json");
    if (!models->encoder) throw tsgrec::ModelError("encoder is not loaded");
    if (!models->forest) throw tsgrec::ModelError("NOI forest is not loaded");
    const tsgrec::Matrix e = tsgrec::ExtractEmbeddings(*models->encoder, graph->value,
                                                       tsgrec::InitFeatures(graph->value));
    *out_report_json =
        Dup(tsgrec::NoiReportToJson(tsgrec::DetectNois(graph->value, e, Config(config).noi, *models->forest)));
  });
}

tsgrec_status tsgrec_sample(const tsgrec_models* models, const tsgrec_config* config,
                            const tsgrec_graph* graph, char** out_subgraphs_json) {
  return Guard([&] {
    Require(models, "models");
    Require(graph, "graph");
    Require(out_subgraphs_json, "out_subgraphs_json");
    if (!models->encoder) throw tsgrec::ModelError("encoder is not loaded");
    if (!models->forest) throw tsgrec::ModelError("NOI forest is not loaded");
    const tsgrec::Matrix e = tsgrec::ExtractEmbeddings(*models->encoder, graph->value,
                                                       tsgrec::InitFeatures(graph->value));
    *out_subgraphs_json = Dup(tsgrec::SubgraphsToJson(
        tsgrec::SampleGraph(graph->value, e, *models->forest, Config(config))));
  });
}

tsgrec_status tsgrec_train_matcher(tsgrec_models* models, const tsgrec_config* config,
                                   const tsgrec_dataset* dataset, char** out_log_json) {
  return Guard([&] {
    Require(models, "models");
    Require(dataset, "dataset");
    tsgrec::MatcherFit fit = tsgrec::FitMatcher(dataset->value, Config(config));
    json exemplars = json::array();
    for (const tsgrec::Exemplar& e : fit.exemplars.entries) {
      exemplars.push_back(json{{"technique", e.label.technique}, {"tactic", e.label.tactic}});
    }
    const std::string log =
        json{{"stage", "train-matcher"},
             {"epochs", fit.trace.losses.size()},
             {"triplets", fit.trace.triplets},
             {"skipped_classes", fit.trace.skipped_classes},
             {"initial_loss", fit.trace.losses.empty() ? json(nullptr) : json(fit.trace.losses.front())},
             {"final_loss", fit.trace.losses.empty() ? json(nullptr) : json(fit.trace.losses.back())},
             {"model_hash", tsgrec::HexHash(fit.model.ContentHash())},
             {"exemplars", exemplars},
             {"losses", fit.trace.losses}}
            .dump(1) + "\n";
    models->matcher = std::move(fit.model);
    models->exemplars = std::move(fit.exemplars);
    Emit(out_log_json, log);
  });
}

tsgrec_status tsgrec_recognize(const tsgrec_models* models, const tsgrec_config* config,
                               const char* subgraphs_json, char** out_report_json) {
  return Guard([&] {
    Require(models, "models");
    Require(subgraphs_json, "subgraphs_json");
    Require(out_report_json, "out_report_json");
    const tsgrec::TrainedModels t = Bundle(models, false);
    const json probe = json::parse(subgraphs_json, nullptr, false);
    if (probe.is_discarded()) throw tsgrec::DataError("query is not valid JSON");
    std::vector<tsgrec::TechniqueSubgraph> queries;
    if (probe.is_object() && probe.value("kind", "") == "subgraph") {
      queries.push_back(tsgrec::SubgraphFromJson(subgraphs_json));
    } else {
      queries = tsgrec::SubgraphsFromJson(subgraphs_json);
    }
    json doc{{"format_version", tsgrec::kFormatVersion}, {"kind", "recognition_report"}};
    doc["results"] = json::array();
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const tsgrec::Recognition r =
          tsgrec::Recognize(queries[i], t.exemplars, t.matcher, Config(config).unknown_threshold);
      json entry = json::parse(tsgrec::RecognitionToJson(r, queries[i].seed));
      entry.erase("format_version");
      entry.erase("kind");
      entry["index"] = i;
      doc["results"].push_back(std::move(entry));
    }
    *out_report_json = Dup(doc.dump(1) + "\n");
  });
}

tsgrec_status tsgrec_add_exemplar(tsgrec_models* models, const char* subgraph_json) {
  return Guard([&] {
    Require(models, "models");
    Require(subgraph_json, "subgraph_json");
    if (!models->matcher || !models->exemplars) {
      throw tsgrec::ModelError("matcher and exemplars must be loaded before adding an exemplar");
    }
    tsgrec::TechniqueSubgraph s = tsgrec::SubgraphFromJson(subgraph_json);
    if (!s.label) throw tsgrec::DataError("a new exemplar needs a label");
    const tsgrec::TechniqueLabel label = *s.label;
    tsgrec::AddExemplar(*models->exemplars, *models->matcher, label, std::move(s));
  });
}

tsgrec_status tsgrec_evaluate(const tsgrec_models* models, const tsgrec_config* config,
                              const tsgrec_dataset* dataset, const char* mode,
                              char** out_report_json, char** out_table) {
  return Guard([&] {
    Require(models, "models");
    Require(dataset, "dataset");
    Require(mode, "mode");
    std::vector<tsgrec::EvalMode> modes;
    if (std::string(mode) == "all") {
      modes.assign(tsgrec::kAllModes.begin(), tsgrec::kAllModes.end());
    } else {
      modes.push_back(tsgrec::ParseEvalMode(mode));
    }
    bool need_detector = false;
    for (tsgrec::EvalMode m : modes) need_detector |= m == tsgrec::EvalMode::kSampledGraph;
    const tsgrec::TrainedModels t = Bundle(models, need_detector);
    std::vector<tsgrec::EndToEndReport> reports;
    for (tsgrec::EvalMode m : modes) {
      reports.push_back(tsgrec::EvaluateEndToEnd(dataset->value, m, t, Config(config)));
    }
    Emit(out_report_json, tsgrec::EndToEndToJson(reports));
    Emit(out_table, Table(reports));
  });
}

tsgrec_status tsgrec_baseline(const char* events_path, const char* blacklist_path,
                              char** out_alerts_jsonl, char** out_stats_json) {
  return Guard([&] {
    Require(events_path, "events_path");
    tsgrec::IngestResult r = tsgrec::ReadEventsFile(events_path, tsgrec::Vocabulary::kBaseline);
    tsgrec::Blacklist blacklist;
    if (blacklist_path != nullptr) blacklist = tsgrec::LoadBlacklist(blacklist_path);
    tsgrec::RuleEngine engine(std::move(blacklist));
    const std::vector<tsgrec::Alert> alerts = engine.Run(r.events);
    std::map<std::string, std::size_t> per_tactic;
    for (const tsgrec::Alert& a : alerts) ++per_tactic[a.tactic];
    Emit(out_alerts_jsonl, tsgrec::AlertsToJsonl(alerts));
    Emit(out_stats_json, json{{"ingest", StatsJson(r.stats)},
                              {"alerts", alerts.size()},
                              {"per_tactic", per_tactic}}
                             .dump(1) + "\n");
  });
}

tsgrec_status tsgrec_default_blacklist(char** out_text) {
  return Guard([&] {
    Require(out_text, "out_text");
    *out_text = Dup(tsgrec::DefaultBlacklistText());
  });
}

tsgrec_status tsgrec_killchain(const char* tactic, char** out_json) {
  return Guard([&] {
    Require(tactic, "tactic");
    Require(out_json, "out_json");
    *out_json = Dup(json(tsgrec::MapToKillChain(tactic)).dump() + "\n");
  });
}

}  // extern "C"
