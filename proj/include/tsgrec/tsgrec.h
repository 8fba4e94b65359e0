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

/*
 * C interface to the technique-recognition pipeline.
 *
 * Every function returns a tsgrec_status. On failure the message is kept
 * per thread and read with tsgrec_last_error(). Output strings are
 * NUL-terminated, heap-allocated, and released with tsgrec_string_free().
 * Handles are released with their *_free function; passing NULL to a free
 * function is a no-op.
 */

#ifndef TSGREC_TSGREC_H_
#define TSGREC_TSGREC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TSGREC_API __declspec(dllexport)
#else
#define TSGREC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tsgrec_status {
  TSGREC_OK = 0,
  TSGREC_INVALID_ARGUMENT = 1,
  TSGREC_DATA_ERROR = 2,
  TSGREC_MODEL_ERROR = 3,
  TSGREC_INTERNAL_ERROR = 4
} tsgrec_status;

typedef struct tsgrec_config tsgrec_config;
typedef struct tsgrec_dataset tsgrec_dataset;
typedef struct tsgrec_graph tsgrec_graph;
typedef struct tsgrec_models tsgrec_models;

TSGREC_API const char* tsgrec_version(void);
TSGREC_API const char* tsgrec_last_error(void);
TSGREC_API void tsgrec_string_free(char* s);

/* ---- configuration ---------------------------------------------------- */

TSGREC_API tsgrec_status tsgrec_config_new(tsgrec_config** out);
TSGREC_API tsgrec_status tsgrec_config_load(const char* path, tsgrec_config** out);
/* Dotted key, e.g. "encoder.hidden"; value is JSON or a bare string. */
TSGREC_API tsgrec_status tsgrec_config_set(tsgrec_config* config, const char* key,
                                           const char* value);
TSGREC_API tsgrec_status tsgrec_config_to_json(const tsgrec_config* config, char** out_json);
TSGREC_API void tsgrec_config_free(tsgrec_config* config);

/* ---- datasets --------------------------------------------------------- */

/* Synthetic suite from the scenario.* keys and the root seed. */
TSGREC_API tsgrec_status tsgrec_dataset_generate(const tsgrec_config* config,
                                                 tsgrec_dataset** out);
TSGREC_API tsgrec_status tsgrec_dataset_load(const char* dir, tsgrec_dataset** out);
/* Writes manifest.json, graphs/ and events/ (one JSON-lines log per graph). */
TSGREC_API tsgrec_status tsgrec_dataset_save(const tsgrec_dataset* dataset, const char* dir,
                                             int overwrite);
TSGREC_API size_t tsgrec_dataset_size(const tsgrec_dataset* dataset);
/* Ground-truth subgraphs of every graph as a subgraph bundle. */
TSGREC_API tsgrec_status tsgrec_dataset_truth_subgraphs(const tsgrec_dataset* dataset,
                                                        char** out_json);
TSGREC_API void tsgrec_dataset_free(tsgrec_dataset* dataset);

/* ---- graphs ----------------------------------------------------------- */

/* Builds a graph from a JSON-lines event log. Malformed events are rejected
 * and counted; `out_stats_json` (optional) receives the ingestion stats. */
TSGREC_API tsgrec_status tsgrec_graph_ingest(const char* events_path, tsgrec_graph** out,
                                             char** out_stats_json);
TSGREC_API tsgrec_status tsgrec_graph_load(const char* path, tsgrec_graph** out);
TSGREC_API tsgrec_status tsgrec_graph_to_json(const tsgrec_graph* graph, char** out_json);
TSGREC_API size_t tsgrec_graph_node_count(const tsgrec_graph* graph);
TSGREC_API size_t tsgrec_graph_edge_count(const tsgrec_graph* graph);
TSGREC_API void tsgrec_graph_free(tsgrec_graph* graph);

/* ---- models ----------------------------------------------------------- */

/* A bundle of optional parts: "encoder", "forest", "matcher", "exemplars". */
TSGREC_API tsgrec_status tsgrec_models_new(tsgrec_models** out);
TSGREC_API tsgrec_status tsgrec_models_load_part(tsgrec_models* models, const char* part,
                                                 const char* path);
TSGREC_API tsgrec_status tsgrec_models_save_part(const tsgrec_models* models, const char* part,
                                                 const char* path, int overwrite);
TSGREC_API int tsgrec_models_has_part(const tsgrec_models* models, const char* part);
TSGREC_API void tsgrec_models_free(tsgrec_models* models);

/* Trains the node-type encoder on the dataset's training graphs. */
TSGREC_API tsgrec_status tsgrec_train_encoder(tsgrec_models* models,
                                              const tsgrec_config* config,
                                              const tsgrec_dataset* dataset,
                                              char** out_log_json);
/* Leave-malicious-out split and forest fit; needs the encoder. Writes the
 * NOI metrics of the balanced test set. */
TSGREC_API tsgrec_status tsgrec_fit_noi(tsgrec_models* models, const tsgrec_config* config,
                                        const tsgrec_dataset* dataset,
                                        char** out_metrics_json);
TSGREC_API tsgrec_status tsgrec_detect_noi(const tsgrec_models* models,
                                           const tsgrec_config* config,
                                           const tsgrec_graph* graph, char** out_report_json);
/* NOI detection then lambda-DFS sampling; writes a subgraph bundle. */
TSGREC_API tsgrec_status tsgrec_sample(const tsgrec_models* models, const tsgrec_config* config,
                                       const tsgrec_graph* graph, char** out_subgraphs_json);
/* Trains the Siamese matcher and builds medoid exemplars. */
TSGREC_API tsgrec_status tsgrec_train_matcher(tsgrec_models* models,
                                              const tsgrec_config* config,
                                              const tsgrec_dataset* dataset,
                                              char** out_log_json);
/* Recognizes every subgraph of a bundle (or a single subgraph document). */
TSGREC_API tsgrec_status tsgrec_recognize(const tsgrec_models* models,
                                          const tsgrec_config* config,
                                          const char* subgraphs_json, char** out_report_json);
/* Adds one labeled subgraph as a new exemplar; the matcher is untouched. */
TSGREC_API tsgrec_status tsgrec_add_exemplar(tsgrec_models* models, const char* subgraph_json);
/* mode: "true", "sampled", "raw" or "all". `out_table` (optional) receives a
 * human-readable comparison table. */
TSGREC_API tsgrec_status tsgrec_evaluate(const tsgrec_models* models,
                                         const tsgrec_config* config,
                                         const tsgrec_dataset* dataset, const char* mode,
                                         char** out_report_json, char** out_table);

/* ---- rule baseline ---------------------------------------------------- */

/* Replays an event log through the state-transfer rules. `blacklist_path`
 * may be NULL for empty lists. Alerts are JSON lines. */
TSGREC_API tsgrec_status tsgrec_baseline(const char* events_path, const char* blacklist_path,
                                         char** out_alerts_jsonl, char** out_stats_json);
/* Blacklist matching the synthetic suite's artifacts, one entry per line. */
TSGREC_API tsgrec_status tsgrec_default_blacklist(char** out_text);
/* JSON array of Kill-Chain stages for an ATT&CK tactic. */
TSGREC_API tsgrec_status tsgrec_killchain(const char* tactic, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* TSGREC_TSGREC_H_ */
