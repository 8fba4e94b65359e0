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

// On-disk formats. Every document is JSON carrying "format_version" and
// "kind"; model checkpoints also carry a hex "content_hash" over their
// payload, checked on load. Data problems raise DataError, checkpoint
// problems raise ModelError.

#ifndef TSGREC_IO_HPP_
#define TSGREC_IO_HPP_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsgrec/features.hpp"
#include "tsgrec/graph.hpp"
#include "tsgrec/isolation_forest.hpp"
#include "tsgrec/matcher.hpp"
#include "tsgrec/pipeline.hpp"
#include "tsgrec/rules.hpp"
#include "tsgrec/sampling.hpp"
#include "tsgrec/scenario.hpp"

namespace tsgrec {

inline constexpr int kFormatVersion = 1;

// ---- event logs --------------------------------------------------------

// One JSON object per line:
//   {"subject_id", "subject_type", "operation", "object_id", "object_type",
//    "ts" (integer microseconds), "attrs" (optional string map)}
//
// kGraph accepts the 21 edge operations. kBaseline additionally accepts the
// process-file operations "load" and "execute", which the rule engine reads
// but which are not graph edges.
enum class Vocabulary { kGraph, kBaseline };

Event ParseEventLine(std::string_view line, Vocabulary vocabulary = Vocabulary::kGraph);
std::string EventToJsonLine(const Event& event);

struct IngestStats {
  std::size_t lines = 0;  // non-blank lines
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> reasons;  // reason -> count
  std::vector<std::string> examples;           // first few "line N: message"
};

struct IngestResult {
  std::vector<Event> events;
  IngestStats stats;
};

// Bad lines are rejected and counted, never silently dropped.
IngestResult ReadEventsJsonl(std::istream& in, Vocabulary vocabulary = Vocabulary::kGraph);
IngestResult ReadEventsFile(const std::string& path, Vocabulary vocabulary = Vocabulary::kGraph);
void WriteEventsJsonl(std::ostream& out, std::span<const Event> events);

// ---- graphs and subgraphs ----------------------------------------------

std::string GraphToJson(const ProvenanceGraph& graph);
ProvenanceGraph GraphFromJson(std::string_view text);

std::string SubgraphToJson(const TechniqueSubgraph& subgraph);
TechniqueSubgraph SubgraphFromJson(std::string_view text);
std::string SubgraphsToJson(std::span<const TechniqueSubgraph> subgraphs);
std::vector<TechniqueSubgraph> SubgraphsFromJson(std::string_view text);

// ---- checkpoints -------------------------------------------------------

std::string EncoderToJson(const GnnEncoder& encoder);
GnnEncoder EncoderFromJson(std::string_view text);

std::string ForestToJson(const IsolationForest& forest);
IsolationForest ForestFromJson(std::string_view text);

std::string MatcherToJson(const SiameseModel& model);
SiameseModel MatcherFromJson(std::string_view text);

std::string ExemplarsToJson(const ExemplarSet& exemplars);
ExemplarSet ExemplarsFromJson(std::string_view text);

// ---- reports -----------------------------------------------------------

std::string NoiReportToJson(const NoiReport& report);
NoiReport NoiReportFromJson(std::string_view text);
std::string RecognitionToJson(const Recognition& recognition, const std::string& query);
std::string NoiMetricsToJson(const NoiMetrics& metrics);
std::string EndToEndToJson(std::span<const EndToEndReport> reports);
std::vector<EndToEndReport> EndToEndFromJson(std::string_view text);
std::string AlertsToJsonl(std::span<const Alert> alerts);

// ---- datasets ----------------------------------------------------------

// <dir>/manifest.json, <dir>/graphs/<id>.json and <dir>/events/<id>.jsonl
// per graph. Reading uses the manifest and the graph files.
void WriteDataset(const std::string& dir, const LabeledDataset& dataset);
LabeledDataset ReadDataset(const std::string& dir);

// ---- files -------------------------------------------------------------

// Throws DataError when the file cannot be read.
std::string ReadTextFile(const std::string& path);
// Writes via a temporary file and rename. Throws InvalidArgument when the
// target exists and `overwrite` is false.
void WriteTextFile(const std::string& path, std::string_view content, bool overwrite);

std::string HexHash(std::uint64_t hash);

}  // namespace tsgrec

#endif  // TSGREC_IO_HPP_
