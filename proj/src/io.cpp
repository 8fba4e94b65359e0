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

#include "tsgrec/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "tsgrec/error.hpp"

namespace tsgrec {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kMaxExamples = 5;

// Raised by the event parser with a short reason code for IngestStats.
struct EventReject : DataError {
  EventReject(std::string reason_code, const std::string& what)
      : DataError(what), reason(std::move(reason_code)) {}
  std::string reason;
};

template <typename E>
json ParseJson(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw E(what + " is not valid JSON: " + e.what());
  }
}

// Field access with typed errors of class E.
template <typename E>
const json& Field(const json& obj, const char* key, const std::string& what) {
  if (!obj.is_object()) throw E(what + ": expected a JSON object");
  auto it = obj.find(key);
  if (it == obj.end()) throw E(what + ": missing field '" + key + "'");
  return *it;
}

template <typename T, typename E>
T Get(const json& obj, const char* key, const std::string& what) {
  const json& v = Field<E>(obj, key, what);
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw E("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw E("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw E("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw E("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw E(what + ": field '" + key + "' has the wrong type");
  }
}

template <typename E>
void CheckHeader(const json& doc, const std::string& kind, const std::string& what) {
  const int version = Get<int, E>(doc, "format_version", what);
  if (version != kFormatVersion) {
    throw E(what + ": format_version " + std::to_string(version) + " is not supported (expected " +
            std::to_string(kFormatVersion) + ")");
  }
  const std::string found = Get<std::string, E>(doc, "kind", what);
  if (found != kind) throw E(what + ": kind '" + found + "' where '" + kind + "' was expected");
}

json Header(const std::string& kind) {
  return json{{"format_version", kFormatVersion}, {"kind", kind}};
}

json MatrixJson(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", json(std::vector<double>(m.data().begin(), m.data().end()))}};
}

template <typename E>
Matrix MatrixFrom(const json& j, const std::string& what) {
  const auto rows = Get<std::size_t, E>(j, "rows", what);
  const auto cols = Get<std::size_t, E>(j, "cols", what);
  const json& data = Field<E>(j, "data", what);
  if (!data.is_array() || data.size() != rows * cols) {
    throw E(what + ": matrix data does not hold rows x cols numbers");
  }
  std::vector<double> values;
  values.reserve(data.size());
  for (const json& v : data) {
    if (!v.is_number()) throw E(what + ": matrix entry is not a number");
    values.push_back(v.get<double>());
  }
  return Matrix(rows, cols, std::move(values));
}

json AttrsJson(const Attributes& attrs) {
  json out = json::object();
  for (const auto& [k, v] : attrs) out[k] = v;
  return out;
}

template <typename E>
Attributes AttrsFrom(const json& j, const std::string& what) {
  if (!j.is_object()) throw E(what + ": attrs must be an object of strings");
  Attributes out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw E(what + ": attribute '" + k + "' is not a string");
    out.emplace(k, v.template get<std::string>());
  }
  return out;
}

json GraphBody(const ProvenanceGraph& g) {
  json nodes = json::array();
  for (const EntityNode& n : g.nodes()) {
    nodes.push_back(json{{"id", n.id}, {"type", std::string(ToString(n.type))}, {"attrs", AttrsJson(n.attrs)}});
  }
  json edges = json::array();
  for (const Edge& e : g.edges()) {
    edges.push_back(json{{"src", g.node(e.src).id},
                         {"dst", g.node(e.dst).id},
                         {"type", e.type.value()},
                         {"operation", std::string(e.type.operation())},
                         {"ts", e.timestamp}});
  }
  return json{{"nodes", nodes}, {"edges", edges}};
}

template <typename E>
ProvenanceGraph GraphFrom(const json& doc, const std::string& what) {
  const json& nodes = Field<E>(doc, "nodes", what);
  const json& edges = Field<E>(doc, "edges", what);
  if (!nodes.is_array() || !edges.is_array()) throw E(what + ": nodes and edges must be arrays");
  std::vector<EntityNode> out_nodes;
  std::unordered_map<std::string, std::size_t> index;
  try {
    for (const json& n : nodes) {
      EntityNode node{Get<std::string, E>(n, "id", what),
                      ParseEntityType(Get<std::string, E>(n, "type", what)),
                      n.contains("attrs") ? AttrsFrom<E>(n["attrs"], what) : Attributes{}};
      if (!index.emplace(node.id, out_nodes.size()).second) {
        throw E(what + ": duplicate node id '" + node.id + "'");
      }
      out_nodes.push_back(std::move(node));
    }
    std::vector<Edge> out_edges;
    for (const json& e : edges) {
      const std::string src = Get<std::string, E>(e, "src", what);
      const std::string dst = Get<std::string, E>(e, "dst", what);
      auto s = index.find(src), d = index.find(dst);
      if (s == index.end() || d == index.end()) {
        throw E(what + ": edge endpoint '" + (s == index.end() ? src : dst) + "' is not a node");
      }
      out_edges.push_back(
          Edge{s->second, d->second, EdgeTypeId(Get<int, E>(e, "type", what)), Get<std::int64_t, E>(e, "ts", what)});
    }
    return ProvenanceGraph(std::move(out_nodes), std::move(out_edges));
  } catch (const E&) {
    throw;
  } catch (const Error& err) {
    throw E(what + ": " + err.what());
  }
}

json SubgraphBody(const TechniqueSubgraph& s) {
  json body = GraphBody(s.graph);
  body["seed"] = s.seed;
  body["nois"] = s.nois;
  body["features"] = MatrixJson(s.features);
  body["label"] = s.label ? json{{"technique", s.label->technique}, {"tactic", s.label->tactic}}
                          : json(nullptr);
  return body;
}

template <typename E>
TechniqueSubgraph SubgraphFrom(const json& j, const std::string& what) {
  TechniqueSubgraph s;
  s.graph = GraphFrom<E>(j, what);
  s.seed = Get<std::string, E>(j, "seed", what);
  const json& nois = Field<E>(j, "nois", what);
  if (!nois.is_array()) throw E(what + ": nois must be an array");
  for (const json& n : nois) {
    if (!n.is_string()) throw E(what + ": NOI ids must be strings");
    if (!s.graph.find(n.get<std::string>())) {
      throw E(what + ": NOI '" + n.get<std::string>() + "' is not a node");
    }
    s.nois.push_back(n.get<std::string>());
  }
  s.features = MatrixFrom<E>(Field<E>(j, "features", what), what);
  if (s.features.rows() != s.graph.node_count() || s.features.cols() != kFeatureWidth) {
    throw E(what + ": features must be nodes x 42");
  }
  const json& label = Field<E>(j, "label", what);
  if (!label.is_null()) {
    s.label = TechniqueLabel{Get<std::string, E>(label, "technique", what),
                             Get<std::string, E>(label, "tactic", what)};
  }
  return s;
}

json ParamsJson(const ParameterSet& params) {
  json out = json::array();
  for (const Parameter& p : params) out.push_back(json{{"name", p.name}, {"value", MatrixJson(p.value)}});
  return out;
}

ParameterSet ParamsFrom(const json& j, const std::string& what) {
  if (!j.is_array()) throw ModelError(what + ": parameters must be an array");
  ParameterSet params;
  for (const json& p : j) {
    const std::string name = Get<std::string, ModelError>(p, "name", what);
    if (params.contains(name)) throw ModelError(what + ": duplicate parameter '" + name + "'");
    params.Add(name, MatrixFrom<ModelError>(Field<ModelError>(p, "value", what), what));
  }
  return params;
}

std::uint64_t HashText(const std::string& text) {
  Fnv1a h;
  h.Update(std::string_view(text));
  return h.value();
}

std::string Checkpoint(const std::string& kind, const json& payload) {
  json doc = Header(kind);
  doc["content_hash"] = HexHash(HashText(payload.dump()));
  doc["payload"] = payload;
  return doc.dump() + "\n";
}

json OpenCheckpoint(std::string_view text, const std::string& kind) {
  const std::string what = kind + " checkpoint";
  const json doc = ParseJson<ModelError>(text, what);
  CheckHeader<ModelError>(doc, kind, what);
  const std::string stored = Get<std::string, ModelError>(doc, "content_hash", what);
  const json& payload = Field<ModelError>(doc, "payload", what);
  if (HexHash(HashText(payload.dump())) != stored) {
    throw ModelError(what + ": content hash mismatch (file is corrupt or was edited)");
  }
  return payload;
}

json HanJson(const HanConfig& c) {
  return json{{"dim", c.dim},
              {"leaky_slope", c.leaky_slope},
              {"metapaths", std::vector<bool>(c.metapaths.begin(), c.metapaths.end())},
              {"log1p", c.log1p}};
}

HanConfig HanFrom(const json& j, const std::string& what) {
  HanConfig c;
  c.dim = Get<std::size_t, ModelError>(j, "dim", what);
  c.leaky_slope = Get<double, ModelError>(j, "leaky_slope", what);
  const json& m = Field<ModelError>(j, "metapaths", what);
  if (!m.is_array() || m.size() != kNumMetaPaths) throw ModelError(what + ": metapaths must hold 4 booleans");
  for (std::size_t i = 0; i < kNumMetaPaths; ++i) {
    if (!m[i].is_boolean()) throw ModelError(what + ": metapaths must hold 4 booleans");
    c.metapaths[i] = m[i].get<bool>();
  }
  c.log1p = Get<bool, ModelError>(j, "log1p", what);
  return c;
}

json MatcherConfigJson(const MatcherConfig& c) {
  return json{{"han", HanJson(c.han)},
              {"margin", c.margin},
              {"distance", std::string(ToString(c.distance))},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"anchor_passes", c.anchor_passes},
              {"seed", c.seed}};
}

MatcherConfig MatcherConfigFrom(const json& j, const std::string& what) {
  MatcherConfig c;
  c.han = HanFrom(Field<ModelError>(j, "han", what), what);
  c.margin = Get<double, ModelError>(j, "margin", what);
  try {
    c.distance = ParseDistanceKind(Get<std::string, ModelError>(j, "distance", what));
  } catch (const ModelError&) {
    throw;
  } catch (const Error& e) {
    throw ModelError(what + ": " + e.what());
  }
  c.epochs = Get<int, ModelError>(j, "epochs", what);
  c.learning_rate = Get<double, ModelError>(j, "learning_rate", what);
  c.anchor_passes = Get<int, ModelError>(j, "anchor_passes", what);
  c.seed = Get<std::uint64_t, ModelError>(j, "seed", what);
  return c;
}

json RankingJson(const std::vector<RankedClass>& ranking) {
  json out = json::array();
  for (const RankedClass& r : ranking) {
    out.push_back(json{{"technique", r.label.technique}, {"tactic", r.label.tactic}, {"distance", r.distance}});
  }
  return out;
}

std::vector<RankedClass> RankingFrom(const json& j, const std::string& what) {
  if (!j.is_array()) throw DataError(what + ": ranking must be an array");
  std::vector<RankedClass> out;
  for (const json& r : j) {
    out.push_back(RankedClass{TechniqueLabel{Get<std::string, DataError>(r, "technique", what),
                                             Get<std::string, DataError>(r, "tactic", what)},
                              Get<double, DataError>(r, "distance", what)});
  }
  return out;
}

json RecognitionMetricsJson(const RecognitionMetrics& m) {
  return json{{"acc", m.acc}, {"top3_acc", m.top3_acc}, {"tactic_acc", m.tactic_acc}, {"count", m.count}};
}

json SamplingJson(const SamplingMetrics& m) {
  auto defined = [](bool ok, double v) { return ok ? json(v) : json(nullptr); };
  return json{{"precision", defined(m.precision_defined, m.precision)},
              {"coverage", defined(m.precision_defined, m.coverage)},
              {"tpr", defined(m.tpr_defined, m.tpr)},
              {"far", defined(m.far_defined, m.far)},
              {"sampled", m.sampled},
              {"truth", m.truth},
              {"correct", m.correct}};
}

SamplingMetrics SamplingFrom(const json& j, const std::string& what) {
  SamplingMetrics m;
  auto read = [&](const char* key, double& out, bool& defined) {
    const json& v = Field<DataError>(j, key, what);
    defined = !v.is_null();
    if (defined) out = Get<double, DataError>(j, key, what);
  };
  bool unused = false;
  read("precision", m.precision, m.precision_defined);
  read("coverage", m.coverage, unused);
  read("tpr", m.tpr, m.tpr_defined);
  read("far", m.far, m.far_defined);
  m.sampled = Get<std::size_t, DataError>(j, "sampled", what);
  m.truth = Get<std::size_t, DataError>(j, "truth", what);
  m.correct = Get<std::size_t, DataError>(j, "correct", what);
  return m;
}

std::vector<std::string> StringList(const json& j, const std::string& what) {
  if (!j.is_array()) throw DataError(what + ": expected an array of strings");
  std::vector<std::string> out;
  for (const json& v : j) {
    if (!v.is_string()) throw DataError(what + ": expected an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string SafeFileName(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out;
}

}  // namespace

std::string HexHash(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

// ---- event logs --------------------------------------------------------

Event ParseEventLine(std::string_view line, Vocabulary vocabulary) {
  json j;
  try {
    j = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw EventReject("malformed_json", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw EventReject("malformed_json", "event must be a JSON object");
  auto str = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end()) throw EventReject("missing_field", std::string("missing field '") + key + "'");
    if (!it->is_string()) throw EventReject("bad_field_type", std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
  };
  Event ev;
  ev.subject_id = str("subject_id");
  ev.operation = str("operation");
  ev.object_id = str("object_id");
  const std::string subject_type = str("subject_type");
  const std::string object_type = str("object_type");
  if (ev.subject_id.empty() || ev.object_id.empty()) {
    throw EventReject("bad_field_type", "entity identifiers must be non-empty");
  }
  try {
    ev.subject_type = ParseEntityType(subject_type);
    ev.object_type = ParseEntityType(object_type);
  } catch (const DataError& e) {
    throw EventReject("unknown_entity_type", e.what());
  }
  auto ts = j.find("ts");
  if (ts == j.end()) throw EventReject("missing_field", "missing field 'ts'");
  if (!ts->is_number_integer()) throw EventReject("bad_field_type", "field 'ts' must be an integer");
  ev.timestamp = ts->get<std::int64_t>();
  if (auto attrs = j.find("attrs"); attrs != j.end() && !attrs->is_null()) {
    if (!attrs->is_object()) throw EventReject("bad_field_type", "field 'attrs' must be an object");
    for (const auto& [k, v] : attrs->items()) {
      if (!v.is_string()) throw EventReject("bad_field_type", "attribute '" + k + "' must be a string");
      ev.attrs.emplace(k, v.get<std::string>());
    }
  }
  const bool baseline_only = vocabulary == Vocabulary::kBaseline &&
                             ev.subject_type == EntityType::kProcess &&
                             ev.object_type == EntityType::kFile &&
                             (ev.operation == "load" || ev.operation == "execute");
  if (baseline_only) return ev;
  try {
    EdgeTypeOf(ev.subject_type, ev.operation, ev.object_type);
  } catch (const DataError& e) {
    throw EventReject("unknown_operation", e.what());
  }
  return ev;
}

std::string EventToJsonLine(const Event& ev) {
  json j{{"subject_id", ev.subject_id},
         {"subject_type", std::string(ToString(ev.subject_type))},
         {"operation", ev.operation},
         {"object_id", ev.object_id},
         {"object_type", std::string(ToString(ev.object_type))},
         {"ts", ev.timestamp}};
  if (!ev.attrs.empty()) j["attrs"] = AttrsJson(ev.attrs);
  return j.dump();
}

IngestResult ReadEventsJsonl(std::istream& in, Vocabulary vocabulary) {
  IngestResult result;
  std::string line;
  std::size_t number = 0;
  std::unordered_map<std::string, EntityType> seen;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.stats.lines;
    try {
      Event ev = ParseEventLine(line, vocabulary);
      for (const auto& [id, type] : {std::pair{ev.subject_id, ev.subject_type},
                                     std::pair{ev.object_id, ev.object_type}}) {
        auto [it, inserted] = seen.emplace(id, type);
        if (!inserted && it->second != type) {
          throw EventReject("identifier_collision",
                            "'" + id + "' seen as " + std::string(ToString(it->second)) + " and " +
                                std::string(ToString(type)));
        }
      }
      result.events.push_back(std::move(ev));
      ++result.stats.accepted;
    } catch (const EventReject& e) {
      ++result.stats.rejected;
      ++result.stats.reasons[e.reason];
      if (result.stats.examples.size() < kMaxExamples) {
        result.stats.examples.push_back("line " + std::to_string(number) + ": " + e.what());
      }
    }
  }
  return result;
}

IngestResult ReadEventsFile(const std::string& path, Vocabulary vocabulary) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open event log '" + path + "'");
  return ReadEventsJsonl(in, vocabulary);
}

void WriteEventsJsonl(std::ostream& out, std::span<const Event> events) {
  for (const Event& ev : events) out << EventToJsonLine(ev) << '\n';
}

// ---- graphs and subgraphs ----------------------------------------------

std::string GraphToJson(const ProvenanceGraph& graph) {
  json doc = Header("graph");
  doc.update(GraphBody(graph));
  return doc.dump() + "\n";
}

ProvenanceGraph GraphFromJson(std::string_view text) {
  const json doc = ParseJson<DataError>(text, "graph file");
  CheckHeader<DataError>(doc, "graph", "graph file");
  return GraphFrom<DataError>(doc, "graph file");
}

std::string SubgraphToJson(const TechniqueSubgraph& subgraph) {
  json doc = Header("subgraph");
  doc.update(SubgraphBody(subgraph));
  return doc.dump() + "\n";
}

TechniqueSubgraph SubgraphFromJson(std::string_view text) {
  const json doc = ParseJson<DataError>(text, "subgraph file");
  CheckHeader<DataError>(doc, "subgraph", "subgraph file");
  return SubgraphFrom<DataError>(doc, "subgraph file");
}

std::string SubgraphsToJson(std::span<const TechniqueSubgraph> subgraphs) {
  json doc = Header("subgraphs");
  doc["items"] = json::array();
  for (const TechniqueSubgraph& s : subgraphs) doc["items"].push_back(SubgraphBody(s));
  return doc.dump() + "\n";
}

std::vector<TechniqueSubgraph> SubgraphsFromJson(std::string_view text) {
  const json doc = ParseJson<DataError>(text, "subgraph bundle");
  CheckHeader<DataError>(doc, "subgraphs", "subgraph bundle");
  const json& items = Field<DataError>(doc, "items", "subgraph bundle");
  if (!items.is_array()) throw DataError("subgraph bundle: items must be an array");
  std::vector<TechniqueSubgraph> out;
  for (const json& item : items) out.push_back(SubgraphFrom<DataError>(item, "subgraph bundle"));
  return out;
}

// ---- checkpoints -------------------------------------------------------

std::string EncoderToJson(const GnnEncoder& encoder) {
  const EncoderConfig& c = encoder.config();
  json payload{{"config",
                {{"layers", c.layers},
                 {"hidden", c.hidden},
                 {"epochs", c.epochs},
                 {"learning_rate", c.learning_rate},
                 {"seed", c.seed},
                 {"log1p", c.log1p},
                 {"leaky_slope", c.leaky_slope}}},
               {"parameters", ParamsJson(encoder.parameters())}};
  return Checkpoint("encoder", payload);
}

GnnEncoder EncoderFromJson(std::string_view text) {
  const std::string what = "encoder checkpoint";
  const json payload = OpenCheckpoint(text, "encoder");
  const json& cj = Field<ModelError>(payload, "config", what);
  EncoderConfig c;
  c.layers = Get<int, ModelError>(cj, "layers", what);
  c.hidden = Get<std::size_t, ModelError>(cj, "hidden", what);
  c.epochs = Get<int, ModelError>(cj, "epochs", what);
  c.learning_rate = Get<double, ModelError>(cj, "learning_rate", what);
  c.seed = Get<std::uint64_t, ModelError>(cj, "seed", what);
  c.log1p = Get<bool, ModelError>(cj, "log1p", what);
  c.leaky_slope = Get<double, ModelError>(cj, "leaky_slope", what);
  ParameterSet params = ParamsFrom(Field<ModelError>(payload, "parameters", what), what);
  if (c.layers < 1 || params.size() != static_cast<std::size_t>(c.layers) + 1) {
    throw ModelError(what + ": expected " + std::to_string(c.layers + 1) + " parameters");
  }
  std::vector<Matrix> layers;
  for (int t = 0; t < c.layers; ++t) {
    const std::string name = "W" + std::to_string(t);
    if (!params.contains(name)) throw ModelError(what + ": missing parameter " + name);
    layers.push_back(params.at(name).value);
  }
  if (!params.contains("classifier")) throw ModelError(what + ": missing classifier");
  try {
    GnnEncoder encoder(c, std::move(layers), params.at("classifier").value);
    if (encoder.input_width() != kFeatureWidth) throw ModelError(what + ": input width must be 42");
    return encoder;
  } catch (const ModelError&) {
    throw;
  } catch (const Error& e) {
    throw ModelError(what + ": " + e.what());
  }
}

std::string ForestToJson(const IsolationForest& forest) {
  json trees = json::array();
  for (const IsolationTree& t : forest.trees()) {
    json nodes = json::array();
    for (const IsolationNode& n : t.nodes()) {
      nodes.push_back(json::array({n.feature, n.split, n.left, n.right, n.size}));
    }
    trees.push_back(nodes);
  }
  json payload{{"sample_size", forest.sample_size()}, {"width", forest.width()}, {"trees", trees}};
  return Checkpoint("forest", payload);
}

IsolationForest ForestFromJson(std::string_view text) {
  const std::string what = "forest checkpoint";
  const json payload = OpenCheckpoint(text, "forest");
  const auto sample_size = Get<std::size_t, ModelError>(payload, "sample_size", what);
  const auto width = Get<std::size_t, ModelError>(payload, "width", what);
  const json& trees = Field<ModelError>(payload, "trees", what);
  if (!trees.is_array()) throw ModelError(what + ": trees must be an array");
  try {
    std::vector<IsolationTree> out;
    for (const json& t : trees) {
      if (!t.is_array()) throw ModelError(what + ": a tree must be an array of nodes");
      std::vector<IsolationNode> nodes;
      for (const json& n : t) {
        if (!n.is_array() || n.size() != 5 || !n[0].is_number_integer() || !n[1].is_number() ||
            !n[2].is_number_integer() || !n[3].is_number_integer() || !n[4].is_number_unsigned()) {
          throw ModelError(what + ": node must be [feature, split, left, right, size]");
        }
        IsolationNode node{n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(),
                           n[4].get<std::size_t>()};
        if (node.feature >= static_cast<int>(width)) throw ModelError(what + ": split feature out of range");
        nodes.push_back(node);
      }
      out.emplace_back(std::move(nodes));
    }
    return IsolationForest(std::move(out), sample_size, width);
  } catch (const ModelError&) {
    throw;
  } catch (const Error& e) {
    throw ModelError(what + ": " + e.what());
  }
}

std::string MatcherToJson(const SiameseModel& model) {
  json payload{{"config", MatcherConfigJson(model.config())},
               {"parameters", ParamsJson(model.parameters())},
               {"model_hash", HexHash(model.ContentHash())}};
  return Checkpoint("matcher", payload);
}

SiameseModel MatcherFromJson(std::string_view text) {
  const std::string what = "matcher checkpoint";
  const json payload = OpenCheckpoint(text, "matcher");
  MatcherConfig c = MatcherConfigFrom(Field<ModelError>(payload, "config", what), what);
  SiameseModel model(c, ParamsFrom(Field<ModelError>(payload, "parameters", what), what));
  if (HexHash(model.ContentHash()) != Get<std::string, ModelError>(payload, "model_hash", what)) {
    throw ModelError(what + ": model hash mismatch");
  }
  return model;
}

std::string ExemplarsToJson(const ExemplarSet& exemplars) {
  json entries = json::array();
  for (const Exemplar& e : exemplars.entries) {
    entries.push_back(json{{"technique", e.label.technique},
                           {"tactic", e.label.tactic},
                           {"embedding", e.embedding},
                           {"subgraph", SubgraphBody(e.subgraph)}});
  }
  json payload{{"model_hash", HexHash(exemplars.model_hash)}, {"entries", entries}};
  return Checkpoint("exemplars", payload);
}

ExemplarSet ExemplarsFromJson(std::string_view text) {
  const std::string what = "exemplar checkpoint";
  const json payload = OpenCheckpoint(text, "exemplars");
  ExemplarSet set;
  const std::string hash = Get<std::string, ModelError>(payload, "model_hash", what);
  try {
    std::size_t used = 0;
    set.model_hash = std::stoull(hash, &used, 16);
    if (used != hash.size()) throw ModelError("");
  } catch (const std::exception&) {
    throw ModelError(what + ": model_hash is not hexadecimal");
  }
  const json& entries = Field<ModelError>(payload, "entries", what);
  if (!entries.is_array()) throw ModelError(what + ": entries must be an array");
  for (const json& e : entries) {
    Exemplar ex;
    ex.label = TechniqueLabel{Get<std::string, ModelError>(e, "technique", what),
                              Get<std::string, ModelError>(e, "tactic", what)};
    const json& emb = Field<ModelError>(e, "embedding", what);
    if (!emb.is_array()) throw ModelError(what + ": embedding must be an array");
    for (const json& v : emb) {
      if (!v.is_number()) throw ModelError(what + ": embedding entry is not a number");
      ex.embedding.push_back(v.get<double>());
    }
    ex.subgraph = SubgraphFrom<ModelError>(Field<ModelError>(e, "subgraph", what), what);
    set.entries.push_back(std::move(ex));
  }
  return set;
}

// ---- reports -----------------------------------------------------------

std::string NoiReportToJson(const NoiReport& report) {
  json doc = Header("noi_report");
  doc["threshold"] = report.threshold;
  doc["flagged"] = report.flagged;
  doc["scores"] = json::array();
  for (const NoiScore& s : report.scores) doc["scores"].push_back(json{{"node", s.node_id}, {"score", s.score}});
  return doc.dump(1) + "\n";
}

NoiReport NoiReportFromJson(std::string_view text) {
  const std::string what = "NOI report";
  const json doc = ParseJson<DataError>(text, what);
  CheckHeader<DataError>(doc, "noi_report", what);
  NoiReport r;
  r.threshold = Get<double, DataError>(doc, "threshold", what);
  r.flagged = StringList(Field<DataError>(doc, "flagged", what), what);
  const json& scores = Field<DataError>(doc, "scores", what);
  if (!scores.is_array()) throw DataError(what + ": scores must be an array");
  for (const json& s : scores) {
    r.scores.push_back(NoiScore{Get<std::string, DataError>(s, "node", what), Get<double, DataError>(s, "score", what)});
  }
  return r;
}

std::string RecognitionToJson(const Recognition& recognition, const std::string& query) {
  json doc = Header("recognition");
  doc["query"] = query;
  doc["technique"] = recognition.technique;
  doc["tactic"] = recognition.tactic;
  doc["ranking"] = RankingJson(recognition.ranking);
  return doc.dump(1) + "\n";
}

std::string NoiMetricsToJson(const NoiMetrics& m) {
  json doc = Header("noi_metrics");
  doc.update(json{{"accuracy", m.accuracy},
                  {"precision", m.precision},
                  {"recall", m.recall},
                  {"f1", m.f1},
                  {"tp", m.tp},
                  {"fp", m.fp},
                  {"tn", m.tn},
                  {"fn", m.fn}});
  return doc.dump(1) + "\n";
}

std::string EndToEndToJson(std::span<const EndToEndReport> reports) {
  json doc = Header("evaluation");
  doc["modes"] = json::array();
  for (const EndToEndReport& r : reports) {
    json queries = json::array();
    for (const QueryResult& q : r.queries) {
      queries.push_back(json{{"graph", q.graph_id},
                             {"truth_technique", q.truth.technique},
                             {"truth_tactic", q.truth.tactic},
                             {"noi_overlap", q.noi_overlap},
                             {"technique", q.recognition.technique},
                             {"tactic", q.recognition.tactic},
                             {"ranking", RankingJson(q.recognition.ranking)}});
    }
    doc["modes"].push_back(json{{"mode", std::string(ToString(r.mode))},
                                {"metrics", RecognitionMetricsJson(r.metrics)},
                                {"sampling", r.sampling ? SamplingJson(*r.sampling) : json(nullptr)},
                                {"queries", queries}});
  }
  return doc.dump(1) + "\n";
}

std::vector<EndToEndReport> EndToEndFromJson(std::string_view text) {
  const std::string what = "evaluation report";
  const json doc = ParseJson<DataError>(text, what);
  CheckHeader<DataError>(doc, "evaluation", what);
  const json& modes = Field<DataError>(doc, "modes", what);
  if (!modes.is_array()) throw DataError(what + ": modes must be an array");
  std::vector<EndToEndReport> out;
  for (const json& m : modes) {
    EndToEndReport r;
    try {
      r.mode = ParseEvalMode(Get<std::string, DataError>(m, "mode", what));
    } catch (const InvalidArgument& e) {
      throw DataError(what + ": " + e.what());
    }
    const json& metrics = Field<DataError>(m, "metrics", what);
    r.metrics.acc = Get<double, DataError>(metrics, "acc", what);
    r.metrics.top3_acc = Get<double, DataError>(metrics, "top3_acc", what);
    r.metrics.tactic_acc = Get<double, DataError>(metrics, "tactic_acc", what);
    r.metrics.count = Get<std::size_t, DataError>(metrics, "count", what);
    const json& sampling = Field<DataError>(m, "sampling", what);
    if (!sampling.is_null()) r.sampling = SamplingFrom(sampling, what);
    const json& queries = Field<DataError>(m, "queries", what);
    if (!queries.is_array()) throw DataError(what + ": queries must be an array");
    for (const json& q : queries) {
      QueryResult qr;
      qr.graph_id = Get<std::string, DataError>(q, "graph", what);
      qr.truth = TechniqueLabel{Get<std::string, DataError>(q, "truth_technique", what),
                                Get<std::string, DataError>(q, "truth_tactic", what)};
      qr.noi_overlap = Get<std::size_t, DataError>(q, "noi_overlap", what);
      qr.recognition.technique = Get<std::string, DataError>(q, "technique", what);
      qr.recognition.tactic = Get<std::string, DataError>(q, "tactic", what);
      qr.recognition.ranking = RankingFrom(Field<DataError>(q, "ranking", what), what);
      r.queries.push_back(std::move(qr));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string AlertsToJsonl(std::span<const Alert> alerts) {
  std::string out;
  for (const Alert& a : alerts) {
    out += json{{"ts", a.ts}, {"tactic", a.tactic}, {"rule", a.rule}, {"subject", a.subject}, {"object", a.object}}
               .dump();
    out += '\n';
  }
  return out;
}

// ---- datasets ----------------------------------------------------------

void WriteDataset(const std::string& dir, const LabeledDataset& dataset) {
  fs::create_directories(fs::path(dir) / "graphs");
  fs::create_directories(fs::path(dir) / "events");
  json manifest = Header("dataset");
  manifest["graphs"] = json::array();
  for (const LabeledGraph& g : dataset.graphs) {
    const std::string file = "graphs/" + SafeFileName(g.id) + ".json";
    WriteTextFile((fs::path(dir) / file).string(), GraphToJson(g.graph), true);
    std::ostringstream events;
    WriteEventsJsonl(events, g.events);
    WriteTextFile((fs::path(dir) / "events" / (SafeFileName(g.id) + ".jsonl")).string(),
                  events.str(), true);
    manifest["graphs"].push_back(json{{"id", g.id},
                                      {"file", file},
                                      {"technique", g.label.technique},
                                      {"tactic", g.label.tactic},
                                      {"train", g.train},
                                      {"truth_nois", g.truth_nois},
                                      {"truth_nodes", g.truth_nodes}});
  }
  WriteTextFile((fs::path(dir) / "manifest.json").string(), manifest.dump(1) + "\n", true);
}

LabeledDataset ReadDataset(const std::string& dir) {
  const std::string what = "dataset manifest";
  const json manifest = ParseJson<DataError>(ReadTextFile((fs::path(dir) / "manifest.json").string()), what);
  CheckHeader<DataError>(manifest, "dataset", what);
  const json& graphs = Field<DataError>(manifest, "graphs", what);
  if (!graphs.is_array()) throw DataError(what + ": graphs must be an array");
  LabeledDataset out;
  for (const json& entry : graphs) {
    LabeledGraph g;
    g.id = Get<std::string, DataError>(entry, "id", what);
    g.label = TechniqueLabel{Get<std::string, DataError>(entry, "technique", what),
                             Get<std::string, DataError>(entry, "tactic", what)};
    g.train = Get<bool, DataError>(entry, "train", what);
    g.truth_nois = StringList(Field<DataError>(entry, "truth_nois", what), what);
    g.truth_nodes = StringList(Field<DataError>(entry, "truth_nodes", what), what);
    const std::string file = Get<std::string, DataError>(entry, "file", what);
    g.graph = GraphFromJson(ReadTextFile((fs::path(dir) / file).string()));
    for (const std::string& id : g.truth_nodes) {
      if (!g.graph.find(id)) throw DataError(what + ": truth node '" + id + "' missing from " + file);
    }
    for (const std::string& id : g.truth_nois) {
      if (!g.graph.find(id)) throw DataError(what + ": truth NOI '" + id + "' missing from " + file);
    }
    g.events = ToEvents(g.graph);
    out.graphs.push_back(std::move(g));
  }
  return out;
}

// ---- files -------------------------------------------------------------

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteTextFile(const std::string& path, std::string_view content, bool overwrite) {
  if (!overwrite && fs::exists(path)) {
    throw InvalidArgument("'" + path + "' already exists (pass --overwrite to replace it)");
  }
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write to '" + tmp + "' failed");
  }
  fs::rename(tmp, target);
}

}  // namespace tsgrec
