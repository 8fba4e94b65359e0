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

// Typed provenance graph built from (subject, operation, object) audit
// events.
//
// Edge types are numbered 1..21 in a fixed canonical order:
//   process-process   launch                                         1
//   process-file      create read write close delete enum            2..7
//   process-registry  open query enumerate modify close delete       8..13
//   process-socket    send receive retransmit copy connect
//                     disconnect accept reconnect                    14..21
// Feature columns downstream depend on this order.

#ifndef TSGREC_GRAPH_HPP_
#define TSGREC_GRAPH_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tsgrec {

enum class EntityType : std::uint8_t {
  kProcess = 0,
  kFile = 1,
  kRegistry = 2,
  kSocket = 3,
};

inline constexpr std::size_t kNumEntityTypes = 4;
inline constexpr int kNumEdgeTypes = 21;

std::string_view ToString(EntityType type);
// Throws DataError on an unknown name.
EntityType ParseEntityType(std::string_view name);

class EdgeTypeId {
 public:
  // Throws InvalidArgument outside 1..21.
  explicit EdgeTypeId(int value);

  int value() const { return value_; }
  // Zero-based column offset, 0..20.
  std::size_t index() const { return static_cast<std::size_t>(value_ - 1); }
  EntityType object_type() const;
  std::string_view operation() const;

  friend auto operator<=>(const EdgeTypeId&, const EdgeTypeId&) = default;

 private:
  int value_;
};

// Throws DataError naming the triple if the operation is unknown or not
// legal for the (subject, object) type pair.
EdgeTypeId EdgeTypeOf(EntityType subject, std::string_view operation,
                      EntityType object);

using Attributes = std::map<std::string, std::string>;

struct Event {
  std::string subject_id;
  EntityType subject_type = EntityType::kProcess;
  std::string operation;
  std::string object_id;
  EntityType object_type = EntityType::kFile;
  std::int64_t timestamp = 0;  // microseconds
  Attributes attrs;
};

struct EntityNode {
  std::string id;
  EntityType type;
  Attributes attrs;
};

struct Edge {
  std::size_t src;
  std::size_t dst;
  EdgeTypeId type;
  std::int64_t timestamp;
};

// Immutable once built. Nodes are stored sorted by identifier so that node
// indices do not depend on event order; edges keep event order.
class ProvenanceGraph {
 public:
  ProvenanceGraph() = default;
  // Validates edge endpoints and unique ids, then canonicalises node order.
  ProvenanceGraph(std::vector<EntityNode> nodes, std::vector<Edge> edges);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<EntityNode>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const EntityNode& node(std::size_t i) const { return nodes_[i]; }

  std::optional<std::size_t> find(std::string_view id) const;
  // Throws InvalidArgument for an unknown id.
  std::size_t index_of(std::string_view id) const;

  // Edge indices incident to node i.
  std::span<const std::size_t> in_edges(std::size_t i) const {
    return in_[i];
  }
  std::span<const std::size_t> out_edges(std::size_t i) const {
    return out_[i];
  }

  std::vector<std::size_t> NodesOfType(EntityType type) const;

 private:
  std::vector<EntityNode> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

// Merges entities by identifier: one node per distinct id, one edge per
// event. Throws DataError when an id is seen with two entity types or an
// event has an illegal operation.
ProvenanceGraph BuildGraph(std::span<const Event> events);

struct Degree {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t total() const { return in + out; }
  friend bool operator==(const Degree&, const Degree&) = default;
};

// Throws InvalidArgument for an unknown node.
Degree DegreeOf(const ProvenanceGraph& graph, std::string_view node_id);

// Disjoint union with node ids prefixed "<k>/" for the k-th graph.
ProvenanceGraph DisjointUnion(std::span<const ProvenanceGraph* const> graphs);

// Events reconstructed from edges, ordered by (timestamp, edge order).
std::vector<Event> ToEvents(const ProvenanceGraph& graph);

}  // namespace tsgrec

#endif  // TSGREC_GRAPH_HPP_
