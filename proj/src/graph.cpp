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

#include "tsgrec/graph.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "tsgrec/error.hpp"

namespace tsgrec {

namespace {

struct EdgeTypeRow {
  EntityType object;
  std::string_view operation;
};

// Index i holds edge type i + 1.
constexpr std::array<EdgeTypeRow, kNumEdgeTypes> kEdgeTypes = {{
    {EntityType::kProcess, "launch"},
    {EntityType::kFile, "create"},
    {EntityType::kFile, "read"},
    {EntityType::kFile, "write"},
    {EntityType::kFile, "close"},
    {EntityType::kFile, "delete"},
    {EntityType::kFile, "enum"},
    {EntityType::kRegistry, "open"},
    {EntityType::kRegistry, "query"},
    {EntityType::kRegistry, "enumerate"},
    {EntityType::kRegistry, "modify"},
    {EntityType::kRegistry, "close"},
    {EntityType::kRegistry, "delete"},
    {EntityType::kSocket, "send"},
    {EntityType::kSocket, "receive"},
    {EntityType::kSocket, "retransmit"},
    {EntityType::kSocket, "copy"},
    {EntityType::kSocket, "connect"},
    {EntityType::kSocket, "disconnect"},
    {EntityType::kSocket, "accept"},
    {EntityType::kSocket, "reconnect"},
}};

}  // namespace

std::string_view ToString(EntityType type) {
  switch (type) {
    case EntityType::kProcess:
      return "process";
    case EntityType::kFile:
      return "file";
    case EntityType::kRegistry:
      return "registry";
    case EntityType::kSocket:
      return "socket";
  }
  return "unknown";
}

EntityType ParseEntityType(std::string_view name) {
  if (name == "process") return EntityType::kProcess;
  if (name == "file") return EntityType::kFile;
  if (name == "registry") return EntityType::kRegistry;
  if (name == "socket") return EntityType::kSocket;
  throw DataError("unknown entity type '" + std::string(name) + "'");
}

EdgeTypeId::EdgeTypeId(int value) : value_(value) {
  if (value < 1 || value > kNumEdgeTypes) {
    throw InvalidArgument("edge type id " + std::to_string(value) +
                          " outside 1..21");
  }
}

EntityType EdgeTypeId::object_type() const { return kEdgeTypes[index()].object; }

std::string_view EdgeTypeId::operation() const {
  return kEdgeTypes[index()].operation;
}

EdgeTypeId EdgeTypeOf(EntityType subject, std::string_view operation,
                      EntityType object) {
  if (subject == EntityType::kProcess) {
    for (std::size_t i = 0; i < kEdgeTypes.size(); ++i) {
      if (kEdgeTypes[i].object == object && kEdgeTypes[i].operation == operation) {
        return EdgeTypeId(static_cast<int>(i) + 1);
      }
    }
  }
  throw DataError("no edge type for (" + std::string(ToString(subject)) + ", " +
                  std::string(operation) + ", " + std::string(ToString(object)) +
                  ")");
}

ProvenanceGraph::ProvenanceGraph(std::vector<EntityNode> nodes,
                                 std::vector<Edge> edges) {
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return nodes[a].id < nodes[b].id;
  });
  std::vector<std::size_t> remap(nodes.size());
  nodes_.reserve(nodes.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    remap[order[k]] = k;
    nodes_.push_back(std::move(nodes[order[k]]));
    if (k > 0 && nodes_[k].id == nodes_[k - 1].id) {
      throw DataError("duplicate node id '" + nodes_[k].id + "'");
    }
    index_.emplace(nodes_[k].id, k);
  }
  in_.resize(nodes_.size());
  out_.resize(nodes_.size());
  edges_ = std::move(edges);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    Edge& edge = edges_[e];
    if (edge.src >= nodes_.size() || edge.dst >= nodes_.size()) {
      throw DataError("edge " + std::to_string(e) + " has a missing endpoint");
    }
    edge.src = remap[edge.src];
    edge.dst = remap[edge.dst];
    if (nodes_[edge.src].type != EntityType::kProcess ||
        nodes_[edge.dst].type != edge.type.object_type()) {
      throw DataError("edge " + std::to_string(e) + " of type " +
                      std::to_string(edge.type.value()) +
                      " connects incompatible entity types");
    }
    out_[edge.src].push_back(e);
    in_[edge.dst].push_back(e);
  }
}

std::optional<std::size_t> ProvenanceGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ProvenanceGraph::index_of(std::string_view id) const {
  auto found = find(id);
  if (!found) throw InvalidArgument("unknown node '" + std::string(id) + "'");
  return *found;
}

std::vector<std::size_t> ProvenanceGraph::NodesOfType(EntityType type) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].type == type) out.push_back(i);
  }
  return out;
}

ProvenanceGraph BuildGraph(std::span<const Event> events) {
  std::vector<EntityNode> nodes;
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<Edge> edges;
  edges.reserve(events.size());

  auto intern = [&](const std::string& id, EntityType type,
                    const Attributes& attrs) -> std::size_t {
    auto [it, inserted] = seen.emplace(id, nodes.size());
    if (inserted) {
      nodes.push_back(EntityNode{id, type, {}});
    } else if (nodes[it->second].type != type) {
      throw DataError("identifier collision: '" + id + "' seen as " +
                      std::string(ToString(nodes[it->second].type)) + " and " +
                      std::string(ToString(type)));
    }
    // Display attributes: first value wins so the result is stable.
    for (const auto& [key, value] : attrs) {
      nodes[it->second].attrs.emplace(key, value);
    }
    return it->second;
  };

  for (const Event& ev : events) {
    const EdgeTypeId type =
        EdgeTypeOf(ev.subject_type, ev.operation, ev.object_type);
    // Event attributes describe the object (path, key, address); subject
    // attributes use a "subject." prefix.
    Attributes subject_attrs, object_attrs;
    for (const auto& [key, value] : ev.attrs) {
      if (key.rfind("subject.", 0) == 0) {
        subject_attrs.emplace(key.substr(8), value);
      } else {
        object_attrs.emplace(key, value);
      }
    }
    const std::size_t src = intern(ev.subject_id, ev.subject_type, subject_attrs);
    const std::size_t dst = intern(ev.object_id, ev.object_type, object_attrs);
    edges.push_back(Edge{src, dst, type, ev.timestamp});
  }
  return ProvenanceGraph(std::move(nodes), std::move(edges));
}

Degree DegreeOf(const ProvenanceGraph& graph, std::string_view node_id) {
  const std::size_t i = graph.index_of(node_id);
  return Degree{graph.in_edges(i).size(), graph.out_edges(i).size()};
}

ProvenanceGraph DisjointUnion(std::span<const ProvenanceGraph* const> graphs) {
  std::vector<EntityNode> nodes;
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const ProvenanceGraph& g = *graphs[k];
    const std::size_t offset = nodes.size();
    const std::string prefix = std::to_string(k) + "/";
    for (const EntityNode& n : g.nodes()) {
      nodes.push_back(EntityNode{prefix + n.id, n.type, n.attrs});
    }
    for (const Edge& e : g.edges()) {
      edges.push_back(Edge{e.src + offset, e.dst + offset, e.type, e.timestamp});
    }
  }
  return ProvenanceGraph(std::move(nodes), std::move(edges));
}

std::vector<Event> ToEvents(const ProvenanceGraph& graph) {
  std::vector<std::size_t> order(graph.edge_count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return graph.edges()[a].timestamp < graph.edges()[b].timestamp;
  });
  std::vector<Event> events;
  events.reserve(order.size());
  for (std::size_t e : order) {
    const Edge& edge = graph.edges()[e];
    const EntityNode& s = graph.node(edge.src);
    const EntityNode& o = graph.node(edge.dst);
    Event ev{s.id, s.type, std::string(edge.type.operation()), o.id, o.type,
             edge.timestamp, o.attrs};
    for (const auto& [key, value] : s.attrs) ev.attrs.emplace("subject." + key, value);
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace tsgrec
