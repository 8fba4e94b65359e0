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

#ifndef TSGREC_TESTS_ORACLES_HPP_
#define TSGREC_TESTS_ORACLES_HPP_

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "tsgrec/graph.hpp"

namespace tsgrec::testing {

inline std::vector<std::size_t> Indices(const ProvenanceGraph& g, const std::vector<std::string>& ids) {
  std::vector<std::size_t> out;
  for (const std::string& id : ids) out.push_back(g.index_of(id));
  return out;
}

inline std::set<std::string> Ids(const ProvenanceGraph& g, const std::vector<std::size_t>& idx) {
  std::set<std::string> out;
  for (std::size_t i : idx) out.insert(g.node(i).id);
  return out;
}

// Exhaustive closure: repeatedly enumerate every simple path of at most
// lambda hops between a reached NOI and another NOI with no NOI inside it.
inline std::set<std::size_t> ClosureOracle(const ProvenanceGraph& g, std::size_t seed,
                                    const std::set<std::size_t>& nois, int lambda) {
  std::vector<std::set<std::size_t>> adj(g.node_count());
  for (const Edge& e : g.edges()) {
    if (e.src == e.dst) continue;
    adj[e.src].insert(e.dst);
    adj[e.dst].insert(e.src);
  }
  std::set<std::size_t> reached{seed}, kept{seed};
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t u : std::set<std::size_t>(reached)) {
      std::vector<std::size_t> path{u};
      std::function<void()> walk = [&] {
        const std::size_t at = path.back();
        if (path.size() > 1 && nois.count(at)) {
          for (std::size_t v : path) changed |= kept.insert(v).second;
          changed |= reached.insert(at).second;
          return;
        }
        if (static_cast<int>(path.size()) - 1 == lambda) return;
        for (std::size_t next : adj[at]) {
          if (std::find(path.begin(), path.end(), next) != path.end()) continue;
          path.push_back(next);
          walk();
          path.pop_back();
        }
      };
      walk();
    }
  }
  return kept;
}

// Seed v0 reaches v1 in two hops, v2 in three, v3 two hops past v1; the
// decoy v4 sits four hops past v3 and h is a dead end.
inline ProvenanceGraph ReferenceTopology() {
  return Graph({{"p:v0", "write", "f:a"},
                {"p:v1", "read", "f:a"},
                {"p:v0", "launch", "p:b"},
                {"p:b", "write", "f:c"},
                {"p:v2", "read", "f:c"},
                {"p:v1", "modify", "r:d"},
                {"p:v3", "query", "r:d"},
                {"p:v3", "connect", "s:e"},
                {"p:f", "connect", "s:e"},
                {"p:f", "launch", "p:g"},
                {"p:g", "launch", "p:v4"},
                {"p:v0", "write", "f:h"}});
}

inline const std::vector<std::string> kReferenceNois{"p:v0", "p:v1", "p:v2", "p:v3", "p:v4"};

}  // namespace tsgrec::testing

#endif  // TSGREC_TESTS_ORACLES_HPP_
