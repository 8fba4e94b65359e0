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

// Expected outcomes for the fixtures under tests/data, shared by the unit
// and acceptance suites.

#ifndef TSGREC_TESTS_FIXTURES_HPP_
#define TSGREC_TESTS_FIXTURES_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tsgrec/config.hpp"

namespace tsgrec::testing {

// Reduced sizes so a whole pipeline run takes a couple of seconds.
inline PipelineConfig SmallPipelineConfig(std::uint64_t seed = 1) {
  PipelineConfig cfg;
  cfg.seed = seed;
  cfg.encoder.hidden = 16;
  cfg.encoder.epochs = 40;
  cfg.matcher.han.dim = 16;
  cfg.matcher.epochs = 10;
  cfg.noi.num_trees = 50;
  cfg.scenario.samples_per_class = 4;
  cfg.scenario.train_per_class = 2;
  ResolveSeeds(cfg);
  return cfg;
}

struct ExpectedAlert {
  std::int64_t ts;
  const char* rule;
  const char* tactic;
};

// rule_trace.jsonl with rule_trace_blacklist.txt: a download written by a
// process that talked to an untrusted address, executed, then persisted
// through a scheduled task file and registry key.
inline const std::vector<ExpectedAlert>& RuleTraceAlerts() {
  static const std::vector<ExpectedAlert> alerts = {
      {2000, "IA-1", "Initial Access"}, {3000, "IA-2", "Initial Access"},
      {4000, "IA-3", "Initial Access"}, {6000, "EX-1", "Execution"},
      {7000, "EX-3", "Execution"},      {8000, "EX-2", "Execution"},
      {9000, "EX-3", "Execution"},      {9000, "PE-1", "Persistence"},
      {10000, "PE-2", "Persistence"},
  };
  return alerts;
}

// Kill-Chain stage -> ATT&CK tactics it lists.
inline const std::vector<std::pair<std::string, std::vector<std::string>>>& KillChainRows() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> rows = {
      {"Initial Compromise", {"Initial Access"}},
      {"Establish Foothold", {"Execution", "Persistence", "Command and Control", "Defense Evasion"}},
      {"Privilege Escalation", {"Privilege Escalation", "Defense Evasion"}},
      {"Internal Recon", {"Discovery", "Collection", "Defense Evasion"}},
      {"Move Laterally", {"Lateral Movement", "Defense Evasion"}},
      {"Complete Mission", {"Collection", "Command and Control", "Impact"}},
      {"Cleanup Tracks", {"Impact", "Defense Evasion"}},
  };
  return rows;
}

}  // namespace tsgrec::testing

#endif  // TSGREC_TESTS_FIXTURES_HPP_
