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

// Stateful tag-propagation baseline. Entities carry state codes
// (PS*/PB* on processes, FU*/FH* on files, RU*/RH* on registry keys);
// transfer rules fire on events whose subject or object already holds a
// trigger code, emit a tactic alert and add a code to the other side. Codes
// are never removed.

#ifndef TSGREC_RULES_HPP_
#define TSGREC_RULES_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsgrec/graph.hpp"

namespace tsgrec {

// Throws InvalidArgument for a code outside the defined vocabulary.
void ValidateStateCode(std::string_view code);
// True if `code` may be held by an entity of `type`.
bool StateCodeAllowed(std::string_view code, EntityType type);

enum class RuleSide { kSubject, kObject };

struct TransferRule {
  std::string id;
  std::string tactic;
  std::string state_a;  // process-side code as printed in the rule table
  std::string state_b;  // object-side code as printed in the rule table
  std::vector<std::string> operations;
  EntityType object_type;
  RuleSide trigger_side;
  std::vector<std::string> trigger_codes;  // any of these
  RuleSide effect_side;
  std::string effect_code;
  std::string description;
};

// The 22 transfer rules in table order.
const std::vector<TransferRule>& DefaultRules();

// Plain-text lists, one "<category> <value>" entry per line; '#' starts a
// comment. A value ending in '*' matches by prefix; matching ignores case.
// Socket entries match the address with or without its port.
// Categories:
//   file.uploaded file.scheduled_task file.permission file.user_info
//   file.security_policy file.system_info
//   registry.scheduled_task registry.permission registry.user_info
//   registry.security_policy registry.system_info
//   command.sensitive address.trusted address.untrusted
struct Blacklist {
  std::map<std::string, std::vector<std::string>> entries;  // category -> values

  bool Matches(std::string_view category, const EntityNode& entity) const;
  // The state codes the lists assign to an entity.
  std::vector<std::string> SeedCodes(const EntityNode& entity) const;
  // Untrusted list match, or a trusted list exists and does not match.
  bool Untrusted(const EntityNode& socket) const;
};

// Throws DataError naming the line for an unknown category or a missing
// value.
Blacklist ParseBlacklist(std::string_view text);
Blacklist LoadBlacklist(const std::filesystem::path& path);

struct Alert {
  std::int64_t ts = 0;
  std::string tactic;
  std::string rule;
  std::string subject;
  std::string object;
  friend bool operator==(const Alert&, const Alert&) = default;
};

using StateStore = std::map<std::string, std::set<std::string>>;

class RuleEngine {
 public:
  explicit RuleEngine(Blacklist blacklist,
                      std::vector<TransferRule> rules = DefaultRules());

  // Seeds every entity named by the events from the blacklists, and marks
  // processes that touch an untrusted socket PS1.
  void Seed(std::span<const Event> events);

  // Evaluates every rule against the state before the event, then applies
  // the effects. Unseen entities are seeded first.
  std::vector<Alert> Step(const Event& event);

  // Seed followed by Step over the whole stream.
  std::vector<Alert> Run(std::span<const Event> events);

  const StateStore& states() const { return states_; }
  const std::set<std::string>& codes(const std::string& id) const;

 private:
  void SeedEntity(const std::string& id, EntityType type, const Attributes& attrs);
  void Add(const std::string& id, EntityType type, const std::string& code);

  Blacklist blacklist_;
  std::vector<TransferRule> rules_;
  StateStore states_;
  std::set<std::string> seeded_;
};

// Kill-Chain stages, in lifecycle order.
const std::vector<std::string>& KillChainStages();

// Stages whose row lists the ATT&CK tactic, in lifecycle order. Known
// tactics absent from the alignment give an empty set; "Data Exfiltration"
// is read as Exfiltration. Throws InvalidArgument for anything else.
std::vector<std::string> MapToKillChain(std::string_view attck_tactic);

}  // namespace tsgrec

#endif  // TSGREC_RULES_HPP_
