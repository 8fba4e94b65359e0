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

#include "tsgrec/rules.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include "tsgrec/error.hpp"

namespace tsgrec {

namespace {

constexpr std::array<std::string_view, 31> kCodes = {
    "PS1", "PS2", "PS3", "PS4", "PS5", "PS6", "PB1", "PB2", "PB3",
    "PB4", "PB5", "PB6", "PB7", "FU1", "FU2", "FU3", "FH1", "FH2",
    "FH3", "FH4", "FH5", "FH6", "RU1", "RU2", "RU3", "RH1", "RH2",
    "RH3", "RH4", "RH5", "RH6"};

struct SeedCategory {
  std::string_view category;
  EntityType type;
  std::string_view code;  // empty: no code
};

constexpr std::array<SeedCategory, 14> kCategories = {{
    {"file.uploaded", EntityType::kFile, "FU1"},
    {"file.scheduled_task", EntityType::kFile, "FH1"},
    {"file.permission", EntityType::kFile, "FH2"},
    {"file.user_info", EntityType::kFile, "FH3"},
    {"file.security_policy", EntityType::kFile, "FH4"},
    {"file.system_info", EntityType::kFile, "FH6"},
    {"registry.scheduled_task", EntityType::kRegistry, "RH1"},
    {"registry.permission", EntityType::kRegistry, "RH2"},
    {"registry.user_info", EntityType::kRegistry, "RH3"},
    {"registry.security_policy", EntityType::kRegistry, "RH4"},
    {"registry.system_info", EntityType::kRegistry, "RH6"},
    {"command.sensitive", EntityType::kProcess, "PB3"},
    {"address.trusted", EntityType::kSocket, ""},
    {"address.untrusted", EntityType::kSocket, ""},
}};

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool PatternMatches(const std::string& pattern, const std::string& candidate) {
  if (!pattern.empty() && pattern.back() == '*') {
    return candidate.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0 &&
           candidate.size() >= pattern.size() - 1;
  }
  return pattern == candidate;
}

std::vector<std::string> Candidates(const EntityNode& entity) {
  std::vector<std::string> out{Lower(entity.id)};
  for (const char* key : {"path", "key", "address", "ip", "cmdline", "name"}) {
    auto it = entity.attrs.find(key);
    if (it != entity.attrs.end()) out.push_back(Lower(it->second));
  }
  if (entity.type == EntityType::kSocket) {
    // Also match the bare address: no "s:" prefix, no trailing port.
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      std::string c = out[i];
      if (c.rfind("s:", 0) == 0) c.erase(0, 2);
      const auto colon = c.rfind(':');
      if (colon != std::string::npos && colon + 1 < c.size() &&
          std::all_of(c.begin() + static_cast<std::ptrdiff_t>(colon) + 1, c.end(),
                      [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)) != 0; })) {
        c.erase(colon);
      }
      if (c != out[i]) out.push_back(c);
    }
  }
  return out;
}

TransferRule Rule(std::string id, std::string tactic, std::string a, std::string b,
                  std::vector<std::string> ops, EntityType object, RuleSide trigger,
                  std::vector<std::string> trigger_codes, std::string effect,
                  std::string description) {
  const RuleSide effect_side =
      trigger == RuleSide::kSubject ? RuleSide::kObject : RuleSide::kSubject;
  return TransferRule{std::move(id),     std::move(tactic),        std::move(a),
                      std::move(b),      std::move(ops),           object,
                      trigger,           std::move(trigger_codes), effect_side,
                      std::move(effect), std::move(description)};
}

}  // namespace

void ValidateStateCode(std::string_view code) {
  if (std::find(kCodes.begin(), kCodes.end(), code) == kCodes.end()) {
    throw InvalidArgument("unknown state code '" + std::string(code) + "'");
  }
}

bool StateCodeAllowed(std::string_view code, EntityType type) {
  ValidateStateCode(code);
  switch (code[0]) {
    case 'P':
      return type == EntityType::kProcess;
    case 'F':
      return type == EntityType::kFile;
    case 'R':
      return type == EntityType::kRegistry;
  }
  return false;
}

const std::vector<TransferRule>& DefaultRules() {
  using enum RuleSide;
  const EntityType file = EntityType::kFile;
  const EntityType reg = EntityType::kRegistry;
  const std::vector<std::string> write{"write"}, read{"read"};
  const std::vector<std::string> create_reg{"create", "modify"}, modify_reg{"modify"},
      read_reg{"query"};
  static const std::vector<TransferRule> rules = {
      Rule("IA-1", "Initial Access", "PS1", "FU2", write, file, kSubject, {"PS1"}, "FU2",
           "A process with a network connection writes the file."),
      Rule("IA-2", "Initial Access", "PS3", "FU2", read, file, kObject, {"FU2"}, "PS3",
           "A process reads a file containing network data."),
      Rule("IA-3", "Initial Access", "PS3", "FU2", write, file, kSubject, {"PS3"}, "FU2",
           "A process that has accessed network data writes a file."),
      Rule("IA-4", "Initial Access", "PS4", "FU1", {"read", "load"}, file, kObject, {"FU1"},
           "PS4", "A process loads or reads files uploaded by the user."),
      Rule("EX-1", "Execution", "PB1", "FU2", {"execute"}, file, kObject, {"FU2"}, "PB1",
           "A network file is executed."),
      Rule("EX-2", "Execution", "PB1", "FU2", {"load"}, file, kObject, {"FU2"}, "PB1",
           "A network file is loaded."),
      Rule("EX-3", "Execution", "PB1", "FU2", write, file, kSubject, {"PB1"}, "FU2",
           "A process that has executed the network file writes a file."),
      Rule("EX-4", "Execution", "PS5", "RU2", create_reg, reg, kSubject, {"PS5"}, "RU2",
           "A process that has read sensitive information modifies the registry key."),
      Rule("EX-5", "Execution", "PS5", "RU2", read_reg, reg, kObject, {"RU2"}, "PS5",
           "A process reads a registry key that may contain sensitive information."),
      Rule("PE-1", "Persistence", "PB6", "FH1", write, file, kObject, {"FH1"}, "PB6",
           "A process writes to a file with controlled scheduled tasks."),
      Rule("PE-2", "Persistence", "PB6", "RH1", modify_reg, reg, kObject, {"RH1"}, "PB6",
           "A process modifies the registry key that controls scheduled tasks."),
      Rule("PE-3", "Persistence", "PS4", "RU3", create_reg, reg, kSubject, {"PS4"}, "RU3",
           "A process that loads or executes suspicious files creates a registry key."),
      Rule("PR-1", "Privilege Escalation", "PB7", "FH2", write, file, kObject, {"FH2"}, "PB7",
           "A process writes to a file that controls permissions."),
      Rule("PR-2", "Privilege Escalation", "PB7", "RH2", modify_reg, reg, kObject, {"RH2"},
           "PB7", "A process modifies the registry key that controls permissions."),
      Rule("CA-1", "Credential Access", "PS6", "FH3", read, file, kObject, {"FH3"}, "PS6",
           "A process reads files with sensitive information."),
      Rule("CA-2", "Credential Access", "PS6", "RH3", read_reg, reg, kObject, {"RH3"}, "PS6",
           "A process reads a registry key with sensitive information."),
      Rule("DE-1", "Defense Evasion", "PB5", "FH4", write, file, kObject, {"FH4"}, "PB5",
           "A process writes to a file with security control information."),
      Rule("DE-2", "Defense Evasion", "PB5", "RH4", modify_reg, reg, kObject, {"RH4"}, "PB5",
           "A process modifies the registry key with security control information."),
      Rule("DI-1", "Discovery", "PS5", "FH6", read, file, kObject, {"FH6"}, "PS5",
           "A process reads system-sensitive files."),
      Rule("DI-2", "Discovery", "PS5", "RH6", read_reg, reg, kObject, {"RH6"}, "PS5",
           "A process reads system-sensitive registry key."),
      Rule("EXF-1", "Exfiltration", "PB5-7|PS2,5-6", "FH5", write, file, kSubject,
           {"PB5", "PB6", "PB7", "PS2", "PS5", "PS6"}, "FH5",
           "A process writes high-value data to files."),
      Rule("EXF-2", "Exfiltration", "PB7", "FH5", read, file, kObject, {"FH5"}, "PB7",
           "A process reads high-value data files."),
  };
  return rules;
}

bool Blacklist::Matches(std::string_view category, const EntityNode& entity) const {
  auto it = entries.find(std::string(category));
  if (it == entries.end()) return false;
  const std::vector<std::string> candidates = Candidates(entity);
  for (const std::string& pattern : it->second) {
    const std::string p = Lower(pattern);
    for (const std::string& c : candidates) {
      if (PatternMatches(p, c)) return true;
    }
  }
  return false;
}

std::vector<std::string> Blacklist::SeedCodes(const EntityNode& entity) const {
  std::vector<std::string> out;
  for (const SeedCategory& c : kCategories) {
    if (c.code.empty() || c.type != entity.type) continue;
    if (Matches(c.category, entity)) out.emplace_back(c.code);
  }
  return out;
}

bool Blacklist::Untrusted(const EntityNode& socket) const {
  if (socket.type != EntityType::kSocket) return false;
  if (Matches("address.untrusted", socket)) return true;
  auto trusted = entries.find("address.trusted");
  return trusted != entries.end() && !trusted->second.empty() &&
         !Matches("address.trusted", socket);
}

Blacklist ParseBlacklist(std::string_view text) {
  Blacklist out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string category;
    if (!(fields >> category)) continue;
    std::string value;
    std::getline(fields >> std::ws, value);
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) {
      value.pop_back();
    }
    const bool known = std::any_of(kCategories.begin(), kCategories.end(),
                                   [&](const SeedCategory& c) { return c.category == category; });
    if (!known) {
      throw DataError("blacklist line " + std::to_string(number) + ": unknown category '" +
                      category + "'");
    }
    if (value.empty()) {
      throw DataError("blacklist line " + std::to_string(number) + ": missing value for " +
                      category);
    }
    out.entries[category].push_back(value);
  }
  return out;
}

Blacklist LoadBlacklist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open blacklist " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseBlacklist(text.str());
}

RuleEngine::RuleEngine(Blacklist blacklist, std::vector<TransferRule> rules)
    : blacklist_(std::move(blacklist)), rules_(std::move(rules)) {
  for (const TransferRule& r : rules_) {
    for (const std::string& c : r.trigger_codes) ValidateStateCode(c);
    ValidateStateCode(r.effect_code);
  }
}

const std::set<std::string>& RuleEngine::codes(const std::string& id) const {
  static const std::set<std::string> kEmpty;
  auto it = states_.find(id);
  return it == states_.end() ? kEmpty : it->second;
}

void RuleEngine::Add(const std::string& id, EntityType type, const std::string& code) {
  if (!StateCodeAllowed(code, type)) {
    throw InvalidArgument("state code " + code + " is not legal for a " +
                          std::string(ToString(type)));
  }
  states_[id].insert(code);
}

void RuleEngine::SeedEntity(const std::string& id, EntityType type, const Attributes& attrs) {
  if (!seeded_.insert(id).second) return;
  const EntityNode node{id, type, attrs};
  for (const std::string& code : blacklist_.SeedCodes(node)) Add(id, type, code);
}

namespace {

void SplitAttrs(const Attributes& attrs, Attributes& subject, Attributes& object) {
  for (const auto& [key, value] : attrs) {
    if (key.rfind("subject.", 0) == 0) {
      subject.emplace(key.substr(8), value);
    } else {
      object.emplace(key, value);
    }
  }
}

}  // namespace

void RuleEngine::Seed(std::span<const Event> events) {
  for (const Event& ev : events) {
    Attributes subject, object;
    SplitAttrs(ev.attrs, subject, object);
    SeedEntity(ev.subject_id, ev.subject_type, subject);
    SeedEntity(ev.object_id, ev.object_type, object);
    if (ev.object_type == EntityType::kSocket &&
        blacklist_.Untrusted(EntityNode{ev.object_id, ev.object_type, object})) {
      Add(ev.subject_id, ev.subject_type, "PS1");
    }
  }
}

std::vector<Alert> RuleEngine::Step(const Event& ev) {
  if (ev.subject_type != EntityType::kProcess) {
    throw InvalidArgument("event subject must be a process");
  }
  Attributes subject_attrs, object_attrs;
  SplitAttrs(ev.attrs, subject_attrs, object_attrs);
  SeedEntity(ev.subject_id, ev.subject_type, subject_attrs);
  SeedEntity(ev.object_id, ev.object_type, object_attrs);

  const std::set<std::string> subject = codes(ev.subject_id);
  const std::set<std::string> object = codes(ev.object_id);
  std::vector<Alert> alerts;
  std::vector<std::pair<RuleSide, std::string>> effects;
  for (const TransferRule& r : rules_) {
    if (r.object_type != ev.object_type) continue;
    if (std::find(r.operations.begin(), r.operations.end(), ev.operation) ==
        r.operations.end()) {
      continue;
    }
    const std::set<std::string>& held = r.trigger_side == RuleSide::kSubject ? subject : object;
    const bool fires = std::any_of(r.trigger_codes.begin(), r.trigger_codes.end(),
                                   [&](const std::string& c) { return held.count(c) > 0; });
    if (!fires) continue;
    alerts.push_back(Alert{ev.timestamp, r.tactic, r.id, ev.subject_id, ev.object_id});
    effects.emplace_back(r.effect_side, r.effect_code);
  }
  for (const auto& [side, code] : effects) {
    if (side == RuleSide::kSubject) {
      Add(ev.subject_id, ev.subject_type, code);
    } else {
      Add(ev.object_id, ev.object_type, code);
    }
  }
  if (ev.object_type == EntityType::kSocket &&
      blacklist_.Untrusted(EntityNode{ev.object_id, ev.object_type, object_attrs})) {
    Add(ev.subject_id, ev.subject_type, "PS1");
  }
  return alerts;
}

std::vector<Alert> RuleEngine::Run(std::span<const Event> events) {
  Seed(events);
  std::vector<Alert> out;
  for (const Event& ev : events) {
    std::vector<Alert> step = Step(ev);
    out.insert(out.end(), step.begin(), step.end());
  }
  return out;
}

const std::vector<std::string>& KillChainStages() {
  static const std::vector<std::string> stages = {
      "Initial Compromise", "Establish Foothold", "Privilege Escalation", "Internal Recon",
      "Move Laterally",     "Complete Mission",   "Cleanup Tracks"};
  return stages;
}

std::vector<std::string> MapToKillChain(std::string_view attck_tactic) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> rows = {
      {"Initial Compromise", {"Initial Access"}},
      {"Establish Foothold",
       {"Execution", "Persistence", "Command and Control", "Defense Evasion"}},
      {"Privilege Escalation", {"Privilege Escalation", "Defense Evasion"}},
      {"Internal Recon", {"Discovery", "Collection", "Defense Evasion"}},
      {"Move Laterally", {"Lateral Movement", "Defense Evasion"}},
      {"Complete Mission", {"Collection", "Command and Control", "Impact"}},
      {"Cleanup Tracks", {"Impact", "Defense Evasion"}},
  };
  static const std::set<std::string> known = {
      "Reconnaissance",    "Resource Development", "Initial Access",
      "Execution",         "Persistence",          "Privilege Escalation",
      "Defense Evasion",   "Credential Access",    "Discovery",
      "Lateral Movement",  "Collection",           "Command and Control",
      "Exfiltration",      "Impact"};
  std::string tactic(attck_tactic);
  if (tactic == "Data Exfiltration") tactic = "Exfiltration";
  if (known.count(tactic) == 0) {
    throw InvalidArgument("unknown ATT&CK tactic '" + std::string(attck_tactic) + "'");
  }
  std::vector<std::string> out;
  for (const auto& [stage, tactics] : rows) {
    if (std::find(tactics.begin(), tactics.end(), tactic) != tactics.end()) out.push_back(stage);
  }
  return out;
}

}  // namespace tsgrec
