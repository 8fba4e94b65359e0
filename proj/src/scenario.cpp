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

#include "tsgrec/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "tsgrec/error.hpp"
#include "tsgrec/features.hpp"

namespace tsgrec {

namespace {

constexpr EntityType kProc = EntityType::kProcess;
constexpr EntityType kFile = EntityType::kFile;
constexpr EntityType kReg = EntityType::kRegistry;
constexpr EntityType kSock = EntityType::kSocket;

Fanout F(const char* op, EntityType type, int count, bool shared = false) {
  return Fanout{op, type, count, shared};
}

const std::vector<std::string>& SharedLibraries() {
  static const std::vector<std::string> names = {
      "ntdll.dll",  "kernel32.dll", "kernelbase.dll", "user32.dll",
      "gdi32.dll",  "advapi32.dll", "msvcrt.dll",     "sechost.dll",
      "rpcrt4.dll", "combase.dll",  "ole32.dll",      "shell32.dll"};
  return names;
}

const std::vector<std::string>& SharedKeys() {
  static const std::vector<std::string> keys = {
      "HKLM/SOFTWARE/Microsoft/Windows/CurrentVersion/Explorer",
      "HKLM/SOFTWARE/Microsoft/Windows NT/CurrentVersion/FontSubstitutes",
      "HKLM/SYSTEM/CurrentControlSet/Control/Nls/CodePage",
      "HKLM/SOFTWARE/Microsoft/Cryptography/Defaults",
      "HKCU/Software/Microsoft/Windows/CurrentVersion/Internet Settings",
      "HKLM/SOFTWARE/Policies/Microsoft/Windows/System",
      "HKLM/SYSTEM/CurrentControlSet/Services/Tcpip/Parameters",
      "HKCU/Control Panel/Desktop"};
  return keys;
}

const std::vector<std::string>& SharedAddresses() {
  static const std::vector<std::string> addrs = {
      "93.184.216.34:443", "151.101.1.69:443", "142.250.72.14:443", "13.107.42.14:443"};
  return addrs;
}

struct BenignProfile {
  std::string image;
  double share;  // fraction of the background processes
  std::vector<Fanout> fanout;
  int children = 0;  // launches of utility processes
};

const std::vector<BenignProfile>& BenignProfiles() {
  static const std::vector<BenignProfile> profiles = {
      {"svchost.exe",
       0.25,
       {F("read", kFile, 3, true), F("open", kReg, 3, true), F("query", kReg, 4, true),
        F("close", kReg, 3, true), F("accept", kSock, 1), F("receive", kSock, 1)}},
      {"chrome.exe",
       0.2,
       {F("read", kFile, 4, true), F("read", kFile, 3), F("write", kFile, 2),
        F("connect", kSock, 2, true), F("send", kSock, 2, true), F("receive", kSock, 2, true),
        F("query", kReg, 1, true)}},
      {"winword.exe",
       0.2,
       {F("read", kFile, 4, true), F("read", kFile, 2), F("write", kFile, 1),
        F("close", kFile, 2), F("query", kReg, 2, true)}},
      {"cmd.exe", 0.15, {F("read", kFile, 2, true), F("query", kReg, 1, true)}, 2},
      {"onedrive.exe",
       0.2,
       {F("read", kFile, 3, true), F("read", kFile, 2), F("write", kFile, 2),
        F("connect", kSock, 1, true), F("send", kSock, 1, true), F("receive", kSock, 2, true)}},
  };
  return profiles;
}

const BenignProfile& UtilityProfile() {
  static const BenignProfile utility{
      "conhost.exe", 0.0, {F("read", kFile, 2, true), F("enum", kFile, 1)}, 0};
  return utility;
}

// Accumulates the events of one graph.
class GraphWriter {
 public:
  GraphWriter(Rng& rng, double noise) : rng_(rng), noise_(noise) {}

  std::string NewProcess(const std::string& image) {
    const std::string id = "proc:" + image + ":" + std::to_string(NextPid());
    images_[id] = image;
    return id;
  }

  std::string FreshObject(EntityType type, const std::string& owner_tag) {
    const std::uint64_t r = rng_.NextU64() % 1000000;
    switch (type) {
      case kFile:
        return "file:C:/Users/user/AppData/Local/Temp/" + owner_tag + "_" + std::to_string(r) +
               ".tmp";
      case kReg:
        return "reg:HKCU/Software/" + owner_tag + "/" + std::to_string(r);
      case kSock:
        return "sock:10." + std::to_string(r % 250) + "." + std::to_string((r / 250) % 250) +
               "." + std::to_string(1 + (r / 62500) % 250) + ":" +
               std::to_string(1024 + rng_.Index(60000));
      case kProc:
        break;
    }
    throw InvalidArgument("fan-out cannot create processes");
  }

  std::string SharedObject(EntityType type) {
    switch (type) {
      case kFile: {
        const auto& libs = SharedLibraries();
        return "file:C:/Windows/System32/" + libs[rng_.Index(libs.size())];
      }
      case kReg: {
        const auto& keys = SharedKeys();
        return "reg:" + keys[rng_.Index(keys.size())];
      }
      case kSock: {
        const auto& addrs = SharedAddresses();
        return "sock:" + addrs[rng_.Index(addrs.size())];
      }
      case kProc:
        break;
    }
    throw InvalidArgument("shared pool has no processes");
  }

  int Jitter(int base) {
    if (base <= 0) return 0;
    const double scaled = base * (1.0 + noise_ * rng_.Uniform(-1.0, 1.0));
    return std::max(1, static_cast<int>(std::lround(scaled)));
  }

  std::int64_t Launch(const std::string& parent, const std::string& child, std::int64_t t) {
    Emit(parent, "launch", child, kProc, t);
    return t;
  }

  // Emits the fan-out of one process starting after time t.
  std::int64_t Behave(const std::string& proc, const std::vector<Fanout>& fanout,
                      std::int64_t t, const std::string& tag,
                      std::map<std::string, std::set<std::string>>* touched = nullptr) {
    for (const Fanout& f : fanout) {
      const int n = Jitter(f.count);
      for (int k = 0; k < n; ++k) {
        const std::string object = f.shared ? SharedObject(f.object) : FreshObject(f.object, tag);
        t = Emit(proc, f.operation, object, f.object, t);
        if (touched != nullptr) (*touched)[object].insert(proc);
      }
    }
    return t;
  }

  std::int64_t Emit(const std::string& subject, const std::string& op,
                    const std::string& object, EntityType object_type, std::int64_t t) {
    t += 1 + static_cast<std::int64_t>(rng_.Index(5000));
    Event ev{subject, kProc, op, object, object_type, t, {}};
    ev.attrs.emplace("subject.name", images_.count(subject) ? images_[subject] : subject);
    const auto colon = object.find(':');
    const std::string body = colon == std::string::npos ? object : object.substr(colon + 1);
    switch (object_type) {
      case kFile:
        ev.attrs.emplace("path", body);
        break;
      case kReg:
        ev.attrs.emplace("key", body);
        break;
      case kSock:
        ev.attrs.emplace("address", body);
        break;
      case kProc:
        ev.attrs.emplace("name", images_.count(object) ? images_[object] : body);
        break;
    }
    events_.push_back(std::move(ev));
    return t;
  }

  std::vector<Event> TakeEvents() {
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    return std::move(events_);
  }

  Rng& rng() { return rng_; }

 private:
  int NextPid() { return 1000 + static_cast<int>(4 * (pids_++)) + static_cast<int>(rng_.Index(4)); }

  Rng& rng_;
  double noise_;
  int pids_ = 0;
  std::vector<Event> events_;
  std::map<std::string, std::string> images_;
};

std::string ArtifactId(const Artifact& a) {
  switch (a.type) {
    case kFile:
      return "file:" + a.name;
    case kReg:
      return "reg:" + a.name;
    case kSock:
      return "sock:" + a.name;
    case kProc:
      break;
  }
  return "proc:" + a.name;
}

// Benign background; returns the processes that may host the motif.
std::vector<std::string> WriteBackground(GraphWriter& w, double intensity) {
  std::vector<std::string> hosts;
  const int total = static_cast<int>(std::lround(40.0 * intensity));
  if (total <= 0) return hosts;
  Rng& rng = w.rng();
  constexpr std::int64_t kSpan = 50000000;
  auto launchers = [&](const std::string& image, const std::vector<Fanout>& fanout) {
    std::vector<std::string> out;
    const int n = std::max(1, static_cast<int>(std::lround(total / 8.0)));
    for (int i = 0; i < n; ++i) {
      out.push_back(w.NewProcess(image));
      w.Behave(out.back(), fanout, static_cast<std::int64_t>(rng.Index(1000)), "launcher");
    }
    return out;
  };
  const std::vector<std::string> services =
      launchers("services.exe", {F("open", kReg, 3, true), F("query", kReg, 3, true)});
  const std::vector<std::string> shells =
      launchers("explorer.exe", {F("read", kFile, 4, true), F("query", kReg, 3, true)});

  for (const BenignProfile& p : BenignProfiles()) {
    const int n = std::max(1, static_cast<int>(std::lround(p.share * total)));
    for (int i = 0; i < n; ++i) {
      const std::string proc = w.NewProcess(p.image);
      const std::vector<std::string>& parents = p.image == "svchost.exe" ? services : shells;
      std::int64_t start = w.Launch(parents[rng.Index(parents.size())], proc,
                                    1000 + static_cast<std::int64_t>(rng.Index(kSpan)));
      std::int64_t end = w.Behave(proc, p.fanout, start, p.image.substr(0, p.image.find('.')));
      for (int c = 0; c < w.Jitter(p.children); ++c) {
        const std::string child = w.NewProcess(UtilityProfile().image);
        end = w.Launch(proc, child, end);
        w.Behave(child, UtilityProfile().fanout, end, "util");
      }
      if (p.image != "svchost.exe") hosts.push_back(proc);
    }
  }
  return hosts;
}

}  // namespace

std::vector<TechniqueTemplate> DefaultTemplates() {
  std::vector<TechniqueTemplate> t;

  t.push_back(TechniqueTemplate{
      "T1003",
      "Credential Access",
      "OS credential dumping from LSASS memory and registry hives",
      {
          {"cmd.exe", -1, {F("read", kFile, 3, true), F("enum", kFile, 9)}},
          {"powershell.exe", 0, {F("connect", kSock, 2), F("receive", kSock, 6), F("write", kFile, 8)}},
          {"procdump64.exe", 1, {F("read", kFile, 5, true), F("open", kReg, 6), F("create", kFile, 5)}},
          {"reg.exe", 1, {F("open", kReg, 8), F("query", kReg, 12)}},
          {"rundll32.exe", 1, {F("read", kFile, 5, true), F("create", kFile, 6)}},
          {"7z.exe", 0, {F("read", kFile, 8), F("delete", kFile, 6)}},
          {"mimikatz.exe", 1, {F("query", kReg, 9), F("send", kSock, 6)}},
      },
      {
          {kFile, "C:/Windows/Temp/lsass.dmp"},
          {kFile, "C:/Windows/Temp/sam.save"},
          {kReg, "HKLM/SAM/SAM/Domains/Account"},
          {kReg, "HKLM/SECURITY/Policy/Secrets"},
          {kFile, "C:/Windows/System32/config/SAM"},
          {kFile, "C:/Users/Public/out.7z"},
      },
      {
          {2, "write", 0, 2}, {4, "write", 0, 1}, {3, "query", 2, 3}, {3, "query", 3, 2},
          {3, "write", 1, 1}, {5, "read", 0, 1},  {5, "read", 1, 1},  {5, "write", 5, 2},
          {6, "read", 1, 1},  {6, "query", 3, 2}, {6, "read", 4, 1},  {1, "read", 5, 1},
      }});

  t.push_back(TechniqueTemplate{
      "T1547.001",
      "Persistence",
      "Registry run keys and startup folder",
      {
          {"wscript.exe", -1, {F("read", kFile, 9), F("connect", kSock, 2), F("receive", kSock, 6)}},
          {"powershell.exe", 0, {F("write", kFile, 6), F("create", kFile, 6)}},
          {"reg.exe", 1, {F("open", kReg, 5), F("modify", kReg, 9)}},
          {"cmd.exe", 1, {F("enum", kFile, 9), F("read", kFile, 3, true)}},
          {"payload.exe", 3, {F("query", kReg, 8), F("send", kSock, 6)}},
          {"attrib.exe", 3, {F("write", kFile, 5), F("close", kFile, 8)}},
          {"regsvr32.exe", 1, {F("modify", kReg, 5), F("delete", kReg, 3)}},
      },
      {
          {kReg, "HKCU/Software/Microsoft/Windows/CurrentVersion/Run"},
          {kReg, "HKLM/Software/Microsoft/Windows/CurrentVersion/RunOnce"},
          {kFile, "C:/Users/user/AppData/Roaming/Microsoft/Windows/Start Menu/Programs/Startup/update.lnk"},
          {kFile, "C:/Users/Public/payload.exe"},
      },
      {
          {1, "write", 3, 1}, {1, "write", 2, 1}, {2, "modify", 0, 3}, {2, "modify", 1, 2},
          {4, "read", 3, 1},  {5, "write", 2, 1}, {3, "read", 3, 1},   {4, "query", 0, 1},
      }});

  t.push_back(TechniqueTemplate{
      "T1053.005",
      "Persistence",
      "Scheduled task creation and execution",
      {
          {"cmd.exe", -1, {F("read", kFile, 3, true), F("write", kFile, 5), F("create", kFile, 5)}},
          {"schtasks.exe", 0, {F("create", kFile, 5), F("open", kReg, 6)}},
          {"taskhostw.exe", 1, {F("read", kFile, 3, true), F("enumerate", kReg, 8)}},
          {"updater.exe", 2, {F("connect", kSock, 3), F("send", kSock, 9)}},
          {"conhost.exe", 3, {F("read", kFile, 5), F("delete", kFile, 6)}},
          {"whoami.exe", 3, {F("query", kReg, 8), F("enum", kFile, 6)}},
          {"net.exe", 3, {F("connect", kSock, 6), F("disconnect", kSock, 6)}},
      },
      {
          {kFile, "C:/Windows/System32/Tasks/Updater"},
          {kReg, "HKLM/SOFTWARE/Microsoft/Windows NT/CurrentVersion/Schedule/TaskCache/Tree/Updater"},
          {kFile, "C:/ProgramData/updater.exe"},
      },
      {
          {1, "write", 0, 2}, {1, "modify", 1, 3}, {2, "read", 0, 1}, {2, "query", 1, 1},
          {3, "read", 2, 1},  {0, "write", 2, 1},
      }});

  t.push_back(TechniqueTemplate{
      "T1046",
      "Discovery",
      "Network service scanning",
      {
          {"powershell.exe", -1, {F("read", kFile, 6), F("write", kFile, 5), F("create", kFile, 3)}},
          {"nmap.exe", 0, {F("connect", kSock, 27), F("receive", kSock, 9)}},
          {"ping.exe", 0, {F("send", kSock, 12), F("receive", kSock, 9)}},
          {"arp.exe", 0, {F("query", kReg, 6, true), F("read", kFile, 3, true), F("enumerate", kReg, 6)}},
          {"nbtstat.exe", 0, {F("send", kSock, 8), F("retransmit", kSock, 6)}},
          {"cmd.exe", 0, {F("create", kFile, 5), F("enum", kFile, 6)}},
          {"portqry.exe", 0, {F("connect", kSock, 12), F("disconnect", kSock, 12)}},
      },
      {
          {kFile, "C:/Users/Public/scan.txt"},
      },
      {
          {1, "write", 0, 2}, {2, "write", 0, 1}, {4, "write", 0, 1}, {5, "read", 0, 1},
          {0, "read", 0, 1},
      }});

  t.push_back(TechniqueTemplate{
      "T1012",
      "Discovery",
      "Registry reconnaissance",
      {
          {"cmd.exe", -1, {F("read", kFile, 3, true), F("enum", kFile, 6)}},
          {"reg.exe", 0, {F("open", kReg, 8), F("query", kReg, 15), F("close", kReg, 8)}},
          {"reg.exe", 0, {F("enumerate", kReg, 12), F("query", kReg, 8)}},
          {"powershell.exe", 0, {F("query", kReg, 9), F("enumerate", kReg, 6), F("write", kFile, 3)}},
          {"systeminfo.exe", 0, {F("query", kReg, 8, true), F("read", kFile, 5, true), F("enumerate", kReg, 5)}},
          {"findstr.exe", 3, {F("read", kFile, 6), F("enum", kFile, 5)}},
          {"wmic.exe", 0, {F("query", kReg, 12), F("open", kReg, 6)}},
      },
      {
          {kReg, "HKLM/SYSTEM/CurrentControlSet/Control/ComputerName"},
          {kReg, "HKLM/SOFTWARE/Microsoft/Windows NT/CurrentVersion"},
          {kFile, "C:/Users/Public/reg.txt"},
      },
      {
          {1, "query", 0, 2}, {2, "query", 1, 2}, {3, "query", 0, 1}, {4, "query", 1, 1},
          {3, "write", 2, 1}, {5, "read", 2, 1},  {0, "read", 2, 1},
      }});

  t.push_back(TechniqueTemplate{
      "T1071",
      "Command and Control",
      "Application layer protocol beaconing",
      {
          {"rundll32.exe", -1, {F("read", kFile, 5, true), F("query", kReg, 2, true), F("create", kFile, 3)}},
          {"beacon.exe", 0, {F("read", kFile, 3), F("reconnect", kSock, 6)}},
          {"cmd.exe", 1, {F("read", kFile, 6), F("write", kFile, 5)}},
          {"powershell.exe", 1, {F("write", kFile, 5), F("copy", kSock, 6)}},
          {"certutil.exe", 2, {F("write", kFile, 3), F("receive", kSock, 6)}},
          {"curl.exe", 2, {F("connect", kSock, 3), F("send", kSock, 5)}},
          {"nslookup.exe", 1, {F("send", kSock, 6), F("retransmit", kSock, 5)}},
      },
      {
          {kSock, "203.0.113.10:443"},
          {kSock, "203.0.113.11:8080"},
          {kFile, "C:/Users/Public/stage.bin"},
      },
      {
          {1, "connect", 0, 1}, {1, "send", 0, 12}, {1, "receive", 0, 12},
          {3, "connect", 1, 1}, {3, "send", 1, 6},  {4, "receive", 1, 4},
          {4, "write", 2, 1},   {2, "read", 2, 1},  {5, "send", 0, 3},
      }});
  return t;
}

ScenarioSpec DefaultScenarioSpec(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.templates = DefaultTemplates();
  spec.seed = seed;
  return spec;
}

std::string DefaultBlacklistText() {
  return "# Sensitive objects for the default synthetic suite.\n"
         "file.user_info C:/Windows/System32/config/SAM\n"
         "file.user_info C:/Windows/Temp/sam.save\n"
         "file.system_info C:/Windows/Temp/lsass.dmp\n"
         "file.scheduled_task C:/Windows/System32/Tasks/*\n"
         "file.uploaded C:/Users/Public/payload.exe\n"
         "registry.user_info HKLM/SAM/*\n"
         "registry.user_info HKLM/SECURITY/*\n"
         "registry.scheduled_task HKLM/SOFTWARE/Microsoft/Windows NT/CurrentVersion/Schedule/*\n"
         "registry.scheduled_task HKCU/Software/Microsoft/Windows/CurrentVersion/Run\n"
         "registry.scheduled_task HKLM/Software/Microsoft/Windows/CurrentVersion/RunOnce\n"
         "registry.system_info HKLM/SYSTEM/CurrentControlSet/Control/ComputerName\n"
         "registry.system_info HKLM/SOFTWARE/Microsoft/Windows NT/CurrentVersion\n"
         "command.sensitive mimikatz.exe\n"
         "address.untrusted 203.0.113.*\n";
}

namespace {

void CheckOperation(const std::string& where, const std::string& operation, EntityType object) {
  try {
    EdgeTypeOf(kProc, operation, object);
  } catch (const DataError& e) {
    throw InvalidArgument(where + e.what());
  }
}

}  // namespace

void ValidateScenario(const ScenarioSpec& spec) {
  if (spec.templates.size() < 2) throw InvalidArgument("a scenario needs at least two templates");
  if (spec.samples_per_class < 1) throw InvalidArgument("samples_per_class must be positive");
  if (spec.train_per_class < 0 || spec.train_per_class > spec.samples_per_class) {
    throw InvalidArgument("train_per_class must lie in [0, samples_per_class]");
  }
  if (!(spec.background >= 0.0) || !std::isfinite(spec.background)) {
    throw InvalidArgument("background intensity must be finite and >= 0");
  }
  if (!(spec.noise >= 0.0 && spec.noise < 1.0)) throw InvalidArgument("noise must lie in [0, 1)");
  std::set<std::string> ids;
  for (const TechniqueTemplate& t : spec.templates) {
    const std::string where = "template " + t.technique + ": ";
    if (t.technique.empty() || t.tactic.empty()) {
      throw InvalidArgument("template with an empty technique or tactic");
    }
    if (!ids.insert(t.technique).second) throw InvalidArgument(where + "duplicate technique");
    if (t.roles.empty()) throw InvalidArgument(where + "no roles");
    for (std::size_t r = 0; r < t.roles.size(); ++r) {
      const RoleSpec& role = t.roles[r];
      if (role.image.empty()) throw InvalidArgument(where + "role with an empty image");
      if (role.parent >= static_cast<int>(r) || role.parent < -1) {
        throw InvalidArgument(where + "role " + std::to_string(r) +
                              " must have an earlier parent or -1");
      }
      for (const Fanout& f : role.fanout) {
        if (f.count < 0) throw InvalidArgument(where + "negative fan-out count");
        if (f.object == kProc) throw InvalidArgument(where + "fan-out to processes");
        CheckOperation(where, f.operation, f.object);
      }
    }
    for (const ArtifactUse& u : t.uses) {
      if (u.role < 0 || u.role >= static_cast<int>(t.roles.size()) || u.artifact < 0 ||
          u.artifact >= static_cast<int>(t.artifacts.size())) {
        throw InvalidArgument(where + "artifact use refers to a missing role or artifact");
      }
      if (u.repeat < 1) throw InvalidArgument(where + "artifact repeat must be positive");
      CheckOperation(where, u.operation, t.artifacts[static_cast<std::size_t>(u.artifact)].type);
    }
  }
}

LabeledDataset GenerateScenario(const ScenarioSpec& spec) {
  ValidateScenario(spec);
  LabeledDataset out;
  for (const TechniqueTemplate& tpl : spec.templates) {
    for (int k = 0; k < spec.samples_per_class; ++k) {
      LabeledGraph g;
      char index[16];
      std::snprintf(index, sizeof(index), "%02d", k);
      g.id = tpl.technique + "-" + index;
      g.label = TechniqueLabel{tpl.technique, tpl.tactic};
      g.train = k < spec.train_per_class;

      Rng rng(DeriveSeed(spec.seed, "scenario/" + g.id));
      GraphWriter w(rng, spec.noise);
      const std::vector<std::string> hosts = WriteBackground(w, spec.background);

      std::vector<std::string> procs;
      std::vector<std::int64_t> clock;
      std::map<std::string, std::set<std::string>> touched;  // object -> motif processes
      std::int64_t t = static_cast<std::int64_t>(rng.Index(40000000));
      for (const RoleSpec& role : tpl.roles) {
        const std::string proc = w.NewProcess(role.image);
        if (role.parent >= 0) {
          t = w.Launch(procs[static_cast<std::size_t>(role.parent)], proc,
                       clock[static_cast<std::size_t>(role.parent)] + 1);
        } else if (!hosts.empty()) {
          t = w.Launch(hosts[rng.Index(hosts.size())], proc, t);
        }
        procs.push_back(proc);
        clock.push_back(w.Behave(proc, role.fanout, t, "m" + std::to_string(procs.size()),
                                 &touched));
      }
      for (const ArtifactUse& u : tpl.uses) {
        const Artifact& a = tpl.artifacts[static_cast<std::size_t>(u.artifact)];
        const std::string object = ArtifactId(a);
        const auto r = static_cast<std::size_t>(u.role);
        for (int n = 0; n < w.Jitter(u.repeat); ++n) {
          clock[r] = w.Emit(procs[r], u.operation, object, a.type, clock[r]);
        }
        touched[object].insert(procs[r]);
      }
      g.events = w.TakeEvents();
      g.graph = BuildGraph(g.events);
      g.truth_nois = procs;
      std::sort(g.truth_nois.begin(), g.truth_nois.end());
      std::set<std::string> nodes(procs.begin(), procs.end());
      for (const auto& [object, users] : touched) {
        if (users.size() >= 2) nodes.insert(object);
      }
      g.truth_nodes.assign(nodes.begin(), nodes.end());
      out.graphs.push_back(std::move(g));
    }
  }
  return out;
}

TechniqueSubgraph TruthSubgraph(const LabeledGraph& g) {
  std::vector<std::size_t> members;
  members.reserve(g.truth_nodes.size());
  for (const std::string& id : g.truth_nodes) members.push_back(g.graph.index_of(id));
  TechniqueSubgraph sub = MakeSubgraph(g.graph, InitFeatures(g.graph), members);
  sub.nois = g.truth_nois;
  sub.seed = g.graph.node(SelectSeed(g.graph, [&] {
                       std::vector<std::size_t> idx;
                       for (const std::string& id : g.truth_nois) idx.push_back(g.graph.index_of(id));
                       return idx;
                     }()))
                 .id;
  sub.label = g.label;
  return sub;
}

}  // namespace tsgrec
