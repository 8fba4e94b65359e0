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

// tsgrec: command-line driver over the C API.
//
// Every subcommand writes its artifacts plus a machine-readable
// <command>.log.json into the output directory and echoes the log to stdout.
// Existing files are never replaced without --overwrite.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tsgrec/tsgrec.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitModel = 3;
constexpr int kExitInternal = 4;

struct Failure {
  int code;
  std::string message;
};

int ExitCodeOf(tsgrec_status status) {
  switch (status) {
    case TSGREC_INVALID_ARGUMENT: return kExitUsage;
    case TSGREC_DATA_ERROR: return kExitData;
    case TSGREC_MODEL_ERROR: return kExitModel;
    default: return kExitInternal;
  }
}

void Check(tsgrec_status status, const std::string& context) {
  if (status != TSGREC_OK) {
    throw Failure{ExitCodeOf(status), context + ": " + tsgrec_last_error()};
  }
}

struct CStr {
  char* p = nullptr;
  ~CStr() { tsgrec_string_free(p); }
  std::string str() const { return p == nullptr ? std::string() : std::string(p); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};

using Config = Handle<tsgrec_config, tsgrec_config_free>;
using Dataset = Handle<tsgrec_dataset, tsgrec_dataset_free>;
using Graph = Handle<tsgrec_graph, tsgrec_graph_free>;
using Models = Handle<tsgrec_models, tsgrec_models_free>;

const char* const kParts[] = {"encoder", "forest", "matcher", "exemplars"};

struct Options {
  std::string config_path;
  std::optional<long long> seed;
  std::vector<std::string> overrides;
  std::string out;
  std::string data;
  std::string models;
  bool overwrite = false;

  std::string events;
  std::string graph;
  std::string subgraphs;
  std::string add_exemplar;
  std::string blacklist;
  std::string mode = "all";
  bool truth = false;
};

class Run {
 public:
  Run(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt) {
    if (!opt.config_path.empty()) {
      Check(tsgrec_config_load(opt.config_path.c_str(), &config_.p), "--config");
    } else {
      Check(tsgrec_config_new(&config_.p), "config");
    }
    if (opt.seed) Check(tsgrec_config_set(config_.p, "seed", std::to_string(*opt.seed).c_str()), "--seed");
    for (const std::string& kv : opt.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw Failure{kExitUsage, "--set expects key=value, got '" + kv + "'"};
      }
      Check(tsgrec_config_set(config_.p, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()),
            "--set " + kv);
    }
    CStr text;
    Check(tsgrec_config_to_json(config_.p, &text.p), "config");
    config_json_ = json::parse(text.str());
    log_ = {{"command", command_}, {"version", tsgrec_version()}, {"seed", config_json_["seed"]}};
  }

  const tsgrec_config* config() const { return config_.p; }

  std::string DataDir() const {
    return opt_.data.empty() ? config_json_["paths"]["data"].get<std::string>() : opt_.data;
  }
  std::string ModelsDir() const {
    return opt_.models.empty() ? config_json_["paths"]["models"].get<std::string>() : opt_.models;
  }
  std::string OutDir(const char* fallback_key) const {
    return opt_.out.empty() ? config_json_["paths"][fallback_key].get<std::string>() : opt_.out;
  }

  // Fails before any work when an output exists and --overwrite is absent.
  fs::path Output(const std::string& dir, const std::string& name) {
    fs::path p = fs::path(dir) / name;
    if (!opt_.overwrite && fs::exists(p)) {
      throw Failure{kExitUsage, "'" + p.string() + "' already exists (pass --overwrite to replace it)"};
    }
    planned_.push_back(p);
    return p;
  }

  void Write(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw Failure{kExitData, "cannot create '" + path.parent_path().string() + "': " + ec.message()};
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      if (!out) throw Failure{kExitData, "cannot write '" + tmp.string() + "'"};
    }
    fs::rename(tmp, path, ec);
    if (ec) throw Failure{kExitData, "cannot write '" + path.string() + "': " + ec.message()};
    Record(path);
  }

  void Record(const fs::path& path) { outputs_.push_back(path.string()); }

  void LoadModels(tsgrec_models* models, std::initializer_list<const char*> required) {
    const std::string dir = ModelsDir();
    for (const char* part : kParts) {
      const fs::path p = fs::path(dir) / (std::string(part) + ".json");
      if (fs::exists(p)) {
        Check(tsgrec_models_load_part(models, part, p.string().c_str()), p.string());
      }
    }
    for (const char* part : required) {
      if (!tsgrec_models_has_part(models, part)) {
        throw Failure{kExitModel, std::string("missing model part '") + part + "' in '" + dir +
                                      "' (run the stage that trains it first)"};
      }
    }
  }

  void LoadDataset(Dataset& ds) {
    const std::string dir = DataDir();
    Check(tsgrec_dataset_load(dir.c_str(), &ds.p), "--data " + dir);
  }

  json& log() { return log_; }

  // Claims the log path up front so a refused overwrite happens before work.
  void Begin(const std::string& dir) { log_path_ = Output(dir, command_ + ".log.json"); }

  void Finish() {
    const fs::path path = log_path_;
    log_["status"] = "ok";
    log_["config"] = config_json_;
    log_["outputs"] = outputs_;
    log_["outputs"].push_back(path.string());
    Write(path, log_.dump(1) + "\n");
    json brief = log_;
    brief.erase("config");
    if (brief.contains("training")) brief["training"].erase("losses");
    std::cout << brief.dump() << "\n";
  }

 private:
  std::string command_;
  const Options& opt_;
  Config config_;
  json config_json_;
  json log_;
  std::vector<fs::path> planned_;
  fs::path log_path_;
  std::vector<std::string> outputs_;
};

json ParseLog(const CStr& s) { return s.p == nullptr ? json() : json::parse(s.str()); }

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitData, "cannot read '" + path + "'"};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void SaveParts(Run& run, tsgrec_models* models, const std::string& dir,
               std::initializer_list<const char*> parts, bool overwrite) {
  for (const char* part : parts) {
    const fs::path p = run.Output(dir, std::string(part) + ".json");
    std::error_code ec;
    fs::create_directories(dir, ec);
    Check(tsgrec_models_save_part(models, part, p.string().c_str(), overwrite ? 1 : 0), p.string());
    run.Record(p);
  }
}

void CmdGenerate(const Options& opt) {
  Run run("generate", opt);
  const std::string out = run.OutDir("data");
  run.Begin(out);
  run.Output(out, "manifest.json");
  const fs::path blacklist = run.Output(out, "blacklist.txt");
  Dataset ds;
  Check(tsgrec_dataset_generate(run.config(), &ds.p), "generate");
  Check(tsgrec_dataset_save(ds.p, out.c_str(), opt.overwrite ? 1 : 0), "--out " + out);
  run.Record(fs::path(out) / "manifest.json");
  CStr text;
  Check(tsgrec_default_blacklist(&text.p), "blacklist");
  run.Write(blacklist, text.str());
  run.log()["graphs"] = tsgrec_dataset_size(ds.p);
  run.log()["dataset"] = out;
  run.Finish();
}

void CmdIngest(const Options& opt) {
  Run run("ingest", opt);
  if (opt.events.empty()) throw Failure{kExitUsage, "ingest needs --events FILE"};
  const std::string out = run.OutDir("reports");
  run.Begin(out);
  const fs::path graph_path = run.Output(out, "graph.json");
  Graph g;
  CStr stats;
  Check(tsgrec_graph_ingest(opt.events.c_str(), &g.p, &stats.p), "--events " + opt.events);
  CStr text;
  Check(tsgrec_graph_to_json(g.p, &text.p), "ingest");
  run.Write(graph_path, text.str());
  run.log()["nodes"] = tsgrec_graph_node_count(g.p);
  run.log()["edges"] = tsgrec_graph_edge_count(g.p);
  run.log()["ingest"] = ParseLog(stats);
  run.Finish();
}

void CmdTrainEncoder(const Options& opt) {
  Run run("train-encoder", opt);
  const std::string out = opt.out.empty() ? run.ModelsDir() : opt.out;
  run.Begin(out);
  run.Output(out, "encoder.json");
  Dataset ds;
  run.LoadDataset(ds);
  Models m;
  Check(tsgrec_models_new(&m.p), "models");
  CStr log;
  Check(tsgrec_train_encoder(m.p, run.config(), ds.p, &log.p), "train-encoder");
  SaveParts(run, m.p, out, {"encoder"}, opt.overwrite);
  run.log()["training"] = ParseLog(log);
  run.Finish();
}

// Without --graph: fits the forest on the dataset's leave-malicious-out
// split. With --graph: scores that graph using the stored models.
void CmdDetectNoi(const Options& opt) {
  Run run("detect-noi", opt);
  Models m;
  Check(tsgrec_models_new(&m.p), "models");
  if (opt.graph.empty()) {
    const std::string out = opt.out.empty() ? run.ModelsDir() : opt.out;
    run.Begin(out);
    run.Output(out, "forest.json");
    const fs::path metrics_path = run.Output(out, "noi-metrics.json");
    run.LoadModels(m.p, {"encoder"});
    Dataset ds;
    run.LoadDataset(ds);
    CStr metrics;
    Check(tsgrec_fit_noi(m.p, run.config(), ds.p, &metrics.p), "detect-noi");
    SaveParts(run, m.p, out, {"forest"}, opt.overwrite);
    run.Write(metrics_path, metrics.str());
    run.log()["noi_metrics"] = ParseLog(metrics);
    run.Finish();
    return;
  }
  const std::string out = run.OutDir("reports");
  run.Begin(out);
  const fs::path report_path = run.Output(out, "noi-report.json");
  run.LoadModels(m.p, {"encoder", "forest"});
  Graph g;
  Check(tsgrec_graph_load(opt.graph.c_str(), &g.p), "--graph " + opt.graph);
  CStr report;
  Check(tsgrec_detect_noi(m.p, run.config(), g.p, &report.p), "detect-noi");
  run.Write(report_path, report.str());
  run.log()["flagged"] = json::parse(report.str())["flagged"];
  run.Finish();
}

void CmdSample(const Options& opt) {
  Run run("sample", opt);
  const std::string out = run.OutDir("reports");
  run.Begin(out);
  const fs::path path = run.Output(out, "subgraphs.json");
  CStr bundle;
  if (opt.truth) {
    Dataset ds;
    run.LoadDataset(ds);
    Check(tsgrec_dataset_truth_subgraphs(ds.p, &bundle.p), "sample --truth");
  } else {
    if (opt.graph.empty()) throw Failure{kExitUsage, "sample needs --graph FILE or --truth"};
    Models m;
    Check(tsgrec_models_new(&m.p), "models");
    run.LoadModels(m.p, {"encoder", "forest"});
    Graph g;
    Check(tsgrec_graph_load(opt.graph.c_str(), &g.p), "--graph " + opt.graph);
    Check(tsgrec_sample(m.p, run.config(), g.p, &bundle.p), "sample");
  }
  run.Write(path, bundle.str());
  run.log()["subgraphs"] = json::parse(bundle.str())["items"].size();
  run.Finish();
}

void CmdTrainMatcher(const Options& opt) {
  Run run("train-matcher", opt);
  const std::string out = opt.out.empty() ? run.ModelsDir() : opt.out;
  run.Begin(out);
  run.Output(out, "matcher.json");
  run.Output(out, "exemplars.json");
  Dataset ds;
  run.LoadDataset(ds);
  Models m;
  Check(tsgrec_models_new(&m.p), "models");
  CStr log;
  Check(tsgrec_train_matcher(m.p, run.config(), ds.p, &log.p), "train-matcher");
  SaveParts(run, m.p, out, {"matcher", "exemplars"}, opt.overwrite);
  run.log()["training"] = ParseLog(log);
  run.Finish();
}

// --add-exemplar FILE registers a new class and writes the extended exemplar
// set to the output directory; the stored set is left as it was.
void CmdRecognize(const Options& opt) {
  Run run("recognize", opt);
  const std::string out = run.OutDir("reports");
  run.Begin(out);
  Models m;
  Check(tsgrec_models_new(&m.p), "models");
  run.LoadModels(m.p, {"matcher", "exemplars"});
  if (!opt.add_exemplar.empty()) {
    const fs::path path = run.Output(out, "exemplars.json");
    Check(tsgrec_add_exemplar(m.p, ReadFile(opt.add_exemplar).c_str()), "--add-exemplar");
    Check(tsgrec_models_save_part(m.p, "exemplars", path.string().c_str(), opt.overwrite ? 1 : 0),
          path.string());
    run.Record(path);
    run.log()["added_exemplar"] = opt.add_exemplar;
    if (opt.subgraphs.empty()) {
      run.Finish();
      return;
    }
  }
  if (opt.subgraphs.empty()) throw Failure{kExitUsage, "recognize needs --subgraphs FILE"};
  const fs::path path = run.Output(out, "recognition.json");
  CStr report;
  Check(tsgrec_recognize(m.p, run.config(), ReadFile(opt.subgraphs).c_str(), &report.p),
        "recognize");
  run.Write(path, report.str());
  json summary = json::array();
  const json doc = json::parse(report.str());
  for (const json& r : doc["results"]) {
    summary.push_back({{"technique", r["technique"]}, {"tactic", r["tactic"]}});
  }
  run.log()["results"] = summary;
  run.Finish();
}

void CmdEvaluate(const Options& opt) {
  Run run("evaluate", opt);
  const std::string out = run.OutDir("reports");
  run.Begin(out);
  const fs::path path = run.Output(out, "evaluation.json");
  Dataset ds;
  run.LoadDataset(ds);
  Models m;
  Check(tsgrec_models_new(&m.p), "models");
  run.LoadModels(m.p, {"matcher", "exemplars"});
  CStr report, table;
  Check(tsgrec_evaluate(m.p, run.config(), ds.p, opt.mode.c_str(), &report.p, &table.p),
        "evaluate");
  run.Write(path, report.str());
  std::cout << table.str();
  json summary = json::array();
  const json doc = json::parse(report.str());
  for (const json& r : doc["modes"]) {
    summary.push_back({{"mode", r["mode"]}, {"metrics", r["metrics"]}});
  }
  run.log()["modes"] = summary;
  run.Finish();
}

void CmdBaseline(const Options& opt) {
  Run run("baseline", opt);
  if (opt.events.empty()) throw Failure{kExitUsage, "baseline needs --events FILE"};
  const std::string out = run.OutDir("reports");
  run.Begin(out);
  const fs::path path = run.Output(out, "alerts.jsonl");
  CStr alerts, stats;
  Check(tsgrec_baseline(opt.events.c_str(), opt.blacklist.empty() ? nullptr : opt.blacklist.c_str(),
                        &alerts.p, &stats.p),
        "baseline");
  run.Write(path, alerts.str());
  run.log()["baseline"] = ParseLog(stats);
  run.Finish();
}

// Times every stage in memory on the configured dataset. Informational.
void CmdBench(const Options& opt) {
  Run run("bench", opt);
  const std::string out = run.OutDir("reports");
  run.Begin(out);
  const fs::path path = run.Output(out, "bench.json");
  using Clock = std::chrono::steady_clock;
  json stages = json::array();
  auto timed = [&](const char* name, auto&& body) {
    const auto t0 = Clock::now();
    body();
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    stages.push_back({{"stage", name}, {"seconds", s}});
  };
  Dataset ds;
  if (opt.data.empty()) {
    timed("generate", [&] { Check(tsgrec_dataset_generate(run.config(), &ds.p), "generate"); });
  } else {
    timed("load", [&] { run.LoadDataset(ds); });
  }
  Models m;
  Check(tsgrec_models_new(&m.p), "models");
  timed("train-encoder", [&] {
    CStr log;
    Check(tsgrec_train_encoder(m.p, run.config(), ds.p, &log.p), "train-encoder");
  });
  timed("detect-noi", [&] {
    CStr metrics;
    Check(tsgrec_fit_noi(m.p, run.config(), ds.p, &metrics.p), "detect-noi");
  });
  timed("train-matcher", [&] {
    CStr log;
    Check(tsgrec_train_matcher(m.p, run.config(), ds.p, &log.p), "train-matcher");
  });
  for (const char* mode : {"true", "sampled", "raw"}) {
    const std::string name = std::string("evaluate-") + mode;
    timed(name.c_str(), [&] {
      CStr report;
      Check(tsgrec_evaluate(m.p, run.config(), ds.p, mode, &report.p, nullptr), name);
    });
  }
  double total = 0.0;
  for (const json& s : stages) total += s["seconds"].get<double>();
  const json doc{{"graphs", tsgrec_dataset_size(ds.p)}, {"stages", stages}, {"total_seconds", total}};
  run.Write(path, doc.dump(1) + "\n");
  run.log()["bench"] = doc;
  run.Finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Technique recognition over system-audit provenance graphs"};
  app.set_version_flag("--version", std::string(tsgrec_version()));
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "root seed");
    sub->add_option("--set", opt.overrides, "config override key=value, e.g. sampler.lambda=4");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_flag("--overwrite", opt.overwrite, "replace existing outputs");
  };
  auto data = [&](CLI::App* sub) { sub->add_option("--data", opt.data, "dataset directory"); };
  auto models = [&](CLI::App* sub) { sub->add_option("--models", opt.models, "model directory"); };

  std::vector<std::pair<CLI::App*, void (*)(const Options&)>> commands;
  auto add = [&](const char* name, const char* help, void (*fn)(const Options&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    common(sub);
    commands.emplace_back(sub, fn);
    return sub;
  };

  add("generate", "write the synthetic scenario suite", CmdGenerate);
  CLI::App* ingest = add("ingest", "build a provenance graph from JSON-lines events", CmdIngest);
  ingest->add_option("--events", opt.events, "event log")->required();
  data(add("train-encoder", "train the node-type encoder", CmdTrainEncoder));
  CLI::App* detect = add("detect-noi", "fit the NOI forest, or score --graph", CmdDetectNoi);
  data(detect);
  models(detect);
  detect->add_option("--graph", opt.graph, "graph JSON to score");
  CLI::App* sample = add("sample", "sample technique subgraphs from a graph", CmdSample);
  data(sample);
  models(sample);
  sample->add_option("--graph", opt.graph, "graph JSON");
  sample->add_flag("--truth", opt.truth, "export the dataset's ground-truth subgraphs instead");
  data(add("train-matcher", "train the Siamese matcher and exemplars", CmdTrainMatcher));
  CLI::App* recognize = add("recognize", "match subgraphs against the exemplars", CmdRecognize);
  models(recognize);
  recognize->add_option("--subgraphs", opt.subgraphs, "subgraph or subgraph bundle JSON");
  recognize->add_option("--add-exemplar", opt.add_exemplar, "labeled subgraph to add as a class");
  CLI::App* evaluate = add("evaluate", "end-to-end evaluation", CmdEvaluate);
  data(evaluate);
  models(evaluate);
  evaluate->add_option("--mode", opt.mode, "true | sampled | raw | all")
      ->check(CLI::IsMember({"true", "sampled", "raw", "all"}));
  CLI::App* baseline = add("baseline", "replay events through the rule engine", CmdBaseline);
  baseline->add_option("--events", opt.events, "event log")->required();
  baseline->add_option("--blacklist", opt.blacklist, "blacklist file");
  data(add("bench", "time every stage", CmdBench));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  for (const auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    try {
      fn(opt);
      return 0;
    } catch (const Failure& f) {
      std::cerr << "error: " << f.message << "\n";
      std::cout << json{{"command", sub->get_name()}, {"status", "error"}, {"exit_code", f.code},
                        {"message", f.message}}
                       .dump()
                << "\n";
      return f.code;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitInternal;
    }
  }
  return kExitUsage;
}
