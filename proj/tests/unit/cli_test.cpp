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

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / ("tsgrec_cli_" + std::to_string(::getpid()));

const char* const kSmall =
    " --seed 3 --set encoder.hidden=16 --set encoder.epochs=40 --set matcher.dim=16"
    " --set matcher.epochs=10 --set noi.num_trees=50 --set scenario.train_per_class=2"
    " --set scenario.samples_per_class=4";

struct Result {
  int code;
  std::string out;
};

Result Run(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path out = kWork / "stdout.txt";
  const std::string cmd = "cd '" + kWork.string() + "' && '" TSGREC_CLI "' " + args + " > '" + out.string() +
                          "' 2> /dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream buf;
  buf << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, buf.str()};
}

json LastJsonLine(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '{') last = line;
  }
  return json::parse(last);
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(Run("").code == 1);
  CHECK(Run("frobnicate").code == 1);
  CHECK(Run("ingest").code == 1);
  CHECK(Run("evaluate --mode sideways").code == 1);
  CHECK(Run("generate --set nonsense").code == 1);
  CHECK(Run("generate --set sampler.lambada=2").code == 1);
  CHECK(Run("--version").code == 0);
  CHECK(Run("--help").code == 0);
}

TEST_CASE("data and model errors exit 2 and 3") {
  const Result r = Run("ingest --events /nonexistent/events.jsonl --out r0");
  CHECK(r.code == 2);
  const json doc = LastJsonLine(r.out);
  CHECK(doc["status"] == "error");
  CHECK(doc["exit_code"] == 2);
  CHECK(Run("train-encoder --data /nonexistent/data --out m0").code == 2);
  fs::create_directories(kWork / "empty");
  CHECK(Run("recognize --models empty --subgraphs x.json --out r1").code == 3);
  std::ofstream(kWork / "empty" / "matcher.json") << "{\"format_version\": 1}";
  std::ofstream(kWork / "empty" / "exemplars.json") << "{";
  CHECK(Run("recognize --models empty --subgraphs x.json --out r2").code == 3);
}

TEST_CASE("staged run from generation to evaluation") {
  const std::string small = kSmall;
  Result r = Run("generate --out data" + small);
  REQUIRE(r.code == 0);
  CHECK(LastJsonLine(r.out)["graphs"] == 24);
  CHECK(fs::exists(kWork / "data" / "manifest.json"));
  CHECK(fs::exists(kWork / "data" / "blacklist.txt"));
  CHECK(Run("generate --out data" + small).code == 1);

  REQUIRE(Run("train-encoder --data data --out models" + small).code == 0);
  CHECK(Run("sample --truth --data data --out early" + small).code == 0);
  CHECK(Run("detect-noi --graph data/graphs/x.json --models models --out r3" + small).code == 3);
  r = Run("detect-noi --data data --models models --out models" + small);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(kWork / "models" / "forest.json"));
  CHECK(LastJsonLine(r.out)["noi_metrics"].contains("precision"));
  REQUIRE(Run("train-matcher --data data --out models" + small).code == 0);
  for (const char* part : {"encoder", "forest", "matcher", "exemplars"}) {
    CHECK(fs::exists(kWork / "models" / (std::string(part) + ".json")));
  }

  fs::path graph;
  for (const auto& entry : fs::directory_iterator(kWork / "data" / "graphs")) graph = entry.path();
  REQUIRE_FALSE(graph.empty());
  r = Run("detect-noi --graph '" + graph.string() + "' --models models --out reports" + small);
  CHECK(r.code == 0);
  CHECK(fs::exists(kWork / "reports" / "noi-report.json"));
  CHECK(Run("sample --graph '" + graph.string() + "' --models models --out sampled" + small).code == 0);
  CHECK(fs::exists(kWork / "sampled" / "subgraphs.json"));

  REQUIRE(Run("sample --truth --data data --out truth" + small).code == 0);
  r = Run("recognize --models models --subgraphs truth/subgraphs.json --out rec" + small);
  CHECK(r.code == 0);
  CHECK(LastJsonLine(r.out)["results"].size() == 24);

  r = Run("evaluate --data data --models models --out eval" + small);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Raw_Graph") != std::string::npos);
  const json ev = json::parse(std::ifstream(kWork / "eval" / "evaluation.json"));
  CHECK(ev["modes"].size() == 3);
  CHECK(Run("evaluate --data data --models models --out eval" + small).code == 1);
  CHECK(Run("evaluate --data data --models models --out eval --overwrite --mode true" + small).code == 0);

  std::ofstream(kWork / "events.jsonl") << std::ifstream(TSGREC_TEST_DATA "/rule_trace.jsonl").rdbuf();
  r = Run("baseline --events events.jsonl --blacklist '" TSGREC_TEST_DATA "/rule_trace_blacklist.txt' --out base");
  CHECK(r.code == 0);
  CHECK(fs::exists(kWork / "base" / "alerts.jsonl"));
  r = Run("ingest --events events.jsonl --out ing");
  CHECK(r.code == 0);
  CHECK(LastJsonLine(r.out)["ingest"]["rejected"] == 2);

  fs::remove_all(kWork);
}
