// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "critplan/config.hpp"
#include "critplan/error.hpp"
#include "critplan/text.hpp"
#include "support.hpp"

using namespace critplan;
using json = nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("defaults") {
  EngineConfig c = EngineConfig::parse("{}", "/base");
  CHECK(c.sampling.k == 3);
  CHECK(c.sampling.temperature == 0.7);
  CHECK(c.planner.horizon == kDefaultHorizon);
  CHECK(c.planner.final_retrieval_k == 10);
  CHECK(c.bm25.k1 == 1.2);
  CHECK(c.bm25.b == 0.75);
  CHECK(c.mcts.max_abort_fraction == 0.25);
  CHECK(c.critics.backend == "trained");
  CHECK(c.resolve("index.bm25") == "/base/index.bm25");
  CHECK(c.resolve("/abs/x") == "/abs/x");
}

TEST_CASE("values propagate to every consumer") {
  EngineConfig c = EngineConfig::parse(R"({
    "sampling": {"k": 2, "temperature": 0.3},
    "planner": {"horizon": 12, "final_retrieval_k": 5},
    "mcts": {"iterations": 7, "exploration": 0.5},
    "training": {"epochs": 9, "learning_rate": 0.1, "dimensions": 4096, "cross_features": false},
    "seed": 77
  })", "/b");
  CHECK(c.planner.sampling.k == 2);
  CHECK(c.mcts.sampling.k == 2);
  CHECK(c.mcts.sampling.temperature == 0.3);
  CHECK(c.mcts.horizon == 12);
  CHECK(c.mcts.iterations == 7);
  CHECK(c.mcts.seed == 77);
  CHECK(c.training.seed == 77);
  CHECK(c.training.epochs == 9);
  CHECK(c.training.featurizer.dimensions == 4096u);
  CHECK_FALSE(c.training.featurizer.cross_features);
  CHECK(c.planner.final_retrieval_k == 5);
}

TEST_CASE("unknown keys and bad types are rejected") {
  try {
    EngineConfig::parse(R"({"sampling": {"kk": 2}})", ".");
    FAIL("unknown key accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfiguration);
    CHECK(std::string(e.what()).find("sampling.kk") != std::string::npos);
  }
  CHECK(code_of([] { EngineConfig::parse(R"({"typo": 1})", "."); }) == ErrorCode::kConfiguration);
  CHECK(code_of([] { EngineConfig::parse(R"({"sampling": {"k": "three"}})", "."); }) ==
        ErrorCode::kConfiguration);
  CHECK(code_of([] { EngineConfig::parse("not json", "."); }) == ErrorCode::kConfiguration);
  CHECK(code_of([] { EngineConfig::parse(R"({"critics": {"backend": "magic"}})", "."); }) ==
        ErrorCode::kConfiguration);
}

TEST_CASE("dotted overrides") {
  EngineConfig c = EngineConfig::parse("{}", "/b");
  c.set("critics.backend", "constant");
  c.set("critics.constant_value", "0.5");
  c.set("sampling.k", "4");
  CHECK(c.critics.backend == "constant");
  CHECK(c.critics.constant_value == 0.5);
  CHECK(c.mcts.sampling.k == 4);
  CHECK(code_of([&] { c.set("sampling.nope", "1"); }) == ErrorCode::kConfiguration);
  CHECK(code_of([&] { c.set("sampling.k", "\"x\""); }) == ErrorCode::kConfiguration);
  // Round trip through JSON is stable.
  EngineConfig again = EngineConfig::parse(c.to_json(), "/b");
  CHECK(again.to_json() == c.to_json());
}

TEST_CASE("environment overrides and key redaction") {
  setenv("CRITPLAN_GENERATOR_URL", "http://gen:1", 1);
  setenv("CRITPLAN_API_KEY", "sekrit", 1);
  EngineConfig c = EngineConfig::parse("{}", ".");
  unsetenv("CRITPLAN_GENERATOR_URL");
  unsetenv("CRITPLAN_API_KEY");
  CHECK(c.generator.endpoint.base_url == "http://gen:1");
  CHECK(c.generator.endpoint.api_key == "sekrit");
  CHECK(c.to_json().find("sekrit") == std::string::npos);
}

TEST_CASE("factories") {
  testing::TempDir dir("cfg");
  write_file(dir / "script.jsonl", "{\"call\":\"conclude\",\"match_all\":[],\"response\":\"x\"}\n");
  write_file(dir / "config.json", R"({"generator": {"script": "script.jsonl"},
    "planner": {"answer_detector": {"kind": "regex", "pattern": "ANSWER: \\d+"}},
    "oracle": {"kind": "constant", "value": 0.25},
    "checker": {"kind": "command", "command": "true"}})");
  EngineConfig c = EngineConfig::load(dir / "config.json");
  CHECK(c.make_generator()->conclude("p") == "x");
  auto det = c.make_detector();
  CHECK(det->contains_answer(Observation::rationale("so ANSWER: 12")));
  CHECK_FALSE(det->contains_answer(Observation::query("ANSWER: 12")));
  CHECK(c.make_oracle()->evaluate({"p", "s", "g", TaskKind::kAnswerMatch}, "") == 0.25);
  CHECK(c.make_checker()->check({"p", "s", "g", TaskKind::kAnswerMatch}, "anything"));
  CHECK(code_of([&] { EngineConfig::load(dir / "missing.json"); }) != ErrorCode::kConfiguration);

  EngineConfig bad = EngineConfig::parse(R"({"generator": {"backend": "http"}})", ".");
  CHECK(code_of([&] { bad.make_generator(); }) == ErrorCode::kConfiguration);
}
