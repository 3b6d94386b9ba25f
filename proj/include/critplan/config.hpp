// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "critplan/critics.hpp"
#include "critplan/eval.hpp"
#include "critplan/generation.hpp"
#include "critplan/mcts.hpp"
#include "critplan/planner.hpp"
#include "critplan/retrieval.hpp"

namespace critplan {

/// Artifact locations. Relative entries are resolved against the config
/// file's directory.
struct PathsConfig {
  std::string corpus_dir;    // plain-text documents, one per file
  std::string corpus_jsonl;  // alternative: {"id","text"} lines
  std::string index = "index.bm25";
  std::string problems = "problems.jsonl";
  std::string pairs_dir = "pairs";
  std::string critics_dir = "critics";
  std::string trees_dir = "trees";
  std::string results = "results.jsonl";
  std::string logs_dir = "logs";
  std::string report = "report.jsonl";
  std::string judgments;
  std::string prompts_dir;  // empty = built-in templates
};

struct GeneratorConfig {
  std::string backend = "scripted";  // scripted | http
  std::string script;
  HttpEndpoint endpoint;
  RetryPolicy retry;
};

struct CriticsConfig {
  std::string backend = "trained";  // trained | constant | lookup | http
  double constant_value = 0.0;
  std::string lookup;
  double lookup_fallback = 0.0;
  HttpEndpoint endpoint{"", "/score", std::chrono::milliseconds(30000), ""};
};

struct OracleConfig {
  std::string kind = "exact_match";  // exact_match | constant
  double value = 0.0;
};

struct DetectorConfig {
  std::string kind = "sentinel";  // sentinel | regex
  std::string open = "```";
  std::string close = "```";
  std::string pattern;
};

struct CheckerConfig {
  std::string kind = "normalized_match";  // normalized_match | command
  std::string command;
};

struct EngineConfig {
  std::string base_dir = ".";
  PathsConfig paths;
  GeneratorConfig generator;
  CriticsConfig critics;
  OracleConfig oracle;
  SamplingConfig sampling;
  MctsConfig mcts;
  ExtractOptions extract;
  PlannerConfig planner;
  DetectorConfig detector;
  Bm25Params bm25;
  TrainingOptions training;
  CheckerConfig checker;
  std::uint64_t seed = 0;
  unsigned parallel = 1;

  /// Parses the JSON config text. Unknown keys and ill-typed values throw
  /// Error(kConfiguration). Environment overrides are applied afterwards.
  static EngineConfig parse(std::string_view text, const std::string& base_dir,
                            const std::string& source = "<config>");
  static EngineConfig load(const std::string& path);

  /// Applies one dotted-key override, e.g. ("critics.backend", "\"constant\"").
  void set(const std::string& dotted_key, std::string_view json_value);

  /// Resolved configuration as canonical JSON (api keys redacted).
  std::string to_json() const;

  /// Absolute or base_dir-relative resolution of a configured path.
  std::string resolve(const std::string& path) const;

  std::unique_ptr<AnswerDetector> make_detector() const;
  std::unique_ptr<RewardOracle> make_oracle() const;
  std::unique_ptr<AnswerChecker> make_checker() const;
  std::unique_ptr<GeneratorBackend> make_generator() const;
  PromptSet make_prompts() const;
};

/// Environment variables consulted after parsing:
///   CRITPLAN_GENERATOR_URL, CRITPLAN_CRITIC_URL, CRITPLAN_API_KEY
void apply_environment(EngineConfig& config);

}  // namespace critplan
