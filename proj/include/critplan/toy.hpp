// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "critplan/eval.hpp"
#include "critplan/generation.hpp"
#include "critplan/mdp.hpp"
#include "critplan/retrieval.hpp"

namespace critplan {

/// Self-contained synthetic suites with a scripted generator whose outcomes
/// are known, for closed-loop tests and demos.
///
/// answer: "[toy-NNNN] Compute a + b * c." Step one offers one rationale
/// that applies operator precedence among `candidates` choices; step two
/// (after it) offers the fenced correct total among wrong totals. Any wrong
/// rationale leads to a wrong conclusion.
///
/// ranking: each problem describes surface symptoms of a hidden topic. The
/// gold document shares tokens only with the correct reformulated query,
/// never with the statement.
struct ToySpec {
  std::size_t problems = 50;
  std::size_t candidates = 3;  // per sampling call, 2..4
  std::uint64_t seed = 0;
  std::size_t first_index = 0;  // problem ids start here
};

struct ToySuite {
  std::string kind;  // "answer" or "ranking"
  std::vector<ProblemInstance> problems;
  ScriptedGenerator generator;
  std::vector<Document> documents;
  RelevanceJudgments judgments;  // ranking only
  /// Observation texts on the known-correct path, per problem_id.
  std::map<std::string, std::set<std::string>> correct_texts;
};

ToySuite make_answer_toy(const ToySpec& spec);
ToySuite make_ranking_toy(const ToySpec& spec);
ToySuite make_toy(const std::string& kind, const ToySpec& spec);

/// Writes problems.jsonl, script.jsonl, corpus/<doc_id>, judgments.jsonl
/// (ranking) and a ready-to-run config.json under `dir`.
void write_toy_suite(const ToySuite& suite, const std::string& dir);

}  // namespace critplan
