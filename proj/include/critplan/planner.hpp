// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "critplan/critics.hpp"
#include "critplan/generation.hpp"
#include "critplan/mdp.hpp"
#include "critplan/retrieval.hpp"

namespace critplan {

struct PlannerConfig {
  std::size_t horizon = kDefaultHorizon;
  SamplingConfig sampling;
  std::size_t final_retrieval_k = 10;
};

struct PlannerBackends {
  const GeneratorBackend* generator = nullptr;
  const Corpus* corpus = nullptr;
  const AnswerDetector* detector = nullptr;  // fenced-block sentinel when null
  const PromptSet* prompts = &PromptSet::builtin();
  RetryPolicy retry;
  std::optional<std::uint64_t> seed;
};

enum class Termination { kAnswerDetected, kHorizonForced, kFinalRetrieval };

const char* to_string(Termination t) noexcept;

struct ScoredCandidate {
  Observation observation;
  double score = 0.0;
};

/// One argmax over candidates. `step` is the index the chosen observation
/// would occupy in the trajectory.
struct Decision {
  std::size_t step = 0;
  CriticKind kind = CriticKind::kSubGoal;
  std::vector<ScoredCandidate> candidates;
  std::size_t chosen = 0;
  /// The chosen sub-goal produced no candidates and was masked.
  bool backtracked = false;
};

struct SolveResult {
  explicit SolveResult(State t) : trajectory(std::move(t)) {}

  std::string final_answer;
  Termination terminated_by = Termination::kAnswerDetected;
  State trajectory;
  std::vector<Decision> decisions;
  std::size_t backtracks = 0;
};

struct RankingResult {
  explicit RankingResult(SolveResult t) : trace(std::move(t)) {}

  std::vector<std::string> doc_ids;
  std::string query;
  /// No Retrieve was selected; `query` is the best-scored generated query or
  /// the problem statement.
  bool fallback = false;
  SolveResult trace;
};

/// Critic-guided inference loop. At root/execution states every legal
/// sub-goal is scored and the argmax marker is appended; at sub-goal states
/// the candidates are scored and the argmax appended. Ties go to the lower
/// candidate index (sub-goal order reasoning, querying, retrieving). A
/// sub-goal with no candidates is masked and the decision repeated; when all
/// are masked the solve fails with Error(kPlanningFailure).
SolveResult solve(const ProblemInstance& problem, const CriticSet& critics,
                  const PlannerBackends& backends, const PlannerConfig& cfg);

/// Runs the same loop until the critics select Retrieve, then returns the
/// top `final_retrieval_k` documents for the pending query.
RankingResult solve_for_ranking(const ProblemInstance& problem, const CriticSet& critics,
                                const PlannerBackends& backends, const PlannerConfig& cfg);

/// {problem_id, step, kind, candidate_digest, score, chosen, backtracked}
/// per candidate.
std::string score_table(const ProblemInstance& problem, const std::vector<Decision>& decisions);

}  // namespace critplan
