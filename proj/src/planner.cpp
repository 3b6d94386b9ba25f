// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/planner.hpp"

#include <nlohmann/json.hpp>
#include <set>

#include "critplan/error.hpp"
#include "critplan/mcts.hpp"
#include "critplan/text.hpp"

namespace critplan {

using ordered_json = nlohmann::ordered_json;

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::kAnswerDetected: return "answer_detected";
    case Termination::kHorizonForced: return "horizon_forced";
    case Termination::kFinalRetrieval: return "final_retrieval";
  }
  return "?";
}

namespace {

const AnswerDetector& detector_of(const PlannerBackends& backends) {
  static const SentinelDetector fallback;
  return backends.detector ? *backends.detector : fallback;
}

std::size_t argmax(const std::vector<ScoredCandidate>& scored) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    if (scored[i].score > scored[best].score) best = i;
  }
  return best;
}

struct Loop {
  const ProblemInstance& problem;
  const CriticSet& critics;
  const PlannerBackends& backends;
  const PlannerConfig& cfg;
  bool stop_at_retrieve = false;

  GenerationContext generation;
  SolveResult result;
  bool retrieve_selected = false;
  std::optional<ScoredCandidate> best_query;

  Loop(const ProblemInstance& p, const CriticSet& c, const PlannerBackends& b, const PlannerConfig& k,
       bool ranking)
      : problem(p), critics(c), backends(b), cfg(k), stop_at_retrieve(ranking),
        result(State::root(p, k.horizon)) {
    require(cfg.horizon >= 2, "planner horizon must be at least 2");
    require(cfg.sampling.k >= 1, "sampling k must be at least 1");
    require(backends.generator != nullptr, "planner needs a generator backend");
    generation.backend = backends.generator;
    generation.prompts = backends.prompts;
    generation.sampling = cfg.sampling;
    generation.retry = backends.retry;
    generation.seed = backends.seed;
  }

  void run() {
    const AnswerDetector& detector = detector_of(backends);
    CandidateSource source(generation, backends.corpus, cfg.sampling.k);
    State state = result.trajectory;
    std::set<SubGoal> masked;

    while (!is_terminal(state, detector)) {
      // Sub-goal selection.
      std::vector<Action> actions;
      for (auto& a : subgoal_actions(state)) {
        if (!masked.count(std::get<ChooseSubGoal>(a).target)) actions.push_back(std::move(a));
      }
      if (actions.empty()) {
        fail(ErrorCode::kPlanningFailure,
             "problem " + problem.problem_id + ": every sub-goal at step " +
                 std::to_string(state.step_index() + 1) + " produced no candidates");
      }
      Decision goal{state.step_index() + 1, CriticKind::kSubGoal, {}, 0, false};
      for (const auto& a : actions) {
        goal.candidates.push_back(ScoredCandidate{f_rule(state, a), reward(state, a, critics)});
      }
      goal.chosen = argmax(goal.candidates);
      const Action& picked = actions[goal.chosen];
      const SubGoal target = std::get<ChooseSubGoal>(picked).target;

      if (stop_at_retrieve && target == SubGoal::kRetrieving) {
        result.decisions.push_back(std::move(goal));
        retrieve_selected = true;
        result.trajectory = state;
        return;
      }

      State pending = apply(state, picked, goal.candidates[goal.chosen].observation);
      if (is_terminal(pending, detector)) {
        result.decisions.push_back(std::move(goal));
        state = pending;
        break;
      }

      auto candidates = source.candidates(pending);
      if (candidates.empty()) {
        goal.backtracked = true;
        result.decisions.push_back(std::move(goal));
        ++result.backtracks;
        masked.insert(target);
        continue;
      }
      result.decisions.push_back(std::move(goal));
      state = pending;

      // Execution selection.
      auto options = action_space(state, candidates);
      Decision exec{state.step_index() + 1, critic_kind_for_state(state.last_observation()), {}, 0,
                    false};
      for (std::size_t i = 0; i < options.size(); ++i) {
        exec.candidates.push_back(ScoredCandidate{candidates[i], reward(state, options[i], critics)});
      }
      exec.chosen = argmax(exec.candidates);
      if (exec.kind == CriticKind::kQuery) {
        const auto& top = exec.candidates[exec.chosen];
        if (!best_query || top.score > best_query->score) best_query = top;
      }
      state = apply(state, options[exec.chosen], candidates[exec.chosen]);
      result.decisions.push_back(std::move(exec));
      masked.clear();
    }

    result.trajectory = state;
    const Observation* last = state.last_observation();
    if (last != nullptr && detector.contains_answer(*last)) {
      result.final_answer = last->text;
      result.terminated_by = Termination::kAnswerDetected;
    } else {
      result.final_answer = conclude(state, generation);
      result.terminated_by = Termination::kHorizonForced;
    }
    validate(result.trajectory);
  }
};

}  // namespace

SolveResult solve(const ProblemInstance& problem, const CriticSet& critics,
                  const PlannerBackends& backends, const PlannerConfig& cfg) {
  Loop loop(problem, critics, backends, cfg, false);
  loop.run();
  return std::move(loop.result);
}

RankingResult solve_for_ranking(const ProblemInstance& problem, const CriticSet& critics,
                                const PlannerBackends& backends, const PlannerConfig& cfg) {
  require(problem.task_kind == TaskKind::kRetrievalRanking,
          "solve_for_ranking needs a retrieval_ranking problem");
  require(backends.corpus != nullptr, "solve_for_ranking needs a corpus");
  require(cfg.final_retrieval_k >= 1, "final_retrieval_k must be at least 1");
  Loop loop(problem, critics, backends, cfg, true);
  loop.run();

  RankingResult out(loop.result);
  if (loop.retrieve_selected) {
    const Observation* query = pending_query(loop.result.trajectory);
    require(query != nullptr, "Retrieve selected without a pending query");
    out.query = query->text;
    out.trace.terminated_by = Termination::kFinalRetrieval;
  } else {
    out.fallback = true;
    out.query = loop.best_query ? loop.best_query->observation.text : problem.statement;
  }
  validate(out.trace.trajectory);
  try {
    for (const auto& hit : backends.corpus->search(out.query, cfg.final_retrieval_k)) {
      out.doc_ids.push_back(backends.corpus->document(hit.doc_index).doc_id);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyQuery) throw;
  }
  return out;
}

std::string score_table(const ProblemInstance& problem, const std::vector<Decision>& decisions) {
  std::string out;
  for (const auto& d : decisions) {
    for (std::size_t i = 0; i < d.candidates.size(); ++i) {
      ordered_json j;
      j["problem_id"] = problem.problem_id;
      j["step"] = d.step;
      j["kind"] = to_string(d.kind);
      j["candidate_digest"] = digest(d.candidates[i].observation.text);
      j["score"] = d.candidates[i].score;
      j["chosen"] = i == d.chosen;
      j["backtracked"] = i == d.chosen && d.backtracked;
      out += j.dump() + "\n";
    }
  }
  return out;
}

}  // namespace critplan
