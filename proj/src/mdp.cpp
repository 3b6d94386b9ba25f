// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/mdp.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

#include "critplan/error.hpp"
#include "critplan/text.hpp"

namespace critplan {

using ordered_json = nlohmann::ordered_json;

const char* to_string(ObservationKind kind) noexcept {
  switch (kind) {
    case ObservationKind::kReason: return "Reason";
    case ObservationKind::kGenQuery: return "GenQuery";
    case ObservationKind::kRetrieve: return "Retrieve";
    case ObservationKind::kRationale: return "Rationale";
    case ObservationKind::kQuery: return "Query";
    case ObservationKind::kDoc: return "Doc";
  }
  return "?";
}

ObservationKind observation_kind_from_string(std::string_view name) {
  for (auto kind : {ObservationKind::kReason, ObservationKind::kGenQuery, ObservationKind::kRetrieve,
                    ObservationKind::kRationale, ObservationKind::kQuery, ObservationKind::kDoc}) {
    if (name == to_string(kind)) return kind;
  }
  fail(ErrorCode::kInvalidArgument, "unknown observation kind '" + std::string(name) + "'");
}

ObservationKind execution_kind_for(ObservationKind subgoal) {
  switch (subgoal) {
    case ObservationKind::kReason: return ObservationKind::kRationale;
    case ObservationKind::kGenQuery: return ObservationKind::kQuery;
    case ObservationKind::kRetrieve: return ObservationKind::kDoc;
    default: break;
  }
  throw ContractViolation(std::string("not a sub-goal kind: ") + to_string(subgoal));
}

Observation Observation::rationale(std::string text) {
  return {ObservationKind::kRationale, std::move(text), std::nullopt};
}

Observation Observation::query(std::string text) {
  return {ObservationKind::kQuery, std::move(text), std::nullopt};
}

Observation Observation::doc(std::string doc_id, std::string text) {
  return {ObservationKind::kDoc, std::move(text), std::move(doc_id)};
}

const char* to_string(TaskKind kind) noexcept {
  return kind == TaskKind::kAnswerMatch ? "answer_match" : "retrieval_ranking";
}

TaskKind task_kind_from_string(std::string_view name) {
  if (name == "answer_match") return TaskKind::kAnswerMatch;
  if (name == "retrieval_ranking") return TaskKind::kRetrievalRanking;
  fail(ErrorCode::kInvalidArgument, "unknown task kind '" + std::string(name) + "'");
}

const char* to_string(SubGoal goal) noexcept {
  switch (goal) {
    case SubGoal::kReasoning: return "reasoning";
    case SubGoal::kQuerying: return "querying";
    case SubGoal::kRetrieving: return "retrieving";
  }
  return "?";
}

ObservationKind subgoal_kind(SubGoal goal) noexcept {
  switch (goal) {
    case SubGoal::kReasoning: return ObservationKind::kReason;
    case SubGoal::kQuerying: return ObservationKind::kGenQuery;
    case SubGoal::kRetrieving: return ObservationKind::kRetrieve;
  }
  return ObservationKind::kReason;
}

const char* action_variant_name(const Action& action) noexcept {
  return std::holds_alternative<ChooseSubGoal>(action) ? "choose_subgoal" : "choose_candidate";
}

const std::string& subgoal_marker(SubGoal goal) {
  static const std::string kReasoning = "The next step is to generate a rationale";
  static const std::string kQuerying = "The next step is to generate a query";
  static const std::string kRetrieving = "The next step is to retrieve a document";
  switch (goal) {
    case SubGoal::kReasoning: return kReasoning;
    case SubGoal::kQuerying: return kQuerying;
    case SubGoal::kRetrieving: return kRetrieving;
  }
  return kReasoning;
}

// ---------------------------------------------------------------------------
// Answer detectors

SentinelDetector::SentinelDetector(std::string open, std::string close)
    : open_(std::move(open)), close_(std::move(close)) {
  require(!open_.empty() && !close_.empty(), "sentinel delimiters must be non-empty");
}

bool SentinelDetector::contains_answer(const Observation& observation) const {
  if (observation.kind != ObservationKind::kRationale) return false;
  std::size_t open = observation.text.find(open_);
  if (open == std::string::npos) return false;
  return observation.text.find(close_, open + open_.size()) != std::string::npos;
}

RegexDetector::RegexDetector(const std::string& pattern) {
  try {
    pattern_ = std::regex(pattern, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    fail(ErrorCode::kConfiguration, "bad answer regex '" + pattern + "': " + e.what());
  }
}

bool RegexDetector::contains_answer(const Observation& observation) const {
  return observation.kind == ObservationKind::kRationale &&
         std::regex_search(observation.text, pattern_);
}

// ---------------------------------------------------------------------------
// State

State State::root(ProblemInstance problem, std::size_t horizon) {
  require(!problem.statement.empty(), "problem statement must be non-empty");
  require(horizon >= 1, "horizon must be at least 1");
  return State(std::make_shared<const ProblemInstance>(std::move(problem)), horizon, nullptr);
}

std::size_t State::step_index() const noexcept { return tail_ ? tail_->depth : 0; }

const Observation* State::last_observation() const noexcept {
  return tail_ ? &tail_->step.observation : nullptr;
}

const Step* State::last_step() const noexcept { return tail_ ? &tail_->step : nullptr; }

std::vector<Step> State::trajectory() const {
  std::vector<Step> steps(step_index());
  std::size_t i = steps.size();
  for (const Node* node = tail_.get(); node != nullptr; node = node->prev.get()) {
    steps[--i] = node->step;
  }
  return steps;
}

std::vector<Observation> State::observations() const {
  std::vector<Observation> out(step_index());
  std::size_t i = out.size();
  for (const Node* node = tail_.get(); node != nullptr; node = node->prev.get()) {
    out[--i] = node->step.observation;
  }
  return out;
}

State State::extended(Action action, Observation observation) const {
  auto node = std::make_shared<Node>();
  node->step = Step{std::move(action), std::move(observation)};
  node->prev = tail_;
  node->depth = step_index() + 1;
  return State(problem_, horizon_, std::move(node));
}

bool operator==(const State& a, const State& b) {
  if (a.horizon_ != b.horizon_ || !(a.problem() == b.problem())) return false;
  if (a.step_index() != b.step_index()) return false;
  const State::Node* x = a.tail_.get();
  const State::Node* y = b.tail_.get();
  for (; x != nullptr && y != nullptr; x = x->prev.get(), y = y->prev.get()) {
    if (x == y) return true;  // shared prefix
    if (!(x->step == y->step)) return false;
  }
  return x == y;
}

// ---------------------------------------------------------------------------
// Transition rules

const Observation* pending_query(const State& state) {
  const Observation* found = nullptr;
  // A Doc seen before any Query means the latest query was already consumed.
  state.visit_backwards([&](const Step& step) {
    if (step.observation.kind == ObservationKind::kDoc) return false;
    if (step.observation.kind == ObservationKind::kQuery) {
      found = &step.observation;
      return false;
    }
    return true;
  });
  return found;
}

bool has_pending_query(const State& state) { return pending_query(state) != nullptr; }

std::vector<Action> subgoal_actions(const State& state) {
  const Observation* last = state.last_observation();
  require(last == nullptr || is_execution(last->kind),
          "sub-goal actions are only defined at root or execution states");
  std::vector<Action> actions;
  actions.emplace_back(ChooseSubGoal{SubGoal::kReasoning});
  actions.emplace_back(ChooseSubGoal{SubGoal::kQuerying});
  if (has_pending_query(state)) actions.emplace_back(ChooseSubGoal{SubGoal::kRetrieving});
  return actions;
}

std::vector<Action> action_space(const State& state, std::span<const Observation> candidates,
                                  const AnswerDetector* detector) {
  bool terminal = state.step_index() >= state.horizon() ||
                  (detector != nullptr && is_terminal(state, *detector));
  if (terminal) fail(ErrorCode::kNoActions, "no actions at terminal state");

  const Observation* last = state.last_observation();
  if (last == nullptr || is_execution(last->kind)) return subgoal_actions(state);

  ObservationKind expected = execution_kind_for(last->kind);
  std::vector<Action> actions;
  actions.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    require(candidates[i].kind == expected,
            std::string("candidate kind ") + to_string(candidates[i].kind) + " does not realize " +
                to_string(last->kind));
    actions.emplace_back(ChooseCandidate{i, candidates[i]});
  }
  return actions;
}

Observation f_rule(const State& /*state*/, const Action& action) {
  const auto* choose = std::get_if<ChooseSubGoal>(&action);
  require(choose != nullptr, "f_rule only handles ChooseSubGoal actions");
  return Observation{subgoal_kind(choose->target), subgoal_marker(choose->target), std::nullopt};
}

State apply(const State& state, const Action& action, const Observation& observation) {
  require(state.step_index() < state.horizon(), "horizon exceeded: step_index = " +
                                                    std::to_string(state.step_index()) +
                                                    " equals T");
  const Observation* last = state.last_observation();
  bool at_decision = last == nullptr || is_execution(last->kind);

  if (const auto* choose = std::get_if<ChooseSubGoal>(&action)) {
    require(at_decision, "ChooseSubGoal is illegal after a sub-goal observation");
    require(choose->target != SubGoal::kRetrieving || has_pending_query(state),
            "retrieving requires a pending query");
    require(observation == f_rule(state, action), "observation is not the sub-goal marker");
  } else {
    const auto& pick = std::get<ChooseCandidate>(action);
    require(!at_decision, "ChooseCandidate is only legal after a sub-goal observation");
    ObservationKind expected = execution_kind_for(last->kind);
    require(pick.candidate.kind == expected && observation.kind == expected,
            std::string("expected a ") + to_string(expected) + " observation");
    require(pick.candidate == observation, "observation differs from the chosen candidate");
  }
  require((observation.kind == ObservationKind::kDoc) == observation.doc_id.has_value(),
          "doc_id must be present exactly for Doc observations");
  return state.extended(action, observation);
}

bool is_terminal(const State& state, const AnswerDetector& detector) {
  if (state.step_index() >= state.horizon()) return true;
  const Observation* last = state.last_observation();
  return last != nullptr && detector.contains_answer(*last);
}

void validate(const State& state) {
  require(state.step_index() <= state.horizon(), "trajectory longer than the horizon");
  const Observation* prev = nullptr;
  std::size_t count = 0;
  auto steps = state.trajectory();
  for (const auto& step : steps) {
    ++count;
    const Observation& obs = step.observation;
    if (prev == nullptr || is_execution(prev->kind)) {
      require(is_subgoal(obs.kind), "step " + std::to_string(count) +
                                        ": expected a sub-goal observation");
      require(std::holds_alternative<ChooseSubGoal>(step.action),
              "step " + std::to_string(count) + ": expected a ChooseSubGoal action");
    } else {
      require(obs.kind == execution_kind_for(prev->kind),
              "step " + std::to_string(count) + ": execution kind does not match sub-goal");
      require(std::holds_alternative<ChooseCandidate>(step.action),
              "step " + std::to_string(count) + ": expected a ChooseCandidate action");
    }
    prev = &obs;
  }
  require(count == state.step_index(), "step_index disagrees with trajectory length");
}

std::string trajectory_log(const State& state) {
  std::string out;
  std::size_t step = 0;
  for (const auto& s : state.trajectory()) {
    ordered_json line;
    line["problem_id"] = state.problem().problem_id;
    line["step"] = ++step;
    line["action_variant"] = action_variant_name(s.action);
    line["kind"] = to_string(s.observation.kind);
    line["text"] = s.observation.text;
    line["doc_id"] = s.observation.doc_id ? ordered_json(*s.observation.doc_id) : ordered_json();
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<ProblemInstance> parse_problems(std::string_view data, const std::string& source) {
  std::vector<ProblemInstance> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    std::string line = trim(data.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    ProblemInstance p;
    try {
      auto j = nlohmann::json::parse(line);
      p.problem_id = j.at("problem_id").get<std::string>();
      p.statement = j.at("statement").get<std::string>();
      p.gold_label = j.value("gold_label", std::string());
      p.task_kind = task_kind_from_string(j.value("task_kind", std::string("answer_match")));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kImport, where + ": bad problem record: " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::kImport, where + ": " + e.what());
    }
    if (p.problem_id.empty() || p.statement.empty()) {
      fail(ErrorCode::kImport, where + ": problem_id and statement must be non-empty");
    }
    if (!ids.insert(p.problem_id).second) {
      fail(ErrorCode::kImport, where + ": duplicate problem_id '" + p.problem_id + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ProblemInstance> load_problems(const std::string& path) {
  return parse_problems(read_file(path), path);
}

std::string serialize_problems(const std::vector<ProblemInstance>& problems) {
  std::string out;
  for (const auto& p : problems) {
    ordered_json j;
    j["problem_id"] = p.problem_id;
    j["statement"] = p.statement;
    j["gold_label"] = p.gold_label;
    j["task_kind"] = to_string(p.task_kind);
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace critplan
