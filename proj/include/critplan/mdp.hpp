// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace critplan {

inline constexpr std::size_t kDefaultHorizon = 24;

enum class ObservationKind { kReason, kGenQuery, kRetrieve, kRationale, kQuery, kDoc };

const char* to_string(ObservationKind kind) noexcept;
ObservationKind observation_kind_from_string(std::string_view name);

constexpr bool is_subgoal(ObservationKind kind) noexcept {
  return kind == ObservationKind::kReason || kind == ObservationKind::kGenQuery ||
         kind == ObservationKind::kRetrieve;
}
constexpr bool is_execution(ObservationKind kind) noexcept { return !is_subgoal(kind); }

/// Execution kind that realizes a sub-goal kind (Reason -> Rationale, ...).
ObservationKind execution_kind_for(ObservationKind subgoal);

struct Observation {
  ObservationKind kind = ObservationKind::kReason;
  std::string text;
  std::optional<std::string> doc_id;  // present iff kind == kDoc

  static Observation rationale(std::string text);
  static Observation query(std::string text);
  static Observation doc(std::string doc_id, std::string text);

  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class TaskKind { kAnswerMatch, kRetrievalRanking };

const char* to_string(TaskKind kind) noexcept;
TaskKind task_kind_from_string(std::string_view name);

struct ProblemInstance {
  std::string problem_id;
  std::string statement;
  std::string gold_label;
  TaskKind task_kind = TaskKind::kAnswerMatch;

  friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

/// The three planner intentions, in tie-break order.
enum class SubGoal { kReasoning, kQuerying, kRetrieving };

inline constexpr SubGoal kAllSubGoals[] = {SubGoal::kReasoning, SubGoal::kQuerying,
                                           SubGoal::kRetrieving};

const char* to_string(SubGoal goal) noexcept;
ObservationKind subgoal_kind(SubGoal goal) noexcept;

struct ChooseSubGoal {
  SubGoal target = SubGoal::kReasoning;
  friend bool operator==(const ChooseSubGoal&, const ChooseSubGoal&) = default;
};

struct ChooseCandidate {
  std::size_t index = 0;
  Observation candidate;
  friend bool operator==(const ChooseCandidate&, const ChooseCandidate&) = default;
};

using Action = std::variant<ChooseSubGoal, ChooseCandidate>;

/// "choose_subgoal" or "choose_candidate".
const char* action_variant_name(const Action& action) noexcept;

struct Step {
  Action action;
  Observation observation;
  friend bool operator==(const Step&, const Step&) = default;
};

/// Decides whether an observation carries the complete answer.
class AnswerDetector {
 public:
  virtual ~AnswerDetector() = default;
  virtual bool contains_answer(const Observation& observation) const = 0;
};

/// Fires on Rationale observations containing an opening fence followed by a
/// closing fence, e.g. a fenced code block.
class SentinelDetector final : public AnswerDetector {
 public:
  explicit SentinelDetector(std::string open = "```", std::string close = "```");
  bool contains_answer(const Observation& observation) const override;

 private:
  std::string open_;
  std::string close_;
};

class RegexDetector final : public AnswerDetector {
 public:
  explicit RegexDetector(const std::string& pattern);
  bool contains_answer(const Observation& observation) const override;

 private:
  std::regex pattern_;
};

/// Immutable trajectory prefix. Copies share the underlying steps, so
/// branching a state is O(1).
class State {
 public:
  static State root(ProblemInstance problem, std::size_t horizon = kDefaultHorizon);

  const ProblemInstance& problem() const noexcept { return *problem_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t step_index() const noexcept;
  bool is_root() const noexcept { return tail_ == nullptr; }

  /// Null at the root.
  const Observation* last_observation() const noexcept;
  const Step* last_step() const noexcept;

  std::vector<Step> trajectory() const;

  /// Walks steps newest-first until `fn` returns false. References stay valid
  /// for the lifetime of this state.
  template <typename Fn>
  void visit_backwards(Fn&& fn) const;

  std::vector<Observation> observations() const;

  /// State with (action, observation) appended. Only apply() should call this;
  /// it skips validation.
  State extended(Action action, Observation observation) const;

  friend bool operator==(const State& a, const State& b);

 private:
  struct Node {
    Step step;
    std::shared_ptr<const Node> prev;
    std::size_t depth = 0;
  };
  State(std::shared_ptr<const ProblemInstance> problem, std::size_t horizon,
        std::shared_ptr<const Node> tail)
      : problem_(std::move(problem)), horizon_(horizon), tail_(std::move(tail)) {}

  std::shared_ptr<const ProblemInstance> problem_;
  std::size_t horizon_ = kDefaultHorizon;
  std::shared_ptr<const Node> tail_;
};

template <typename Fn>
void State::visit_backwards(Fn&& fn) const {
  for (const Node* node = tail_.get(); node != nullptr; node = node->prev.get()) {
    if (!fn(node->step)) return;
  }
}

/// Canonical marker text for a sub-goal.
const std::string& subgoal_marker(SubGoal goal);

/// True when a Query observation follows the most recent Doc (or any Query
/// when there is no Doc yet).
bool has_pending_query(const State& state);

/// The pending Query observation, if any. Valid while `state` lives.
const Observation* pending_query(const State& state);

/// Legal sub-goal actions at a root or execution state, in tie-break order.
std::vector<Action> subgoal_actions(const State& state);

/// Legal actions. Sub-goal states yield one ChooseCandidate per supplied
/// candidate; other states ignore `candidates`.
std::vector<Action> action_space(const State& state, std::span<const Observation> candidates = {},
                                  const AnswerDetector* detector = nullptr);

/// Rule-based transition for ChooseSubGoal actions.
Observation f_rule(const State& state, const Action& action);

/// Validated transition. Throws ContractViolation on kind mismatch, illegal
/// action or when the horizon is already reached.
State apply(const State& state, const Action& action, const Observation& observation);

bool is_terminal(const State& state, const AnswerDetector& detector);

/// Throws ContractViolation when the alternation/horizon invariants do not
/// hold. Used to re-validate produced trajectories.
void validate(const State& state);

/// One JSON object per step with fields in the fixed order
/// problem_id, step, action_variant, kind, text, doc_id.
std::string trajectory_log(const State& state);

/// Problem set files: one {"problem_id", "statement", "gold_label",
/// "task_kind"} object per line. Duplicate ids throw Error(kImport).
std::vector<ProblemInstance> parse_problems(std::string_view data, const std::string& source);
std::vector<ProblemInstance> load_problems(const std::string& path);
std::string serialize_problems(const std::vector<ProblemInstance>& problems);

}  // namespace critplan
