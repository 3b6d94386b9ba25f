// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "critplan/critics.hpp"
#include "critplan/generation.hpp"
#include "critplan/mdp.hpp"
#include "critplan/retrieval.hpp"

namespace critplan {

/// Scores a simulated final answer against the gold label, in [0, 1].
class RewardOracle {
 public:
  virtual ~RewardOracle() = default;
  virtual double evaluate(const ProblemInstance& problem, const std::string& final_answer) const = 0;
};

/// 1 when the normalized answer (or its last fenced block) equals the
/// normalized gold label, else 0.
class ExactMatchOracle final : public RewardOracle {
 public:
  double evaluate(const ProblemInstance& problem, const std::string& final_answer) const override;
};

class ConstantOracle final : public RewardOracle {
 public:
  explicit ConstantOracle(double value) : value_(value) {}
  double evaluate(const ProblemInstance&, const std::string&) const override { return value_; }

 private:
  double value_;
};

struct MctsConfig {
  std::size_t iterations = 32;
  double exploration = std::sqrt(2.0);
  SamplingConfig sampling;
  std::size_t horizon = kDefaultHorizon;
  std::uint64_t seed = 0;
  /// Run fails when more than this fraction of iterations abort.
  double max_abort_fraction = 0.25;
};

/// v/n + c * sqrt(ln(n_p) / n). ContractViolation when n or n_p is zero.
double ucb1(double value, std::size_t visits, std::size_t parent_visits, double c);

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct TreeNode {
  explicit TreeNode(State s) : state(std::move(s)) {}

  NodeId id = 0;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  std::optional<Action> incoming_action;  // empty at the root
  State state;                            // trajectory ending in this node's observation
  double value = 0.0;                     // cumulative reward v
  std::size_t visits = 0;                 // n
  std::size_t simulations = 0;            // simulations launched from this node
  bool expanded_actions = false;          // `unexpanded` has been materialized
  std::vector<Action> unexpanded;         // legal actions not yet turned into children
  bool terminal = false;                  // answer, horizon, or no candidates
  bool dead_end = false;                  // sub-goal whose execution produced nothing

  bool is_root() const noexcept { return parent == kNoNode; }
  const Observation* observation() const noexcept { return state.last_observation(); }
  bool fully_expanded() const noexcept { return expanded_actions && unexpanded.empty(); }
  double mean() const noexcept { return visits == 0 ? 0.0 : value / static_cast<double>(visits); }
};

/// Arena-allocated search tree; node ids index `nodes()`.
class SearchTree {
 public:
  explicit SearchTree(State root_state);

  TreeNode& node(NodeId id) { return nodes_.at(id); }
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  TreeNode& root() { return nodes_.front(); }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  /// Appends a child reached by `action`; returns its id.
  NodeId add_child(NodeId parent, Action action, Observation observation);
  /// Removes the most recently added node, which must be a leaf.
  void pop_last_child(NodeId parent);

  /// One JSON object per node in id order:
  /// {node, parent, kind, digest, v, n}.
  std::string dump() const;

 private:
  std::vector<TreeNode> nodes_;
};

/// Selection from the root: while the node is non-terminal and fully
/// expanded, descend to the child with maximal ucb1 (ties -> lower child
/// index). Returns the path, root first.
std::vector<NodeId> select_path(const SearchTree& tree, double exploration);

/// Supplies execution candidates for a sub-goal state. Returns an empty list
/// when the sub-goal cannot be executed (no preceding rationale for a
/// query, no pending query, zero retrieval hits, nothing left after
/// stripping). Backend failures propagate as BackendError.
class CandidateSource {
 public:
  CandidateSource(const GenerationContext& generation, const Corpus* corpus,
                  std::size_t retrieval_k)
      : generation_(generation), corpus_(corpus), retrieval_k_(retrieval_k) {}

  std::vector<Observation> candidates(const State& state) const;

 private:
  GenerationContext generation_;
  const Corpus* corpus_;
  std::size_t retrieval_k_;
};

struct MctsBackends {
  const GeneratorBackend* generator = nullptr;
  const Corpus* corpus = nullptr;  // may be null when retrieval is unreachable
  const RewardOracle* oracle = nullptr;
  const AnswerDetector* detector = nullptr;
  const PromptSet* prompts = &PromptSet::builtin();
  RetryPolicy retry;
};

struct MctsStats {
  std::size_t iterations = 0;
  std::size_t aborted = 0;
  std::vector<std::string> errors;
};

struct MctsResult {
  SearchTree tree;
  MctsStats stats;
};

/// Called after every completed (non-aborted) iteration with the
/// backpropagated path.
using IterationObserver =
    std::function<void(const SearchTree& tree, const std::vector<NodeId>& path, double reward)>;

/// Runs `cfg.iterations` selection/expansion/simulation/backpropagation
/// rounds. Throws Error(kSearchFailure) when too many iterations abort.
MctsResult run_mcts(const ProblemInstance& problem, const MctsBackends& backends,
                    const MctsConfig& cfg, const IterationObserver& observer = {});

struct ExtractOptions {
  /// Keep only the lowest-scored sibling as the rejected observation.
  bool one_rejected_per_group = false;
};

using PairsByKind = std::map<CriticKind, std::vector<PreferencePair>>;

/// Chosen = best visited child by mean value (then more visits, then lower
/// index); one pair per visited sibling with a strictly lower mean.
PairsByKind extract_pairs(const SearchTree& tree, const ProblemInstance& problem,
                          const ExtractOptions& options = {});

std::vector<PreferencePair> flatten(const PairsByKind& pairs);

}  // namespace critplan
