// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/mcts.hpp"

#include <algorithm>
#include <limits>
#include <nlohmann/json.hpp>

#include "critplan/error.hpp"
#include "critplan/text.hpp"

namespace critplan {

using ordered_json = nlohmann::ordered_json;

double ExactMatchOracle::evaluate(const ProblemInstance& problem,
                                  const std::string& final_answer) const {
  const std::string gold = normalize_answer(problem.gold_label);
  if (normalize_answer(final_answer) == gold) return 1.0;
  auto block = last_fenced_block(final_answer);
  return block && normalize_answer(*block) == gold ? 1.0 : 0.0;
}

double ucb1(double value, std::size_t visits, std::size_t parent_visits, double c) {
  require(visits >= 1, "ucb1 is undefined for unvisited nodes");
  require(parent_visits >= 1, "ucb1 needs a visited parent");
  const double n = static_cast<double>(visits);
  return value / n + c * std::sqrt(std::log(static_cast<double>(parent_visits)) / n);
}

// ---------------------------------------------------------------------------
// Tree

SearchTree::SearchTree(State root_state) {
  nodes_.emplace_back(std::move(root_state));
}

NodeId SearchTree::add_child(NodeId parent, Action action, Observation observation) {
  TreeNode child(apply(nodes_.at(parent).state, action, observation));
  child.id = nodes_.size();
  child.parent = parent;
  child.incoming_action = std::move(action);
  nodes_.push_back(std::move(child));
  nodes_[parent].children.push_back(nodes_.back().id);
  return nodes_.back().id;
}

void SearchTree::pop_last_child(NodeId parent) {
  require(nodes_.size() > 1 && nodes_.back().parent == parent && nodes_.back().children.empty(),
          "pop_last_child: last node is not a leaf child of the given parent");
  auto& siblings = nodes_[parent].children;
  require(!siblings.empty() && siblings.back() == nodes_.back().id, "pop_last_child: bad sibling list");
  siblings.pop_back();
  nodes_.pop_back();
}

std::string SearchTree::dump() const {
  std::string out;
  for (const auto& node : nodes_) {
    ordered_json j;
    j["node"] = node.id;
    j["parent"] = node.is_root() ? ordered_json() : ordered_json(node.parent);
    const Observation* obs = node.observation();
    j["kind"] = obs ? to_string(obs->kind) : "Root";
    j["digest"] = obs ? digest(obs->text) : digest(node.state.problem().statement);
    j["v"] = node.value;
    j["n"] = node.visits;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<NodeId> select_path(const SearchTree& tree, double exploration) {
  std::vector<NodeId> path{0};
  while (true) {
    const TreeNode& node = tree.node(path.back());
    if (node.terminal || !node.fully_expanded() || node.children.empty()) break;
    NodeId best = kNoNode;
    double best_score = -std::numeric_limits<double>::infinity();
    for (NodeId child_id : node.children) {
      const TreeNode& child = tree.node(child_id);
      if (child.visits == 0) {  // only after an aborted expansion was kept
        best = child_id;
        break;
      }
      double s = ucb1(child.value, child.visits, node.visits, exploration);
      if (s > best_score) {
        best_score = s;
        best = child_id;
      }
    }
    path.push_back(best);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Candidates

std::vector<Observation> CandidateSource::candidates(const State& state) const {
  const Observation* last = state.last_observation();
  require(last != nullptr && is_subgoal(last->kind), "candidates requested at a non sub-goal state");
  try {
    switch (last->kind) {
      case ObservationKind::kReason:
        return sample_rationales(state, generation_);
      case ObservationKind::kGenQuery: {
        bool has_rationale = false;
        state.visit_backwards([&](const Step& step) {
          has_rationale = step.observation.kind == ObservationKind::kRationale;
          return !has_rationale;
        });
        if (!has_rationale) return {};
        return sample_queries(state, generation_);
      }
      case ObservationKind::kRetrieve: {
        const Observation* query = pending_query(state);
        if (query == nullptr || corpus_ == nullptr) return {};
        return retrieve(*corpus_, query->text, retrieval_k_);
      }
      default:
        break;
    }
  } catch (const BackendError&) {
    throw;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEmptyCandidates || e.code() == ErrorCode::kEmptyQuery) return {};
    throw;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Search

namespace {

const AnswerDetector& default_detector() {
  static const SentinelDetector detector;
  return detector;
}

void materialize(TreeNode& node, const CandidateSource& source) {
  const Observation* last = node.observation();
  if (last == nullptr || is_execution(last->kind)) {
    node.unexpanded = subgoal_actions(node.state);
  } else {
    auto candidates = source.candidates(node.state);
    if (candidates.empty()) {
      node.dead_end = true;
      node.terminal = true;
    } else {
      node.unexpanded = action_space(node.state, candidates);
    }
  }
  node.expanded_actions = true;
}

Observation observation_for(const State& state, const Action& action) {
  if (std::holds_alternative<ChooseSubGoal>(action)) return f_rule(state, action);
  return std::get<ChooseCandidate>(action).candidate;
}

}  // namespace

MctsResult run_mcts(const ProblemInstance& problem, const MctsBackends& backends,
                    const MctsConfig& cfg, const IterationObserver& observer) {
  require(backends.generator != nullptr, "run_mcts needs a generator backend");
  require(backends.oracle != nullptr, "run_mcts needs a reward oracle");
  require(cfg.exploration >= 0.0, "exploration constant must be non-negative");
  const AnswerDetector& detector = backends.detector ? *backends.detector : default_detector();

  GenerationContext generation;
  generation.backend = backends.generator;
  generation.prompts = backends.prompts;
  generation.sampling = cfg.sampling;
  generation.retry = backends.retry;
  generation.seed = cfg.seed;
  CandidateSource source(generation, backends.corpus, cfg.sampling.k);

  MctsResult result{SearchTree(State::root(problem, cfg.horizon)), {}};
  SearchTree& tree = result.tree;
  tree.root().terminal = is_terminal(tree.root().state, detector);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    ++result.stats.iterations;
    std::vector<NodeId> path = select_path(tree, cfg.exploration);
    const NodeId leaf = path.back();
    NodeId added = kNoNode;
    double reward = 0.0;
    try {
      if (!tree.node(leaf).terminal) {
        if (!tree.node(leaf).expanded_actions) materialize(tree.node(leaf), source);
        TreeNode& node = tree.node(leaf);
        if (!node.terminal && !node.unexpanded.empty()) {
          Action action = node.unexpanded.front();
          node.unexpanded.erase(node.unexpanded.begin());
          Observation obs = observation_for(node.state, action);
          added = tree.add_child(leaf, std::move(action), std::move(obs));
          TreeNode& child = tree.node(added);
          child.terminal = is_terminal(child.state, detector);
          path.push_back(added);
        }
      }
      const TreeNode& sim = tree.node(path.back());
      std::string answer = conclude(sim.state, generation);
      reward = backends.oracle->evaluate(problem, answer);
      require(reward >= 0.0 && reward <= 1.0, "reward oracle returned a value outside [0, 1]");
    } catch (const BackendError& e) {
      if (added != kNoNode) {
        Action action = *tree.node(added).incoming_action;
        tree.pop_last_child(leaf);
        auto& pending = tree.node(leaf).unexpanded;
        pending.insert(pending.begin(), std::move(action));
      }
      ++result.stats.aborted;
      result.stats.errors.emplace_back(e.what());
      continue;
    }

    for (NodeId id : path) {
      TreeNode& node = tree.node(id);
      node.visits += 1;
      node.value += reward;
    }
    tree.node(path.back()).simulations += 1;
    if (observer) observer(tree, path, reward);
  }

  const double limit = cfg.max_abort_fraction * static_cast<double>(cfg.iterations);
  if (static_cast<double>(result.stats.aborted) > limit) {
    fail(ErrorCode::kSearchFailure,
         "problem " + problem.problem_id + ": " + std::to_string(result.stats.aborted) + " of " +
             std::to_string(cfg.iterations) + " iterations aborted" +
             (result.stats.errors.empty() ? "" : " (last error: " + result.stats.errors.back() + ")"));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Pair extraction

PairsByKind extract_pairs(const SearchTree& tree, const ProblemInstance& problem,
                          const ExtractOptions& options) {
  PairsByKind out;
  for (const auto& parent : tree.nodes()) {
    std::vector<const TreeNode*> visited;
    for (NodeId id : parent.children) {
      if (tree.node(id).visits > 0) visited.push_back(&tree.node(id));
    }
    if (visited.size() < 2) continue;

    // visited is in child-index order, so stable_sort keeps "lower index" as
    // the last tie-break.
    std::vector<const TreeNode*> ranked = visited;
    std::stable_sort(ranked.begin(), ranked.end(), [](const TreeNode* a, const TreeNode* b) {
      if (a->mean() != b->mean()) return a->mean() > b->mean();
      return a->visits > b->visits;
    });
    const TreeNode* chosen = ranked.front();
    const CriticKind kind = critic_kind_for_state(parent.observation());
    auto context = context_for(kind, parent.state);

    std::vector<const TreeNode*> rejected;
    for (const TreeNode* sibling : visited) {
      if (sibling->mean() < chosen->mean()) rejected.push_back(sibling);
    }
    if (rejected.empty()) continue;
    if (options.one_rejected_per_group) rejected = {ranked.back()};

    auto& bucket = out[kind];
    for (const TreeNode* r : rejected) {
      bucket.push_back(PreferencePair{kind, problem.problem_id, context, *chosen->observation(),
                                      *r->observation(), chosen->mean(), r->mean(), chosen->visits,
                                      r->visits});
    }
  }
  return out;
}

std::vector<PreferencePair> flatten(const PairsByKind& pairs) {
  std::vector<PreferencePair> out;
  for (const auto& [kind, list] : pairs) out.insert(out.end(), list.begin(), list.end());
  return out;
}

}  // namespace critplan
