// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "critplan/critics.hpp"
#include "critplan/eval.hpp"
#include "critplan/mcts.hpp"
#include "critplan/pipeline.hpp"
#include "critplan/planner.hpp"
#include "critplan/text.hpp"
#include "critplan/toy.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace critplan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const char* id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.detail += "; over time limit";
  }
  failures += !o.pass;
  std::printf("%s %s  %s: %s (%.2f s)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

MctsConfig mcts_config(std::size_t k, std::size_t iterations, std::uint64_t seed) {
  MctsConfig cfg;
  cfg.sampling.k = k;
  cfg.iterations = iterations;
  cfg.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------

// Selection recomputed from the definition: descend while the node is
// non-terminal and fully expanded; unvisited children first, else the
// strictly greatest UCB1 in child order.
std::vector<NodeId> brute_force_path(const SearchTree& tree, double c) {
  std::vector<NodeId> path{0};
  while (true) {
    const TreeNode& node = tree.node(path.back());
    if (node.terminal || !node.expanded_actions || !node.unexpanded.empty() || node.children.empty()) break;
    NodeId best = node.children.front();
    bool found_unvisited = false;
    for (NodeId id : node.children) {
      if (tree.node(id).visits == 0) {
        best = id;
        found_unvisited = true;
        break;
      }
    }
    if (!found_unvisited) {
      double best_score = oracle::ucb1(tree.node(best).value, tree.node(best).visits, node.visits, c);
      for (NodeId id : node.children) {
        double s = oracle::ucb1(tree.node(id).value, tree.node(id).visits, node.visits, c);
        if (s > best_score) {
          best_score = s;
          best = id;
        }
      }
    }
    path.push_back(best);
  }
  return path;
}

Outcome a1() {
  std::mt19937_64 rng(20261015);
  ExactMatchOracle exact;
  std::size_t iterations = 0, frozen = 0, violations = 0, mismatches = 0;
  for (int run = 0; run < 50; ++run) {
    ToySpec spec;
    spec.problems = 3;
    spec.candidates = 2 + rng() % 3;
    spec.seed = rng();
    ToySuite suite = make_answer_toy(spec);
    MctsBackends backends;
    backends.generator = &suite.generator;
    backends.oracle = &exact;
    MctsConfig cfg = mcts_config(spec.candidates, 20, rng());
    cfg.exploration = 0.25 + 2.0 * static_cast<double>(rng() % 1000) / 1000.0;
    cfg.horizon = 4 + rng() % 8;
    auto result = run_mcts(suite.problems[rng() % 3], backends, cfg,
                           [&](const SearchTree& tree, const std::vector<NodeId>&, double) {
                             ++frozen;
                             if (select_path(tree, cfg.exploration) != brute_force_path(tree, cfg.exploration)) {
                               ++mismatches;
                             }
                           });
    iterations += result.stats.iterations;
    const SearchTree& tree = result.tree;
    if (tree.root().visits != cfg.iterations - result.stats.aborted) ++violations;
    for (const auto& node : tree.nodes()) {
      std::size_t sum = node.simulations;
      for (NodeId c : node.children) sum += tree.node(c).visits;
      if (sum != node.visits) ++violations;
    }
  }
  bool pass = iterations >= 1000 && frozen >= 100 && violations == 0 && mismatches == 0;
  return {pass, std::to_string(iterations) + " iterations, " + std::to_string(violations) +
                    " conservation violations, " + std::to_string(mismatches) + "/" +
                    std::to_string(frozen) + " selection mismatches"};
}

// ---------------------------------------------------------------------------

Outcome a2() {
  std::mt19937_64 rng(7);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) / static_cast<double>(1ULL << 53);
  };
  double worst[4] = {0, 0, 0, 0};
  std::size_t cases[4] = {0, 0, 0, 0};

  for (int i = 0; i < 500; ++i) {
    std::size_t n = 1 + rng() % 500;
    std::size_t np = n + rng() % 5000;
    double v = uniform(0, static_cast<double>(n));
    double c = uniform(0, 3);
    worst[0] = std::max(worst[0], std::abs(ucb1(v, n, np, c) - oracle::ucb1(v, n, np, c)));
    ++cases[0];
  }
  for (int i = 0; i < 500; ++i) {
    double a = uniform(-50, 50), b = uniform(-50, 50);
    worst[1] = std::max(worst[1], std::abs(pairwise_loss(a, b) - oracle::pairwise_loss(a, b)));
    ++cases[1];
  }
  const std::vector<std::string> vocab{"alpha", "beta", "gamma", "delta", "eps", "zeta",
                                       "eta",   "theta", "iota", "kappa", "lam", "mu"};
  bool bm25_sets_agree = true;
  for (int i = 0; i < 250; ++i) {
    std::vector<Document> docs;
    std::vector<std::string> texts;
    std::size_t n = 1 + rng() % 20;
    for (std::size_t d = 0; d < n; ++d) {
      std::string t;
      std::size_t len = 1 + rng() % 30;
      for (std::size_t w = 0; w < len; ++w) t += vocab[rng() % vocab.size()] + (rng() % 4 ? " " : ", ");
      texts.push_back(t);
      docs.push_back({"doc" + std::to_string(d), t});
    }
    std::string query;
    for (std::size_t w = 0, len = 1 + rng() % 5; w < len; ++w) query += vocab[rng() % vocab.size()] + " ";
    Bm25Params params{uniform(0.5, 2.0), uniform(0.0, 1.0)};
    Corpus corpus = Corpus::build(docs, params);
    auto expected = oracle::bm25_scores(texts, query, params.k1, params.b);
    auto hits = corpus.search(query, n);
    std::size_t positive = 0;
    for (double s : expected) positive += s > 0;
    bm25_sets_agree &= hits.size() == positive;
    for (const auto& h : hits) worst[2] = std::max(worst[2], std::abs(h.score - expected[h.doc_index]));
    ++cases[2];
  }
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> ranking;
    for (std::size_t j = 0, len = rng() % 20; j < len; ++j) ranking.push_back("d" + std::to_string(j));
    std::shuffle(ranking.begin(), ranking.end(), rng);
    std::set<std::string> rel;
    for (std::size_t j = 0, len = 1 + rng() % 15; j < len; ++j) rel.insert("d" + std::to_string(rng() % 25));
    worst[3] = std::max(worst[3], std::abs(ndcg_at_10(ranking, rel) - oracle::ndcg_at_10(ranking, rel)));
    ++cases[3];
  }
  bool pass = bm25_sets_agree;
  for (int k = 0; k < 4; ++k) pass &= worst[k] <= 1e-9 && cases[k] >= 200;
  std::string detail = "max abs error ucb1 " + fmt("%.1e", worst[0]) + ", pairwise_loss " +
                       fmt("%.1e", worst[1]) + ", bm25 " + fmt("%.1e", worst[2]) + ", ndcg@10 " +
                       fmt("%.1e", worst[3]) + " over >=250 cases each";
  if (!bm25_sets_agree) detail += "; bm25 hit sets differ";
  return {pass, detail};
}

// ---------------------------------------------------------------------------

struct Collected {
  std::vector<PreferencePair> pairs;
  std::size_t groups = 0;
  std::size_t correct_groups = 0;
};

// Runs MCTS over every problem and counts sibling groups that contain a
// known-correct candidate, checking whether the best child is that one.
Collected collect(const ToySuite& suite, const Corpus* corpus, std::size_t k, std::size_t iterations,
                  std::uint64_t seed, std::size_t limit = static_cast<std::size_t>(-1)) {
  ExactMatchOracle exact;
  MctsBackends backends;
  backends.generator = &suite.generator;
  backends.oracle = &exact;
  backends.corpus = corpus;
  Collected out;
  for (std::size_t i = 0; i < suite.problems.size() && i < limit; ++i) {
    const auto& p = suite.problems[i];
    auto result = run_mcts(p, backends, mcts_config(k, iterations, seed ^ fnv1a(p.problem_id)));
    auto pairs = flatten(extract_pairs(result.tree, p));
    out.pairs.insert(out.pairs.end(), pairs.begin(), pairs.end());
    const auto& correct = suite.correct_texts.at(p.problem_id);
    for (const auto& node : result.tree.nodes()) {
      std::vector<const TreeNode*> visited;
      bool has_correct = false;
      for (NodeId c : node.children) {
        const TreeNode& child = result.tree.node(c);
        if (child.visits == 0) continue;
        visited.push_back(&child);
        has_correct |= correct.count(child.observation()->text) > 0;
      }
      if (visited.size() < 2 || !has_correct) continue;
      const TreeNode* best = visited.front();
      for (const TreeNode* v : visited) {
        if (v->mean() > best->mean() || (v->mean() == best->mean() && v->visits > best->visits)) best = v;
      }
      ++out.groups;
      out.correct_groups += correct.count(best->observation()->text) > 0;
    }
  }
  return out;
}

ToySuite a3_suite() {
  ToySpec spec;
  spec.problems = 50;
  spec.candidates = 2;
  spec.seed = 3;
  return make_answer_toy(spec);
}

Collected a3_pairs;

Outcome a3() {
  ToySuite suite = a3_suite();
  a3_pairs = collect(suite, nullptr, 2, 64, 11);
  double frac = static_cast<double>(a3_pairs.correct_groups) / static_cast<double>(a3_pairs.groups);
  return {a3_pairs.groups > 0 && frac >= 0.95,
          std::to_string(a3_pairs.correct_groups) + "/" + std::to_string(a3_pairs.groups) +
              " groups chose the known-correct candidate (" + fmt("%.4f", frac) + "), " +
              std::to_string(a3_pairs.pairs.size()) + " pairs"};
}

// ---------------------------------------------------------------------------

CriticSet train_all(const std::vector<PreferencePair>& pairs, std::map<CriticKind, std::size_t>* counts = nullptr) {
  CriticSet critics;
  for (auto kind : kAllCriticKinds) {
    std::vector<PreferencePair> mine;
    for (const auto& p : pairs) {
      if (p.kind == kind) mine.push_back(p);
    }
    if (counts) (*counts)[kind] = mine.size();
    if (mine.empty()) {
      critics.set(kind, std::make_shared<LinearCritic>(kind, FeaturizerSpec{}, 0));
    } else {
      critics.set(kind, std::make_shared<LinearCritic>(train_reference_critic(mine)));
    }
  }
  return critics;
}

double solve_accuracy(const ToySuite& suite, const CriticSet& critics, std::size_t k) {
  PlannerBackends backends;
  backends.generator = &suite.generator;
  PlannerConfig cfg;
  cfg.sampling.k = k;
  std::vector<AnswerRecord> records;
  for (const auto& p : suite.problems) records.push_back({p, solve(p, critics, backends, cfg).final_answer});
  return accuracy(records, NormalizedMatchChecker()).accuracy;
}

Outcome a4() {
  if (a3_pairs.pairs.empty()) a3_pairs = collect(a3_suite(), nullptr, 2, 64, 11);
  CriticSet critics = train_all(a3_pairs.pairs);

  ToySpec held;
  held.problems = 50;
  held.candidates = 3;
  held.seed = 404;
  held.first_index = 1000;
  ToySuite suite = make_answer_toy(held);
  Collected heldout = collect(suite, nullptr, 3, 64, 12);
  std::size_t right = 0;
  for (const auto& p : heldout.pairs) {
    const CriticBackend& c = critics.require(p.kind);
    CriticContext chosen{p.kind, "", p.context_observations, p.chosen};
    CriticContext rejected{p.kind, "", p.context_observations, p.rejected};
    right += c.score(chosen) > c.score(rejected);
  }
  double pair_acc = heldout.pairs.empty() ? 0.0 : static_cast<double>(right) / heldout.pairs.size();
  double trained = solve_accuracy(suite, critics, 3);
  double baseline = solve_accuracy(suite, CriticSet::constant(), 3);
  bool pass = pair_acc >= 0.90 && trained >= 0.90 && baseline <= 0.15;
  return {pass, "held-out pairwise accuracy " + fmt("%.4f", pair_acc) + " over " +
                    std::to_string(heldout.pairs.size()) + " pairs, solve accuracy " + fmt("%.2f", trained) +
                    " (trained) vs " + fmt("%.2f", baseline) + " (constant critic) on 50 held-out problems"};
}

// ---------------------------------------------------------------------------

Outcome a5() {
  const std::string dir = testing::fixture("longest_substring");
  auto problems = load_problems(dir + "/problem.jsonl");
  auto gen = ScriptedGenerator::from_file(dir + "/script.jsonl");
  Corpus corpus = Corpus::build(read_documents_from_directory(dir + "/corpus"));
  auto lookup = std::make_shared<LookupCritic>(LookupCritic::from_file(dir + "/critic.lookup.jsonl"));
  CriticSet critics;
  for (auto kind : kAllCriticKinds) critics.set(kind, lookup);
  PlannerBackends backends;
  backends.generator = &gen;
  backends.corpus = &corpus;
  auto result = solve(problems.at(0), critics, backends, PlannerConfig{});

  // Every highlighted option is the unique top-scored candidate, so the
  // selection sequence is the list of critic-preferred observations.
  const std::vector<std::pair<ObservationKind, std::string>> expected = {
      {ObservationKind::kReason, subgoal_marker(SubGoal::kReasoning)},
      {ObservationKind::kRationale, "The optimal time complexity is O(n)"},
      {ObservationKind::kGenQuery, subgoal_marker(SubGoal::kQuerying)},
      {ObservationKind::kQuery, "Max length substring with unique characters with O(n) complexity"},
      {ObservationKind::kRetrieve, subgoal_marker(SubGoal::kRetrieving)},
      {ObservationKind::kDoc, "doc3.txt"},
      {ObservationKind::kReason, subgoal_marker(SubGoal::kReasoning)},
      {ObservationKind::kRationale, "To solve the problem efficiently, use a sliding window technique"},
      {ObservationKind::kReason, subgoal_marker(SubGoal::kReasoning)},
      {ObservationKind::kRationale, "Here is the code:"}};
  auto obs = result.trajectory.observations();
  std::size_t matched = 0;
  for (std::size_t i = 0; i < expected.size() && i < obs.size(); ++i) {
    bool ok = obs[i].kind == expected[i].first;
    if (obs[i].kind == ObservationKind::kDoc) {
      ok &= obs[i].doc_id == expected[i].second;
    } else {
      ok &= obs[i].text.rfind(expected[i].second, 0) == 0;
    }
    if (!ok) break;
    ++matched;
  }
  bool answer_ok = result.terminated_by == Termination::kAnswerDetected &&
                   NormalizedMatchChecker().check(problems[0], result.final_answer);
  bool pass = matched == 10 && obs.size() == 10 && answer_ok;
  return {pass, std::to_string(matched) + "/10 steps matched, terminated by " +
                    to_string(result.terminated_by) + (answer_ok ? ", code answer correct" : ", wrong answer")};
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::string body = read_file(e.path().string());
    // Timestamps live only in the first line of results and reports.
    if (body.rfind("{\"format\":\"critplan-", 0) == 0 && body.find("\"created\"") < body.find('\n')) {
      body = body.substr(body.find('\n') + 1);
    }
    out[fs::relative(e.path(), root).generic_string()] = body;
  }
  return out;
}

Outcome a6() {
  std::vector<std::map<std::string, std::string>> runs;
  for (unsigned parallel : {1u, 3u}) {
    testing::TempDir dir("a6");
    ToySpec spec;
    spec.problems = 12;
    spec.candidates = 3;
    spec.seed = 8;
    write_toy_suite(make_answer_toy(spec), dir.str());
    EngineConfig config = EngineConfig::load(dir / "config.json");
    config.set("seed", "99");
    config.parallel = parallel;
    cmd_index(config);
    cmd_collect(config);
    for (auto kind : kAllCriticKinds) cmd_train(config, kind);
    cmd_solve(config);
    runs.push_back(snapshot(fs::path(dir.str()) / "work"));
  }
  std::size_t differing = 0;
  for (const auto& [name, body] : runs[0]) {
    auto it = runs[1].find(name);
    differing += it == runs[1].end() || it->second != body;
  }
  differing += runs[1].size() - std::min(runs[1].size(), runs[0].size());
  bool has_all = runs[0].count("results.jsonl") && runs[0].count("pairs/pairs.Rationale.jsonl");
  return {differing == 0 && has_all && runs[0].size() == runs[1].size(),
          std::to_string(runs[0].size()) + " artifacts compared (collect, train, solve; parallel 1 vs 3), " +
              std::to_string(differing) + " differ"};
}

// ---------------------------------------------------------------------------

Outcome a7() {
  ToySpec spec;
  spec.problems = 30;
  spec.candidates = 3;
  spec.seed = 21;
  ToySuite suite = make_ranking_toy(spec);
  Corpus corpus = Corpus::build(suite.documents);
  // Rewards sit six steps deep, so the search needs a larger budget.
  Collected train = collect(suite, &corpus, 3, 512, 5, 20);
  CriticSet critics = train_all(train.pairs);

  PlannerBackends backends;
  backends.generator = &suite.generator;
  backends.corpus = &corpus;
  std::vector<RankingRecord> records;
  std::size_t top1 = 0, statement_zero = 0, fallbacks = 0, heldout = 0;
  for (std::size_t i = 20; i < suite.problems.size(); ++i) {
    const auto& p = suite.problems[i];
    ++heldout;
    auto r = solve_for_ranking(p, critics, backends, PlannerConfig{});
    fallbacks += r.fallback;
    top1 += !r.doc_ids.empty() && r.doc_ids.front() == p.gold_label;
    records.push_back({p.problem_id, r.doc_ids});
    bool gold_hit = false;
    for (const auto& h : corpus.search(p.statement, corpus.size())) {
      gold_hit |= corpus.document(h.doc_index).doc_id == p.gold_label;
    }
    statement_zero += !gold_hit;
  }
  double ndcg = ranking_report(records, suite.judgments).mean_ndcg;
  bool pass = top1 == heldout && ndcg == 1.0 && statement_zero == heldout;
  return {pass, "gold at rank 1 on " + std::to_string(top1) + "/" + std::to_string(heldout) +
                    " held-out problems, mean nDCG@10 " + fmt("%.6f", ndcg) + ", statement BM25 gold score 0 on " +
                    std::to_string(statement_zero) + "/" + std::to_string(heldout) + ", " +
                    std::to_string(fallbacks) + " fallbacks"};
}

}  // namespace

int main() {
  report("A1", "MCTS bookkeeping", 30, a1);
  report("A2", "formula oracles", 10, a2);
  report("A3", "pair extraction fidelity", 60, a3);
  report("A4", "closed loop", 120, a4);
  report("A5", "golden trajectory", 1, a5);
  report("A6", "determinism", 0, a6);
  report("A7", "ranking path", 0, a7);
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
