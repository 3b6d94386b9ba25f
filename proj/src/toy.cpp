// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/toy.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>

#include "critplan/error.hpp"
#include "critplan/text.hpp"

namespace critplan {

using ordered_json = nlohmann::ordered_json;
using Rule = ScriptedGenerator::Rule;

namespace {

// Distinguish the two sampling prompts: only the rationale prompt carries the
// problem block, only the query prompt asks for a query block.
constexpr const char* kRationalePrompt = "[BEGIN PROBLEM]";
constexpr const char* kQueryPrompt = "[BEGIN QUERY]";

std::string padded(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", n);
  return buf;
}

std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(rng, i)]);
}

// Places `correct` at `pos` among the first (count - 1) wrongs.
std::vector<std::string> arrange(const std::string& correct, std::vector<std::string> wrongs,
                                 std::size_t count, std::size_t pos) {
  wrongs.resize(count - 1);
  wrongs.insert(wrongs.begin() + static_cast<std::ptrdiff_t>(pos), correct);
  return wrongs;
}

Rule sample_rule(std::vector<std::string> match_all, std::vector<std::string> candidates) {
  return Rule{false, std::move(match_all), {}, std::move(candidates)};
}

Rule conclude_rule(std::vector<std::string> match_all, std::string response) {
  return Rule{true, std::move(match_all), {}, {std::move(response)}};
}

void check_spec(const ToySpec& spec) {
  require(spec.problems >= 1, "toy suite needs at least one problem");
  require(spec.candidates >= 2 && spec.candidates <= 4, "toy candidates must be between 2 and 4");
}

// Balanced (pos1, pos2) assignment: every block of m*m consecutive problems
// uses each combination once, in a seeded order.
std::vector<std::pair<std::size_t, std::size_t>> positions(const ToySpec& spec, std::mt19937_64& rng) {
  const std::size_t m = spec.candidates;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  while (out.size() < spec.problems) {
    std::vector<std::size_t> block(m * m);
    for (std::size_t i = 0; i < block.size(); ++i) block[i] = i;
    shuffle(block, rng);
    for (std::size_t c : block) out.emplace_back(c / m, c % m);
  }
  out.resize(spec.problems);
  return out;
}

}  // namespace

ToySuite make_answer_toy(const ToySpec& spec) {
  check_spec(spec);
  const std::size_t m = spec.candidates;
  std::mt19937_64 rng(spec.seed ^ 0x61727468ULL);
  auto pos = positions(spec, rng);

  ToySuite suite;
  suite.kind = "answer";
  std::vector<Rule> concl_wrong;
  std::vector<Rule> concl_right;
  std::vector<Rule> concl_default;
  std::vector<Rule> samples;

  for (std::size_t j = 0; j < spec.problems; ++j) {
    const std::string id = "toy-" + padded(spec.first_index + j);
    const std::string tag = "[" + id + "]";
    const long a = 2 + static_cast<long>(below(rng, 8));
    const long b = 2 + static_cast<long>(below(rng, 8));
    const long c = 2 + static_cast<long>(below(rng, 8));
    const long product = b * c;
    const long total = a + product;
    const long left_to_right = (a + b) * c;
    auto num = [](long v) { return std::to_string(v); };
    auto fenced = [&](long v) { return "```" + num(v) + "```"; };

    ProblemInstance p;
    p.problem_id = id;
    p.statement = tag + " Compute " + num(a) + " + " + num(b) + " * " + num(c) + ".";
    p.gold_label = num(total);
    p.task_kind = TaskKind::kAnswerMatch;

    const std::string first_right = tag + " Multiplication binds tighter than addition, so evaluate " +
                                    num(b) + " * " + num(c) + " = " + num(product) +
                                    " before adding.";
    std::vector<std::string> first_wrong = {
        tag + " Work strictly left to right and start with " + num(a) + " + " + num(b) + " = " +
            num(a + b) + ".",
        tag + " Just guess a round figure close to the operands.",
        tag + " Add all three operands as the first move: " + num(a + b + c) + "."};
    shuffle(first_wrong, rng);

    const std::string second_right = tag + " Now add " + num(a) + " to the product: " + num(a) +
                                     " + " + num(product) + " = " + num(total) + ". " +
                                     fenced(total);
    std::vector<std::string> second_wrong = {
        tag + " Hastily report the product alone. " + fenced(product),
        tag + " Round the total up carelessly. " + fenced(total + 7),
        tag + " Double everything to be safe. " + fenced(2 * total)};
    shuffle(second_wrong, rng);
    std::vector<std::string> dead_end = {
        tag + " Finish the left to right pass: " + num(a + b) + " * " + num(c) + " = " +
            num(left_to_right) + ". " + fenced(left_to_right),
        tag + " Keep guessing. " + fenced(total + 7),
        tag + " Settle on a doubled total. " + fenced(2 * total),
        tag + " Give up and write zero. " + fenced(0)};
    dead_end.resize(m);

    const auto first = arrange(first_right, first_wrong, m, pos[j].first);
    const auto second = arrange(second_right, second_wrong, m, pos[j].second);

    samples.push_back(sample_rule({kRationalePrompt, first_right}, second));
    for (std::size_t w = 0; w + 1 < m; ++w) {
      samples.push_back(sample_rule({kRationalePrompt, first_wrong[w]}, dead_end));
      concl_wrong.push_back(conclude_rule({first_wrong[w]}, "The answer is " + fenced(left_to_right)));
      concl_wrong.push_back(conclude_rule({second_wrong[w]}, "The answer is " + fenced(total + 1)));
    }
    samples.push_back(sample_rule({kRationalePrompt, tag}, first));
    concl_right.push_back(conclude_rule({first_right}, "The answer is " + fenced(total)));
    concl_default.push_back(conclude_rule({tag}, "I am not sure."));

    suite.correct_texts[id] = {first_right, second_right};
    suite.problems.push_back(std::move(p));
  }

  ScriptedGenerator gen;
  for (auto& r : samples) gen.add(std::move(r));
  gen.add(sample_rule({kQueryPrompt},
                      {"order of operations for mixed arithmetic",
                       "evaluating expressions from left to right", "estimating sums quickly",
                       "rules for adding several numbers"}));
  for (auto* group : {&concl_wrong, &concl_right, &concl_default}) {
    for (auto& r : *group) gen.add(std::move(r));
  }
  suite.generator = std::move(gen);
  suite.documents = {
      {"arith-01.txt", "Order of operations: multiplication and division are evaluated before "
                       "addition and subtraction in mixed arithmetic."},
      {"arith-02.txt", "Operators of equal precedence are evaluated from left to right."},
      {"arith-03.txt", "Estimating sums quickly by rounding each number is useful for sanity checks."},
      {"arith-04.txt", "Adding several numbers can be done in any order because addition is "
                       "associative and commutative."}};
  return suite;
}

ToySuite make_ranking_toy(const ToySpec& spec) {
  check_spec(spec);
  const std::size_t m = std::min<std::size_t>(spec.candidates, 3);
  std::mt19937_64 rng(spec.seed ^ 0x72616e6bULL);

  static const char* kConsonants = "bdfgklmnprstvz";
  static const char* kVowels = "aeiou";
  std::set<std::string> used;
  auto word = [&]() {
    while (true) {
      std::string w;
      for (int s = 0; s < 3; ++s) {
        w += kConsonants[below(rng, 14)];
        w += kVowels[below(rng, 5)];
      }
      if (used.insert(w).second) return w;
    }
  };

  struct Topic {
    std::string surface[3];
    std::string idea[3];
  };
  std::vector<Topic> topics(spec.problems);
  for (auto& t : topics) {
    for (auto& w : t.surface) w = word();
    for (auto& w : t.idea) w = word();
  }

  ToySuite suite;
  suite.kind = "ranking";
  ScriptedGenerator gen;
  std::vector<Rule> concl;
  for (std::size_t j = 0; j < spec.problems; ++j) {
    const Topic& t = topics[j];
    const Topic& other = topics[(j + 1) % spec.problems];
    const std::string n = padded(spec.first_index + j);
    const std::string id = "rank-" + n;
    const std::string tag = "[" + id + "]";
    const std::string gold_id = "gold-" + n + ".txt";
    const std::string gold_text = t.idea[0] + " " + t.idea[1] + " " + t.idea[2] +
                                  " govern the underlying process; " + t.idea[0] +
                                  " shapes how " + t.idea[1] + " unfolds.";
    suite.documents.push_back({gold_id, gold_text});
    suite.documents.push_back({"surface-" + n + ".txt", "Field reports mention " + t.surface[0] +
                                                           ", " + t.surface[1] + " and " +
                                                           t.surface[2] + " in passing."});

    ProblemInstance p;
    p.problem_id = id;
    p.statement = tag + " Why do " + t.surface[0] + ", " + t.surface[1] + ", " + t.surface[2] +
                  " keep appearing?";
    p.gold_label = gold_id;
    p.task_kind = TaskKind::kRetrievalRanking;

    const std::string right_rationale = tag + " These symptoms are explained by hidden factors " +
                                        t.idea[0] + ", " + t.idea[1] + " and " +
                                        t.idea[2] + ".";
    std::vector<std::string> wrong_rationales = {
        tag + " The visible signs " + t.surface[0] + ", " + t.surface[1] + " and " + t.surface[2] +
            " say it all.",
        tag + " Perhaps it relates to " + other.idea[0] + ", " + other.idea[1] + " and " +
            other.idea[2] + "."};
    const std::string right_query =
        "principles behind " + t.idea[0] + " " + t.idea[1] + " " + t.idea[2];
    const std::string restated =
        "why do " + t.surface[0] + " " + t.surface[1] + " " + t.surface[2] + " keep appearing";
    const std::string sideways =
        "examples of " + other.idea[0] + " " + other.idea[1] + " " + other.idea[2];
    const std::string signs = "signs of " + t.surface[0] + " " + t.surface[1];

    auto rationales = arrange(right_rationale, wrong_rationales, m, below(rng, m));
    std::vector<std::string> wrong_queries = {restated, sideways};
    shuffle(wrong_queries, rng);
    auto queries = arrange(right_query, wrong_queries, m, below(rng, m));
    std::vector<std::string> dead_queries = {restated, sideways, signs};
    dead_queries.resize(m);

    gen.add(sample_rule({kQueryPrompt, right_rationale}, queries));
    for (const auto& w : wrong_rationales) gen.add(sample_rule({kQueryPrompt, w}, dead_queries));
    gen.add(sample_rule({kRationalePrompt, tag}, rationales));
    concl.push_back(conclude_rule({tag, gold_text}, gold_id));
    concl.push_back(conclude_rule({tag}, "no relevant document"));

    suite.judgments[id] = {gold_id};
    suite.correct_texts[id] = {right_rationale, right_query, gold_text};
    suite.problems.push_back(std::move(p));
  }
  for (auto& r : concl) gen.add(std::move(r));
  suite.generator = std::move(gen);
  std::sort(suite.documents.begin(), suite.documents.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  return suite;
}

ToySuite make_toy(const std::string& kind, const ToySpec& spec) {
  if (kind == "answer") return make_answer_toy(spec);
  if (kind == "ranking") return make_ranking_toy(spec);
  fail(ErrorCode::kInvalidArgument, "unknown toy kind '" + kind + "' (expected answer or ranking)");
}

void write_toy_suite(const ToySuite& suite, const std::string& dir) {
  namespace fs = std::filesystem;
  write_file((fs::path(dir) / "problems.jsonl").string(), serialize_problems(suite.problems));
  write_file((fs::path(dir) / "script.jsonl").string(), suite.generator.serialize());
  for (const auto& d : suite.documents) {
    write_file((fs::path(dir) / "corpus" / d.doc_id).string(), d.text + "\n");
  }
  ordered_json paths = {{"corpus_dir", "corpus"},
                        {"index", "work/index.bm25"},
                        {"problems", "problems.jsonl"},
                        {"pairs_dir", "work/pairs"},
                        {"critics_dir", "work/critics"},
                        {"trees_dir", "work/trees"},
                        {"results", "work/results.jsonl"},
                        {"logs_dir", "work/logs"},
                        {"report", "work/report.jsonl"}};
  if (suite.kind == "ranking") {
    write_file((fs::path(dir) / "judgments.jsonl").string(), serialize_judgments(suite.judgments));
    paths["judgments"] = "judgments.jsonl";
  }
  ordered_json config;
  config["paths"] = paths;
  config["generator"] = {{"backend", "scripted"}, {"script", "script.jsonl"}};
  // Ranking rewards sit six steps deep and need a larger search budget.
  config["mcts"] = {{"iterations", suite.kind == "ranking" ? 512 : 64}};
  config["seed"] = 0;
  write_file((fs::path(dir) / "config.json").string(), config.dump(2) + "\n");
}

}  // namespace critplan
