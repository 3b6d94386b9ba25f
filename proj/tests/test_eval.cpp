// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "critplan/error.hpp"
#include "critplan/eval.hpp"
#include "oracles.hpp"

using namespace critplan;

namespace {

ProblemInstance prob(std::string id, std::string gold) {
  return {std::move(id), "stmt", std::move(gold), TaskKind::kAnswerMatch};
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::kIo;
}

class ThrowingChecker final : public AnswerChecker {
 public:
  bool check(const ProblemInstance& p, const std::string&) const override {
    if (p.problem_id == "boom") throw std::runtime_error("checker crashed");
    return true;
  }
};

}  // namespace

TEST_CASE("normalized match") {
  NormalizedMatchChecker c;
  CHECK(c.check(prob("a", "Hello   World"), "  hello world\n"));
  CHECK(c.check(prob("a", "42"), "The answer is ```42```"));
  CHECK(c.check(prob("a", "42"), "```\n41\n```\nthen\n```python\n42\n```"));
  CHECK_FALSE(c.check(prob("a", "42"), "```42```\n```41```"));
  CHECK_FALSE(c.check(prob("a", "42"), "420"));
}

TEST_CASE("accuracy") {
  NormalizedMatchChecker c;
  auto report = accuracy({{prob("a", "1"), "1"}, {prob("b", "2"), "3"}, {prob("c", "x"), "X"},
                          {prob("d", "4"), ""}},
                         c);
  CHECK(report.accuracy == 0.5);
  REQUIRE(report.outcomes.size() == 4);
  CHECK(report.outcomes[1].problem_id == "b");
  CHECK_FALSE(report.outcomes[1].correct);
  try {
    accuracy({}, c);
    FAIL("empty batch accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyResultSet);
    CHECK(std::string(e.what()).find("empty result set") != std::string::npos);
  }
  auto r = accuracy({{prob("ok", ""), ""}, {prob("boom", ""), ""}}, ThrowingChecker());
  CHECK(r.accuracy == 0.5);
  CHECK(r.outcomes[1].error.find("checker crashed") != std::string::npos);
  CHECK(render_report(r) ==
        "{\"metric\":\"accuracy\",\"value\":0.500000,\"problems\":2}\n"
        "{\"problem_id\":\"ok\",\"correct\":true}\n"
        "{\"problem_id\":\"boom\",\"correct\":false,\"error\":\"checker crashed\"}\n");
}

TEST_CASE("command checker") {
  CommandChecker yes("read id; read answer; test \"$answer\" = \"$id-ok\"");
  CHECK(yes.check(prob("p1", ""), "p1-ok"));
  CHECK_FALSE(yes.check(prob("p1", ""), "nope"));
  CommandChecker killed("kill -9 $$");
  CHECK_THROWS_AS(killed.check(prob("p", ""), "x"), Error);
}

TEST_CASE("ndcg@10 against the reference") {
  std::vector<std::string> ranking{"a", "b", "c"};
  CHECK(ndcg_at_10(ranking, {"a"}) == 1.0);
  CHECK(ndcg_at_10(ranking, {"b"}) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-15));
  CHECK(ndcg_at_10(ranking, {}) == 0.0);
  CHECK(ndcg_at_10({}, {"a"}) == 0.0);
  CHECK(ndcg_at_10(ranking, {"z"}) == 0.0);

  std::mt19937_64 rng(5);
  for (int round = 0; round < 200; ++round) {
    std::vector<std::string> r;
    std::size_t len = rng() % 15;
    for (std::size_t i = 0; i < len; ++i) r.push_back("d" + std::to_string(i));
    std::shuffle(r.begin(), r.end(), rng);
    std::set<std::string> rel;
    std::size_t nrel = rng() % 14;
    for (std::size_t i = 0; i < nrel; ++i) rel.insert("d" + std::to_string(rng() % 18));
    double got = ndcg_at_10(r, rel);
    CHECK(got == doctest::Approx(oracle::ndcg_at_10(r, rel)).epsilon(1e-14));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0 + 1e-12);
  }
}

TEST_CASE("judgments parse, round trip and validate") {
  auto j = parse_judgments(
      "{\"problem_id\":\"q1\",\"relevant_doc_ids\":[\"b\",\"a\"]}\n\n"
      "{\"problem_id\":\"q2\",\"relevant_doc_ids\":[]}\n",
      "mem");
  REQUIRE(j.size() == 2);
  CHECK(j["q1"] == std::set<std::string>{"a", "b"});
  CHECK(parse_judgments(serialize_judgments(j), "again") == j);
  CHECK_THROWS_AS(parse_judgments("{\"problem_id\":1}", "bad"), Error);

  Corpus corpus = Corpus::build({{"a", "x"}, {"b", "y"}});
  validate_judgments(j, corpus);
  j["q3"] = {"ghost"};
  try {
    validate_judgments(j, corpus);
    FAIL("unknown doc accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }
}

TEST_CASE("ranking report") {
  RelevanceJudgments j{{"q1", {"a"}}, {"q2", {"b"}}};
  auto report = ranking_report({{"q1", {"a", "b"}}, {"q2", {"a", "b"}}, {"q3", {"a"}}}, j);
  CHECK(report.mean_ndcg == doctest::Approx((1.0 + 1.0 / std::log2(3.0)) / 3.0));
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[2].ndcg == 0.0);
  CHECK(render_report(report).rfind("{\"metric\":\"ndcg@10\",\"value\":0.543643,\"problems\":3}\n", 0) == 0);
  CHECK(code_of([&] { ranking_report({}, j); }) == ErrorCode::kEmptyResultSet);
  CHECK(format_metric(1.0 / 3.0) == "0.333333");
  CHECK(format_metric(1.0) == "1.000000");
}
