// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "critplan/error.hpp"
#include "critplan/generation.hpp"
#include "critplan/text.hpp"
#include "support.hpp"

using namespace critplan;
using json = nlohmann::json;

namespace {

ProblemInstance problem() { return {"p", "Add 2 and 3.", "5", TaskKind::kAnswerMatch}; }

State at(SubGoal goal, std::vector<Observation> before = {}) {
  State s = State::root(problem());
  for (const auto& obs : before) {
    SubGoal g = obs.kind == ObservationKind::kRationale ? SubGoal::kReasoning
                : obs.kind == ObservationKind::kQuery   ? SubGoal::kQuerying
                                                        : SubGoal::kRetrieving;
    Action a = ChooseSubGoal{g};
    s = apply(s, a, f_rule(s, a));
    s = apply(s, ChooseCandidate{0, obs}, obs);
  }
  Action a = ChooseSubGoal{goal};
  return apply(s, a, f_rule(s, a));
}

class FixedGenerator final : public GeneratorBackend {
 public:
  explicit FixedGenerator(std::vector<std::string> out) : out_(std::move(out)) {}
  std::vector<std::string> sample(const std::string& prompt, std::size_t, double,
                                  std::optional<std::uint64_t>) const override {
    last_prompt = prompt;
    return out_;
  }
  std::string conclude(const std::string& prompt) const override {
    last_prompt = prompt;
    return "final";
  }
  mutable std::string last_prompt;

 private:
  std::vector<std::string> out_;
};

// Fails the first `failures` calls.
class FlakyGenerator final : public GeneratorBackend {
 public:
  explicit FlakyGenerator(int failures) : failures_(failures) {}
  std::vector<std::string> sample(const std::string&, std::size_t, double,
                                  std::optional<std::uint64_t>) const override {
    if (calls++ < failures_) throw BackendError("transient");
    return {"ok"};
  }
  std::string conclude(const std::string&) const override {
    if (calls++ < failures_) throw BackendError("transient");
    return "done";
  }
  mutable int calls = 0;

 private:
  int failures_;
};

}  // namespace

TEST_CASE("templates render named placeholders") {
  PromptTemplate t("t", "Hi {name}, {name}! {not an id} {}");
  CHECK(t.placeholders() == std::vector<std::string>{"name"});
  CHECK(t.render({{"name", "Ada"}}) == "Hi Ada, Ada! {not an id} {}");
  CHECK_THROWS_AS(t.render({}), ContractViolation);
}

TEST_CASE("built-in templates carry the instruction wording") {
  const auto& p = PromptSet::builtin();
  CHECK(p.rationale.placeholders() == std::vector<std::string>{"problem", "preceding_rationales"});
  CHECK(p.query.placeholders() == std::vector<std::string>{"last_rationale"});
  CHECK(p.conclusion.placeholders() == std::vector<std::string>{"problem", "history"});
  CHECK(p.rationale.body().find("Reason through the problem and think step by step.") != std::string::npos);
  CHECK(p.rationale.body().find("It starts with [BEGIN REASON] and ends with [END REASON].") !=
        std::string::npos);
  CHECK(p.query.body().find("The query starts with [BEGIN QUERY] and ends with [END QUERY].") !=
        std::string::npos);
}

TEST_CASE("prompts loaded from a directory") {
  testing::TempDir dir("prompts");
  write_file(dir / "rationale.txt", "R {problem}|{preceding_rationales}");
  write_file(dir / "query.txt", "Q {last_rationale}");
  write_file(dir / "conclusion.txt", "C {history}");
  auto set = PromptSet::from_directory(dir.str());
  State s = at(SubGoal::kReasoning, {Observation::rationale("first"), Observation::query("q"),
                                     Observation::doc("d", "doc text")});
  CHECK(render_rationale_prompt(s, set) == "R Add 2 and 3.|Rationale: first\nDoc: doc text");
  CHECK_THROWS_AS(PromptSet::from_directory(dir / "nope"), Error);
}

TEST_CASE("query prompt uses the nearest rationale") {
  State s = at(SubGoal::kQuerying, {Observation::rationale("old"), Observation::rationale("new")});
  auto prompt = render_query_prompt(s, PromptSet::builtin());
  CHECK(prompt.find("[BEGIN REASON]\nnew\n[END REASON]") != std::string::npos);
  CHECK(prompt.find("old") == std::string::npos);
  CHECK_THROWS_AS(render_query_prompt(at(SubGoal::kQuerying), PromptSet::builtin()), ContractViolation);
}

TEST_CASE("conclusion prompt lists the whole history") {
  State s = at(SubGoal::kReasoning, {Observation::rationale("r1")});
  auto prompt = render_conclusion_prompt(s, PromptSet::builtin());
  CHECK(prompt.find("Reason: The next step is to generate a rationale\nRationale: r1\nReason: ") !=
        std::string::npos);
}

TEST_CASE("strip_delimiters") {
  CHECK(strip_delimiters("junk [BEGIN REASON] body [END REASON] tail", "[BEGIN REASON]", "[END REASON]") == "body");
  CHECK(strip_delimiters("  plain  ", "[BEGIN QUERY]", "[END QUERY]") == "plain");
  CHECK(strip_delimiters("[BEGIN QUERY]unterminated", "[BEGIN QUERY]", "[END QUERY]") == "unterminated");
}

TEST_CASE("sampling dedups, strips and truncates") {
  FixedGenerator gen({"[BEGIN REASON]a[END REASON]", "a", " b ", "c", "d"});
  GenerationContext ctx;
  ctx.backend = &gen;
  auto out = sample_rationales(at(SubGoal::kReasoning), ctx);
  REQUIRE(out.size() == 3);
  CHECK(out[0].text == "a");
  CHECK(out[1].text == "b");
  CHECK(out[2].text == "c");
  CHECK(out[0].kind == ObservationKind::kRationale);
  CHECK(gen.last_prompt.find("Add 2 and 3.") != std::string::npos);

  FixedGenerator empty({"[BEGIN REASON]  [END REASON]", ""});
  ctx.backend = &empty;
  try {
    sample_rationales(at(SubGoal::kReasoning), ctx);
    FAIL("expected EmptyCandidates");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyCandidates);
  }
  CHECK_THROWS_AS(sample_rationales(at(SubGoal::kQuerying, {Observation::rationale("r")}), ctx),
                  ContractViolation);
}

TEST_CASE("queries come out as Query observations") {
  FixedGenerator gen({"[BEGIN QUERY] sum facts [END QUERY]"});
  GenerationContext ctx;
  ctx.backend = &gen;
  auto out = sample_queries(at(SubGoal::kQuerying, {Observation::rationale("r")}), ctx);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == Observation::query("sum facts"));
}

TEST_CASE("retries absorb transient backend failures") {
  GenerationContext ctx;
  FlakyGenerator twice(2);
  ctx.backend = &twice;
  CHECK(sample_rationales(at(SubGoal::kReasoning), ctx).size() == 1);
  CHECK(twice.calls == 3);

  FlakyGenerator always(100);
  ctx.backend = &always;
  CHECK_THROWS_AS(conclude(at(SubGoal::kReasoning), ctx), BackendError);
  CHECK(always.calls == 3);
}

TEST_CASE("scripted generator matches the first rule") {
  auto gen = ScriptedGenerator::parse(
      R"({"call":"sample","match_all":["alpha"],"match_none":["beta"],"candidates":["one","two","three"]}
{"call":"sample","match_all":["alpha"],"candidates":["fallback"]}
{"call":"conclude","match_all":[],"response":"the end"}
)",
      "mem");
  CHECK(gen.sample("alpha", 2, 0.7, std::nullopt) == std::vector<std::string>{"one", "two"});
  CHECK(gen.sample("alpha beta", 3, 0.7, std::nullopt) == std::vector<std::string>{"fallback"});
  CHECK(gen.conclude("anything") == "the end");
  CHECK_THROWS_AS(gen.sample("gamma", 1, 0.7, std::nullopt), BackendError);
  CHECK(ScriptedGenerator::parse(gen.serialize(), "again").serialize() == gen.serialize());
  CHECK_THROWS_AS(ScriptedGenerator::parse("{\"call\":\"nope\"}", "bad"), Error);
  CHECK_THROWS_AS(ScriptedGenerator::parse("not json", "bad"), Error);
}

TEST_CASE("http generator speaks the JSON protocol") {
  httplib::Server server;
  json seen;
  std::string auth;
  server.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    json out = {{"candidates", {"[BEGIN REASON]x[END REASON]", "y", "z", "w"}}};
    res.set_content(out.dump(), "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  server.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"nope\":1}", "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpEndpoint ep;
  ep.base_url = "http://127.0.0.1:" + std::to_string(port);
  ep.api_key = "secret";
  HttpGenerator gen(ep);
  auto out = gen.sample("prompt text", 3, 0.7, 42);
  CHECK(out.size() == 3);
  CHECK(seen["prompt"] == "prompt text");
  CHECK(seen["k"] == 3);
  CHECK(seen["temperature"] == doctest::Approx(0.7));
  CHECK(seen["seed"] == 42);
  CHECK(auth == "Bearer secret");

  CHECK(gen.conclude("c") == "[BEGIN REASON]x[END REASON]");
  CHECK(seen["k"] == 1);
  CHECK_FALSE(seen.contains("seed"));

  GenerationContext ctx;
  ctx.backend = &gen;
  CHECK(sample_rationales(at(SubGoal::kReasoning), ctx).front().text == "x");

  ep.path = "/broken";
  CHECK_THROWS_AS(HttpGenerator(ep).sample("p", 1, 0.7, std::nullopt), BackendError);
  ep.path = "/garbage";
  CHECK_THROWS_AS(HttpGenerator(ep).sample("p", 1, 0.7, std::nullopt), BackendError);

  server.stop();
  thread.join();

  ep.path = "/generate";
  ep.timeout = std::chrono::milliseconds(200);
  CHECK_THROWS_AS(HttpGenerator(ep).sample("p", 1, 0.7, std::nullopt), BackendError);
}
