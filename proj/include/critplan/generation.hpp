// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "critplan/mdp.hpp"

namespace critplan {

struct SamplingConfig {
  std::size_t k = 3;
  double temperature = 0.7;
};

/// Large general generator. Implementations must be safe to call from
/// several planner instances at once.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  /// Between 1 and k non-empty completions. Throws BackendError on failure.
  virtual std::vector<std::string> sample(const std::string& prompt, std::size_t k,
                                          double temperature,
                                          std::optional<std::uint64_t> seed) const = 0;

  virtual std::string conclude(const std::string& prompt) const = 0;
};

/// Text with {name} placeholders. Braces that do not enclose an identifier
/// are copied literally.
class PromptTemplate {
 public:
  PromptTemplate(std::string template_id, std::string body);

  const std::string& id() const noexcept { return id_; }
  const std::string& body() const noexcept { return body_; }

  /// Placeholders referenced by the body, in order of first use.
  std::vector<std::string> placeholders() const;

  /// Throws ContractViolation if a referenced placeholder has no value.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string id_;
  std::string body_;
};

/// The rationale, query and conclusion templates.
struct PromptSet {
  PromptTemplate rationale;
  PromptTemplate query;
  PromptTemplate conclusion;

  /// Built-in templates compiled from assets/prompts.
  static const PromptSet& builtin();

  /// Loads rationale.txt, query.txt and conclusion.txt from `dir`.
  static PromptSet from_directory(const std::string& dir);
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds backoff{0};
};

struct GenerationContext {
  const GeneratorBackend* backend = nullptr;
  const PromptSet* prompts = &PromptSet::builtin();
  SamplingConfig sampling;
  RetryPolicy retry;
  std::optional<std::uint64_t> seed;
};

/// Problem statement, then prior Rationale/Doc text in trajectory order.
std::string render_rationale_prompt(const State& state, const PromptSet& prompts);
/// Uses the nearest preceding Rationale; ContractViolation if there is none.
std::string render_query_prompt(const State& state, const PromptSet& prompts);
/// Problem statement plus every observation so far.
std::string render_conclusion_prompt(const State& state, const PromptSet& prompts);

/// Text between `begin` and `end` markers; the whole completion when the
/// markers are missing. Always trimmed.
std::string strip_delimiters(std::string_view completion, std::string_view begin,
                             std::string_view end);

std::vector<Observation> sample_rationales(const State& state, const GenerationContext& ctx);
std::vector<Observation> sample_queries(const State& state, const GenerationContext& ctx);
std::string conclude(const State& state, const GenerationContext& ctx);

/// Offline backend driven by a rule file. Each JSON line is
///   {"call": "sample"|"conclude", "match_all": [...], "match_none": [...],
///    "candidates": [...]}            (sample)
///   {"call": "conclude", ..., "response": "..."}   (conclude)
/// The first rule whose substrings all occur in the prompt (and none of
/// match_none) wins. No matching rule is a BackendError.
class ScriptedGenerator final : public GeneratorBackend {
 public:
  struct Rule {
    bool conclude = false;
    std::vector<std::string> match_all;
    std::vector<std::string> match_none;
    std::vector<std::string> candidates;  // response for conclude rules
  };

  ScriptedGenerator() = default;
  explicit ScriptedGenerator(std::vector<Rule> rules) : rules_(std::move(rules)) {}

  static ScriptedGenerator from_file(const std::string& path);
  static ScriptedGenerator parse(std::string_view jsonl, const std::string& source = "<memory>");
  std::string serialize() const;

  void add(Rule rule) { rules_.push_back(std::move(rule)); }
  const std::vector<Rule>& rules() const noexcept { return rules_; }

  std::vector<std::string> sample(const std::string& prompt, std::size_t k, double temperature,
                                  std::optional<std::uint64_t> seed) const override;
  std::string conclude(const std::string& prompt) const override;

 private:
  const Rule* match(const std::string& prompt, bool conclude) const;
  std::vector<Rule> rules_;
};

struct HttpEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string path = "/generate";
  std::chrono::milliseconds timeout{30000};
  std::string api_key;  // sent as a bearer token when non-empty
};

/// POSTs {prompt, k, temperature, seed?} and expects {candidates: [text]}.
/// conclude() is a k = 1 request.
class HttpGenerator final : public GeneratorBackend {
 public:
  explicit HttpGenerator(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  std::vector<std::string> sample(const std::string& prompt, std::size_t k, double temperature,
                                  std::optional<std::uint64_t> seed) const override;
  std::string conclude(const std::string& prompt) const override;

 private:
  HttpEndpoint endpoint_;
};

/// POSTs a JSON body to endpoint and returns the parsed JSON response text.
/// Shared by the HTTP generator and critic clients.
std::string http_post_json(const HttpEndpoint& endpoint, const std::string& body);

}  // namespace critplan
