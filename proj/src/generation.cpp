// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/generation.hpp"

#include <cctype>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <thread>
#include <unordered_set>

#include "critplan/error.hpp"
#include "critplan/text.hpp"
#include "prompts_generated.hpp"

namespace critplan {

using json = nlohmann::json;

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Calls `fn` for each {identifier} in body: fn(begin, end, name) where
// [begin, end) spans the braces.
template <typename Fn>
void scan_placeholders(const std::string& body, Fn&& fn) {
  std::size_t pos = 0;
  while ((pos = body.find('{', pos)) != std::string::npos) {
    std::size_t end = pos + 1;
    while (end < body.size() && is_ident_char(body[end])) ++end;
    if (end < body.size() && body[end] == '}' && end > pos + 1) {
      fn(pos, end + 1, body.substr(pos + 1, end - pos - 1));
      pos = end + 1;
    } else {
      ++pos;
    }
  }
}

std::string label(ObservationKind kind) { return std::string(to_string(kind)) + ": "; }

template <typename Fn>
auto with_retries(const RetryPolicy& retry, Fn&& fn) -> decltype(fn()) {
  int attempts = std::max(1, retry.attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const BackendError& e) {
      if (attempt >= attempts) {
        throw BackendError(std::string(e.what()) + " (after " + std::to_string(attempts) +
                           " attempts)");
      }
      if (retry.backoff.count() > 0) std::this_thread::sleep_for(retry.backoff * attempt);
    }
  }
}

std::vector<Observation> to_candidates(const std::vector<std::string>& completions,
                                       std::size_t k, std::string_view begin,
                                       std::string_view end, ObservationKind kind) {
  std::vector<Observation> out;
  std::unordered_set<std::string> seen;
  for (const auto& completion : completions) {
    std::string text = strip_delimiters(completion, begin, end);
    if (text.empty() || !seen.insert(text).second) continue;
    out.push_back(Observation{kind, std::move(text), std::nullopt});
    if (out.size() == k) break;
  }
  if (out.empty()) {
    fail(ErrorCode::kEmptyCandidates,
         std::string("no usable ") + to_string(kind) + " candidates after stripping delimiters");
  }
  return out;
}

void require_pending(const State& state, ObservationKind subgoal) {
  const Observation* last = state.last_observation();
  require(last != nullptr && last->kind == subgoal,
          std::string("state must end in a ") + to_string(subgoal) + " observation");
}

}  // namespace

// ---------------------------------------------------------------------------
// Templates

PromptTemplate::PromptTemplate(std::string template_id, std::string body)
    : id_(std::move(template_id)), body_(std::move(body)) {}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  scan_placeholders(body_, [&](std::size_t, std::size_t, const std::string& name) {
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  });
  return names;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(body_.size());
  std::size_t copied = 0;
  scan_placeholders(body_, [&](std::size_t begin, std::size_t end, const std::string& name) {
    auto it = values.find(name);
    require(it != values.end(),
            "template '" + id_ + "' references missing placeholder {" + name + "}");
    out.append(body_, copied, begin - copied);
    out += it->second;
    copied = end;
  });
  out.append(body_, copied, std::string::npos);
  return out;
}

const PromptSet& PromptSet::builtin() {
  static const PromptSet prompts{
      PromptTemplate("rationale", assets::k_rationale_prompt),
      PromptTemplate("query", assets::k_query_prompt),
      PromptTemplate("conclusion", assets::k_conclusion_prompt),
  };
  return prompts;
}

PromptSet PromptSet::from_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  auto load = [&](const char* name) {
    return PromptTemplate(name, read_file((fs::path(dir) / (std::string(name) + ".txt")).string()));
  };
  return PromptSet{load("rationale"), load("query"), load("conclusion")};
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_rationale_prompt(const State& state, const PromptSet& prompts) {
  std::string preceding;
  for (const auto& obs : state.observations()) {
    if (obs.kind != ObservationKind::kRationale && obs.kind != ObservationKind::kDoc) continue;
    if (!preceding.empty()) preceding += '\n';
    preceding += label(obs.kind) + obs.text;
  }
  return prompts.rationale.render(
      {{"problem", state.problem().statement}, {"preceding_rationales", preceding}});
}

std::string render_query_prompt(const State& state, const PromptSet& prompts) {
  const Observation* rationale = nullptr;
  state.visit_backwards([&](const Step& step) {
    if (step.observation.kind != ObservationKind::kRationale) return true;
    rationale = &step.observation;
    return false;
  });
  require(rationale != nullptr, "query generation needs a preceding Rationale");
  return prompts.query.render(
      {{"problem", state.problem().statement}, {"last_rationale", rationale->text}});
}

std::string render_conclusion_prompt(const State& state, const PromptSet& prompts) {
  std::string history;
  for (const auto& obs : state.observations()) {
    if (!history.empty()) history += '\n';
    history += label(obs.kind) + obs.text;
  }
  return prompts.conclusion.render({{"problem", state.problem().statement}, {"history", history}});
}

std::string strip_delimiters(std::string_view completion, std::string_view begin,
                             std::string_view end) {
  std::string_view body = completion;
  if (std::size_t b = body.find(begin); b != std::string_view::npos) {
    body = body.substr(b + begin.size());
  }
  if (std::size_t e = body.find(end); e != std::string_view::npos) body = body.substr(0, e);
  return trim(body);
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<Observation> sample_rationales(const State& state, const GenerationContext& ctx) {
  require(ctx.backend != nullptr, "no generator backend configured");
  require(ctx.sampling.k >= 1, "sampling k must be at least 1");
  require_pending(state, ObservationKind::kReason);
  std::string prompt = render_rationale_prompt(state, *ctx.prompts);
  auto completions = with_retries(ctx.retry, [&] {
    return ctx.backend->sample(prompt, ctx.sampling.k, ctx.sampling.temperature, ctx.seed);
  });
  return to_candidates(completions, ctx.sampling.k, "[BEGIN REASON]", "[END REASON]",
                       ObservationKind::kRationale);
}

std::vector<Observation> sample_queries(const State& state, const GenerationContext& ctx) {
  require(ctx.backend != nullptr, "no generator backend configured");
  require(ctx.sampling.k >= 1, "sampling k must be at least 1");
  require_pending(state, ObservationKind::kGenQuery);
  std::string prompt = render_query_prompt(state, *ctx.prompts);
  auto completions = with_retries(ctx.retry, [&] {
    return ctx.backend->sample(prompt, ctx.sampling.k, ctx.sampling.temperature, ctx.seed);
  });
  return to_candidates(completions, ctx.sampling.k, "[BEGIN QUERY]", "[END QUERY]",
                       ObservationKind::kQuery);
}

std::string conclude(const State& state, const GenerationContext& ctx) {
  require(ctx.backend != nullptr, "no generator backend configured");
  std::string prompt = render_conclusion_prompt(state, *ctx.prompts);
  return with_retries(ctx.retry, [&] { return ctx.backend->conclude(prompt); });
}

// ---------------------------------------------------------------------------
// Scripted backend

ScriptedGenerator ScriptedGenerator::from_file(const std::string& path) {
  return parse(read_file(path), path);
}

ScriptedGenerator ScriptedGenerator::parse(std::string_view jsonl, const std::string& source) {
  ScriptedGenerator gen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    std::string_view line = jsonl.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    auto where = source + ":" + std::to_string(line_no);
    try {
      json j = json::parse(line);
      Rule rule;
      std::string call = j.at("call").get<std::string>();
      if (call != "sample" && call != "conclude") {
        fail(ErrorCode::kConfiguration, where + ": unknown call '" + call + "'");
      }
      rule.conclude = call == "conclude";
      if (j.contains("match_all")) rule.match_all = j["match_all"].get<std::vector<std::string>>();
      if (j.contains("match_none")) {
        rule.match_none = j["match_none"].get<std::vector<std::string>>();
      }
      if (rule.conclude) {
        rule.candidates = {j.at("response").get<std::string>()};
      } else {
        rule.candidates = j.at("candidates").get<std::vector<std::string>>();
        if (rule.candidates.empty()) fail(ErrorCode::kConfiguration, where + ": empty candidates");
      }
      gen.rules_.push_back(std::move(rule));
    } catch (const json::exception& e) {
      fail(ErrorCode::kConfiguration, where + ": " + e.what());
    }
  }
  return gen;
}

std::string ScriptedGenerator::serialize() const {
  std::string out;
  for (const auto& rule : rules_) {
    nlohmann::ordered_json j;
    j["call"] = rule.conclude ? "conclude" : "sample";
    j["match_all"] = rule.match_all;
    if (!rule.match_none.empty()) j["match_none"] = rule.match_none;
    if (rule.conclude) {
      j["response"] = rule.candidates.empty() ? std::string() : rule.candidates.front();
    } else {
      j["candidates"] = rule.candidates;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

const ScriptedGenerator::Rule* ScriptedGenerator::match(const std::string& prompt,
                                                        bool conclude) const {
  for (const auto& rule : rules_) {
    if (rule.conclude != conclude) continue;
    bool ok = std::all_of(rule.match_all.begin(), rule.match_all.end(),
                          [&](const std::string& s) { return prompt.find(s) != std::string::npos; });
    ok = ok && std::none_of(rule.match_none.begin(), rule.match_none.end(), [&](const std::string& s) {
           return prompt.find(s) != std::string::npos;
         });
    if (ok) return &rule;
  }
  return nullptr;
}

std::vector<std::string> ScriptedGenerator::sample(const std::string& prompt, std::size_t k,
                                                   double /*temperature*/,
                                                   std::optional<std::uint64_t> /*seed*/) const {
  const Rule* rule = match(prompt, false);
  if (rule == nullptr) throw BackendError("scripted generator: no sample rule matches prompt");
  std::vector<std::string> out(rule->candidates.begin(),
                               rule->candidates.begin() +
                                   static_cast<std::ptrdiff_t>(std::min(k, rule->candidates.size())));
  return out;
}

std::string ScriptedGenerator::conclude(const std::string& prompt) const {
  const Rule* rule = match(prompt, true);
  if (rule == nullptr) throw BackendError("scripted generator: no conclude rule matches prompt");
  return rule->candidates.front();
}

}  // namespace critplan
