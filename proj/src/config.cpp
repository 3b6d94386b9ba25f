// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <set>

#include "critplan/error.hpp"
#include "critplan/text.hpp"

namespace critplan {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& message) {
  fail(ErrorCode::kConfiguration, message);
}

// Reads a JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) config_error("'" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      config_error("'" + path(key) + "' has the wrong type");
    }
  }

  void get_ms(const char* key, std::chrono::milliseconds& out) {
    std::int64_t ms = out.count();
    get(key, ms);
    if (ms < 0) config_error("'" + path(key) + "' must be non-negative");
    out = std::chrono::milliseconds(ms);
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return std::nullopt;
    return Section(*it, path(key));
  }

  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) config_error("unknown config key '" + path(key) + "'");
    }
  }

 private:
  std::string path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_endpoint(Section& s, HttpEndpoint& e) {
  s.get("url", e.base_url);
  s.get("path", e.path);
  s.get_ms("timeout_ms", e.timeout);
  s.get("api_key", e.api_key);
}

void check_one_of(const std::string& value, std::initializer_list<const char*> allowed,
                  const std::string& key) {
  for (const char* a : allowed) {
    if (value == a) return;
  }
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  config_error("'" + key + "' must be one of: " + list + " (got '" + value + "')");
}

EngineConfig from_json(const json& root, const std::string& base_dir) {
  EngineConfig c;
  c.base_dir = base_dir;
  Section top(root, "");

  if (auto s = top.sub("paths")) {
    auto& p = c.paths;
    s->get("corpus_dir", p.corpus_dir);
    s->get("corpus_jsonl", p.corpus_jsonl);
    s->get("index", p.index);
    s->get("problems", p.problems);
    s->get("pairs_dir", p.pairs_dir);
    s->get("critics_dir", p.critics_dir);
    s->get("trees_dir", p.trees_dir);
    s->get("results", p.results);
    s->get("logs_dir", p.logs_dir);
    s->get("report", p.report);
    s->get("judgments", p.judgments);
    s->get("prompts_dir", p.prompts_dir);
    s->done();
  }
  if (auto s = top.sub("generator")) {
    s->get("backend", c.generator.backend);
    s->get("script", c.generator.script);
    read_endpoint(*s, c.generator.endpoint);
    s->get("retries", c.generator.retry.attempts);
    s->get_ms("backoff_ms", c.generator.retry.backoff);
    s->done();
  }
  check_one_of(c.generator.backend, {"scripted", "http"}, "generator.backend");
  if (c.generator.retry.attempts < 1) config_error("'generator.retries' must be at least 1");

  if (auto s = top.sub("critics")) {
    s->get("backend", c.critics.backend);
    s->get("constant_value", c.critics.constant_value);
    s->get("lookup", c.critics.lookup);
    s->get("lookup_fallback", c.critics.lookup_fallback);
    read_endpoint(*s, c.critics.endpoint);
    s->done();
  }
  check_one_of(c.critics.backend, {"trained", "constant", "lookup", "http"}, "critics.backend");

  if (auto s = top.sub("oracle")) {
    s->get("kind", c.oracle.kind);
    s->get("value", c.oracle.value);
    s->done();
  }
  check_one_of(c.oracle.kind, {"exact_match", "constant"}, "oracle.kind");
  if (c.oracle.value < 0.0 || c.oracle.value > 1.0) config_error("'oracle.value' must be in [0, 1]");

  if (auto s = top.sub("sampling")) {
    s->get("k", c.sampling.k);
    s->get("temperature", c.sampling.temperature);
    s->done();
  }
  if (c.sampling.k < 1) config_error("'sampling.k' must be at least 1");

  if (auto s = top.sub("mcts")) {
    s->get("iterations", c.mcts.iterations);
    s->get("exploration", c.mcts.exploration);
    s->get("max_abort_fraction", c.mcts.max_abort_fraction);
    s->get("one_rejected_per_group", c.extract.one_rejected_per_group);
    s->done();
  }
  if (c.mcts.exploration < 0.0) config_error("'mcts.exploration' must be non-negative");

  if (auto s = top.sub("planner")) {
    s->get("horizon", c.planner.horizon);
    s->get("final_retrieval_k", c.planner.final_retrieval_k);
    if (auto d = s->sub("answer_detector")) {
      d->get("kind", c.detector.kind);
      d->get("open", c.detector.open);
      d->get("close", c.detector.close);
      d->get("pattern", c.detector.pattern);
      d->done();
    }
    s->done();
  }
  if (c.planner.horizon < 2) config_error("'planner.horizon' must be at least 2");
  if (c.planner.final_retrieval_k < 1) config_error("'planner.final_retrieval_k' must be at least 1");
  check_one_of(c.detector.kind, {"sentinel", "regex"}, "planner.answer_detector.kind");

  if (auto s = top.sub("bm25")) {
    s->get("k1", c.bm25.k1);
    s->get("b", c.bm25.b);
    s->done();
  }
  if (auto s = top.sub("training")) {
    s->get("epochs", c.training.epochs);
    s->get("learning_rate", c.training.learning_rate);
    s->get("dimensions", c.training.featurizer.dimensions);
    s->get("cross_features", c.training.featurizer.cross_features);
    s->done();
  }
  if (c.training.featurizer.dimensions == 0) config_error("'training.dimensions' must be positive");

  if (auto s = top.sub("checker")) {
    s->get("kind", c.checker.kind);
    s->get("command", c.checker.command);
    s->done();
  }
  check_one_of(c.checker.kind, {"normalized_match", "command"}, "checker.kind");

  top.get("seed", c.seed);
  top.get("parallel", c.parallel);
  if (c.parallel < 1) config_error("'parallel' must be at least 1");
  top.done();

  c.planner.sampling = c.sampling;
  c.mcts.sampling = c.sampling;
  c.mcts.horizon = c.planner.horizon;
  c.mcts.seed = c.seed;
  c.training.seed = c.seed;
  return c;
}

ordered_json endpoint_json(const HttpEndpoint& e, bool redact) {
  ordered_json j;
  j["url"] = e.base_url;
  j["path"] = e.path;
  j["timeout_ms"] = e.timeout.count();
  j["api_key"] = redact && !e.api_key.empty() ? "<redacted>" : e.api_key;
  return j;
}

ordered_json to_object(const EngineConfig& c, bool redact) {
  ordered_json j;
  const auto& p = c.paths;
  j["paths"] = {{"corpus_dir", p.corpus_dir},   {"corpus_jsonl", p.corpus_jsonl},
                {"index", p.index},             {"problems", p.problems},
                {"pairs_dir", p.pairs_dir},     {"critics_dir", p.critics_dir},
                {"trees_dir", p.trees_dir},     {"results", p.results},
                {"logs_dir", p.logs_dir},       {"report", p.report},
                {"judgments", p.judgments},     {"prompts_dir", p.prompts_dir}};
  ordered_json g = {{"backend", c.generator.backend}, {"script", c.generator.script}};
  g.update(endpoint_json(c.generator.endpoint, redact));
  g["retries"] = c.generator.retry.attempts;
  g["backoff_ms"] = c.generator.retry.backoff.count();
  j["generator"] = g;
  ordered_json cr = {{"backend", c.critics.backend},
                     {"constant_value", c.critics.constant_value},
                     {"lookup", c.critics.lookup},
                     {"lookup_fallback", c.critics.lookup_fallback}};
  cr.update(endpoint_json(c.critics.endpoint, redact));
  j["critics"] = cr;
  j["oracle"] = {{"kind", c.oracle.kind}, {"value", c.oracle.value}};
  j["sampling"] = {{"k", c.sampling.k}, {"temperature", c.sampling.temperature}};
  j["mcts"] = {{"iterations", c.mcts.iterations},
               {"exploration", c.mcts.exploration},
               {"max_abort_fraction", c.mcts.max_abort_fraction},
               {"one_rejected_per_group", c.extract.one_rejected_per_group}};
  j["planner"] = {{"horizon", c.planner.horizon},
                  {"final_retrieval_k", c.planner.final_retrieval_k},
                  {"answer_detector",
                   {{"kind", c.detector.kind},
                    {"open", c.detector.open},
                    {"close", c.detector.close},
                    {"pattern", c.detector.pattern}}}};
  j["bm25"] = {{"k1", c.bm25.k1}, {"b", c.bm25.b}};
  j["training"] = {{"epochs", c.training.epochs},
                   {"learning_rate", c.training.learning_rate},
                   {"dimensions", c.training.featurizer.dimensions},
                   {"cross_features", c.training.featurizer.cross_features}};
  j["checker"] = {{"kind", c.checker.kind}, {"command", c.checker.command}};
  j["seed"] = c.seed;
  j["parallel"] = c.parallel;
  return j;
}

}  // namespace

EngineConfig EngineConfig::parse(std::string_view text, const std::string& base_dir,
                                 const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    config_error(source + ": not valid JSON: " + e.what());
  }
  EngineConfig c;
  try {
    c = from_json(root, base_dir);
  } catch (const Error& e) {
    config_error(source + ": " + e.what());
  }
  apply_environment(c);
  return c;
}

EngineConfig EngineConfig::load(const std::string& path) {
  fs::path p(path);
  std::string base = p.has_parent_path() ? p.parent_path().string() : ".";
  return parse(read_file(path), base, path);
}

void EngineConfig::set(const std::string& dotted_key, std::string_view json_value) {
  json value;
  try {
    value = json::parse(json_value);
  } catch (const json::exception&) {
    value = std::string(json_value);  // bare strings are accepted unquoted
  }
  json root = json::parse(to_object(*this, false).dump());
  json* node = &root;
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = dotted_key.find('.', pos);
    std::string part = dotted_key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (!node->is_object() || !node->contains(part)) {
      config_error("unknown config key '" + dotted_key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  *node = value;
  *this = from_json(root, base_dir);
  apply_environment(*this);
}

std::string EngineConfig::to_json() const { return to_object(*this, true).dump(); }

std::string EngineConfig::resolve(const std::string& path) const {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

std::unique_ptr<AnswerDetector> EngineConfig::make_detector() const {
  if (detector.kind == "regex") {
    if (detector.pattern.empty()) config_error("regex answer detector needs a pattern");
    try {
      return std::make_unique<RegexDetector>(detector.pattern);
    } catch (const std::regex_error& e) {
      config_error("bad answer detector pattern: " + std::string(e.what()));
    }
  }
  return std::make_unique<SentinelDetector>(detector.open, detector.close);
}

std::unique_ptr<RewardOracle> EngineConfig::make_oracle() const {
  if (oracle.kind == "constant") return std::make_unique<ConstantOracle>(oracle.value);
  return std::make_unique<ExactMatchOracle>();
}

std::unique_ptr<AnswerChecker> EngineConfig::make_checker() const {
  if (checker.kind == "command") {
    if (checker.command.empty()) config_error("command checker needs 'checker.command'");
    return std::make_unique<CommandChecker>(checker.command);
  }
  return std::make_unique<NormalizedMatchChecker>();
}

std::unique_ptr<GeneratorBackend> EngineConfig::make_generator() const {
  if (generator.backend == "http") {
    if (generator.endpoint.base_url.empty()) {
      config_error("http generator needs 'generator.url' (or CRITPLAN_GENERATOR_URL)");
    }
    return std::make_unique<HttpGenerator>(generator.endpoint);
  }
  if (generator.script.empty()) config_error("scripted generator needs 'generator.script'");
  const std::string path = resolve(generator.script);
  if (!fs::exists(path)) {
    fail(ErrorCode::kMissingArtifact, "generator script not found: " + path);
  }
  return std::make_unique<ScriptedGenerator>(ScriptedGenerator::from_file(path));
}

PromptSet EngineConfig::make_prompts() const {
  if (paths.prompts_dir.empty()) return PromptSet::builtin();
  return PromptSet::from_directory(resolve(paths.prompts_dir));
}

void apply_environment(EngineConfig& config) {
  if (const char* v = std::getenv("CRITPLAN_GENERATOR_URL"); v && *v) {
    config.generator.endpoint.base_url = v;
  }
  if (const char* v = std::getenv("CRITPLAN_CRITIC_URL"); v && *v) {
    config.critics.endpoint.base_url = v;
  }
  if (const char* v = std::getenv("CRITPLAN_API_KEY"); v && *v) {
    config.generator.endpoint.api_key = v;
    config.critics.endpoint.api_key = v;
  }
}

}  // namespace critplan
