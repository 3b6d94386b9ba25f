// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "critplan/error.hpp"
#include "critplan/eval.hpp"
#include "critplan/mcts.hpp"
#include "critplan/planner.hpp"
#include "critplan/text.hpp"

namespace critplan {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kResultsFormat = "critplan-results";
constexpr const char* kReportFormat = "critplan-report";

// Serializes log calls from worker threads.
class Logger {
 public:
  explicit Logger(const LogFn& fn) : fn_(fn) {}
  void operator()(LogLevel level, const std::string& message) const {
    if (!fn_) return;
    std::lock_guard<std::mutex> lock(mu_);
    fn_(level, message);
  }

 private:
  const LogFn& fn_;
  mutable std::mutex mu_;
};

void echo_config(const EngineConfig& config, const Logger& log, const char* command) {
  log(LogLevel::kInfo, std::string(command) + ": config " + config.to_json());
  log(LogLevel::kInfo, std::string(command) + ": seed " + std::to_string(config.seed));
}

[[noreturn]] void missing(const std::string& what, const std::string& path, const std::string& producer) {
  fail(ErrorCode::kMissingArtifact,
       what + " not found: " + path + " (run `critplan " + producer + "` first)");
}

std::string timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string header_line(const char* format) {
  ordered_json j;
  j["format"] = format;
  j["version"] = 1;
  j["created"] = timestamp();
  return j.dump() + "\n";
}

std::vector<ProblemInstance> problems_for(const EngineConfig& config, const std::string& override_path) {
  const std::string path = override_path.empty() ? config.resolve(config.paths.problems) : override_path;
  if (!fs::exists(path)) {
    fail(ErrorCode::kMissingArtifact, "problem set not found: " + path);
  }
  auto problems = load_problems(path);
  std::sort(problems.begin(), problems.end(),
            [](const ProblemInstance& a, const ProblemInstance& b) { return a.problem_id < b.problem_id; });
  return problems;
}

// Runs fn(i) for i in [0, n) on `workers` threads. Exceptions escaping fn
// are the caller's bug; fn must catch per-item failures itself.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::string safe_file_stem(const std::string& id) {
  std::string out;
  for (char c : id) {
    out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_';
  }
  return out;
}

std::optional<Corpus> optional_index(const EngineConfig& config) {
  const std::string path = config.resolve(config.paths.index);
  if (!fs::exists(path)) return std::nullopt;
  return Corpus::load(path);
}

}  // namespace

std::string critic_file_name(CriticKind kind) {
  return std::string("critic.") + to_string(kind) + ".json";
}

Corpus load_index(const EngineConfig& config) {
  const std::string path = config.resolve(config.paths.index);
  if (!fs::exists(path)) missing("index", path, "index");
  return Corpus::load(path);
}

CriticSet load_critics(const EngineConfig& config) {
  const auto& c = config.critics;
  if (c.backend == "constant") return CriticSet::constant(c.constant_value);
  CriticSet set;
  if (c.backend == "lookup") {
    const std::string path = config.resolve(c.lookup);
    if (c.lookup.empty() || !fs::exists(path)) {
      fail(ErrorCode::kMissingArtifact, "lookup critic file not found: " + path);
    }
    auto lookup = std::make_shared<LookupCritic>(LookupCritic::from_file(path, c.lookup_fallback));
    for (CriticKind k : kAllCriticKinds) set.set(k, lookup);
    return set;
  }
  if (c.backend == "http") {
    if (c.endpoint.base_url.empty()) {
      fail(ErrorCode::kConfiguration, "http critics need 'critics.url' (or CRITPLAN_CRITIC_URL)");
    }
    auto remote = std::make_shared<HttpCritic>(c.endpoint);
    for (CriticKind k : kAllCriticKinds) set.set(k, remote);
    return set;
  }
  for (CriticKind k : kAllCriticKinds) {
    const std::string path =
        (fs::path(config.resolve(config.paths.critics_dir)) / critic_file_name(k)).string();
    if (!fs::exists(path)) {
      missing("critic file", path, std::string("train-critic --kind ") + to_string(k));
    }
    auto critic = std::make_shared<LinearCritic>(LinearCritic::load(path));
    if (critic->kind() != k) {
      fail(ErrorCode::kConfiguration, path + " holds a " + to_string(critic->kind()) + " critic");
    }
    set.set(k, std::move(critic));
  }
  return set;
}

IndexSummary cmd_index(const EngineConfig& config, const LogFn& log_fn) {
  Logger log(log_fn);
  echo_config(config, log, "index");
  std::vector<Document> docs;
  std::string source;
  if (!config.paths.corpus_dir.empty()) {
    source = config.resolve(config.paths.corpus_dir);
    if (!fs::is_directory(source)) {
      fail(ErrorCode::kMissingArtifact, "corpus directory not found: " + source);
    }
    docs = read_documents_from_directory(source);
  } else if (!config.paths.corpus_jsonl.empty()) {
    source = config.resolve(config.paths.corpus_jsonl);
    if (!fs::exists(source)) fail(ErrorCode::kMissingArtifact, "corpus file not found: " + source);
    docs = read_documents_from_jsonl(source);
  } else {
    fail(ErrorCode::kConfiguration, "set 'paths.corpus_dir' or 'paths.corpus_jsonl'");
  }
  if (docs.empty()) fail(ErrorCode::kIngestion, "no documents in " + source);

  Corpus corpus = Corpus::build(std::move(docs), config.bm25, fs::path(source).filename().string());
  IndexSummary summary;
  summary.path = config.resolve(config.paths.index);
  summary.documents = corpus.size();
  summary.average_length = corpus.average_length();
  const std::string bytes = corpus.serialize();
  if (fs::exists(summary.path) && read_file(summary.path) == bytes) {
    summary.up_to_date = true;
    log(LogLevel::kInfo, "index: " + summary.path + " is up to date");
  } else {
    write_file(summary.path, bytes);
  }
  return summary;
}

CollectSummary cmd_collect(const EngineConfig& config, const std::string& problems_path,
                           const LogFn& log_fn) {
  Logger log(log_fn);
  echo_config(config, log, "collect");
  auto problems = problems_for(config, problems_path);
  auto generator = config.make_generator();
  auto oracle = config.make_oracle();
  auto detector = config.make_detector();
  const PromptSet prompts = config.make_prompts();
  std::optional<Corpus> corpus = optional_index(config);
  if (!corpus) {
    log(LogLevel::kWarning, "collect: no index at " + config.resolve(config.paths.index) +
                                "; Retrieve sub-goals will be dead ends");
  }

  MctsBackends backends;
  backends.generator = generator.get();
  backends.corpus = corpus ? &*corpus : nullptr;
  backends.oracle = oracle.get();
  backends.detector = detector.get();
  backends.prompts = &prompts;
  backends.retry = config.generator.retry;

  struct Outcome {
    std::vector<PreferencePair> pairs;
    std::string tree;
    std::string error;
  };
  std::vector<Outcome> outcomes(problems.size());
  parallel_for(problems.size(), config.parallel, [&](std::size_t i) {
    const auto& p = problems[i];
    MctsConfig mcts = config.mcts;
    mcts.seed = config.seed ^ fnv1a(p.problem_id);
    try {
      auto result = run_mcts(p, backends, mcts);
      outcomes[i].tree = result.tree.dump();
      outcomes[i].pairs = flatten(extract_pairs(result.tree, p, config.extract));
      log(LogLevel::kDebug, "collect: " + p.problem_id + ": " + std::to_string(result.tree.size()) +
                                " nodes, " + std::to_string(outcomes[i].pairs.size()) + " pairs, " +
                                std::to_string(result.stats.aborted) + " aborted iterations");
    } catch (const Error& e) {
      outcomes[i].error = e.what();
    }
  });

  CollectSummary summary;
  summary.problems = problems.size();
  for (CriticKind k : kAllCriticKinds) summary.pairs[k] = 0;
  std::vector<PreferencePair> all;
  const fs::path trees = config.resolve(config.paths.trees_dir);
  for (std::size_t i = 0; i < problems.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.error.empty()) {
      log(LogLevel::kError, "collect: skipped " + problems[i].problem_id + ": " + o.error);
      summary.skipped.push_back({problems[i].problem_id, o.error});
      continue;
    }
    write_file((trees / (safe_file_stem(problems[i].problem_id) + ".tree.jsonl")).string(), o.tree);
    for (auto& pair : o.pairs) {
      ++summary.pairs[pair.kind];
      all.push_back(std::move(pair));
    }
  }
  export_pairs(all, config.resolve(config.paths.pairs_dir));
  for (const auto& [kind, n] : summary.pairs) {
    log(LogLevel::kInfo, std::string("collect: ") + to_string(kind) + " pairs " + std::to_string(n));
  }
  return summary;
}

ExportSummary cmd_export_pairs(const EngineConfig& config, const ExportRequest& request,
                               const LogFn& log_fn) {
  Logger log(log_fn);
  echo_config(config, log, "export-pairs");
  require(!request.out_dir.empty(), "export-pairs needs an output directory");
  require(request.heldout_fraction >= 0.0 && request.heldout_fraction < 1.0,
          "held-out fraction must be in [0, 1)");
  const std::string pairs_dir = config.resolve(config.paths.pairs_dir);
  std::vector<PreferencePair> pairs;
  for (CriticKind k : kAllCriticKinds) {
    if (request.kind && *request.kind != k) continue;
    const std::string path = (fs::path(pairs_dir) / pair_file_name(k)).string();
    if (!fs::exists(path)) missing("pair file", path, "collect");
    auto part = import_pair_file(path);
    pairs.insert(pairs.end(), part.begin(), part.end());
  }

  if (request.one_rejected_per_group) {
    // Keep the lowest-valued rejected observation per (problem, context,
    // chosen) group; the first one wins ties.
    std::vector<PreferencePair> kept;
    for (auto& p : pairs) {
      auto it = std::find_if(kept.begin(), kept.end(), [&](const PreferencePair& q) {
        return q.kind == p.kind && q.problem_id == p.problem_id &&
               q.context_observations == p.context_observations && q.chosen == p.chosen;
      });
      if (it == kept.end()) {
        kept.push_back(std::move(p));
      } else if (p.rejected_value < it->rejected_value) {
        *it = std::move(p);
      }
    }
    pairs = std::move(kept);
  }

  ExportSummary summary;
  if (request.heldout_fraction == 0.0) {
    summary.train = export_pairs(pairs, request.out_dir);
  } else {
    std::vector<PreferencePair> train, heldout;
    for (auto& p : pairs) {
      double u = static_cast<double>(fnv1a(p.problem_id, config.seed ^ 0xcbf29ce484222325ULL) % 1000000) /
                 1000000.0;
      (u < request.heldout_fraction ? heldout : train).push_back(std::move(p));
    }
    summary.train = export_pairs(train, (fs::path(request.out_dir) / "train").string());
    summary.heldout = export_pairs(heldout, (fs::path(request.out_dir) / "heldout").string());
  }
  log(LogLevel::kInfo, "export-pairs: " + std::to_string(summary.train) + " train, " +
                           std::to_string(summary.heldout) + " held-out pairs");
  return summary;
}

TrainSummary cmd_train(const EngineConfig& config, CriticKind kind, const LogFn& log_fn) {
  Logger log(log_fn);
  echo_config(config, log, "train-critic");
  const std::string pairs_path =
      (fs::path(config.resolve(config.paths.pairs_dir)) / pair_file_name(kind)).string();
  if (!fs::exists(pairs_path)) missing("pair file", pairs_path, "collect");
  auto pairs = import_pair_file(pairs_path);

  TrainSummary summary;
  summary.kind = kind;
  summary.pairs = pairs.size();
  summary.path = (fs::path(config.resolve(config.paths.critics_dir)) / critic_file_name(kind)).string();
  TrainingOptions options = config.training;
  options.loss_curve = nullptr;
  if (pairs.empty()) {
    log(LogLevel::kWarning, std::string("train-critic: no ") + to_string(kind) +
                                " pairs; writing an untrained critic that scores every candidate 0");
    LinearCritic critic(kind, options.featurizer, options.seed);
    critic.save(summary.path);
    summary.untrained = true;
    summary.final_loss = std::log(2.0);
    return summary;
  }
  LinearCritic critic = train_reference_critic(pairs, options);
  summary.final_loss = mean_pairwise_loss(critic, pairs);
  summary.train_accuracy = pairwise_accuracy(critic, pairs);
  critic.save(summary.path);
  log(LogLevel::kInfo, std::string("train-critic: ") + to_string(kind) + " pairs " +
                           std::to_string(pairs.size()) + ", loss " + format_metric(summary.final_loss) +
                           ", train accuracy " + format_metric(summary.train_accuracy));
  return summary;
}

SolveSummary cmd_solve(const EngineConfig& config, const std::string& problems_path,
                       const LogFn& log_fn) {
  Logger log(log_fn);
  echo_config(config, log, "solve");
  auto problems = problems_for(config, problems_path);
  Corpus corpus = load_index(config);
  CriticSet critics = load_critics(config);
  auto generator = config.make_generator();
  auto detector = config.make_detector();
  const PromptSet prompts = config.make_prompts();

  PlannerBackends backends;
  backends.generator = generator.get();
  backends.corpus = &corpus;
  backends.detector = detector.get();
  backends.prompts = &prompts;
  backends.retry = config.generator.retry;

  struct Outcome {
    std::string record;
    std::string trajectory;
    std::string scores;
    std::string error;
  };
  std::vector<Outcome> outcomes(problems.size());
  parallel_for(problems.size(), config.parallel, [&](std::size_t i) {
    const auto& p = problems[i];
    PlannerBackends b = backends;
    b.seed = config.seed ^ fnv1a(p.problem_id);
    ordered_json rec;
    rec["problem_id"] = p.problem_id;
    rec["task_kind"] = to_string(p.task_kind);
    try {
      std::optional<SolveResult> answer;
      std::optional<RankingResult> ranking;
      const SolveResult* trace = nullptr;
      if (p.task_kind == TaskKind::kRetrievalRanking) {
        ranking.emplace(solve_for_ranking(p, critics, b, config.planner));
        trace = &ranking->trace;
        rec["terminated_by"] = to_string(trace->terminated_by);
        rec["final_answer"] = nullptr;
        rec["ranking"] = ranking->doc_ids;
        rec["query"] = ranking->query;
        rec["fallback"] = ranking->fallback;
      } else {
        answer.emplace(solve(p, critics, b, config.planner));
        trace = &*answer;
        rec["terminated_by"] = to_string(trace->terminated_by);
        rec["final_answer"] = trace->final_answer;
      }
      rec["steps"] = trace->trajectory.step_index();
      rec["backtracks"] = trace->backtracks;
      outcomes[i].record = rec.dump() + "\n";
      outcomes[i].trajectory = trajectory_log(trace->trajectory);
      outcomes[i].scores = score_table(p, trace->decisions);
      log(LogLevel::kDebug, "solve: " + p.problem_id + ": " + to_string(trace->terminated_by) +
                                " after " + std::to_string(trace->trajectory.step_index()) + " steps");
    } catch (const Error& e) {
      outcomes[i].error = e.what();
    }
  });

  SolveSummary summary;
  summary.problems = problems.size();
  std::string results = header_line(kResultsFormat);
  const fs::path logs = config.resolve(config.paths.logs_dir);
  for (std::size_t i = 0; i < problems.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.error.empty()) {
      log(LogLevel::kError, "solve: skipped " + problems[i].problem_id + ": " + o.error);
      summary.skipped.push_back({problems[i].problem_id, o.error});
      continue;
    }
    ++summary.solved;
    results += o.record;
    const std::string stem = safe_file_stem(problems[i].problem_id);
    write_file((logs / (stem + ".trajectory.jsonl")).string(), o.trajectory);
    write_file((logs / (stem + ".scores.jsonl")).string(), o.scores);
  }
  write_file(config.resolve(config.paths.results), results);
  log(LogLevel::kInfo, "solve: " + std::to_string(summary.solved) + " of " +
                           std::to_string(summary.problems) + " problems solved");
  return summary;
}

std::vector<ResultRecord> load_results(const std::string& path) {
  std::vector<ResultRecord> out;
  std::size_t line_no = 0;
  for (const auto& raw : read_lines(path)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    try {
      json j = json::parse(line);
      if (j.contains("format")) {
        if (j.at("format") != kResultsFormat) fail(ErrorCode::kImport, where + ": not a results file");
        continue;
      }
      ResultRecord r;
      r.problem_id = j.at("problem_id").get<std::string>();
      r.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
      r.terminated_by = j.at("terminated_by").get<std::string>();
      if (j.contains("final_answer") && j["final_answer"].is_string()) {
        r.final_answer = j["final_answer"].get<std::string>();
      }
      if (j.contains("ranking")) r.ranking = j["ranking"].get<std::vector<std::string>>();
      r.query = j.value("query", std::string());
      r.fallback = j.value("fallback", false);
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      fail(ErrorCode::kImport, where + ": bad result record: " + e.what());
    }
  }
  return out;
}

EvalSummary cmd_eval(const EngineConfig& config, const std::string& results_path,
                     const LogFn& log_fn) {
  Logger log(log_fn);
  echo_config(config, log, "eval");
  const std::string path = results_path.empty() ? config.resolve(config.paths.results) : results_path;
  if (!fs::exists(path)) missing("results file", path, "solve");
  auto results = load_results(path);
  if (results.empty()) fail(ErrorCode::kEmptyResultSet, "empty result set in " + path);

  const bool ranking = results.front().task_kind == TaskKind::kRetrievalRanking;
  for (const auto& r : results) {
    if ((r.task_kind == TaskKind::kRetrievalRanking) != ranking) {
      fail(ErrorCode::kInvalidArgument, path + " mixes answer and ranking results");
    }
  }

  EvalSummary summary;
  summary.problems = results.size();
  std::string body;
  if (ranking) {
    if (config.paths.judgments.empty()) {
      fail(ErrorCode::kConfiguration, "ranking evaluation needs 'paths.judgments'");
    }
    const std::string jpath = config.resolve(config.paths.judgments);
    if (!fs::exists(jpath)) fail(ErrorCode::kMissingArtifact, "judgments file not found: " + jpath);
    auto judgments = load_judgments(jpath);
    if (auto corpus = optional_index(config)) validate_judgments(judgments, *corpus);
    std::vector<RankingRecord> records;
    for (const auto& r : results) records.push_back({r.problem_id, r.ranking});
    auto report = ranking_report(records, judgments);
    summary.metric = "ndcg@10";
    summary.value = report.mean_ndcg;
    body = render_report(report);
  } else {
    auto problems = problems_for(config, {});
    std::map<std::string, const ProblemInstance*> by_id;
    for (const auto& p : problems) by_id[p.problem_id] = &p;
    std::vector<AnswerRecord> records;
    for (const auto& r : results) {
      auto it = by_id.find(r.problem_id);
      if (it == by_id.end()) {
        fail(ErrorCode::kInvalidArgument, "result for unknown problem '" + r.problem_id + "'");
      }
      records.push_back({*it->second, r.final_answer});
    }
    auto checker = config.make_checker();
    auto report = accuracy(records, *checker);
    for (const auto& o : report.outcomes) {
      if (!o.error.empty()) log(LogLevel::kWarning, "eval: checker failed on " + o.problem_id + ": " + o.error);
    }
    summary.metric = "accuracy";
    summary.value = report.accuracy;
    body = render_report(report);
  }
  summary.report_path = config.resolve(config.paths.report);
  write_file(summary.report_path, header_line(kReportFormat) + body);
  log(LogLevel::kInfo, "eval: " + summary.metric + " " + format_metric(summary.value));
  return summary;
}

}  // namespace critplan
