// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "critplan/config.hpp"
#include "critplan/critics.hpp"
#include "critplan/retrieval.hpp"

namespace critplan {

enum class LogLevel { kError = 0, kWarning = 1, kInfo = 2, kDebug = 3 };

/// Must be callable from worker threads; the pipeline serializes calls.
using LogFn = std::function<void(LogLevel, const std::string&)>;

struct IndexSummary {
  std::string path;
  std::size_t documents = 0;
  double average_length = 0.0;
  bool up_to_date = false;
};

struct Skipped {
  std::string problem_id;
  std::string reason;
};

struct CollectSummary {
  std::size_t problems = 0;
  std::vector<Skipped> skipped;
  std::map<CriticKind, std::size_t> pairs;
};

struct ExportRequest {
  std::string out_dir;
  std::optional<CriticKind> kind;  // all kinds when empty
  bool one_rejected_per_group = false;
  /// Fraction of problems (by hashed problem_id) written to out_dir/heldout
  /// instead of out_dir/train. 0 writes everything to out_dir.
  double heldout_fraction = 0.0;
};

struct ExportSummary {
  std::size_t train = 0;
  std::size_t heldout = 0;
};

struct TrainSummary {
  CriticKind kind = CriticKind::kSubGoal;
  std::string path;
  std::size_t pairs = 0;
  double final_loss = 0.0;
  double train_accuracy = 0.0;
  bool untrained = false;  // no pairs for this kind; all-zero weights written
};

struct SolveSummary {
  std::size_t problems = 0;
  std::size_t solved = 0;
  std::vector<Skipped> skipped;
};

struct EvalSummary {
  std::string metric;  // "accuracy" or "ndcg@10"
  double value = 0.0;
  std::size_t problems = 0;
  std::string report_path;
};

/// Builds and saves the BM25 index; leaves an identical file untouched.
IndexSummary cmd_index(const EngineConfig& config, const LogFn& log = {});

/// run_mcts + extract_pairs per problem. Rewrites the four pair files and
/// one tree dump per problem. Problems whose search fails are skipped.
CollectSummary cmd_collect(const EngineConfig& config, const std::string& problems_path = {},
                           const LogFn& log = {});

ExportSummary cmd_export_pairs(const EngineConfig& config, const ExportRequest& request,
                               const LogFn& log = {});

/// Trains the reference critic for `kind` from config.paths.pairs_dir.
TrainSummary cmd_train(const EngineConfig& config, CriticKind kind, const LogFn& log = {});

/// Solves every problem, writing the results file and per-problem
/// trajectory and score logs.
SolveSummary cmd_solve(const EngineConfig& config, const std::string& problems_path = {},
                       const LogFn& log = {});

/// Accuracy for answer results, mean nDCG@10 for ranking results.
EvalSummary cmd_eval(const EngineConfig& config, const std::string& results_path = {},
                     const LogFn& log = {});

Corpus load_index(const EngineConfig& config);
CriticSet load_critics(const EngineConfig& config);
std::string critic_file_name(CriticKind kind);

/// One parsed line of a results file.
struct ResultRecord {
  std::string problem_id;
  TaskKind task_kind = TaskKind::kAnswerMatch;
  std::string terminated_by;
  std::string final_answer;
  std::vector<std::string> ranking;
  std::string query;
  bool fallback = false;
};

/// Skips the header line.
std::vector<ResultRecord> load_results(const std::string& path);

}  // namespace critplan
