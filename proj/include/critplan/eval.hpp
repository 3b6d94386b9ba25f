// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "critplan/mdp.hpp"
#include "critplan/retrieval.hpp"

namespace critplan {

class AnswerChecker {
 public:
  virtual ~AnswerChecker() = default;
  /// May throw; accuracy() counts a throwing check as incorrect.
  virtual bool check(const ProblemInstance& problem, const std::string& final_answer) const = 0;
};

/// normalize_answer(answer) == normalize_answer(gold), also trying the last
/// fenced block of the answer.
class NormalizedMatchChecker final : public AnswerChecker {
 public:
  bool check(const ProblemInstance& problem, const std::string& final_answer) const override;
};

/// Runs `command` through the shell with "<problem_id>\n<answer>" on stdin.
/// Exit status 0 means correct.
class CommandChecker final : public AnswerChecker {
 public:
  explicit CommandChecker(std::string command) : command_(std::move(command)) {}
  bool check(const ProblemInstance& problem, const std::string& final_answer) const override;

 private:
  std::string command_;
};

struct AnswerRecord {
  ProblemInstance problem;
  std::string final_answer;
};

struct ProblemOutcome {
  std::string problem_id;
  bool correct = false;
  std::string error;  // non-empty when the checker failed
};

struct AccuracyReport {
  double accuracy = 0.0;
  std::vector<ProblemOutcome> outcomes;  // input order
};

/// Throws Error(kEmptyResultSet) for an empty batch.
AccuracyReport accuracy(const std::vector<AnswerRecord>& results, const AnswerChecker& checker);

/// Binary-relevance nDCG over the first 10 entries; 0 for empty judgments.
double ndcg_at_10(std::span<const std::string> ranking, const std::set<std::string>& judgments);

using RelevanceJudgments = std::map<std::string, std::set<std::string>>;

/// One {"problem_id", "relevant_doc_ids": [...]} object per line.
RelevanceJudgments parse_judgments(std::string_view data, const std::string& source);
RelevanceJudgments load_judgments(const std::string& path);
std::string serialize_judgments(const RelevanceJudgments& judgments);

/// Throws Error(kInvalidArgument) naming the first doc_id the corpus lacks.
void validate_judgments(const RelevanceJudgments& judgments, const Corpus& corpus);

struct RankingRecord {
  std::string problem_id;
  std::vector<std::string> ranking;
};

struct RankingRow {
  std::string problem_id;
  double ndcg = 0.0;
};

struct RankingReport {
  double mean_ndcg = 0.0;
  std::vector<RankingRow> rows;
};

/// Problems without judgments score 0. Throws Error(kEmptyResultSet) for an
/// empty batch.
RankingReport ranking_report(const std::vector<RankingRecord>& results,
                             const RelevanceJudgments& judgments);

/// Fixed six-decimal rendering used by every report.
std::string format_metric(double value);

/// {"metric", "value"} aggregate line followed by one row per problem.
std::string render_report(const AccuracyReport& report);
std::string render_report(const RankingReport& report);

}  // namespace critplan
