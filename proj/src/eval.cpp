// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/eval.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "critplan/error.hpp"
#include "critplan/text.hpp"

namespace critplan {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool NormalizedMatchChecker::check(const ProblemInstance& problem,
                                   const std::string& final_answer) const {
  const std::string gold = normalize_answer(problem.gold_label);
  if (normalize_answer(final_answer) == gold) return true;
  auto block = last_fenced_block(final_answer);
  return block && normalize_answer(*block) == gold;
}

bool CommandChecker::check(const ProblemInstance& problem, const std::string& final_answer) const {
  std::fflush(nullptr);
  FILE* pipe = ::popen(command_.c_str(), "w");
  if (pipe == nullptr) fail(ErrorCode::kIo, "cannot start checker command: " + command_);
  std::string input = problem.problem_id + "\n" + final_answer;
  std::fwrite(input.data(), 1, input.size(), pipe);
  int status = ::pclose(pipe);
  if (status == -1) fail(ErrorCode::kIo, "checker command did not finish: " + command_);
  if (WIFSIGNALED(status)) {
    fail(ErrorCode::kIo, "checker command killed by signal " + std::to_string(WTERMSIG(status)));
  }
  return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

AccuracyReport accuracy(const std::vector<AnswerRecord>& results, const AnswerChecker& checker) {
  if (results.empty()) fail(ErrorCode::kEmptyResultSet, "empty result set");
  AccuracyReport report;
  std::size_t correct = 0;
  for (const auto& r : results) {
    ProblemOutcome outcome{r.problem.problem_id, false, {}};
    try {
      outcome.correct = checker.check(r.problem, r.final_answer);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    if (outcome.correct) ++correct;
    report.outcomes.push_back(std::move(outcome));
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(results.size());
  return report;
}

double ndcg_at_10(std::span<const std::string> ranking, const std::set<std::string>& judgments) {
  if (judgments.empty()) return 0.0;
  const std::size_t depth = std::min<std::size_t>(ranking.size(), 10);
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (judgments.count(ranking[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>(judgments.size(), 10);
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

RelevanceJudgments parse_judgments(std::string_view data, const std::string& source) {
  RelevanceJudgments out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    std::string line = trim(data.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    try {
      json j = json::parse(line);
      auto id = j.at("problem_id").get<std::string>();
      auto& docs = out[id];
      for (const auto& d : j.at("relevant_doc_ids")) docs.insert(d.get<std::string>());
    } catch (const json::exception& e) {
      fail(ErrorCode::kImport, where + ": bad judgments record: " + e.what());
    }
  }
  return out;
}

RelevanceJudgments load_judgments(const std::string& path) {
  return parse_judgments(read_file(path), path);
}

std::string serialize_judgments(const RelevanceJudgments& judgments) {
  std::string out;
  for (const auto& [id, docs] : judgments) {
    ordered_json j;
    j["problem_id"] = id;
    j["relevant_doc_ids"] = docs;
    out += j.dump() + "\n";
  }
  return out;
}

void validate_judgments(const RelevanceJudgments& judgments, const Corpus& corpus) {
  for (const auto& [id, docs] : judgments) {
    for (const auto& doc : docs) {
      if (corpus.find(doc) == nullptr) {
        fail(ErrorCode::kInvalidArgument,
             "judgment for " + id + " names unknown doc_id '" + doc + "'");
      }
    }
  }
}

RankingReport ranking_report(const std::vector<RankingRecord>& results,
                             const RelevanceJudgments& judgments) {
  if (results.empty()) fail(ErrorCode::kEmptyResultSet, "empty result set");
  static const std::set<std::string> none;
  RankingReport report;
  double total = 0.0;
  for (const auto& r : results) {
    auto it = judgments.find(r.problem_id);
    double score = ndcg_at_10(r.ranking, it == judgments.end() ? none : it->second);
    total += score;
    report.rows.push_back(RankingRow{r.problem_id, score});
  }
  report.mean_ndcg = total / static_cast<double>(results.size());
  return report;
}

std::string format_metric(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

std::string render_report(const AccuracyReport& report) {
  std::string out = "{\"metric\":\"accuracy\",\"value\":" + format_metric(report.accuracy) +
                    ",\"problems\":" + std::to_string(report.outcomes.size()) + "}\n";
  for (const auto& o : report.outcomes) {
    ordered_json j;
    j["problem_id"] = o.problem_id;
    j["correct"] = o.correct;
    if (!o.error.empty()) j["error"] = o.error;
    out += j.dump() + "\n";
  }
  return out;
}

std::string render_report(const RankingReport& report) {
  std::string out = "{\"metric\":\"ndcg@10\",\"value\":" + format_metric(report.mean_ndcg) +
                    ",\"problems\":" + std::to_string(report.rows.size()) + "}\n";
  for (const auto& row : report.rows) {
    out += "{\"problem_id\":" + json(row.problem_id).dump() +
           ",\"ndcg@10\":" + format_metric(row.ndcg) + "}\n";
  }
  return out;
}

}  // namespace critplan
