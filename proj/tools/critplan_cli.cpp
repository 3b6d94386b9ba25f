// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the engine only through critplan.h.

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include "critplan/critplan.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitPartial = 3;

struct Globals {
  std::string config = "critplan.json";
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned parallel = 0;
  bool verbose = false;
  std::vector<std::string> overrides;
};

void log_to_stderr(void* user, cp_log_level level, const char* message) {
  const bool verbose = *static_cast<const bool*>(user);
  if (level == CP_LOG_DEBUG && !verbose) return;
  static const char* names[] = {"error", "warning", "info", "debug"};
  std::fprintf(stderr, "[%s] %s\n", names[level], message);
}

int report(cp_engine* engine, cp_status status) {
  if (status == CP_OK) return 0;
  std::fprintf(stderr, "critplan: %s: %s\n", cp_status_name(status), cp_engine_last_error(engine));
  return status == CP_ERR_PARTIAL ? kExitPartial : kExitError;
}

// Opens the engine and applies global flags; returns nullptr after printing
// the error.
cp_engine* open(Globals& g) {
  char err[1024] = {0};
  cp_engine* engine = nullptr;
  cp_status status = cp_engine_open(g.config.c_str(), &engine, err, sizeof err);
  if (status != CP_OK) {
    std::fprintf(stderr, "critplan: %s: %s\n", cp_status_name(status), err);
    return nullptr;
  }
  cp_engine_set_log(engine, log_to_stderr, &g.verbose);
  for (const auto& kv : g.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "critplan: --set expects key=value, got '%s'\n", kv.c_str());
      cp_engine_close(engine);
      return nullptr;
    }
    status = cp_engine_set(engine, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (status != CP_OK) {
      report(engine, status);
      cp_engine_close(engine);
      return nullptr;
    }
  }
  if (g.seed_set) status = cp_engine_set_seed(engine, g.seed);
  if (status == CP_OK && g.parallel > 0) status = cp_engine_set_parallel(engine, g.parallel);
  if (status != CP_OK) {
    report(engine, status);
    cp_engine_close(engine);
    return nullptr;
  }
  return engine;
}

struct EngineHandle {
  cp_engine* engine;
  ~EngineHandle() { cp_engine_close(engine); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"critplan: critic-guided planning over reasoning and retrieval"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "engine config file (JSON)")->capture_default_str();
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; }, "override the config seed");
  app.add_option("--parallel", g.parallel, "worker threads for collect and solve");
  app.add_flag("--verbose,-v", g.verbose, "per-problem debug output");
  app.add_option("--set", g.overrides, "override a config entry, e.g. --set mcts.iterations=64");

  auto* index = app.add_subcommand("index", "build the BM25 index from the corpus");

  std::string problems;
  auto* collect = app.add_subcommand("collect", "run MCTS and write preference pairs");
  collect->add_option("--problems", problems, "problem set (defaults to paths.problems)");

  std::string out_dir, kind_name;
  bool one_rejected = false;
  double heldout = 0.0;
  auto* export_cmd = app.add_subcommand("export-pairs", "filter and split collected pairs");
  export_cmd->add_option("--out", out_dir, "output directory")->required();
  export_cmd->add_option("--kind", kind_name, "SubGoal, Rationale, Query or Doc (default all)");
  export_cmd->add_flag("--one-rejected-per-group", one_rejected,
                       "keep only the lowest-valued rejected sibling per group");
  export_cmd->add_option("--heldout", heldout, "fraction of problems written to <out>/heldout")
      ->check(CLI::Range(0.0, 0.999999));

  std::string train_kind;
  auto* train = app.add_subcommand("train-critic", "train reference critics from pair files");
  train->add_option("--kind", train_kind, "SubGoal, Rationale, Query or Doc (default all four)");

  std::string critics_mode;
  auto* solve = app.add_subcommand("solve", "plan every problem and write results");
  solve->add_option("--problems", problems, "problem set (defaults to paths.problems)");
  solve->add_option("--critics", critics_mode, "trained, constant, lookup or http")
      ->check(CLI::IsMember({"trained", "constant", "lookup", "http"}));

  std::string results;
  auto* eval = app.add_subcommand("eval", "score a results file");
  eval->add_option("--results", results, "results file (defaults to paths.results)");

  std::string toy_kind = "answer", toy_out;
  std::size_t toy_problems = 50, toy_candidates = 3, toy_first = 0;
  auto* toy = app.add_subcommand("toy", "write a synthetic suite with its own config");
  toy->add_option("--kind", toy_kind, "answer or ranking")->check(CLI::IsMember({"answer", "ranking"}));
  toy->add_option("--out", toy_out, "output directory")->required();
  toy->add_option("--problems", toy_problems, "number of problems")->capture_default_str();
  toy->add_option("--candidates", toy_candidates, "candidates per sampling call (2-4)")
      ->capture_default_str();
  toy->add_option("--first-index", toy_first, "first problem number")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (toy->parsed()) {
    char err[1024] = {0};
    cp_status s = cp_write_toy_suite(toy_kind.c_str(), toy_out.c_str(), toy_problems, toy_candidates,
                                     g.seed, toy_first, err, sizeof err);
    if (s != CP_OK) {
      std::fprintf(stderr, "critplan: %s: %s\n", cp_status_name(s), err);
      return kExitError;
    }
    std::printf("wrote %s suite with %zu problems to %s\n", toy_kind.c_str(), toy_problems,
                toy_out.c_str());
    return 0;
  }

  cp_engine* raw = open(g);
  if (raw == nullptr) return kExitError;
  EngineHandle handle{raw};
  cp_engine* engine = handle.engine;

  if (index->parsed()) {
    cp_index_summary s{};
    cp_status st = cp_index(engine, &s);
    if (st == CP_OK) {
      std::printf("documents %zu\naverage_length %.6f\n%s\n", s.documents, s.average_length,
                  s.up_to_date ? "up to date" : "index written");
    }
    return report(engine, st);
  }
  if (collect->parsed()) {
    cp_collect_summary s{};
    cp_status st = cp_collect(engine, problems.empty() ? nullptr : problems.c_str(), &s);
    if (st == CP_OK || st == CP_ERR_PARTIAL) {
      std::printf("problems %zu\nskipped %zu\n", s.problems, s.skipped);
      for (int k = 0; k < 4; ++k) {
        std::printf("pairs.%s %zu\n", cp_critic_kind_name(static_cast<cp_critic_kind>(k)), s.pairs[k]);
      }
    }
    return report(engine, st);
  }
  if (export_cmd->parsed()) {
    int kind = -1;
    if (!kind_name.empty() && (kind = cp_critic_kind_parse(kind_name.c_str())) < 0) {
      std::fprintf(stderr, "critplan: unknown critic kind '%s'\n", kind_name.c_str());
      return kExitError;
    }
    std::size_t train_n = 0, heldout_n = 0;
    cp_status st = cp_export_pairs(engine, out_dir.c_str(), kind, one_rejected ? 1 : 0, heldout,
                                   &train_n, &heldout_n);
    if (st == CP_OK) std::printf("train %zu\nheldout %zu\n", train_n, heldout_n);
    return report(engine, st);
  }
  if (train->parsed()) {
    std::vector<int> kinds;
    if (train_kind.empty()) {
      kinds = {0, 1, 2, 3};
    } else {
      int k = cp_critic_kind_parse(train_kind.c_str());
      if (k < 0) {
        std::fprintf(stderr, "critplan: unknown critic kind '%s'\n", train_kind.c_str());
        return kExitError;
      }
      kinds = {k};
    }
    for (int k : kinds) {
      cp_train_summary s{};
      cp_status st = cp_train_critic(engine, static_cast<cp_critic_kind>(k), &s);
      if (st != CP_OK) return report(engine, st);
      std::printf("%s pairs %zu loss %.6f train_accuracy %.6f%s\n",
                  cp_critic_kind_name(static_cast<cp_critic_kind>(k)), s.pairs, s.final_loss,
                  s.train_accuracy, s.untrained ? " (untrained)" : "");
    }
    return 0;
  }
  if (solve->parsed()) {
    if (!critics_mode.empty()) {
      cp_status st = cp_engine_set(engine, "critics.backend", critics_mode.c_str());
      if (st != CP_OK) return report(engine, st);
    }
    cp_solve_summary s{};
    cp_status st = cp_solve(engine, problems.empty() ? nullptr : problems.c_str(), &s);
    if (st == CP_OK || st == CP_ERR_PARTIAL) {
      std::printf("problems %zu\nsolved %zu\nskipped %zu\n", s.problems, s.solved, s.skipped);
    }
    return report(engine, st);
  }
  if (eval->parsed()) {
    cp_eval_summary s{};
    cp_status st = cp_eval(engine, results.empty() ? nullptr : results.c_str(), &s);
    if (st == CP_OK) std::printf("%s %.6f\nproblems %zu\n", s.metric, s.value, s.problems);
    return report(engine, st);
  }
  return kExitError;
}
