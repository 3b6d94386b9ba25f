// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#include "critplan/critplan.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <memory>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "critplan/config.hpp"
#include "critplan/error.hpp"
#include "critplan/eval.hpp"
#include "critplan/mcts.hpp"
#include "critplan/pipeline.hpp"
#include "critplan/toy.hpp"

struct cp_engine {
  critplan::EngineConfig config;
  std::string last_error;
  std::string scratch;
  cp_log_fn log = nullptr;
  void* log_user = nullptr;

  critplan::LogFn logger() const {
    if (log == nullptr) return {};
    cp_log_fn fn = log;
    void* user = log_user;
    return [fn, user](critplan::LogLevel level, const std::string& message) {
      fn(user, static_cast<cp_log_level>(level), message.c_str());
    };
  }
};

namespace {

using critplan::ErrorCode;

cp_status status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kNoActions: return CP_ERR_INVALID_ARGUMENT;
    case ErrorCode::kConfiguration: return CP_ERR_CONFIG;
    case ErrorCode::kIo: return CP_ERR_IO;
    case ErrorCode::kMissingArtifact: return CP_ERR_MISSING_ARTIFACT;
    case ErrorCode::kBackend:
    case ErrorCode::kEmptyCandidates: return CP_ERR_BACKEND;
    case ErrorCode::kContractViolation: return CP_ERR_CONTRACT;
    case ErrorCode::kPlanningFailure: return CP_ERR_PLANNING;
    case ErrorCode::kSearchFailure: return CP_ERR_SEARCH;
    case ErrorCode::kTraining: return CP_ERR_TRAINING;
    case ErrorCode::kImport: return CP_ERR_IMPORT;
    case ErrorCode::kIngestion:
    case ErrorCode::kEmptyQuery: return CP_ERR_INGESTION;
    case ErrorCode::kEmptyResultSet: return CP_ERR_EMPTY_RESULT_SET;
  }
  return CP_ERR_INTERNAL;
}

void copy_message(const std::string& message, char* err, size_t err_size) {
  if (err == nullptr || err_size == 0) return;
  size_t n = std::min(message.size(), err_size - 1);
  std::memcpy(err, message.data(), n);
  err[n] = '\0';
}

// Runs fn, translating exceptions into a status and a message.
template <typename Fn>
cp_status guarded(std::string& message, Fn&& fn) {
  try {
    message.clear();
    return fn();
  } catch (const critplan::Error& e) {
    message = e.what();
    return status_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    message = e.what();
    return CP_ERR_IO;
  } catch (const std::exception& e) {
    message = std::string("internal error: ") + e.what();
    return CP_ERR_INTERNAL;
  } catch (...) {
    message = "internal error: unknown exception";
    return CP_ERR_INTERNAL;
  }
}

template <typename Fn>
cp_status with_engine(cp_engine* engine, Fn&& fn) {
  if (engine == nullptr) return CP_ERR_INVALID_ARGUMENT;
  return guarded(engine->last_error, [&] { return fn(*engine); });
}

cp_status open_engine(cp_engine** out, char* err, size_t err_size,
                      const std::function<critplan::EngineConfig()>& load) {
  if (out == nullptr) return CP_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  std::string message;
  cp_status status = guarded(message, [&] {
    auto engine = std::make_unique<cp_engine>();
    engine->config = load();
    *out = engine.release();
    return CP_OK;
  });
  copy_message(message, err, err_size);
  return status;
}

}  // namespace

extern "C" {

const char* cp_version(void) { return "0.1.0"; }

const char* cp_status_name(cp_status status) {
  switch (status) {
    case CP_OK: return "ok";
    case CP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CP_ERR_CONFIG: return "configuration error";
    case CP_ERR_IO: return "i/o error";
    case CP_ERR_MISSING_ARTIFACT: return "missing artifact";
    case CP_ERR_BACKEND: return "backend error";
    case CP_ERR_CONTRACT: return "contract violation";
    case CP_ERR_PLANNING: return "planning failure";
    case CP_ERR_SEARCH: return "search failure";
    case CP_ERR_TRAINING: return "training error";
    case CP_ERR_IMPORT: return "import error";
    case CP_ERR_INGESTION: return "ingestion error";
    case CP_ERR_EMPTY_RESULT_SET: return "empty result set";
    case CP_ERR_PARTIAL: return "some problems were skipped";
    case CP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

cp_status cp_engine_open(const char* config_path, cp_engine** out, char* err, size_t err_size) {
  if (config_path == nullptr) return CP_ERR_INVALID_ARGUMENT;
  return open_engine(out, err, err_size,
                     [&] { return critplan::EngineConfig::load(config_path); });
}

cp_status cp_engine_open_json(const char* json_text, const char* base_dir, cp_engine** out,
                              char* err, size_t err_size) {
  if (json_text == nullptr) return CP_ERR_INVALID_ARGUMENT;
  return open_engine(out, err, err_size, [&] {
    return critplan::EngineConfig::parse(json_text, base_dir ? base_dir : ".");
  });
}

void cp_engine_close(cp_engine* engine) { delete engine; }

const char* cp_engine_last_error(const cp_engine* engine) {
  return engine ? engine->last_error.c_str() : "null engine";
}

const char* cp_engine_config_json(cp_engine* engine) {
  if (engine == nullptr) return "";
  engine->scratch = engine->config.to_json();
  return engine->scratch.c_str();
}

void cp_engine_set_log(cp_engine* engine, cp_log_fn fn, void* user) {
  if (engine == nullptr) return;
  engine->log = fn;
  engine->log_user = user;
}

cp_status cp_engine_set_seed(cp_engine* engine, uint64_t seed) {
  return with_engine(engine, [&](cp_engine& e) {
    e.config.set("seed", std::to_string(seed));
    return CP_OK;
  });
}

cp_status cp_engine_set_parallel(cp_engine* engine, unsigned workers) {
  return with_engine(engine, [&](cp_engine& e) {
    e.config.set("parallel", std::to_string(workers));
    return CP_OK;
  });
}

cp_status cp_engine_set(cp_engine* engine, const char* dotted_key, const char* json_value) {
  if (dotted_key == nullptr || json_value == nullptr) return CP_ERR_INVALID_ARGUMENT;
  return with_engine(engine, [&](cp_engine& e) {
    e.config.set(dotted_key, json_value);
    return CP_OK;
  });
}

cp_status cp_index(cp_engine* engine, cp_index_summary* out) {
  return with_engine(engine, [&](cp_engine& e) {
    auto s = critplan::cmd_index(e.config, e.logger());
    if (out) *out = cp_index_summary{s.documents, s.average_length, s.up_to_date ? 1 : 0};
    return CP_OK;
  });
}

cp_status cp_collect(cp_engine* engine, const char* problems_path, cp_collect_summary* out) {
  return with_engine(engine, [&](cp_engine& e) {
    auto s = critplan::cmd_collect(e.config, problems_path ? problems_path : "", e.logger());
    if (out) {
      *out = cp_collect_summary{};
      out->problems = s.problems;
      out->skipped = s.skipped.size();
      for (const auto& [kind, n] : s.pairs) out->pairs[static_cast<int>(kind)] = n;
    }
    if (!s.skipped.empty()) {
      e.last_error = std::to_string(s.skipped.size()) + " problem(s) skipped, first: " +
                     s.skipped.front().problem_id + ": " + s.skipped.front().reason;
      return CP_ERR_PARTIAL;
    }
    return CP_OK;
  });
}

cp_status cp_export_pairs(cp_engine* engine, const char* out_dir, int kind,
                          int one_rejected_per_group, double heldout_fraction, size_t* train_pairs,
                          size_t* heldout_pairs) {
  if (out_dir == nullptr || kind > 3) return CP_ERR_INVALID_ARGUMENT;
  return with_engine(engine, [&](cp_engine& e) {
    critplan::ExportRequest req;
    req.out_dir = out_dir;
    if (kind >= 0) req.kind = static_cast<critplan::CriticKind>(kind);
    req.one_rejected_per_group = one_rejected_per_group != 0;
    req.heldout_fraction = heldout_fraction;
    auto s = critplan::cmd_export_pairs(e.config, req, e.logger());
    if (train_pairs) *train_pairs = s.train;
    if (heldout_pairs) *heldout_pairs = s.heldout;
    return CP_OK;
  });
}

cp_status cp_train_critic(cp_engine* engine, cp_critic_kind kind, cp_train_summary* out) {
  if (kind < CP_CRITIC_SUBGOAL || kind > CP_CRITIC_DOC) return CP_ERR_INVALID_ARGUMENT;
  return with_engine(engine, [&](cp_engine& e) {
    auto s = critplan::cmd_train(e.config, static_cast<critplan::CriticKind>(kind), e.logger());
    if (out) *out = cp_train_summary{s.pairs, s.final_loss, s.train_accuracy, s.untrained ? 1 : 0};
    return CP_OK;
  });
}

cp_status cp_solve(cp_engine* engine, const char* problems_path, cp_solve_summary* out) {
  return with_engine(engine, [&](cp_engine& e) {
    auto s = critplan::cmd_solve(e.config, problems_path ? problems_path : "", e.logger());
    if (out) *out = cp_solve_summary{s.problems, s.solved, s.skipped.size()};
    if (!s.skipped.empty()) {
      e.last_error = std::to_string(s.skipped.size()) + " problem(s) skipped, first: " +
                     s.skipped.front().problem_id + ": " + s.skipped.front().reason;
      return CP_ERR_PARTIAL;
    }
    return CP_OK;
  });
}

cp_status cp_eval(cp_engine* engine, const char* results_path, cp_eval_summary* out) {
  return with_engine(engine, [&](cp_engine& e) {
    auto s = critplan::cmd_eval(e.config, results_path ? results_path : "", e.logger());
    if (out) {
      *out = cp_eval_summary{};
      copy_message(s.metric, out->metric, sizeof out->metric);
      out->value = s.value;
      out->problems = s.problems;
    }
    return CP_OK;
  });
}

int cp_critic_kind_parse(const char* name) {
  if (name == nullptr) return -1;
  try {
    return static_cast<int>(critplan::critic_kind_from_string(name));
  } catch (const std::exception&) {
    return -1;
  }
}

const char* cp_critic_kind_name(cp_critic_kind kind) {
  if (kind < CP_CRITIC_SUBGOAL || kind > CP_CRITIC_DOC) return "?";
  return critplan::to_string(static_cast<critplan::CriticKind>(kind));
}

cp_status cp_write_toy_suite(const char* kind, const char* out_dir, size_t problems,
                             size_t candidates, uint64_t seed, size_t first_index, char* err,
                             size_t err_size) {
  if (kind == nullptr || out_dir == nullptr) return CP_ERR_INVALID_ARGUMENT;
  std::string message;
  cp_status status = guarded(message, [&] {
    critplan::ToySpec spec{problems, candidates, seed, first_index};
    critplan::write_toy_suite(critplan::make_toy(kind, spec), out_dir);
    return CP_OK;
  });
  copy_message(message, err, err_size);
  return status;
}

double cp_ucb1(double value, size_t visits, size_t parent_visits, double c) {
  if (visits == 0 || parent_visits == 0 || c < 0.0) return std::numeric_limits<double>::quiet_NaN();
  return critplan::ucb1(value, visits, parent_visits, c);
}

double cp_pairwise_loss(double score_chosen, double score_rejected) {
  return critplan::pairwise_loss(score_chosen, score_rejected);
}

double cp_ndcg_at_10(const char* const* ranking, size_t ranking_len, const char* const* relevant,
                     size_t relevant_len) {
  if ((ranking == nullptr && ranking_len > 0) || (relevant == nullptr && relevant_len > 0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::vector<std::string> r;
  for (size_t i = 0; i < ranking_len; ++i) r.emplace_back(ranking[i] ? ranking[i] : "");
  std::set<std::string> j;
  for (size_t i = 0; i < relevant_len; ++i) j.emplace(relevant[i] ? relevant[i] : "");
  return critplan::ndcg_at_10(r, j);
}

}  // extern "C"
