/* Copyright 2026 The critplan Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Stable C interface to the critplan engine. All functions are safe to call
 * from any thread as long as one engine handle is not used concurrently.
 * Strings returned by the library stay valid until the next call on the
 * same handle.
 */
#ifndef CRITPLAN_CRITPLAN_H_
#define CRITPLAN_CRITPLAN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CP_API __declspec(dllexport)
#else
#define CP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cp_status {
  CP_OK = 0,
  CP_ERR_INVALID_ARGUMENT = 1,
  CP_ERR_CONFIG = 2,
  CP_ERR_IO = 3,
  CP_ERR_MISSING_ARTIFACT = 4,
  CP_ERR_BACKEND = 5,
  CP_ERR_CONTRACT = 6,
  CP_ERR_PLANNING = 7,
  CP_ERR_SEARCH = 8,
  CP_ERR_TRAINING = 9,
  CP_ERR_IMPORT = 10,
  CP_ERR_INGESTION = 11,
  CP_ERR_EMPTY_RESULT_SET = 12,
  /* Some problems were skipped; outputs for the rest were written. */
  CP_ERR_PARTIAL = 13,
  CP_ERR_INTERNAL = 99
} cp_status;

typedef enum cp_log_level {
  CP_LOG_ERROR = 0,
  CP_LOG_WARNING = 1,
  CP_LOG_INFO = 2,
  CP_LOG_DEBUG = 3
} cp_log_level;

typedef enum cp_critic_kind {
  CP_CRITIC_SUBGOAL = 0,
  CP_CRITIC_RATIONALE = 1,
  CP_CRITIC_QUERY = 2,
  CP_CRITIC_DOC = 3
} cp_critic_kind;

typedef void (*cp_log_fn)(void* user, cp_log_level level, const char* message);

typedef struct cp_engine cp_engine;

CP_API const char* cp_version(void);
CP_API const char* cp_status_name(cp_status status);

/* Loads a JSON config file. On failure *out is NULL and, when err is not
 * NULL, a message is copied into err (at most err_size bytes). */
CP_API cp_status cp_engine_open(const char* config_path, cp_engine** out, char* err,
                                size_t err_size);
/* Same, from JSON text; relative paths resolve against base_dir. */
CP_API cp_status cp_engine_open_json(const char* json_text, const char* base_dir,
                                     cp_engine** out, char* err, size_t err_size);
CP_API void cp_engine_close(cp_engine* engine);

CP_API const char* cp_engine_last_error(const cp_engine* engine);
/* Resolved configuration as JSON (api keys redacted). */
CP_API const char* cp_engine_config_json(cp_engine* engine);

CP_API void cp_engine_set_log(cp_engine* engine, cp_log_fn fn, void* user);
CP_API cp_status cp_engine_set_seed(cp_engine* engine, uint64_t seed);
CP_API cp_status cp_engine_set_parallel(cp_engine* engine, unsigned workers);
/* Overrides one config entry by dotted key, e.g. ("critics.backend",
 * "constant") or ("mcts.iterations", "64"). Values are JSON; bare words are
 * taken as strings. */
CP_API cp_status cp_engine_set(cp_engine* engine, const char* dotted_key, const char* json_value);

typedef struct cp_index_summary {
  size_t documents;
  double average_length;
  int up_to_date;
} cp_index_summary;

typedef struct cp_collect_summary {
  size_t problems;
  size_t skipped;
  size_t pairs[4]; /* indexed by cp_critic_kind */
} cp_collect_summary;

typedef struct cp_train_summary {
  size_t pairs;
  double final_loss;
  double train_accuracy;
  int untrained;
} cp_train_summary;

typedef struct cp_solve_summary {
  size_t problems;
  size_t solved;
  size_t skipped;
} cp_solve_summary;

typedef struct cp_eval_summary {
  char metric[16]; /* "accuracy" or "ndcg@10" */
  double value;
  size_t problems;
} cp_eval_summary;

CP_API cp_status cp_index(cp_engine* engine, cp_index_summary* out);
/* problems_path may be NULL to use the configured problem set. */
CP_API cp_status cp_collect(cp_engine* engine, const char* problems_path, cp_collect_summary* out);
/* kind < 0 exports every kind. */
CP_API cp_status cp_export_pairs(cp_engine* engine, const char* out_dir, int kind,
                                 int one_rejected_per_group, double heldout_fraction,
                                 size_t* train_pairs, size_t* heldout_pairs);
CP_API cp_status cp_train_critic(cp_engine* engine, cp_critic_kind kind, cp_train_summary* out);
CP_API cp_status cp_solve(cp_engine* engine, const char* problems_path, cp_solve_summary* out);
CP_API cp_status cp_eval(cp_engine* engine, const char* results_path, cp_eval_summary* out);

/* Parses "SubGoal", "Rationale", "Query" or "Doc"; returns -1 otherwise. */
CP_API int cp_critic_kind_parse(const char* name);
CP_API const char* cp_critic_kind_name(cp_critic_kind kind);

/* Writes a synthetic suite ("answer" or "ranking") with its own config.json
 * under out_dir. */
CP_API cp_status cp_write_toy_suite(const char* kind, const char* out_dir, size_t problems,
                                    size_t candidates, uint64_t seed, size_t first_index,
                                    char* err, size_t err_size);

/* Scalar formulas. NaN on invalid arguments. */
CP_API double cp_ucb1(double value, size_t visits, size_t parent_visits, double c);
CP_API double cp_pairwise_loss(double score_chosen, double score_rejected);
CP_API double cp_ndcg_at_10(const char* const* ranking, size_t ranking_len,
                            const char* const* relevant, size_t relevant_len);

#ifdef __cplusplus
}
#endif

#endif /* CRITPLAN_CRITPLAN_H_ */
