/* Pure C interface to the causal-bounded RL core.
 *
 * Conventions:
 *   - Every function returns a causalrl_status; CAUSALRL_OK is 0.
 *   - On failure, causalrl_last_error() returns a thread-local message that
 *     stays valid until the next failing call on the same thread.
 *   - Out-parameters are written only on success.
 *   - Strings returned through char** out-parameters are heap-allocated and
 *     must be released with causalrl_string_free().
 *   - Objects returned through handle out-parameters must be released with
 *     the matching *_free() function. Passing NULL to a *_free() is a no-op.
 */
#ifndef CAUSALRL_H
#define CAUSALRL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum causalrl_status {
    CAUSALRL_OK = 0,
    CAUSALRL_ERR_INVALID_ARGUMENT = 1, /* bad input, malformed config, range error */
    CAUSALRL_ERR_INFEASIBLE = 2,       /* constraint system admits no solution */
    CAUSALRL_ERR_UNBOUNDED = 3,        /* objective unbounded */
    CAUSALRL_ERR_LIMIT = 4,            /* enumeration cap exceeded */
    CAUSALRL_ERR_IO = 5,               /* file could not be read or written */
    CAUSALRL_ERR_INTERNAL = 6          /* anything else */
} causalrl_status;

/* Library version as "major.minor.patch". Static string; do not free. */
const char* causalrl_version(void);

/* Thread-local message for the most recent failure on this thread. Static
 * storage; do not free. Empty string when no failure has occurred. */
const char* causalrl_last_error(void);

void causalrl_string_free(char* s);

/* ------------------------------------------------------------------ handles */

typedef struct causalrl_config causalrl_config; /* experiment configuration */
typedef struct causalrl_env causalrl_env;       /* compiled environment bundle */
typedef struct causalrl_obs causalrl_obs;       /* observational distribution */
typedef struct causalrl_bounds causalrl_bounds; /* interval model + value/Q intervals */

/* ------------------------------------------------------------------- config */

/* name: "reward-grid" or "transition-grid". */
causalrl_status causalrl_config_preset(const char* name, causalrl_config** out);
causalrl_status causalrl_config_load(const char* path, causalrl_config** out);
causalrl_status causalrl_config_parse(const char* json_text, causalrl_config** out);
causalrl_status causalrl_config_to_json(const causalrl_config* cfg, char** out_json);
void causalrl_config_free(causalrl_config* cfg);

/* -------------------------------------------------------------- environment */

causalrl_status causalrl_env_create(const causalrl_config* cfg, causalrl_env** out);
causalrl_status causalrl_env_dims(const causalrl_env* env, size_t* n_states, size_t* n_actions,
                                  size_t* n_contexts);
void causalrl_env_free(causalrl_env* env);

/* ------------------------------------------------------------- observations */

/* Collects the demonstrator's observational distribution per the config's
 * mode (analytic, episodic, or query; sampled modes derive their stream from
 * seed_base). */
causalrl_status causalrl_observe(const causalrl_env* env, const causalrl_config* cfg,
                                 uint64_t seed_base, causalrl_obs** out);
causalrl_status causalrl_obs_to_json(const causalrl_obs* obs, char** out_json);
causalrl_status causalrl_obs_parse(const char* json_text, causalrl_obs** out);
void causalrl_obs_free(causalrl_obs* obs);

/* ------------------------------------------------------------------- bounds */

/* Partial-identification intervals for every state-action pair, then interval
 * value iteration: produces the interval MDP model plus V/Q interval tables. */
causalrl_status causalrl_bounds_compute(const causalrl_env* env, const causalrl_config* cfg,
                                        const causalrl_obs* obs, size_t workers,
                                        causalrl_bounds** out);
causalrl_status causalrl_bounds_model_json(const causalrl_bounds* bounds, char** out_json);
causalrl_status causalrl_bounds_q_json(const causalrl_bounds* bounds, char** out_json);
/* Reward interval for one pair (indices 0-based, row-major grid states). */
causalrl_status causalrl_bounds_reward_interval(const causalrl_bounds* bounds, size_t state,
                                                size_t action, double* lo, double* hi);
/* Q-value interval for one pair. */
causalrl_status causalrl_bounds_q_interval(const causalrl_bounds* bounds, size_t state, size_t action,
                                           double* lo, double* hi);
void causalrl_bounds_free(causalrl_bounds* bounds);

/* ----------------------------------------------------------------- commands */

typedef struct causalrl_run_flags {
    uint64_t seed_base; /* base added to every configured seed / stream */
    size_t workers;     /* 0 or 1 = sequential */
    const char* out_dir; /* NULL keeps the config's output directory */
} causalrl_run_flags;

/* Re-derives the benchmark table for the configured environment, writes
 * table.csv and table_check.json, and reports whether every cell matched the
 * frozen constants (all_ok = 1) for the built-in environments. report_json
 * (optional) receives the table_check document. */
causalrl_status causalrl_cmd_reproduce_tables(const causalrl_config* cfg,
                                              const causalrl_run_flags* flags, int* all_ok,
                                              char** report_json);

/* Demonstrator -> interval model -> Q intervals; writes observational.json,
 * bounded_model.json, and q_bounds.json into the output directory. */
causalrl_status causalrl_cmd_compute_bounds(const causalrl_config* cfg,
                                            const causalrl_run_flags* flags);

/* Multi-seed learner comparison; writes per-algorithm curve CSVs, summary.csv,
 * references.json, and learning_curves.svg. summary_json (optional) receives
 * {"optimal_value": ..., "naive_planning_value": ...}. */
causalrl_status causalrl_cmd_run_learning(const causalrl_config* cfg,
                                          const causalrl_run_flags* flags, char** summary_json);

/* Monte-Carlo evaluation of the exact-model and naive-model policies; writes
 * evaluation.csv. report_json (optional) receives the evaluation rows. */
causalrl_status causalrl_cmd_evaluate(const causalrl_config* cfg, const causalrl_run_flags* flags,
                                      char** report_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CAUSALRL_H */
