/*
 * C interface to the codeplex library.
 *
 * Conventions:
 *   - Every fallible call returns cpx_status; CPX_OK is 0.
 *   - On failure cpx_last_error() describes the problem (thread-local,
 *     valid until the next call on the same thread).
 *   - Strings returned through char** are owned by the caller and must be
 *     released with cpx_string_free().
 *   - Handles are created by *_create / *_load / *_from_json calls and
 *     released by the matching *_free; freeing NULL is a no-op.
 *   - Structured data crosses the boundary as JSON or JSON Lines text.
 */
#ifndef CODEPLEX_H
#define CODEPLEX_H

#include <stddef.h>

#if defined(_WIN32)
#define CPX_API __declspec(dllexport)
#else
#define CPX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cpx_status {
    CPX_OK = 0,
    CPX_INVALID_ARGUMENT = 1,
    CPX_UNTERMINATED_STRING = 2,
    CPX_PARSE_ERROR = 3,
    CPX_UNSUPPORTED_CONSTRUCT = 4,
    CPX_MISSING_FUNCTION = 5,
    CPX_BUDGET_EXCEEDED = 6,
    CPX_EMPTY_CATALOG = 7,
    CPX_CATALOG_MISMATCH = 8,
    CPX_NO_LABELS = 9,
    CPX_NON_CONVERGENCE = 10,
    CPX_DEGENERATE_TABLE = 11,
    CPX_TOO_FEW_QUESTIONS = 12,
    CPX_UNKNOWN_ITEM = 13,
    CPX_SCHEMA_ERROR = 14,
    CPX_INCONSISTENT_ACTOR_ID = 15,
    CPX_CLIENT_ERROR = 16,
    CPX_IO_ERROR = 17,
    CPX_INTERNAL = 99
} cpx_status;

typedef struct cpx_config cpx_config;
typedef struct cpx_corpus cpx_corpus;
typedef struct cpx_catalog cpx_catalog;
typedef struct cpx_features cpx_features;
typedef struct cpx_outcomes cpx_outcomes;
typedef struct cpx_model cpx_model;
typedef struct cpx_client cpx_client;

CPX_API const char* cpx_version(void);
CPX_API const char* cpx_status_name(cpx_status status);
CPX_API const char* cpx_last_error(void);
/* Source line of the last syntax error, 0 when not applicable. */
CPX_API int cpx_last_error_line(void);
CPX_API void cpx_string_free(char* s);

/* ---- configuration ---- */

/* json may be NULL for the defaults. */
CPX_API cpx_status cpx_config_load(const char* json, cpx_config** out);
/* Merges a partial config (JSON merge patch) and re-validates. */
CPX_API cpx_status cpx_config_patch(cpx_config* config, const char* json_patch);
CPX_API cpx_status cpx_config_to_json(const cpx_config* config, char** out);
CPX_API cpx_status cpx_config_digest(const cpx_config* config, char** out);
CPX_API void cpx_config_free(cpx_config* config);

/* ---- programs ---- */

CPX_API cpx_status cpx_strip_noise(const char* source, char** out);
CPX_API cpx_status cpx_lines_of_code(const char* source, size_t* out);

/* Parses {"question_id","source"} JSONL. Programs that fail to parse are
 * listed in the report, not fatal. */
CPX_API cpx_status cpx_corpus_parse(const cpx_config* config, const char* programs_jsonl, cpx_corpus** out,
                                    char** report_json);
CPX_API cpx_status cpx_corpus_from_json(const char* json, cpx_corpus** out);
CPX_API cpx_status cpx_corpus_to_json(const cpx_corpus* corpus, char** out);
CPX_API size_t cpx_corpus_size(const cpx_corpus* corpus);
CPX_API void cpx_corpus_free(cpx_corpus* corpus);

/* {"question_id","loc","cyclomatic"} JSONL for every program that parses. */
CPX_API cpx_status cpx_metrics(const cpx_config* config, const char* programs_jsonl, char** out_jsonl,
                               char** report_json);

/* ---- subtree catalog ---- */

CPX_API cpx_status cpx_catalog_mine(const cpx_config* config, const cpx_corpus* corpus, cpx_catalog** out);
CPX_API cpx_status cpx_catalog_from_json(const char* json, cpx_catalog** out);
CPX_API cpx_status cpx_catalog_to_json(const cpx_catalog* catalog, char** out);
CPX_API cpx_status cpx_catalog_fingerprint(const cpx_catalog* catalog, char** out);
CPX_API size_t cpx_catalog_size(const cpx_catalog* catalog);
CPX_API void cpx_catalog_free(cpx_catalog* catalog);

/* Match sites of the given catalog patterns per program, as
 * {"question_id","temporal_support"} JSONL. */
CPX_API cpx_status cpx_temporal_support(const cpx_corpus* corpus, const cpx_catalog* catalog,
                                        const size_t* patterns, size_t n_patterns, char** out_jsonl);

/* ---- features, outcomes, model ---- */

CPX_API cpx_status cpx_features_encode(const cpx_corpus* corpus, const cpx_catalog* catalog, cpx_features** out);
CPX_API cpx_status cpx_features_from_json(const char* json, cpx_features** out);
CPX_API cpx_status cpx_features_to_json(const cpx_features* features, char** out);
CPX_API void cpx_features_free(cpx_features* features);

/* {"question_id","model_id","correct"} JSONL. */
CPX_API cpx_status cpx_outcomes_load(const char* jsonl, cpx_outcomes** out);
CPX_API cpx_status cpx_outcomes_models(const cpx_outcomes* outcomes, char** json_list);
CPX_API void cpx_outcomes_free(cpx_outcomes* outcomes);

/* models_json: JSON list of training model ids. questions_json: JSON list
 * restricting the training questions, or NULL for all. */
CPX_API cpx_status cpx_model_train(const cpx_config* config, const cpx_features* features,
                                   const cpx_outcomes* outcomes, const char* models_json,
                                   const char* questions_json, cpx_model** out, char** report_json);
CPX_API cpx_status cpx_model_from_json(const char* json, cpx_model** out);
CPX_API cpx_status cpx_model_to_json(const cpx_model* model, char** out);
/* {"question_id","score"} JSONL, score = -sigmoid(w.x + b). */
CPX_API cpx_status cpx_model_score(const cpx_model* model, const cpx_features* features, char** out_jsonl);
CPX_API void cpx_model_free(cpx_model* model);

/* ---- analysis and evaluation ---- */

CPX_API cpx_status cpx_analyze(const cpx_config* config, const cpx_catalog* catalog, const cpx_features* features,
                               const cpx_outcomes* outcomes, const char* models_json, char** report_json);

/* Question split with the configured seed and fraction plus the given
 * model split (both JSON lists). */
CPX_API cpx_status cpx_split(const cpx_config* config, const cpx_outcomes* outcomes, const char* train_models_json,
                             const char* eval_models_json, char** split_json);

/* PEG over the configured grid. With split_json the evaluation uses its
 * held-out questions and eval models; otherwise models_json (or every
 * model when NULL) over all questions. */
CPX_API cpx_status cpx_peg(const cpx_config* config, const char* metric_name, const char* scores_jsonl,
                           const cpx_outcomes* outcomes, const char* split_json, const char* models_json,
                           char** report_json);

/* items_json: JSON list of ids, or NULL to take them from the comparisons. */
CPX_API cpx_status cpx_elo(const cpx_config* config, const char* items_json, const char* comparisons_jsonl,
                           char** out_json);

/* ---- selection funnel ---- */

/* Returns {"video_id","script"}. */
CPX_API cpx_status cpx_render_script(const char* scene_graph_json, char** out_json);

/* Client from the config; the http client reads its token from the
 * configured environment variable. */
CPX_API cpx_status cpx_client_create(const cpx_config* config, cpx_client** out);
CPX_API void cpx_client_free(cpx_client* client);

/* scripts_json: [{"video_id","script"}]. rule_json: {"delta": x},
 * {"top_frac": f, "reference": [scores]} or NULL (score only). */
CPX_API cpx_status cpx_funnel_run(const cpx_config* config, cpx_client* client, const cpx_model* model,
                                  const cpx_catalog* catalog, const char* scripts_json, const char* rule_json,
                                  const char* store_path, char** report_json);
CPX_API cpx_status cpx_select(const char* store_path, const char* rule_json, char** report_json);
/* decisions_jsonl: {"candidate_id","reason"} per rejected candidate. */
CPX_API cpx_status cpx_review(const char* store_path, const char* decisions_jsonl, char** report_json);
CPX_API cpx_status cpx_calibrate_threshold(const double* scores, size_t n, double fraction, double* out);

#ifdef __cplusplus
}
#endif

#endif
