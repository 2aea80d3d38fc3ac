/* negscope: token-level negation scope detection over dependency trees.
 *
 * All functions return an ns_status; on failure a description is available
 * from ns_last_error() on the calling thread until the next failing call.
 * Strings returned through char** parameters are owned by the caller and
 * released with ns_string_free(). Handles are released with their *_free
 * function; passing NULL to any *_free is a no-op. */
#ifndef NEGSCOPE_NEGSCOPE_H
#define NEGSCOPE_NEGSCOPE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NS_API __declspec(dllexport)
#else
#define NS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ns_status {
  NS_OK = 0,
  NS_ERR_INVALID_ARGUMENT = 1,
  NS_ERR_IO = 2,
  NS_ERR_PARSE = 3,
  NS_ERR_VALIDATION = 4,
  NS_ERR_SHAPE = 5,
  NS_ERR_STATE = 6,
  NS_ERR_NUMERIC = 7,
  NS_ERR_INTERNAL = 99
} ns_status;

typedef struct ns_config ns_config;
typedef struct ns_corpus ns_corpus;
typedef struct ns_model ns_model;
typedef struct ns_manifest ns_manifest;

/* Receives one line per training epoch. */
typedef void (*ns_line_fn)(const char* line, void* user);

NS_API const char* ns_version(void);
NS_API const char* ns_last_error(void);
NS_API const char* ns_status_name(ns_status status);
NS_API void ns_string_free(char* s);

/* 0 debug, 1 info, 2 warn, 3 error, 4 off. Messages go to stderr. */
NS_API void ns_set_log_level(int level);

/* ---- configuration: flat "key = value" settings ---- */

NS_API ns_status ns_config_create(ns_config** out);
NS_API ns_status ns_config_load(const char* path, ns_config** out);
NS_API ns_status ns_config_set(ns_config* config, const char* key, const char* value);
/* Effective value after defaults are applied. */
NS_API ns_status ns_config_get(const ns_config* config, const char* key, char** value);
/* Every key with its effective value, one "key = value" per line. */
NS_API ns_status ns_config_dump(const ns_config* config, char** text);
NS_API void ns_config_free(ns_config* config);

/* ---- corpora ---- */

typedef struct ns_corpus_stats {
  size_t sentences;
  size_t tokens;
  size_t punct_tokens;
  size_t instances;
  size_t scope_tokens;
} ns_corpus_stats;

NS_API ns_status ns_corpus_load(const char* path, ns_corpus** out);
NS_API ns_status ns_corpus_parse(const char* text, ns_corpus** out);
NS_API ns_status ns_corpus_save(const ns_corpus* corpus, const char* path);
NS_API ns_status ns_corpus_serialize(const ns_corpus* corpus, char** text);
NS_API ns_status ns_corpus_stats_get(const ns_corpus* corpus, ns_corpus_stats* stats);
/* New corpus without punctuation tokens; dependents are reattached. */
NS_API ns_status ns_corpus_strip_punct(const ns_corpus* corpus, ns_corpus** out);
/* New corpus with "conj:and" style label subtypes reduced to "conj". */
NS_API ns_status ns_corpus_strip_labels(const ns_corpus* corpus, ns_corpus** out);
NS_API void ns_corpus_free(ns_corpus* corpus);

typedef enum ns_synth_task { NS_SYNTH_SUBTREE = 0, NS_SYNTH_WINDOW = 1 } ns_synth_task;

typedef struct ns_synth_options {
  ns_synth_task task;
  size_t sentences;
  size_t min_tokens;
  size_t max_tokens;
  size_t vocab;
  size_t min_punct;
  size_t max_punct;
  uint64_t seed;
} ns_synth_options;

NS_API void ns_synth_defaults(ns_synth_options* options);
NS_API ns_status ns_synth_generate(const ns_synth_options* options, ns_corpus** out);

/* ---- models ---- */

/* Trains the model named by the "model" key. dev may be NULL. */
NS_API ns_status ns_train(const ns_config* config, const ns_corpus* train, const ns_corpus* dev,
                          ns_line_fn on_epoch, void* user, ns_model** out);
NS_API ns_status ns_model_save(const ns_model* model, const char* path);
NS_API ns_status ns_model_load(const char* path, ns_model** out);
/* "bilstm", "dlstm" or "gcn"; NULL for a NULL handle. */
NS_API const char* ns_model_kind(const ns_model* model);
/* Replaces the word table with vectors from a text embedding file. */
NS_API ns_status ns_model_set_word_vectors(ns_model* model, const char* path, int freeze);
NS_API void ns_model_free(ns_model* model);

/* Probability TSV: sent_id, instance, token, p_out, p_in. */
NS_API ns_status ns_predict(const ns_model* model, const ns_corpus* corpus, const char* out_path);

/* Confidence voting over two aligned probability files; writes a label TSV:
 * sent_id, instance, token, label, winner, margin. */
NS_API ns_status ns_ensemble(const char* probs_a, const char* probs_b, const char* out_path);

/* ---- evaluation ---- */

enum {
  NS_EVAL_EASY_HARD = 1u << 0,
  NS_EVAL_LCA = 1u << 1,
  NS_EVAL_MACRO = 1u << 2,
  NS_EVAL_TSV = 1u << 3
};

typedef struct ns_metrics {
  double precision;
  double recall;
  double f1;
  double pcs;
  size_t instances;
} ns_metrics;

/* predictions: label or probability TSV aligned with gold by
 * (sent_id, instance). metrics, report and diagnostics may be NULL. */
NS_API ns_status ns_evaluate(const char* predictions, const ns_corpus* gold, unsigned flags,
                             ns_metrics* metrics, char** report, char** diagnostics);

/* Side-by-side report for runs with and without punctuation. */
NS_API ns_status ns_evaluate_paired(const char* pred_with, const ns_corpus* gold_with,
                                    const char* pred_without, const ns_corpus* gold_without,
                                    unsigned flags, char** report);

/* Trains BiLSTM and D-LSTM under {all, -w, -p} and scores the nine voting
 * ensembles on eval. */
NS_API ns_status ns_ablate(const ns_config* config, const ns_corpus* train, const ns_corpus* dev,
                           const ns_corpus* eval, unsigned flags, ns_line_fn on_epoch, void* user,
                           char** report);

typedef struct ns_gradcheck_result {
  double max_rel_error;
  size_t checked;
  size_t kinks_skipped;
  int passed;
} ns_gradcheck_result;

NS_API ns_status ns_gradcheck(const char* model_kind, size_t trials, double tol, uint64_t seed,
                              ns_gradcheck_result* result, char** summary);

/* Cross-lingual word vectors for the forms of source. method: "premapped",
 * "average" or "argmax" (also "a", "b", "c"). translations may be NULL for
 * premapped. coverage may be NULL. */
NS_API ns_status ns_compose(const char* method, const char* vectors, const char* translations,
                            const ns_corpus* source, int uniform_average, const char* out_path,
                            double* coverage);

/* ---- run manifests ---- */

NS_API ns_status ns_manifest_create(const char* command, ns_manifest** out);
/* Records the effective configuration and its seed. */
NS_API ns_status ns_manifest_set_config(ns_manifest* manifest, const ns_config* config);
NS_API ns_status ns_manifest_set_seed(ns_manifest* manifest, uint64_t seed);
NS_API ns_status ns_manifest_add_input(ns_manifest* manifest, const char* role, const char* path);
NS_API ns_status ns_manifest_add_output(ns_manifest* manifest, const char* role,
                                        const char* path);
/* Hashes the inputs and writes JSON. path NULL: "<first output>.manifest.json". */
NS_API ns_status ns_manifest_write(ns_manifest* manifest, const char* path);
NS_API void ns_manifest_free(ns_manifest* manifest);

#ifdef __cplusplus
}
#endif

#endif /* NEGSCOPE_NEGSCOPE_H */
