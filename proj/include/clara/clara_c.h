#ifndef CLARA_C_H
#define CLARA_C_H

/*
 * C interface to the CLARA engine shared library.
 *
 * Usage pattern: create an engine from a config file plus "key=value"
 * overrides, call operations on it, free returned strings with
 * clara_string_free and the engine with clara_engine_free. Every operation
 * returns a status code; on failure clara_engine_last_error holds a message
 * valid until the next call on the same engine.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum clara_status {
  CLARA_OK = 0,
  CLARA_ERR_IO = 1,         /* unreadable files, malformed JSON/JSONL, bad UTF-8 */
  CLARA_ERR_VALIDATION = 2, /* benchmark invariant violations */
  CLARA_ERR_PORT = 3,       /* port failure or misconfiguration */
  CLARA_ERR_USAGE = 4,      /* unknown keys, methods, formats */
  CLARA_ERR_INTERNAL = 5
} clara_status;

typedef struct clara_engine clara_engine;

/* config_path may be NULL (defaults only). overrides are "key=value"
 * strings applied after the file. Returns NULL on failure; if err_out is
 * non-NULL it receives a message to free with clara_string_free. */
clara_engine* clara_engine_new(const char* config_path, const char* const* overrides,
                               size_t n_overrides, char** err_out);

void clara_engine_free(clara_engine* engine);

/* Message of the last failed call on this engine; empty when none. The
 * pointer stays owned by the engine. */
const char* clara_engine_last_error(const clara_engine* engine);

/* Pairing/shape validation of a benchmark JSONL file. *report_json_out (if
 * non-NULL) receives a summary with counts and every violation, also on
 * CLARA_ERR_VALIDATION. */
clara_status clara_validate_benchmark(clara_engine* engine, const char* bench_path,
                                      char** report_json_out);

/* Chunks, embeds and persists a corpus. snippet_length <= 0 or overlap < 0
 * fall back to the configured defaults. */
clara_status clara_ingest_corpus(clara_engine* engine, const char* corpus_path,
                                 const char* index_path, long snippet_length, long overlap,
                                 char** stats_json_out);

/* Runs a method (direct | translate_cot | web_toolcall | clara | ablation)
 * over a benchmark and writes outcomes, traces and reports under out_dir. */
clara_status clara_run(clara_engine* engine, const char* bench_path, const char* method,
                       const char* out_dir, char** summary_json_out);

/* Re-renders reports from a stored outcomes file. formats is a
 * comma-separated subset of "json,csv,md"; empty writes nothing. */
clara_status clara_render_report(clara_engine* engine, const char* outcomes_path,
                                 const char* formats, const char* out_dir,
                                 char** summary_json_out);

/* Current value of one config key (defaults + file + overrides applied). */
clara_status clara_engine_config_get(clara_engine* engine, const char* key, char** value_out);

/* JSON array of {"key","default","help"} covering every config key. */
char* clara_config_keys(void);

const char* clara_version(void);

void clara_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* CLARA_C_H */
