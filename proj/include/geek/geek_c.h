#ifndef GEEK_C_H
#define GEEK_C_H

/*
 * C interface to the geek engine. All functions either return a geek_status
 * (0 on success) or a pointer that is null on failure; on failure the message
 * is available via geek_last_error() on the calling thread. Strings returned
 * through out-parameters are heap-allocated and must be released with
 * geek_string_free(). Structured results are JSON text.
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef struct geek_backend geek_backend;
typedef struct geek_index geek_index;

/* Mirrors the library's error codes; keep in sync with errors.hpp. */
typedef enum geek_status {
    GEEK_OK = 0,
    GEEK_ERR_INVALID_ARGUMENT = 1,
    GEEK_ERR_PENDING_EXISTS = 2,
    GEEK_ERR_EMPTY_DECOMP = 3,
    GEEK_ERR_NO_PENDING = 4,
    GEEK_ERR_EMPTY_FACT = 5,
    GEEK_ERR_MISSING_SLOT = 6,
    GEEK_ERR_UNKNOWN_KIND = 7,
    GEEK_ERR_UNPARSABLE_CHOICE = 8,
    GEEK_ERR_NO_DECOMP_FOUND = 9,
    GEEK_ERR_UNPARSABLE_VERDICT = 10,
    GEEK_ERR_TRANSPORT = 11,
    GEEK_ERR_MALFORMED = 12,
    GEEK_ERR_SCRIPT_MISS = 13,
    GEEK_ERR_DIMENSION_MISMATCH = 14,
    GEEK_ERR_EMBED_FAILURE = 15,
    GEEK_ERR_CORPUS_INVALID = 16,
    GEEK_ERR_EMPTY_INDEX = 17,
    GEEK_ERR_RETRIEVAL_EMPTY = 18,
    GEEK_ERR_READER_FAILURE = 19,
    GEEK_ERR_ILLEGAL_STATE = 20,
    GEEK_ERR_SOLVE_FAILED = 21,
    GEEK_ERR_ALL_UNPARSABLE = 22,
    GEEK_ERR_ALL_LINEAGES_FAILED = 23,
    GEEK_ERR_FILE_MISSING = 24,
    GEEK_ERR_SCHEMA_VIOLATION = 25,
    GEEK_ERR_MISSING_PREDICTION = 26,
    GEEK_ERR_INCOMPLETE_REFINEMENT = 27,
    GEEK_ERR_IO_FAILURE = 28,
    GEEK_ERR_INTERNAL = 29,
    GEEK_ERR_UNKNOWN = 100
} geek_status;

const char* geek_version(void);
const char* geek_status_name(int status);

/* Message for the most recent failure on this thread; empty if none. */
const char* geek_last_error(void);

/* Trace JSONL accumulated before the most recent solve failure on this
 * thread; empty when the last failure carried no trace. */
const char* geek_last_trace_jsonl(void);

void geek_string_free(char* text);

/* -------- backends -------- */

geek_backend* geek_backend_open_script(const char* manifest_path);
geek_backend* geek_backend_open_http(const char* base_url, int timeout_ms, int retries);
void geek_backend_close(geek_backend* backend);

/* -------- corpus index -------- */

geek_index* geek_index_build(const char* corpus_jsonl_path, geek_backend* embedder);
geek_index* geek_index_load(const char* path);
int geek_index_save(const geek_index* index, const char* path);
void geek_index_close(geek_index* index);

/* out_json: [{"para_id", "doc_id", "score"}, ...] in rank order. */
int geek_index_query(const geek_index* index, geek_backend* embedder, const char* query,
                     int k, int k_doc, char** out_json);

/* -------- configuration -------- */

/* Resolves defaults, then the optional config file, then GEEK_* environment
 * variables, into a flat config JSON object (keys: mode, max_rounds, k,
 * k_doc, n, leaf_cap, branch_depth, backend_url, backend_timeout_ms,
 * backend_retries, max_new_tokens, deterministic). */
int geek_config_resolve(const char* config_file_or_null, char** out_json);

/* -------- solving -------- */

/* Runs one question to a verdict. config_json uses the flat keys above;
 * mode "full" runs strategy exploration. out_json:
 *   {"answer", "rationale", "mode", "state", "trace_jsonl"}
 * plus, in full mode, "tree" and "leaves":[{"lineage_id", "answer" or
 * "failure", "trace_jsonl"}, ...]. index may be null for modes that never
 * retrieve. */
int geek_solve(const char* question_id, const char* question_text, geek_backend* backend,
               const geek_index* index_or_null, const char* config_json, char** out_json);

/* -------- prompts -------- */

/* JSON array of the eight template kind names. */
int geek_prompt_kinds(char** out_json);

/* Raw template text for a kind. */
int geek_prompt_template(const char* kind, char** out_text);

/* Renders a template. question_or_null fills {Q} and {Question_state};
 * slots_json_or_null is an object of placeholder name to text. */
int geek_prompt_render(const char* kind, const char* question_or_null,
                       const char* slots_json_or_null, char** out_text);

/* -------- dataset tooling -------- */

/* out_summary_json: {"count", "with_answers"}. */
int geek_data_load(const char* path, char** out_summary_json);

/* Writes refined items as JSONL; summary {"total", "refined", "unrefined"}. */
int geek_data_refine(const char* path, geek_backend* refiner, const char* out_path,
                     char** out_summary_json);

/* Builds per-timestep training pairs from a refined JSONL file; the optional
 * index supplies paragraph texts. Summary {"pairs", "skipped"}. */
int geek_data_pairs(const char* refined_path, const geek_index* index_or_null,
                    const char* out_path, char** out_summary_json);

int geek_data_score(const char* predictions_path, const char* gold_path,
                    double* out_accuracy);

/* Solves every item in gold_path and writes a leaderboard predictions file.
 * Summary {"total", "predicted", "skipped", "warnings"}. */
int geek_data_predict(const char* gold_path, geek_backend* backend,
                      const geek_index* index_or_null, const char* config_json,
                      const char* out_path, char** out_summary_json);

#ifdef __cplusplus
}
#endif

#endif /* GEEK_C_H */
