/*
 * relassay - LLM-based relevance assessment toolkit, C interface.
 *
 * Every function returns a relassay_status; RELASSAY_OK means success.
 * On failure, relassay_last_error() returns a thread-local message that
 * stays valid until the next failing call on the same thread. Objects
 * returned through out-parameters are owned by the caller and released
 * with the matching _free function.
 */
#ifndef RELASSAY_H
#define RELASSAY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RELASSAY_API __declspec(dllexport)
#else
#define RELASSAY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum relassay_status {
  RELASSAY_OK = 0,
  RELASSAY_ERR_INVALID_ARGUMENT = 1,
  RELASSAY_ERR_PARSE = 2,
  RELASSAY_ERR_IO = 3,
  RELASSAY_ERR_CONFIG = 4,
  RELASSAY_ERR_NETWORK = 5,
  RELASSAY_ERR_JUDGE = 6,
  RELASSAY_ERR_PARTIAL = 7, /* command finished with some subjects failed */
  RELASSAY_ERR_INTERNAL = 8
} relassay_status;

typedef struct relassay_qrels relassay_qrels;     /* opaque */
typedef struct relassay_run relassay_run;         /* opaque */
typedef struct relassay_session relassay_session; /* opaque */

RELASSAY_API const char *relassay_version(void);
RELASSAY_API const char *relassay_last_error(void);

/* ---- TREC files ------------------------------------------------------ */

RELASSAY_API relassay_status relassay_qrels_parse_file(const char *path, relassay_qrels **out);
RELASSAY_API relassay_status relassay_qrels_parse_text(const char *text, size_t len,
                                                       relassay_qrels **out);
RELASSAY_API void relassay_qrels_free(relassay_qrels *qrels);
RELASSAY_API size_t relassay_qrels_query_count(const relassay_qrels *qrels);
/* grade of a (query, doc) pair; -1 when unjudged */
RELASSAY_API int relassay_qrels_grade(const relassay_qrels *qrels, const char *qid,
                                      const char *doc);

RELASSAY_API relassay_status relassay_run_parse_file(const char *path, relassay_run **out);
RELASSAY_API relassay_status relassay_run_parse_text(const char *text, size_t len,
                                                     relassay_run **out);
RELASSAY_API void relassay_run_free(relassay_run *run);
RELASSAY_API const char *relassay_run_tag(const relassay_run *run);
RELASSAY_API size_t relassay_run_query_count(const relassay_run *run);

/* ---- metric kernels --------------------------------------------------- */

/* base rank-biased overlap at the given persistence and depth */
RELASSAY_API relassay_status relassay_rbo(const char *const *list_a, size_t len_a,
                                          const char *const *list_b, size_t len_b,
                                          double persistence, size_t depth, double *out);

/* tie-corrected Kendall tau-b between two equal-length vectors */
RELASSAY_API relassay_status relassay_kendall_tau(const double *x, const double *y, size_t n,
                                                  double *out);

/*
 * Compatibility of a ranking against the ideal ranking set induced by
 * per-document scores (docs scoring 0 are excluded from the ideal).
 */
RELASSAY_API relassay_status relassay_compatibility(const char *const *ranked, size_t ranked_len,
                                                    const char *const *scored_docs,
                                                    const double *scores, size_t scored_len,
                                                    double persistence, double *out);

/* nDCG@k of one query of a run under the qrels; exponential_gain 0 or 1 */
RELASSAY_API relassay_status relassay_ndcg_at_k(const relassay_run *run,
                                                const relassay_qrels *qrels, const char *qid,
                                                size_t k, int exponential_gain, double *out);

/* ---- sessions (the CLI backend) ---------------------------------------- */

/*
 * config_json holds the toolkit configuration: paths, gateway settings,
 * methods, seeds, flags. See the project README for the schema.
 */
RELASSAY_API relassay_status relassay_session_open(const char *config_json,
                                                   relassay_session **out);
RELASSAY_API void relassay_session_close(relassay_session *session);

/*
 * Resumable labeling for one method. Counts are optional out-parameters.
 * Returns RELASSAY_ERR_PARTIAL when some subjects failed; their reasons are
 * logged under the configured output directory.
 */
RELASSAY_API relassay_status relassay_cmd_judge(relassay_session *session, const char *method,
                                                size_t *written, size_t *skipped,
                                                size_t *errors);
RELASSAY_API relassay_status relassay_cmd_align(relassay_session *session);
RELASSAY_API relassay_status relassay_cmd_rank_eval(relassay_session *session);
RELASSAY_API relassay_status relassay_cmd_ndcg(relassay_session *session);
/* replay mode; violations counts failed internal-consistency checks */
RELASSAY_API relassay_status relassay_cmd_report(relassay_session *session, size_t *checks_passed,
                                                 size_t *violations);

/* write the built-in prompt assets into a directory, one file per stage */
RELASSAY_API relassay_status relassay_write_default_prompts(const char *dir);

#ifdef __cplusplus
}
#endif

#endif /* RELASSAY_H */
