#include "relassay.h"

#include <cstring>
#include <string>
#include <vector>

#include "corpus_io.h"
#include "judges.h"
#include "metrics.h"
#include "ranking_eval.h"
#include "session.h"
#include "util.h"

using namespace relassay;

namespace {

thread_local std::string g_last_error;

relassay_status fail(relassay_status status, const std::string &message) {
  g_last_error = message;
  return status;
}

// maps the C++ error taxonomy onto status codes at the boundary
template <typename Fn>
relassay_status guarded(Fn &&fn) {
  try {
    return fn();
  } catch (const ParseError &e) {
    return fail(RELASSAY_ERR_PARSE, e.what());
  } catch (const IoError &e) {
    return fail(RELASSAY_ERR_IO, e.what());
  } catch (const ConfigError &e) {
    return fail(RELASSAY_ERR_CONFIG, e.what());
  } catch (const NetworkError &e) {
    return fail(RELASSAY_ERR_NETWORK, e.what());
  } catch (const JudgeError &e) {
    return fail(RELASSAY_ERR_JUDGE, e.what());
  } catch (const InvalidInput &e) {
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception &e) {
    return fail(RELASSAY_ERR_INTERNAL, e.what());
  }
}

std::vector<std::string> to_strings(const char *const *items, size_t len) {
  std::vector<std::string> out;
  out.reserve(len);
  for (size_t i = 0; i < len; i++) out.emplace_back(items[i]);
  return out;
}

}  // namespace

struct relassay_qrels {
  Qrels value;
};

struct relassay_run {
  RunRanking value;
};

struct relassay_session {
  Session value;
  explicit relassay_session(ToolConfig config) : value(std::move(config)) {}
};

extern "C" {

const char *relassay_version(void) { return kToolkitVersion; }

const char *relassay_last_error(void) { return g_last_error.c_str(); }

relassay_status relassay_qrels_parse_file(const char *path, relassay_qrels **out) {
  if (path == nullptr || out == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new relassay_qrels{parse_qrels_file(path)};
    return RELASSAY_OK;
  });
}

relassay_status relassay_qrels_parse_text(const char *text, size_t len, relassay_qrels **out) {
  if (text == nullptr || out == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new relassay_qrels{parse_qrels(std::string_view(text, len))};
    return RELASSAY_OK;
  });
}

void relassay_qrels_free(relassay_qrels *qrels) { delete qrels; }

size_t relassay_qrels_query_count(const relassay_qrels *qrels) {
  return qrels == nullptr ? 0 : qrels->value.entries.size();
}

int relassay_qrels_grade(const relassay_qrels *qrels, const char *qid, const char *doc) {
  if (qrels == nullptr || qid == nullptr || doc == nullptr) return -1;
  return qrels->value.grade(qid, doc);
}

relassay_status relassay_run_parse_file(const char *path, relassay_run **out) {
  if (path == nullptr || out == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new relassay_run{parse_run_file(path)};
    return RELASSAY_OK;
  });
}

relassay_status relassay_run_parse_text(const char *text, size_t len, relassay_run **out) {
  if (text == nullptr || out == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new relassay_run{parse_run(std::string_view(text, len))};
    return RELASSAY_OK;
  });
}

void relassay_run_free(relassay_run *run) { delete run; }

const char *relassay_run_tag(const relassay_run *run) {
  return run == nullptr ? "" : run->value.tag.c_str();
}

size_t relassay_run_query_count(const relassay_run *run) {
  return run == nullptr ? 0 : run->value.queries.size();
}

relassay_status relassay_rbo(const char *const *list_a, size_t len_a, const char *const *list_b,
                             size_t len_b, double persistence, size_t depth, double *out) {
  if ((list_a == nullptr && len_a > 0) || (list_b == nullptr && len_b > 0) || out == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = rbo(to_strings(list_a, len_a), to_strings(list_b, len_b),
               RboParams{persistence, depth});
    return RELASSAY_OK;
  });
}

relassay_status relassay_kendall_tau(const double *x, const double *y, size_t n, double *out) {
  if (x == nullptr || y == nullptr || out == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = kendall_tau(std::vector<double>(x, x + n), std::vector<double>(y, y + n));
    return RELASSAY_OK;
  });
}

relassay_status relassay_compatibility(const char *const *ranked, size_t ranked_len,
                                       const char *const *scored_docs, const double *scores,
                                       size_t scored_len, double persistence, double *out) {
  if ((ranked == nullptr && ranked_len > 0) || scored_docs == nullptr || scores == nullptr ||
      out == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::map<std::string, double> doc_scores;
    for (size_t i = 0; i < scored_len; i++) doc_scores[scored_docs[i]] = scores[i];
    IdealRankingSet ideal = ideal_from_method(doc_scores);
    *out = compatibility(to_strings(ranked, ranked_len), ideal, persistence);
    return RELASSAY_OK;
  });
}

relassay_status relassay_ndcg_at_k(const relassay_run *run, const relassay_qrels *qrels,
                                   const char *qid, size_t k, int exponential_gain, double *out) {
  if (run == nullptr || qrels == nullptr || qid == nullptr || out == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto it = qrels->value.entries.find(qid);
    if (it == qrels->value.entries.end())
      throw InvalidInput(std::string("qrels do not cover query ") + qid);
    *out = ndcg_at_k(run->value.docs(qid), it->second, k,
                     exponential_gain != 0 ? GainVariant::exponential : GainVariant::linear);
    return RELASSAY_OK;
  });
}

relassay_status relassay_session_open(const char *config_json, relassay_session **out) {
  if (config_json == nullptr || out == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new relassay_session(config_from_json(config_json));
    return RELASSAY_OK;
  });
}

void relassay_session_close(relassay_session *session) { delete session; }

relassay_status relassay_cmd_judge(relassay_session *session, const char *method,
                                   size_t *written, size_t *skipped, size_t *errors) {
  if (session == nullptr || method == nullptr)
    return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    JudgeStats stats = session->value.cmd_judge(method);
    if (written != nullptr) *written = stats.written;
    if (skipped != nullptr) *skipped = stats.skipped;
    if (errors != nullptr) *errors = stats.errors;
    if (stats.errors > 0)
      return fail(RELASSAY_ERR_PARTIAL,
                  std::to_string(stats.errors) + " subjects failed; see judge_errors.log");
    return RELASSAY_OK;
  });
}

relassay_status relassay_cmd_align(relassay_session *session) {
  if (session == nullptr) return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    session->value.cmd_align();
    return RELASSAY_OK;
  });
}

relassay_status relassay_cmd_rank_eval(relassay_session *session) {
  if (session == nullptr) return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::vector<std::string> failures = session->value.cmd_rank_eval();
    if (!failures.empty())
      return fail(RELASSAY_ERR_PARTIAL, std::to_string(failures.size()) +
                                            " run files skipped; see run_parse_failures.log");
    return RELASSAY_OK;
  });
}

relassay_status relassay_cmd_ndcg(relassay_session *session) {
  if (session == nullptr) return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    session->value.cmd_ndcg();
    return RELASSAY_OK;
  });
}

relassay_status relassay_cmd_report(relassay_session *session, size_t *checks_passed,
                                    size_t *violations) {
  if (session == nullptr) return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    ReportStats stats = session->value.cmd_report();
    if (checks_passed != nullptr) *checks_passed = stats.checks_passed;
    if (violations != nullptr) *violations = stats.violations.size();
    if (!stats.violations.empty())
      return fail(RELASSAY_ERR_PARTIAL, "replay consistency violations: " +
                                            std::to_string(stats.violations.size()));
    return RELASSAY_OK;
  });
}

relassay_status relassay_write_default_prompts(const char *dir) {
  if (dir == nullptr) return fail(RELASSAY_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    PromptLibrary::write_defaults(dir);
    return RELASSAY_OK;
  });
}

}  // extern "C"
