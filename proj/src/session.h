#ifndef RELASSAY_SESSION_H_
#define RELASSAY_SESSION_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "alignment.h"
#include "corpus_io.h"
#include "gateway.h"
#include "judges.h"
#include "metrics.h"
#include "ranking_eval.h"

namespace relassay {

inline constexpr const char *kToolkitVersion = "0.1.0";

struct ToolConfig {
  // inputs
  std::string queries_path;
  std::string passages_path;
  std::string qrels_path;
  std::string runs_dir;
  std::string pool_path;  // optional explicit (qid, doc) subject pool
  // state and outputs
  std::string out_dir = "out";
  std::string store_path;    // default: <out_dir>/judgments.jsonl
  std::string nuggets_dir;   // default: <out_dir>/nuggets
  std::string cache_dir;     // default: <out_dir>/cache
  std::string prompt_dir;    // empty: built-in prompts
  // gateway
  std::string gateway_mode = "mock";  // mock | http
  std::string base_url;
  std::string model;
  std::string api_key_env = "RELASSAY_API_KEY";
  double temperature = 0.0;
  int max_tokens = 2048;
  int concurrency = 4;
  int max_attempts = 5;
  int backoff_ms = 500;
  double mock_noise = 0.0;
  std::uint64_t mock_seed = 17;
  // analysis
  std::vector<std::string> methods;       // empty: every method present in the store
  std::vector<std::string> run_include;   // empty: all runs in runs_dir
  std::uint64_t pair_seed = 7351;
  std::uint64_t alignment_seed = 97;
  std::size_t preference_budget = 7;   // P in the per-query P*n pair bound
  std::size_t alignment_pair_cap = 200;
  std::size_t ndcg_depth = 10;
  double persistence = 0.9;
  GainVariant gain = GainVariant::linear;
  bool judged_only = false;
  std::string dq_source = "umbrela";  // umbrela | binary | qrels
};

// Parses the JSON config shape used by the CLI and the C API; unknown keys
// are rejected so typos fail loudly. Environment variables RELASSAY_BASE_URL
// and RELASSAY_MODEL fill gateway fields left empty.
ToolConfig config_from_json(const std::string &json_text);

struct JudgeStats {
  std::size_t written = 0;
  std::size_t skipped = 0;  // already present in the store
  std::size_t errors = 0;
};

struct ReportStats {
  std::size_t methods_checked = 0;
  std::size_t checks_passed = 0;
  std::vector<std::string> violations;
};

class Session {
 public:
  explicit Session(ToolConfig config);
  ~Session();

  const ToolConfig &config() const { return config_; }

  // Resumable labeling for one method; subjects already in the store are
  // skipped. errors > 0 means partial completion.
  JudgeStats cmd_judge(const std::string &method);
  // Alignment reports for the requested (or all judged) methods plus the
  // combined flat table.
  void cmd_align();
  // Compatibility-vs-nDCG system ranking agreement across the runs
  // directory; the human-qrels column is always included. Returns the names
  // of run files that could not be parsed.
  std::vector<std::string> cmd_rank_eval();
  // Gold nDCG table only.
  void cmd_ndcg();
  // Replay mode: recompute all reports from an existing store, asserting
  // internal consistency.
  ReportStats cmd_report();

 private:
  struct State;
  ToolConfig config_;
  std::unique_ptr<State> state_;

  const Qrels &qrels_();
  const QuerySet &queries_();
  const PassageMap &passages_();
  Gateway *gateway_();
  void ensure_exam_sets_loaded_(std::vector<std::string> *errors);
  void ensure_autonugget_sets_loaded_(std::vector<std::string> *errors);
  MethodScores scores_for_method_(MethodId id, const JudgmentIndex &index);
  std::vector<std::string> resolve_methods_(const JudgmentIndex &index) const;
  // keep_queries trims each run to the evaluated query set right after parsing
  std::vector<RunRanking> load_runs_(std::vector<std::string> *failures,
                                     const Qrels *keep_queries) const;
};

}  // namespace relassay

#endif  // RELASSAY_SESSION_H_
