#ifndef RELASSAY_RANKING_EVAL_H_
#define RELASSAY_RANKING_EVAL_H_

#include <map>
#include <string>
#include <vector>

#include "alignment.h"
#include "corpus_io.h"
#include "metrics.h"

namespace relassay {

// qid -> doc -> score under one assessment method
using MethodScores = std::map<std::string, std::map<std::string, double>>;

// Levels from exact score equality, descending, with the zero-score group
// dropped. Empty when no document scored above zero.
IdealRankingSet ideal_from_method(const std::map<std::string, double> &doc_scores);

struct ScoreOptions {
  std::size_t ndcg_depth = 10;
  GainVariant gain = GainVariant::linear;
  double persistence = 0.9;
  bool judged_only = false;  // drop gold-unjudged docs from runs before scoring
};

struct SystemScoreTable {
  std::vector<std::string> run_tags;          // sorted
  std::vector<std::string> methods;           // insertion order of the scores map
  std::vector<std::string> query_ids;         // the evaluation query set
  std::map<std::string, double> mean_ndcg;    // run -> mean nDCG@k (gold)
  std::map<std::string, std::map<std::string, double>> mean_compatibility;  // run -> method -> value
  // retained per-query matrices: method -> run -> qid -> value
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> per_query;
  std::map<std::string, std::map<std::string, double>> per_query_ndcg;  // run -> qid -> value
  std::vector<std::string> flags;  // degenerate queries, missing queries, etc.
};

// Scores every run over the gold query set: per-method mean compatibility
// and mean nDCG under the gold qrels. A query a method cannot rank (empty
// ideal) is skipped for that method across all runs and flagged; a query
// missing from a run contributes 0 for that run and is flagged.
SystemScoreTable score_all(const std::vector<RunRanking> &runs,
                           const std::map<std::string, MethodScores> &method_scores,
                           const Qrels &gold, const ScoreOptions &options = {});

struct CorrelationTable {
  std::map<std::string, double> tau;          // method -> Kendall tau-b vs gold nDCG ranking
  std::map<std::string, std::string> errors;  // method -> reason when tau is undefined
};

CorrelationTable correlate(const SystemScoreTable &table);

// flat records, one per (run, method): run,method,ndcg10,compatibility
std::string scatter_csv(const SystemScoreTable &table);
// aligned text and csv renderings of the correlation table
std::string correlation_text(const CorrelationTable &corr);
std::string correlation_csv(const CorrelationTable &corr);
// one record per method joining mean alignment with its tau; methods lacking
// either side are omitted
std::string alignment_vs_agreement_csv(
    const CorrelationTable &corr, const std::map<std::string, double> &mean_alignment);

}  // namespace relassay

#endif  // RELASSAY_RANKING_EVAL_H_
