#ifndef RELASSAY_METRICS_H_
#define RELASSAY_METRICS_H_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace relassay {

struct RboParams {
  double persistence = 0.9;  // must be strictly inside (0, 1)
  std::size_t depth = 0;     // evaluation depth k, must be positive
};

// Base rank-biased overlap: (1-p) * sum_{d=1..k} p^(d-1) * A_d, where A_d is
// the overlap of the depth-d prefixes divided by d. Lists shorter than k are
// treated as ending; no extrapolation.
double rbo(const std::vector<std::string> &a, const std::vector<std::string> &b,
           const RboParams &params);

// One effectiveness level: documents judged equivalent by some method.
struct IdealLevel {
  double value = 0.0;  // the method score that induced the level, provenance only
  std::vector<std::string> docs;
};

// Ordered effectiveness levels, most relevant first. Non-relevant documents
// (the method's zero-score group) are excluded before construction.
struct IdealRankingSet {
  std::vector<IdealLevel> levels;

  std::size_t doc_count() const;
  bool empty() const { return levels.empty(); }
};

// The within-level permutation that maximizes RBO against `run_docs`:
// docs present in the run ordered by their run position, absent docs after
// them in doc-id order.
std::vector<std::string> ideal_permutation_for(const std::vector<std::string> &run_docs,
                                               const IdealRankingSet &ideal);

// Maximum RBO between the run and any permutation of the ideal set, evaluated
// at depth |ideal| and normalized by the ideal's self-RBO at that depth so an
// exact realization scores 1.0.
double compatibility(const std::vector<std::string> &run_docs, const IdealRankingSet &ideal,
                     double persistence);

enum class GainVariant { linear, exponential };
double gain(int grade, GainVariant variant);

// DCG over the top k of `ranked` normalized by the ideal DCG over all judged
// docs; unjudged docs count as grade 0; no relevant doc at all yields 0.
double ndcg_at_k(const std::vector<std::string> &ranked,
                 const std::map<std::string, int> &grades, std::size_t k,
                 GainVariant variant = GainVariant::linear);

// Tie-corrected Kendall tau-b. Throws InvalidInput on length mismatch,
// fewer than two elements, or an all-constant vector.
double kendall_tau(const std::vector<double> &x, const std::vector<double> &y);

}  // namespace relassay

#endif  // RELASSAY_METRICS_H_
