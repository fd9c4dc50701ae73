#ifndef RELASSAY_ALIGNMENT_H_
#define RELASSAY_ALIGNMENT_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corpus_io.h"

namespace relassay {

// Per-query grouping of judged documents by human grade: the best known
// documents (highest positive grade for the query), acceptable ones (strictly
// between 0 and the best grade), and unacceptable ones (grade 0).
struct CategoryPartition {
  int best_grade = 0;
  std::vector<std::string> best;
  std::vector<std::string> acceptable;
  std::vector<std::string> unacceptable;

  // No positive grade at all; excluded from pair generation.
  bool degenerate() const { return best_grade == 0; }
};

CategoryPartition partition(const Qrels &qrels, const std::string &qid);

enum class PairVerdict { agree, tie, disagree };

// How a method orders two documents of one query. Only the order is
// consulted, never the scale. Returns nullopt when the method cannot compare
// the pair (missing score or unjudged pair); such pairs are counted as
// skipped.
class DocComparator {
 public:
  virtual ~DocComparator() = default;
  // d_hi comes from the higher human category
  virtual std::optional<PairVerdict> compare(const std::string &qid, const std::string &d_hi,
                                             const std::string &d_lo) const = 0;
  // preference comparators only tally pairs that were actually judged
  virtual bool is_preference() const { return false; }
};

class ScoreComparator : public DocComparator {
 public:
  using ScoreMap = std::map<std::string, std::map<std::string, double>>;  // qid -> doc -> score
  explicit ScoreComparator(ScoreMap scores) : scores_(std::move(scores)) {}
  std::optional<PairVerdict> compare(const std::string &qid, const std::string &d_hi,
                                     const std::string &d_lo) const override;

 private:
  ScoreMap scores_;
};

enum class PreferenceResult { first, second, tie };

class PreferenceComparator : public DocComparator {
 public:
  // qid -> canonical pair key -> outcome relative to the lexicographically
  // smaller doc ("first" means the smaller doc id won)
  using PairMap = std::map<std::string, std::map<std::string, PreferenceResult>>;
  explicit PreferenceComparator(PairMap pairs) : pairs_(std::move(pairs)) {}
  std::optional<PairVerdict> compare(const std::string &qid, const std::string &d_hi,
                                     const std::string &d_lo) const override;
  bool is_preference() const override { return true; }

 private:
  PairMap pairs_;
};

enum class ComparisonType : std::size_t {
  best_vs_unacceptable = 0,
  acceptable_vs_unacceptable = 1,
  best_vs_acceptable = 2,
};
constexpr std::size_t kComparisonTypes = 3;
const char *comparison_name(ComparisonType type);

struct CellTally {
  std::size_t agree = 0;
  std::size_t tie = 0;
  std::size_t disagree = 0;
  std::size_t skipped = 0;

  std::size_t pairs() const { return agree + tie + disagree; }
  void add(const CellTally &other);
};

struct AlignmentCell {
  bool present = false;  // false when no eligible pair existed anywhere
  double agree = 0.0;
  double tie = 0.0;
  double disagree = 0.0;
  std::size_t pair_count = 0;
  std::size_t query_count = 0;  // queries contributing at least one pair
  std::size_t skipped = 0;
};

struct AlignmentReport {
  std::array<AlignmentCell, kComparisonTypes> macro;  // per-query averaged (primary)
  std::array<AlignmentCell, kComparisonTypes> micro;  // pair-weighted
  std::map<std::string, std::array<CellTally, kComparisonTypes>> per_query;
  std::vector<std::string> degenerate_queries;  // no positive grade, flagged

  // mean of the macro agree fractions over present cells
  double mean_agree() const;
};

struct AlignmentOptions {
  // cross-category pair cap per query for preference comparators; score
  // comparators are never capped
  std::size_t preference_pair_cap = 200;
  std::uint64_t seed = 97;
};

AlignmentReport alignment_report(const DocComparator &comparator, const Qrels &qrels,
                                 const std::vector<std::string> &qids,
                                 const AlignmentOptions &options = {});

// Structured text (one JSON object) and flat table (method x type x outcome)
// renderings for report files.
std::string alignment_report_json(const AlignmentReport &report, const std::string &method);
std::string alignment_flat_header();
std::string alignment_flat_rows(const AlignmentReport &report, const std::string &method);

}  // namespace relassay

#endif  // RELASSAY_ALIGNMENT_H_
