#include "alignment.h"

#include <algorithm>

#include "util.h"
#include "json.hpp"

namespace relassay {

CategoryPartition partition(const Qrels &qrels, const std::string &qid) {
  auto it = qrels.entries.find(qid);
  if (it == qrels.entries.end()) throw InvalidInput("unknown query id: " + qid);
  CategoryPartition part;
  for (const auto &[doc, grade] : it->second) part.best_grade = std::max(part.best_grade, grade);
  for (const auto &[doc, grade] : it->second) {
    if (grade == 0)
      part.unacceptable.push_back(doc);
    else if (grade == part.best_grade)
      part.best.push_back(doc);
    else
      part.acceptable.push_back(doc);
  }
  return part;
}

std::optional<PairVerdict> ScoreComparator::compare(const std::string &qid,
                                                    const std::string &d_hi,
                                                    const std::string &d_lo) const {
  auto q = scores_.find(qid);
  if (q == scores_.end()) return std::nullopt;
  auto hi = q->second.find(d_hi);
  auto lo = q->second.find(d_lo);
  if (hi == q->second.end() || lo == q->second.end()) return std::nullopt;
  if (hi->second > lo->second) return PairVerdict::agree;
  if (hi->second < lo->second) return PairVerdict::disagree;
  return PairVerdict::tie;
}

std::optional<PairVerdict> PreferenceComparator::compare(const std::string &qid,
                                                         const std::string &d_hi,
                                                         const std::string &d_lo) const {
  auto q = pairs_.find(qid);
  if (q == pairs_.end()) return std::nullopt;
  auto it = q->second.find(pair_subject_key(d_hi, d_lo));
  if (it == q->second.end()) return std::nullopt;
  if (it->second == PreferenceResult::tie) return PairVerdict::tie;
  const std::string &winner = d_hi <= d_lo
                                  ? (it->second == PreferenceResult::first ? d_hi : d_lo)
                                  : (it->second == PreferenceResult::first ? d_lo : d_hi);
  return winner == d_hi ? PairVerdict::agree : PairVerdict::disagree;
}

const char *comparison_name(ComparisonType type) {
  switch (type) {
    case ComparisonType::best_vs_unacceptable:
      return "best_vs_unacceptable";
    case ComparisonType::acceptable_vs_unacceptable:
      return "acceptable_vs_unacceptable";
    case ComparisonType::best_vs_acceptable:
      return "best_vs_acceptable";
  }
  return "unknown";
}

void CellTally::add(const CellTally &other) {
  agree += other.agree;
  tie += other.tie;
  disagree += other.disagree;
  skipped += other.skipped;
}

double AlignmentReport::mean_agree() const {
  double sum = 0.0;
  std::size_t present = 0;
  for (const auto &cell : macro)
    if (cell.present) {
      sum += cell.agree;
      present++;
    }
  return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

namespace {

struct TypePair {
  const std::vector<std::string> *hi;
  const std::vector<std::string> *lo;
};

TypePair category_pair(const CategoryPartition &part, ComparisonType type) {
  switch (type) {
    case ComparisonType::best_vs_unacceptable:
      return {&part.best, &part.unacceptable};
    case ComparisonType::acceptable_vs_unacceptable:
      return {&part.acceptable, &part.unacceptable};
    case ComparisonType::best_vs_acceptable:
      return {&part.best, &part.acceptable};
  }
  return {nullptr, nullptr};
}

}  // namespace

AlignmentReport alignment_report(const DocComparator &comparator, const Qrels &qrels,
                                 const std::vector<std::string> &qids,
                                 const AlignmentOptions &options) {
  AlignmentReport report;
  // per-query fraction accumulators for the macro average
  std::array<double, kComparisonTypes> agree_sum{}, tie_sum{}, disagree_sum{};
  std::array<CellTally, kComparisonTypes> totals{};

  for (const auto &qid : qids) {
    CategoryPartition part = partition(qrels, qid);
    if (part.degenerate()) {
      report.degenerate_queries.push_back(qid);
      continue;
    }
    std::array<CellTally, kComparisonTypes> tallies{};
    for (std::size_t t = 0; t < kComparisonTypes; t++) {
      auto type = static_cast<ComparisonType>(t);
      TypePair cats = category_pair(part, type);
      if (cats.hi->empty() || cats.lo->empty()) continue;
      std::vector<std::pair<std::string, std::string>> pairs;
      pairs.reserve(cats.hi->size() * cats.lo->size());
      for (const auto &hi : *cats.hi)
        for (const auto &lo : *cats.lo) pairs.emplace_back(hi, lo);
      if (comparator.is_preference() && pairs.size() > options.preference_pair_cap) {
        Rng rng(options.seed ^ hash64(qid));
        rng.shuffle(&pairs);
        pairs.resize(options.preference_pair_cap);
      }
      CellTally &tally = tallies[t];
      for (const auto &[hi, lo] : pairs) {
        auto verdict = comparator.compare(qid, hi, lo);
        if (!verdict) {
          tally.skipped++;
          continue;
        }
        switch (*verdict) {
          case PairVerdict::agree:
            tally.agree++;
            break;
          case PairVerdict::tie:
            tally.tie++;
            break;
          case PairVerdict::disagree:
            tally.disagree++;
            break;
        }
      }
      if (tally.pairs() > 0) {
        double denom = static_cast<double>(tally.pairs());
        agree_sum[t] += static_cast<double>(tally.agree) / denom;
        tie_sum[t] += static_cast<double>(tally.tie) / denom;
        disagree_sum[t] += static_cast<double>(tally.disagree) / denom;
        report.macro[t].query_count++;
      }
      totals[t].add(tally);
    }
    report.per_query.emplace(qid, tallies);
  }

  for (std::size_t t = 0; t < kComparisonTypes; t++) {
    std::size_t queries = report.macro[t].query_count;
    if (queries > 0) {
      auto &cell = report.macro[t];
      cell.present = true;
      cell.agree = agree_sum[t] / static_cast<double>(queries);
      cell.tie = tie_sum[t] / static_cast<double>(queries);
      cell.disagree = disagree_sum[t] / static_cast<double>(queries);
      cell.pair_count = totals[t].pairs();
      cell.skipped = totals[t].skipped;
    }
    if (totals[t].pairs() > 0) {
      auto &cell = report.micro[t];
      double denom = static_cast<double>(totals[t].pairs());
      cell.present = true;
      cell.agree = static_cast<double>(totals[t].agree) / denom;
      cell.tie = static_cast<double>(totals[t].tie) / denom;
      cell.disagree = static_cast<double>(totals[t].disagree) / denom;
      cell.pair_count = totals[t].pairs();
      cell.query_count = report.macro[t].query_count;
      cell.skipped = totals[t].skipped;
    }
  }
  return report;
}

namespace {

nlohmann::json cell_json(const AlignmentCell &cell) {
  if (!cell.present) return nullptr;
  nlohmann::json j;
  j["agree"] = cell.agree;
  j["tie"] = cell.tie;
  j["disagree"] = cell.disagree;
  j["pairs"] = cell.pair_count;
  j["queries"] = cell.query_count;
  j["skipped"] = cell.skipped;
  return j;
}

}  // namespace

std::string alignment_report_json(const AlignmentReport &report, const std::string &method) {
  nlohmann::json j;
  j["method"] = method;
  for (std::size_t t = 0; t < kComparisonTypes; t++) {
    const char *name = comparison_name(static_cast<ComparisonType>(t));
    j["macro"][name] = cell_json(report.macro[t]);
    j["micro"][name] = cell_json(report.micro[t]);
  }
  j["mean_agree"] = report.mean_agree();
  j["degenerate_queries"] = report.degenerate_queries;
  return j.dump(2);
}

std::string alignment_flat_header() { return "method,comparison,averaging,agree,tie,disagree,pairs\n"; }

std::string alignment_flat_rows(const AlignmentReport &report, const std::string &method) {
  std::string out;
  for (std::size_t t = 0; t < kComparisonTypes; t++) {
    const char *name = comparison_name(static_cast<ComparisonType>(t));
    const auto emit = [&](const char *averaging, const AlignmentCell &cell) {
      if (!cell.present) return;
      out += method;
      out += ',';
      out += name;
      out += ',';
      out += averaging;
      out += ',';
      out += format_double(cell.agree);
      out += ',';
      out += format_double(cell.tie);
      out += ',';
      out += format_double(cell.disagree);
      out += ',';
      out += std::to_string(cell.pair_count);
      out += '\n';
    };
    emit("macro", report.macro[t]);
    emit("micro", report.micro[t]);
  }
  return out;
}

}  // namespace relassay
