#include "alignment.h"

#include "doctest.h"
#include "gateway.h"
#include "testdata.h"
#include "util.h"

using namespace relassay;

namespace {

ScoreComparator::ScoreMap grade_scores(const Qrels &qrels, double scale = 1.0,
                                       double shift = 0.0) {
  ScoreComparator::ScoreMap scores;
  for (const auto &[qid, docs] : qrels.entries)
    for (const auto &[doc, grade] : docs) scores[qid][doc] = scale * grade + shift;
  return scores;
}

ScoreComparator::ScoreMap binary_scores(const Qrels &qrels) {
  ScoreComparator::ScoreMap scores;
  for (const auto &[qid, docs] : qrels.entries)
    for (const auto &[doc, grade] : docs) scores[qid][doc] = grade > 0 ? 1.0 : 0.0;
  return scores;
}

}  // namespace

TEST_CASE("partition follows the category definitions") {
  Qrels qrels = parse_qrels("q 0 d1 3\nq 0 d2 1\nq 0 d3 1\nq 0 d4 0\n");
  CategoryPartition part = partition(qrels, "q");
  CHECK(part.best_grade == 3);
  CHECK(part.best == std::vector<std::string>{"d1"});
  CHECK(part.acceptable == std::vector<std::string>{"d2", "d3"});
  CHECK(part.unacceptable == std::vector<std::string>{"d4"});
  CHECK_FALSE(part.degenerate());
}

TEST_CASE("partition: queries may lack the top grades") {
  Qrels qrels = parse_qrels("q 0 d1 2\nq 0 d2 0\n");
  CategoryPartition part = partition(qrels, "q");
  CHECK(part.best_grade == 2);
  CHECK(part.best == std::vector<std::string>{"d1"});
  CHECK(part.acceptable.empty());
  CHECK(part.unacceptable == std::vector<std::string>{"d2"});

  Qrels zeros = parse_qrels("q 0 d1 0\nq 0 d2 0\n");
  CategoryPartition flagged = partition(zeros, "q");
  CHECK(flagged.degenerate());
  CHECK(flagged.best.empty());
  CHECK(flagged.acceptable.empty());

  CHECK_THROWS_AS(partition(qrels, "unknown"), InvalidInput);
}

TEST_CASE("score comparator orders pairs") {
  ScoreComparator cmp({{"q", {{"hi", 0.9}, {"lo", 0.2}, {"eq", 0.2}}}});
  CHECK(cmp.compare("q", "hi", "lo") == PairVerdict::agree);
  CHECK(cmp.compare("q", "lo", "hi") == PairVerdict::disagree);
  CHECK(cmp.compare("q", "lo", "eq") == PairVerdict::tie);
  CHECK_FALSE(cmp.compare("q", "hi", "missing").has_value());
  CHECK_FALSE(cmp.compare("other", "hi", "lo").has_value());
}

TEST_CASE("swapping pair roles maps agree to disagree and fixes ties") {
  ScoreComparator cmp({{"q", {{"a", 3.0}, {"b", 1.0}, {"c", 1.0}}}});
  auto forward = cmp.compare("q", "a", "b");
  auto backward = cmp.compare("q", "b", "a");
  CHECK(forward == PairVerdict::agree);
  CHECK(backward == PairVerdict::disagree);
  CHECK(cmp.compare("q", "b", "c") == PairVerdict::tie);
  CHECK(cmp.compare("q", "c", "b") == PairVerdict::tie);
}

TEST_CASE("preference comparator consults judged pairs only") {
  PreferenceComparator::PairMap pairs;
  pairs["q"][pair_subject_key("best", "worst")] = PreferenceResult::first;  // "best" < "worst"
  pairs["q"][pair_subject_key("acc", "zzz")] = PreferenceResult::second;    // "zzz" won
  pairs["q"][pair_subject_key("t1", "t2")] = PreferenceResult::tie;
  PreferenceComparator cmp(pairs);
  CHECK(cmp.compare("q", "best", "worst") == PairVerdict::agree);
  CHECK(cmp.compare("q", "worst", "best") == PairVerdict::disagree);
  CHECK(cmp.compare("q", "acc", "zzz") == PairVerdict::disagree);  // lower-category doc won
  CHECK(cmp.compare("q", "t1", "t2") == PairVerdict::tie);
  CHECK_FALSE(cmp.compare("q", "best", "unjudged").has_value());
  CHECK(cmp.is_preference());
}

TEST_CASE("alignment report: the four-pair derived example") {
  Qrels qrels = parse_qrels("q 0 b1 2\nq 0 b2 2\nq 0 u1 0\nq 0 u2 0\n");
  ScoreComparator cmp({{"q", {{"b1", 0.9}, {"b2", 0.5}, {"u1", 0.5}, {"u2", 0.1}}}});
  AlignmentReport report = alignment_report(cmp, qrels, {"q"});
  const auto &cell = report.macro[static_cast<std::size_t>(ComparisonType::best_vs_unacceptable)];
  REQUIRE(cell.present);
  CHECK(cell.agree == doctest::Approx(0.75));
  CHECK(cell.tie == doctest::Approx(0.25));
  CHECK(cell.disagree == doctest::Approx(0.0));
  CHECK(cell.pair_count == 4);
  // no acceptable docs: the other two comparison types are absent, not zero
  CHECK_FALSE(report.macro[static_cast<std::size_t>(ComparisonType::best_vs_acceptable)].present);
  CHECK_FALSE(report
                  .macro[static_cast<std::size_t>(ComparisonType::acceptable_vs_unacceptable)]
                  .present);
}

TEST_CASE("zero-noise graded mock aligns perfectly; binary mock collapses positives") {
  auto collection = testdata::make_collection(6);
  ScoreComparator graded(grade_scores(collection.qrels));
  AlignmentReport report = alignment_report(graded, collection.qrels, collection.qids);
  for (std::size_t t = 0; t < kComparisonTypes; t++) {
    REQUIRE(report.macro[t].present);
    CHECK(report.macro[t].agree == doctest::Approx(1.0));
    CHECK(report.micro[t].agree == doctest::Approx(1.0));
  }
  CHECK(report.mean_agree() == doctest::Approx(1.0));

  ScoreComparator binary(binary_scores(collection.qrels));
  AlignmentReport collapsed = alignment_report(binary, collection.qrels, collection.qids);
  const auto &bva =
      collapsed.macro[static_cast<std::size_t>(ComparisonType::best_vs_acceptable)];
  REQUIRE(bva.present);
  CHECK(bva.tie == doctest::Approx(1.0));  // both categories map to label 1
  const auto &bvu =
      collapsed.macro[static_cast<std::size_t>(ComparisonType::best_vs_unacceptable)];
  CHECK(bvu.agree == doctest::Approx(1.0));
}

TEST_CASE("fractions sum to one and degenerate queries are excluded") {
  auto collection = testdata::make_collection(8);
  ScoreComparator cmp(grade_scores(collection.qrels));
  std::vector<std::string> qids = collection.qrels.query_ids();
  AlignmentReport report = alignment_report(cmp, collection.qrels, qids);
  for (std::size_t t = 0; t < kComparisonTypes; t++)
    for (const auto *cell : {&report.macro[t], &report.micro[t]})
      if (cell->present)
        CHECK(cell->agree + cell->tie + cell->disagree == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(report.degenerate_queries.size() == 1);
  CHECK(report.degenerate_queries[0] == "q98");
  CHECK(report.per_query.count("q98") == 0);
  // the best-grade-1 query contributes only best-vs-unacceptable pairs
  const auto &edge = report.per_query.at("q97");
  CHECK(edge[static_cast<std::size_t>(ComparisonType::best_vs_unacceptable)].pairs() == 2);
  CHECK(edge[static_cast<std::size_t>(ComparisonType::best_vs_acceptable)].pairs() == 0);
}

TEST_CASE("monotone transformations leave the whole report unchanged") {
  auto collection = testdata::make_collection(10);
  std::vector<std::string> qids = collection.qrels.query_ids();
  ScoreComparator plain(grade_scores(collection.qrels));
  ScoreComparator transformed(grade_scores(collection.qrels, 2.0, 1.0));  // x -> 2x + 1
  AlignmentReport a = alignment_report(plain, collection.qrels, qids);
  AlignmentReport b = alignment_report(transformed, collection.qrels, qids);
  for (std::size_t t = 0; t < kComparisonTypes; t++) {
    CHECK(a.macro[t].present == b.macro[t].present);
    if (!a.macro[t].present) continue;
    CHECK(a.macro[t].agree == b.macro[t].agree);
    CHECK(a.macro[t].tie == b.macro[t].tie);
    CHECK(a.macro[t].disagree == b.macro[t].disagree);
    CHECK(a.micro[t].agree == b.micro[t].agree);
    CHECK(a.macro[t].pair_count == b.macro[t].pair_count);
  }
}

TEST_CASE("missing scores are skipped and counted separately") {
  Qrels qrels = parse_qrels("q 0 b 2\nq 0 u1 0\nq 0 u2 0\n");
  // score for u2 is missing entirely
  ScoreComparator cmp({{"q", {{"b", 1.0}, {"u1", 0.0}}}});
  AlignmentReport report = alignment_report(cmp, qrels, {"q"});
  const auto &cell = report.macro[static_cast<std::size_t>(ComparisonType::best_vs_unacceptable)];
  REQUIRE(cell.present);
  CHECK(cell.pair_count == 1);
  CHECK(cell.skipped == 1);
  CHECK(cell.agree == doctest::Approx(1.0));
}

TEST_CASE("preference pair cap bounds the tally deterministically") {
  // one query, 30 best docs vs 30 unacceptable docs = 900 candidate pairs
  Qrels qrels;
  PreferenceComparator::PairMap pairs;
  for (int i = 0; i < 30; i++) {
    std::string hi = "h" + std::to_string(i);
    std::string lo = "l" + std::to_string(i);
    qrels.entries["q"][hi] = 2;
    qrels.entries["q"][lo] = 0;
  }
  for (int i = 0; i < 30; i++)
    for (int j = 0; j < 30; j++) {
      std::string hi = "h" + std::to_string(i);
      std::string lo = "l" + std::to_string(j);
      pairs["q"][pair_subject_key(hi, lo)] =
          hi < lo ? PreferenceResult::first : PreferenceResult::second;
    }
  PreferenceComparator cmp(pairs);
  AlignmentOptions options;
  options.preference_pair_cap = 50;
  options.seed = 11;
  AlignmentReport report = alignment_report(cmp, qrels, {"q"}, options);
  const auto &cell = report.macro[static_cast<std::size_t>(ComparisonType::best_vs_unacceptable)];
  REQUIRE(cell.present);
  CHECK(cell.pair_count + cell.skipped == 50);
  AlignmentReport again = alignment_report(cmp, qrels, {"q"}, options);
  CHECK(again.macro[0].agree == report.macro[0].agree);  // seeded sample is stable
}

TEST_CASE("report renders to json and flat rows") {
  auto collection = testdata::make_collection(3);
  ScoreComparator cmp(grade_scores(collection.qrels));
  AlignmentReport report = alignment_report(cmp, collection.qrels, collection.qids);
  std::string json = alignment_report_json(report, "umbrela");
  CHECK(json.find("\"method\": \"umbrela\"") != std::string::npos);
  CHECK(json.find("best_vs_unacceptable") != std::string::npos);
  std::string rows = alignment_flat_rows(report, "umbrela");
  CHECK(rows.find("umbrela,best_vs_unacceptable,macro,") != std::string::npos);
  CHECK(rows.find("umbrela,best_vs_acceptable,micro,") != std::string::npos);
}
