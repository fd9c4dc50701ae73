// Acceptance suite: one line per criterion, [PASS]/[FAIL]/[SKIP].
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alignment.h"
#include "corpus_io.h"
#include "judges.h"
#include "metrics.h"
#include "ranking_eval.h"
#include "session.h"
#include "util.h"

#include "oracles.h"
#include "testdata.h"

#include "json.hpp"

using namespace relassay;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  std::string name;
  std::string status;  // PASS | FAIL | SKIP
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void record(const std::string &name, const std::string &status, const std::string &detail) {
  g_outcomes.push_back({name, status, detail});
  std::printf("[%s] %s%s%s\n", status.c_str(), name.c_str(), detail.empty() ? "" : ": ",
              detail.c_str());
  std::fflush(stdout);
}

struct Skip {
  std::string reason;
};

void criterion(const std::string &name, const std::function<std::string()> &body) {
  try {
    record(name, "PASS", body());
  } catch (const Skip &skip) {
    record(name, "SKIP", skip.reason);
  } catch (const std::exception &e) {
    record(name, "FAIL", e.what());
  }
}

void require(bool condition, const std::string &message) {
  if (!condition) throw std::runtime_error(message);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- criterion 1: human-qrels correlation on real TREC DL data -------------

std::string trec_data_root() {
  const char *env = std::getenv("RELASSAY_TREC_DIR");
  if (env != nullptr && fs::is_directory(env)) return env;
  for (const char *candidate : {"data/trec", "../data/trec", "../../data/trec"})
    if (fs::is_directory(candidate)) return candidate;
  return "";
}

std::string human_row_correlation() {
  struct Track {
    const char *name;
    double expected_tau;
  };
  const Track tracks[] = {{"dl2019", 0.953}, {"dl2020", 0.956}, {"dl2021", 0.916}};
  std::string root = trec_data_root();
  if (root.empty())
    throw Skip{"TREC DL qrels+runs not present; set RELASSAY_TREC_DIR or run "
               "tools/fetch_trec_dl.sh (layout: <dir>/dl2019/{qrels.txt,runs/}, same for "
               "dl2020, dl2021)"};
  std::string detail;
  for (const auto &track : tracks) {
    fs::path dir = fs::path(root) / track.name;
    if (!fs::is_directory(dir))
      throw Skip{"missing track directory " + dir.string()};
    if (!fs::exists(dir / "qrels.txt"))
      throw Skip{"missing " + (dir / "qrels.txt").string()};
    bool any_run = fs::is_directory(dir / "runs") &&
                   !fs::is_empty(dir / "runs");
    if (!any_run)
      throw Skip{"no run files under " + (dir / "runs").string() +
                 "; the submitted-run archives must be supplied (see tools/fetch_trec_dl.sh)"};
    auto start = std::chrono::steady_clock::now();
    nlohmann::json cfg;
    cfg["paths"]["qrels"] = (dir / "qrels.txt").string();
    cfg["paths"]["runs_dir"] = (dir / "runs").string();
    cfg["paths"]["out_dir"] =
        (fs::temp_directory_path() / ("relassay_accept_" + std::string(track.name))).string();
    Session session(config_from_json(cfg.dump()));
    session.cmd_rank_eval();
    double elapsed = seconds_since(start);
    auto corr_csv = read_file(cfg["paths"]["out_dir"].get<std::string>() + "/correlation.csv");
    double tau = 0.0;
    bool found = false;
    for (const auto &line : split_lines(corr_csv)) {
      if (line.rfind("human,", 0) == 0) {
        found = parse_double(line.substr(6), &tau);
      }
    }
    require(found, track.name + std::string(": no human tau emitted"));
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s tau=%.3f (expected %.3f +/- 0.03, %.0fs)", track.name,
                  tau, track.expected_tau, elapsed);
    require(std::abs(tau - track.expected_tau) <= 0.03, buf);
    require(elapsed < 300.0, track.name + std::string(": exceeded the 5 minute budget"));
    detail += std::string(buf) + "; ";
  }
  return detail;
}

// ---- criterion 2: greedy compatibility == brute force ----------------------

std::string compatibility_oracle() {
  Rng rng(20260808);
  std::vector<std::string> universe;
  for (int i = 0; i < 14; i++) universe.push_back("d" + std::to_string(i));
  for (int iteration = 0; iteration < 500; iteration++) {
    std::vector<std::string> pool = universe;
    rng.shuffle(&pool);
    IdealRankingSet ideal;
    std::size_t ideal_docs = 1 + rng.below(6);  // <= 6 ideal docs
    std::size_t levels = 1 + rng.below(3);
    std::size_t cursor = 0;
    double value = 9.0;
    for (std::size_t l = 0; l < levels && cursor < ideal_docs; l++) {
      IdealLevel level;
      level.value = value--;
      std::size_t remaining = ideal_docs - cursor;
      std::size_t take = l + 1 == levels ? remaining : 1 + rng.below(remaining);
      for (std::size_t i = 0; i < take; i++) level.docs.push_back(pool[cursor++]);
      ideal.levels.push_back(std::move(level));
    }
    std::vector<std::string> run_pool = universe;
    rng.shuffle(&run_pool);
    std::vector<std::string> run(run_pool.begin(),
                                 run_pool.begin() + 1 + rng.below(10));  // <= 10-doc run
    double greedy = compatibility(run, ideal, 0.9);
    double brute = oracle::brute_force_compatibility(run, ideal, 0.9);
    if (greedy != brute)
      throw std::runtime_error("instance " + std::to_string(iteration) + ": greedy " +
                               format_double(greedy) + " != brute " + format_double(brute));
  }
  return "500 random instances, bitwise equal";
}

// ---- criterion 3: tau-b vs pair enumeration -------------------------------

std::string kendall_oracle() {
  Rng rng(424242);
  int checked = 0;
  while (checked < 200) {
    std::size_t n = 2 + rng.below(11);  // n <= 12
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; i++) {
      x[i] = static_cast<double>(rng.below(5));
      y[i] = static_cast<double>(rng.below(5));
    }
    auto constant = [](const std::vector<double> &v) {
      for (double e : v)
        if (e != v[0]) return false;
      return true;
    };
    if (constant(x) || constant(y)) continue;
    checked++;
    double production = kendall_tau(x, y);
    double enumerated = oracle::kendall_tau_by_pairs(x, y);
    if (std::abs(production - enumerated) > 1e-12)
      throw std::runtime_error("tau mismatch " + format_double(production) + " vs " +
                               format_double(enumerated));
  }
  return "200 random tied vectors within 1e-12";
}

// ---- criterion 4: RBO hand values -----------------------------------------

std::string rbo_hand_values() {
  double value = rbo({"a", "b"}, {"b", "a"}, {0.9, 2});
  double expected = (1.0 - 0.9) * (std::pow(0.9, 0.0) * 0.0 + std::pow(0.9, 1.0) * 1.0);
  require(value == expected, "swap example != hand-derived expression");
  require(std::abs(value - 0.09) < 1e-15, "swap example deviates from 0.09");
  std::vector<std::string> list{"a", "b", "c", "d"};
  double identical = rbo(list, list, {0.9, 4});
  require(std::abs(identical - (1.0 - std::pow(0.9, 4.0))) < 1e-12,
          "identical-list limit violated");
  require(rbo({"a", "b"}, {"x", "y"}, {0.9, 2}) == 0.0, "disjoint-list limit violated");
  return "0.09 exact; identical and disjoint limits hold";
}

// ---- criterion 5: aggregation formula fixtures ------------------------------

std::string aggregation_fixtures() {
  require(exam_score({1, 1, 1, 1, 0, 0, 0, 0, 0, 0}, ExamMode::binary) == 0.4,
          "binary exam mean != 0.4");
  require(exam_score({1, 5, 3, 1, 1, 1, 1, 1, 1, 1}, ExamMode::graded_max) == 5.0,
          "graded max != 5");
  require(exam_score({1, 5, 3, 1, 1, 1, 1, 1, 1, 1}, ExamMode::graded_mean) == 1.6,
          "graded mean != 1.6");
  AutoNuggetSet mixed;
  mixed.qid = "q";
  mixed.nuggets = {{"v1", "vital"}, {"v2", "vital"}, {"o1", "okay"}, {"o2", "okay"}};
  NuggetAssignment w;
  w.qid = "q";
  w.doc = "d";
  w.labels = {"support", "not_support", "support", "partial_support"};
  require(autonugget_score(w, mixed, NuggetScope::weighted, false) == 1.75 / 3.0,
          "weighted example != 1.75/3");
  AutoNuggetSet vital3;
  vital3.qid = "q";
  vital3.nuggets = {{"n1", "vital"}, {"n2", "vital"}, {"n3", "vital"}};
  NuggetAssignment v;
  v.qid = "q";
  v.doc = "d";
  v.labels = {"support", "partial_support", "not_support"};
  require(autonugget_score(v, vital3, NuggetScope::vital, false) == 0.5,
          "vital lenient example != 0.5");
  require(autonugget_score(v, vital3, NuggetScope::vital, true) == 0.5,
          "strict exclusion example != (1+0)/2");
  return "binary mean 0.4, graded mean 1.6, weighted 1.75/3, strict vital 0.5 all exact";
}

// ---- criterion 6: zero-noise mock end to end --------------------------------

std::string workspace_dir;  // shared with criterion 8

std::string mock_end_to_end() {
  auto start = std::chrono::steady_clock::now();
  workspace_dir = testdata::fresh_temp_dir("relassay_acceptance_e2e");
  auto collection = testdata::make_collection(18);  // 18 regular + 2 edge-case queries
  require(collection.qids.size() == 20, "expected a 20-query synthetic collection");
  std::vector<RunRanking> runs;
  for (int swaps = 0; swaps < 3; swaps++)
    runs.push_back(
        testdata::make_graded_run(collection.qrels, "swap" + std::to_string(swaps), swaps));
  testdata::write_collection(collection, workspace_dir, runs);

  nlohmann::json cfg;
  cfg["paths"]["qrels"] = workspace_dir + "/qrels.txt";
  cfg["paths"]["queries"] = workspace_dir + "/queries.tsv";
  cfg["paths"]["passages"] = workspace_dir + "/passages.tsv";
  cfg["paths"]["runs_dir"] = workspace_dir + "/runs";
  cfg["paths"]["out_dir"] = workspace_dir + "/out";
  cfg["gateway"]["mode"] = "mock";  // offline by construction: no HTTP client exists
  Session session(config_from_json(cfg.dump()));
  JudgeStats umbrela = session.cmd_judge("umbrela");
  JudgeStats binary = session.cmd_judge("binary");
  JudgeStats preferences = session.cmd_judge("preferences");
  require(umbrela.errors == 0 && binary.errors == 0 && preferences.errors == 0,
          "mock judging reported errors");
  session.cmd_align();
  session.cmd_rank_eval();

  auto graded = nlohmann::json::parse(read_file(workspace_dir + "/out/alignment_umbrela.json"));
  for (const char *type :
       {"best_vs_unacceptable", "acceptable_vs_unacceptable", "best_vs_acceptable"}) {
    double agree = graded["macro"][type]["agree"].get<double>();
    require(agree == 1.0, std::string("graded agree != 100% on ") + type);
  }
  auto flat = nlohmann::json::parse(read_file(workspace_dir + "/out/alignment_binary.json"));
  require(flat["macro"]["best_vs_acceptable"]["tie"].get<double>() == 1.0,
          "binary tie != 100% on best_vs_acceptable");

  // the grade-sorted run attains compatibility 1.0 on every non-degenerate query
  RunRanking sorted_run = parse_run_file(workspace_dir + "/runs/swap0.txt");
  std::size_t checked = 0;
  for (const auto &[qid, docs] : collection.qrels.entries) {
    std::map<std::string, double> scores;
    for (const auto &[doc, grade] : docs) scores[doc] = grade;
    IdealRankingSet ideal = ideal_from_method(scores);
    if (ideal.empty()) continue;  // the all-zero query is skipped and flagged
    double value = compatibility(sorted_run.docs(qid), ideal, 0.9);
    require(value == 1.0, "compatibility of the grade-sorted run != 1.0 on " + qid);
    checked++;
  }
  require(checked == 19, "expected 19 non-degenerate queries");

  double elapsed = seconds_since(start);
  require(elapsed < 30.0, "pipeline exceeded 30 seconds");
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "20 queries, 3 methods judged, zero network calls, %.1fs", elapsed);
  return buf;
}

// ---- criterion 7: monotone invariance ---------------------------------------

std::string monotone_invariance() {
  auto collection = testdata::make_collection(8);
  std::vector<std::string> qids = collection.qrels.query_ids();
  // (a) x -> 2x+1 on a score comparator: identical alignment report
  ScoreComparator::ScoreMap plain, affine;
  for (const auto &[qid, docs] : collection.qrels.entries)
    for (const auto &[doc, grade] : docs) {
      plain[qid][doc] = grade;
      affine[qid][doc] = 2.0 * grade + 1.0;
    }
  AlignmentReport a = alignment_report(ScoreComparator(plain), collection.qrels, qids);
  AlignmentReport b = alignment_report(ScoreComparator(affine), collection.qrels, qids);
  for (std::size_t t = 0; t < kComparisonTypes; t++) {
    require(a.macro[t].present == b.macro[t].present, "cell presence changed");
    if (!a.macro[t].present) continue;
    require(a.macro[t].agree == b.macro[t].agree && a.macro[t].tie == b.macro[t].tie &&
                a.macro[t].disagree == b.macro[t].disagree,
            "macro cell changed under x->2x+1");
    require(a.micro[t].agree == b.micro[t].agree && a.micro[t].tie == b.micro[t].tie &&
                a.micro[t].disagree == b.micro[t].disagree,
            "micro cell changed under x->2x+1");
  }
  // (b) positive scaling of method document scores: identical ideals,
  // compatibility, and tau (argmax invariance)
  std::map<std::string, MethodScores> methods;
  for (const auto &[qid, docs] : collection.qrels.entries)
    for (const auto &[doc, grade] : docs) {
      methods["human"][qid][doc] = grade;
      methods["scaled"][qid][doc] = 2.0 * grade;
    }
  std::vector<RunRanking> runs;
  for (int swaps = 0; swaps < 4; swaps++)
    runs.push_back(
        testdata::make_graded_run(collection.qrels, "s" + std::to_string(swaps), swaps));
  SystemScoreTable table = score_all(runs, methods, collection.qrels);
  CorrelationTable corr = correlate(table);
  require(corr.tau.at("scaled") == corr.tau.at("human"),
          "tau changed under positive scaling of document scores");
  for (const auto &tag : table.run_tags)
    require(table.mean_compatibility.at(tag).at("scaled") ==
                table.mean_compatibility.at(tag).at("human"),
            "compatibility changed under positive scaling");
  // (c) x -> 2x+1 on an entire method column: identical tau
  double before = corr.tau.at("human");
  for (auto &[tag, columns] : table.mean_compatibility)
    columns["human"] = 2.0 * columns["human"] + 1.0;
  double after = correlate(table).tau.at("human");
  require(after == before, "tau changed under a monotone column transform");
  return "alignment cells, compatibility, and tau all invariant";
}

// ---- criterion 8: replay mode over released judgment files -------------------

std::string replay_consistency() {
  require(!workspace_dir.empty() && fs::exists(workspace_dir + "/out/judgments.jsonl"),
          "end-to-end workspace missing (criterion 6 must run first)");
  // the store written by criterion 6 stands in for a released judgment file
  nlohmann::json cfg;
  cfg["paths"]["qrels"] = workspace_dir + "/qrels.txt";
  cfg["paths"]["runs_dir"] = workspace_dir + "/runs";
  cfg["paths"]["out_dir"] = workspace_dir + "/out";
  Session session(config_from_json(cfg.dump()));
  ReportStats stats = session.cmd_report();
  require(stats.methods_checked == 3, "expected 3 replayed methods");
  require(stats.violations.empty(),
          "internal consistency violations: " +
              (stats.violations.empty() ? std::string() : stats.violations.front()));
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "paper-scale LLM percentages are not desk-reproducible (paid, "
                "nondeterministic); replay mode checked %zu invariants, 0 violations",
                stats.checks_passed);
  return buf;
}

}  // namespace

int main() {
  std::printf("relassay acceptance suite (version %s)\n", kToolkitVersion);
  criterion("1. Human-qrels compatibility vs nDCG@10 tau on TREC DL-19/20/21", human_row_correlation);
  criterion("2. Compatibility greedy == brute-force oracle", compatibility_oracle);
  criterion("3. Kendall tau-b == pair-enumeration oracle", kendall_oracle);
  criterion("4. RBO hand values", rbo_hand_values);
  criterion("5. Aggregation formula fixtures", aggregation_fixtures);
  criterion("6. Zero-noise mock pipeline end to end", mock_end_to_end);
  criterion("7. Monotone-invariance suite", monotone_invariance);
  criterion("8. Replay-mode internal consistency", replay_consistency);
  std::size_t failed = 0;
  for (const auto &outcome : g_outcomes)
    if (outcome.status == "FAIL") failed++;
  std::printf("%zu/%zu criteria passed (%zu failed)\n", g_outcomes.size() - failed,
              g_outcomes.size(), failed);
  return failed == 0 ? 0 : 1;
}
