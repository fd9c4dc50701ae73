// Exercises rank-eval at roughly the shape of one TREC DL track: dozens of
// runs over dozens of queries with a few hundred judged docs each. Guards the
// per-track runtime budget with a wide margin.

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "json.hpp"
#include "session.h"
#include "testdata.h"
#include "util.h"

using namespace relassay;
namespace fs = std::filesystem;

int main() {
  const int kQueries = 43;
  const int kRuns = 36;
  const int kJudgedPerQuery = 200;
  const int kRunDepth = 250;

  std::string dir = testdata::fresh_temp_dir("relassay_scale_smoke");
  Rng rng(771177);

  Qrels qrels;
  std::vector<std::vector<std::string>> universe(kQueries);
  for (int q = 0; q < kQueries; q++) {
    std::string qid = "t" + std::to_string(100 + q);
    for (int d = 0; d < kJudgedPerQuery; d++) {
      std::string doc = "msp" + std::to_string(q * 10000 + d);
      // grade mix close to the DL tracks: mostly 0, a tail of 1..3
      std::uint64_t draw = rng.below(100);
      int grade = draw < 55 ? 0 : draw < 75 ? 1 : draw < 90 ? 2 : 3;
      qrels.entries[qid][doc] = grade;
      universe[q].push_back(doc);
    }
  }
  write_file(dir + "/qrels.txt", serialize_qrels(qrels));

  fs::create_directories(dir + "/runs");
  for (int r = 0; r < kRuns; r++) {
    RunRanking run;
    run.tag = "system" + std::to_string(r);
    for (int q = 0; q < kQueries; q++) {
      std::string qid = "t" + std::to_string(100 + q);
      std::vector<std::string> docs = universe[q];
      rng.shuffle(&docs);
      // stronger systems put relevant docs higher: sort a seeded prefix by grade
      std::size_t skill = static_cast<std::size_t>((kRuns - r) * docs.size() / kRuns);
      std::stable_sort(docs.begin(), docs.begin() + static_cast<long>(skill),
                       [&](const std::string &a, const std::string &b) {
                         return qrels.grade_or_zero(qid, a) > qrels.grade_or_zero(qid, b);
                       });
      int rank = 1;
      double score = static_cast<double>(kRunDepth);
      for (int d = 0; d < kRunDepth && d < static_cast<int>(docs.size()); d++)
        run.queries[qid].push_back({docs[d], rank++, score--});
    }
    write_file(dir + "/runs/" + run.tag + ".txt", serialize_run(run));
  }

  nlohmann::json cfg;
  cfg["paths"]["qrels"] = dir + "/qrels.txt";
  cfg["paths"]["runs_dir"] = dir + "/runs";
  cfg["paths"]["out_dir"] = dir + "/out";
  auto start = std::chrono::steady_clock::now();
  Session session(config_from_json(cfg.dump()));
  session.cmd_rank_eval();
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::string corr = read_file(dir + "/out/correlation.csv");
  double tau = -2.0;
  for (const auto &line : split_lines(corr))
    if (line.rfind("human,", 0) == 0) parse_double(line.substr(6), &tau);
  std::printf("scale smoke: %d runs x %d queries in %.1fs, human tau %.3f\n", kRuns, kQueries,
              elapsed, tau);
  fs::remove_all(dir);
  // compatibility and nDCG follow the same engineered skill ordering
  if (tau < 0.8) {
    std::fprintf(stderr, "human tau %.3f is implausibly low\n", tau);
    return 1;
  }
  if (elapsed > 120.0) {
    std::fprintf(stderr, "rank-eval took %.1fs, over the smoke budget\n", elapsed);
    return 1;
  }
  return 0;
}
