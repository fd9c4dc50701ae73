#include "ranking_eval.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "util.h"

namespace relassay {

IdealRankingSet ideal_from_method(const std::map<std::string, double> &doc_scores) {
  std::map<double, std::vector<std::string>, std::greater<double>> by_score;
  for (const auto &[doc, score] : doc_scores) {
    if (score == 0.0) continue;  // the method's non-relevant level
    by_score[score].push_back(doc);
  }
  IdealRankingSet ideal;
  for (auto &[score, docs] : by_score) {
    std::sort(docs.begin(), docs.end());
    ideal.levels.push_back({score, std::move(docs)});
  }
  return ideal;
}

SystemScoreTable score_all(const std::vector<RunRanking> &runs,
                           const std::map<std::string, MethodScores> &method_scores,
                           const Qrels &gold, const ScoreOptions &options) {
  SystemScoreTable table;
  table.query_ids = gold.query_ids();
  for (const auto &run : runs) table.run_tags.push_back(run.tag);
  std::sort(table.run_tags.begin(), table.run_tags.end());
  for (const auto &[method, scores] : method_scores) table.methods.push_back(method);

  for (const auto &qid : table.query_ids) {
    int best = 0;
    for (const auto &[doc, grade] : gold.entries.at(qid)) best = std::max(best, grade);
    if (best == 0)
      table.flags.push_back("query " + qid + " has no relevant document; nDCG is 0");
  }

  // per-method ideals, built once per query
  std::map<std::string, std::map<std::string, IdealRankingSet>> ideals;
  for (const auto &[method, scores] : method_scores) {
    for (const auto &qid : table.query_ids) {
      auto q = scores.find(qid);
      if (q == scores.end()) {
        table.flags.push_back("method " + method + " has no scores for query " + qid);
        continue;
      }
      IdealRankingSet ideal = ideal_from_method(q->second);
      if (ideal.empty()) {
        table.flags.push_back("method " + method + " has all-zero scores for query " + qid +
                              "; query skipped for this method");
        continue;
      }
      ideals[method].emplace(qid, std::move(ideal));
    }
  }

  for (const auto &run : runs) {
    double ndcg_sum = 0.0;
    std::map<std::string, double> compat_sum;
    std::map<std::string, std::size_t> compat_count;
    for (const auto &qid : table.query_ids) {
      std::vector<std::string> docs = run.docs(qid);
      if (docs.empty())
        table.flags.push_back("run " + run.tag + " missing query " + qid + "; scored 0");
      const auto &gold_docs = gold.entries.at(qid);
      if (options.judged_only) {
        std::erase_if(docs, [&](const std::string &doc) { return gold_docs.count(doc) == 0; });
      }
      std::map<std::string, int> grades(gold_docs.begin(), gold_docs.end());
      double ndcg = docs.empty() ? 0.0
                                 : ndcg_at_k(docs, grades, options.ndcg_depth, options.gain);
      table.per_query_ndcg[run.tag][qid] = ndcg;
      ndcg_sum += ndcg;
      for (const auto &method : table.methods) {
        auto m = ideals.find(method);
        if (m == ideals.end()) continue;
        auto q = m->second.find(qid);
        if (q == m->second.end()) continue;  // skipped for this method
        double value = docs.empty() ? 0.0 : compatibility(docs, q->second, options.persistence);
        table.per_query[method][run.tag][qid] = value;
        compat_sum[method] += value;
        compat_count[method]++;
      }
    }
    std::size_t query_count = table.query_ids.size();
    table.mean_ndcg[run.tag] =
        query_count == 0 ? 0.0 : ndcg_sum / static_cast<double>(query_count);
    for (const auto &method : table.methods) {
      std::size_t count = compat_count[method];
      table.mean_compatibility[run.tag][method] =
          count == 0 ? 0.0 : compat_sum[method] / static_cast<double>(count);
    }
  }
  return table;
}

CorrelationTable correlate(const SystemScoreTable &table) {
  if (table.run_tags.size() < 2)
    throw InvalidInput("correlation requires at least two runs");
  CorrelationTable corr;
  std::vector<double> gold;
  gold.reserve(table.run_tags.size());
  for (const auto &tag : table.run_tags) gold.push_back(table.mean_ndcg.at(tag));
  for (const auto &method : table.methods) {
    std::vector<double> column;
    column.reserve(table.run_tags.size());
    for (const auto &tag : table.run_tags)
      column.push_back(table.mean_compatibility.at(tag).at(method));
    try {
      corr.tau[method] = kendall_tau(column, gold);
    } catch (const Error &e) {
      corr.errors[method] = e.what();
    }
  }
  return corr;
}

std::string scatter_csv(const SystemScoreTable &table) {
  std::string out = "run,method,ndcg10,compatibility\n";
  for (const auto &tag : table.run_tags)
    for (const auto &method : table.methods) {
      out += tag;
      out += ',';
      out += method;
      out += ',';
      out += format_double(table.mean_ndcg.at(tag));
      out += ',';
      out += format_double(table.mean_compatibility.at(tag).at(method));
      out += '\n';
    }
  return out;
}

std::string correlation_text(const CorrelationTable &corr) {
  std::size_t width = 6;
  for (const auto &[method, tau] : corr.tau) width = std::max(width, method.size());
  for (const auto &[method, error] : corr.errors) width = std::max(width, method.size());
  std::ostringstream out;
  out << "method";
  out << std::string(width - 6 + 2, ' ') << "tau\n";
  for (const auto &[method, tau] : corr.tau) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", tau);
    out << method << std::string(width - method.size() + 2, ' ') << buf << '\n';
  }
  for (const auto &[method, error] : corr.errors)
    out << method << std::string(width - method.size() + 2, ' ') << "undefined (" << error
        << ")\n";
  return out.str();
}

std::string correlation_csv(const CorrelationTable &corr) {
  std::string out = "method,tau\n";
  for (const auto &[method, tau] : corr.tau) {
    out += method;
    out += ',';
    out += format_double(tau);
    out += '\n';
  }
  for (const auto &[method, error] : corr.errors) {
    out += method;
    out += ",\n";
  }
  return out;
}

std::string alignment_vs_agreement_csv(const CorrelationTable &corr,
                                       const std::map<std::string, double> &mean_alignment) {
  std::string out = "method,mean_alignment,tau\n";
  for (const auto &[method, tau] : corr.tau) {
    auto it = mean_alignment.find(method);
    if (it == mean_alignment.end()) continue;
    out += method;
    out += ',';
    out += format_double(it->second);
    out += ',';
    out += format_double(tau);
    out += '\n';
  }
  return out;
}

}  // namespace relassay
