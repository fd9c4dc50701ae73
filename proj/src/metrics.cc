#include "metrics.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "util.h"

namespace relassay {

namespace {

void check_duplicate_free(const std::vector<std::string> &list, const char *which) {
  std::unordered_set<std::string> seen;
  seen.reserve(list.size());
  for (const auto &doc : list)
    if (!seen.insert(doc).second)
      throw InvalidInput(std::string("duplicate doc in ") + which + " list: " + doc);
}

}  // namespace

double rbo(const std::vector<std::string> &a, const std::vector<std::string> &b,
           const RboParams &params) {
  if (!(params.persistence > 0.0 && params.persistence < 1.0))
    throw InvalidInput("rbo persistence must be strictly between 0 and 1");
  if (params.depth == 0) throw InvalidInput("rbo depth must be positive");
  check_duplicate_free(a, "first");
  check_duplicate_free(b, "second");
  std::unordered_set<std::string> seen_a, seen_b;
  seen_a.reserve(a.size());
  seen_b.reserve(b.size());
  double overlap = 0.0;
  double sum = 0.0;
  double weight = 1.0;  // p^(d-1)
  for (std::size_t d = 1; d <= params.depth; d++) {
    const bool has_a = d <= a.size();
    const bool has_b = d <= b.size();
    if (has_a && has_b && a[d - 1] == b[d - 1]) {
      overlap += 1.0;
      seen_a.insert(a[d - 1]);
      seen_b.insert(b[d - 1]);
    } else {
      if (has_a) {
        if (seen_b.count(a[d - 1])) overlap += 1.0;
        seen_a.insert(a[d - 1]);
      }
      if (has_b) {
        if (seen_a.count(b[d - 1])) overlap += 1.0;
        seen_b.insert(b[d - 1]);
      }
    }
    sum += weight * (overlap / static_cast<double>(d));
    weight *= params.persistence;
  }
  return (1.0 - params.persistence) * sum;
}

std::size_t IdealRankingSet::doc_count() const {
  std::size_t n = 0;
  for (const auto &level : levels) n += level.docs.size();
  return n;
}

std::vector<std::string> ideal_permutation_for(const std::vector<std::string> &run_docs,
                                               const IdealRankingSet &ideal) {
  std::unordered_map<std::string, std::size_t> position;
  position.reserve(run_docs.size());
  for (std::size_t i = 0; i < run_docs.size(); i++) position.emplace(run_docs[i], i);
  std::vector<std::string> permutation;
  permutation.reserve(ideal.doc_count());
  for (const auto &level : ideal.levels) {
    std::vector<std::pair<std::size_t, std::string>> present;
    std::vector<std::string> absent;
    for (const auto &doc : level.docs) {
      auto it = position.find(doc);
      if (it != position.end())
        present.emplace_back(it->second, doc);
      else
        absent.push_back(doc);
    }
    std::sort(present.begin(), present.end());
    std::sort(absent.begin(), absent.end());
    for (auto &[pos, doc] : present) permutation.push_back(std::move(doc));
    for (auto &doc : absent) permutation.push_back(std::move(doc));
  }
  return permutation;
}

double compatibility(const std::vector<std::string> &run_docs, const IdealRankingSet &ideal,
                     double persistence) {
  if (ideal.empty()) throw InvalidInput("compatibility requires a non-empty ideal ranking set");
  std::vector<std::string> best = ideal_permutation_for(run_docs, ideal);
  RboParams params{persistence, best.size()};
  double self = rbo(best, best, params);
  return rbo(run_docs, best, params) / self;
}

double gain(int grade, GainVariant variant) {
  if (grade <= 0) return 0.0;
  if (variant == GainVariant::linear) return static_cast<double>(grade);
  return std::pow(2.0, static_cast<double>(grade)) - 1.0;
}

double ndcg_at_k(const std::vector<std::string> &ranked,
                 const std::map<std::string, int> &grades, std::size_t k, GainVariant variant) {
  if (k == 0) throw InvalidInput("ndcg depth must be positive");
  std::vector<int> judged;
  judged.reserve(grades.size());
  for (const auto &[doc, grade] : grades) judged.push_back(grade);
  std::sort(judged.begin(), judged.end(), std::greater<int>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < judged.size() && i < k; i++)
    idcg += gain(judged[i], variant) / std::log2(static_cast<double>(i) + 2.0);
  if (idcg == 0.0) return 0.0;
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranked.size() && i < k; i++) {
    auto it = grades.find(ranked[i]);
    int grade_value = it == grades.end() ? 0 : it->second;
    dcg += gain(grade_value, variant) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

double kendall_tau(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size()) throw InvalidInput("kendall_tau requires equal-length vectors");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidInput("kendall_tau requires at least two elements");
  double concordant = 0.0, discordant = 0.0;
  for (std::size_t i = 0; i < n; i++)
    for (std::size_t j = i + 1; j < n; j++) {
      double dx = x[i] - x[j];
      double dy = y[i] - y[j];
      double prod = dx * dy;
      if (prod > 0.0)
        concordant += 1.0;
      else if (prod < 0.0)
        discordant += 1.0;
    }
  // tie corrections from group sizes
  auto tie_pairs = [](const std::vector<double> &v) {
    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end());
    double pairs = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) j++;
      double t = static_cast<double>(j - i);
      pairs += t * (t - 1.0) / 2.0;
      i = j;
    }
    return pairs;
  };
  double n0 = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0;
  double n1 = tie_pairs(x);
  double n2 = tie_pairs(y);
  if (n0 == n1 || n0 == n2)
    throw InvalidInput("kendall_tau is undefined for an all-constant vector");
  return (concordant - discordant) / std::sqrt((n0 - n1) * (n0 - n2));
}

}  // namespace relassay
