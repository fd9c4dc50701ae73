// Test-only oracles, independent of the implementation paths they check.
#ifndef RELASSAY_TESTS_ORACLES_H_
#define RELASSAY_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "metrics.h"

namespace relassay::oracle {

// Exhaustive max over all within-level permutations of the ideal set,
// normalized the same way as the implementation (self-RBO at depth |I'|).
inline double brute_force_compatibility(const std::vector<std::string> &run_docs,
                                        const IdealRankingSet &ideal, double persistence) {
  std::vector<std::vector<std::string>> level_docs;
  for (const auto &level : ideal.levels) {
    auto docs = level.docs;
    std::sort(docs.begin(), docs.end());
    level_docs.push_back(std::move(docs));
  }
  double best = -1.0;
  std::vector<std::string> assembled;
  // iterate the cartesian product of per-level permutations
  std::vector<std::vector<std::string>> current(level_docs.size());
  for (std::size_t i = 0; i < level_docs.size(); i++) current[i] = level_docs[i];
  std::function<void(std::size_t)> recurse = [&](std::size_t level) {
    if (level == current.size()) {
      std::vector<std::string> permutation;
      for (const auto &docs : current)
        permutation.insert(permutation.end(), docs.begin(), docs.end());
      RboParams params{persistence, permutation.size()};
      double value = rbo(run_docs, permutation, params) / rbo(permutation, permutation, params);
      best = std::max(best, value);
      return;
    }
    std::vector<std::string> &docs = current[level];
    std::sort(docs.begin(), docs.end());
    do {
      recurse(level + 1);
    } while (std::next_permutation(docs.begin(), docs.end()));
  };
  recurse(0);
  (void)assembled;
  return best;
}

// Direct pair-enumeration tau-b: counts concordant, discordant, and
// single-sided ties per pair rather than using group sizes.
inline double kendall_tau_by_pairs(const std::vector<double> &x, const std::vector<double> &y) {
  double concordant = 0, discordant = 0, ties_x_only = 0, ties_y_only = 0;
  for (std::size_t i = 0; i < x.size(); i++)
    for (std::size_t j = i + 1; j < x.size(); j++) {
      bool tie_x = x[i] == x[j];
      bool tie_y = y[i] == y[j];
      if (tie_x && tie_y) continue;
      if (tie_x) {
        ties_x_only += 1;
      } else if (tie_y) {
        ties_y_only += 1;
      } else if ((x[i] < x[j]) == (y[i] < y[j])) {
        concordant += 1;
      } else {
        discordant += 1;
      }
    }
  double denom = std::sqrt((concordant + discordant + ties_y_only) *
                           (concordant + discordant + ties_x_only));
  return (concordant - discordant) / denom;
}

}  // namespace relassay::oracle

#endif  // RELASSAY_TESTS_ORACLES_H_
