#include "metrics.h"

#include <cmath>

#include "doctest.h"
#include "oracles.h"
#include "util.h"

using namespace relassay;

namespace {

// deterministic random instance: ideal with <= max_ideal docs over 1-3
// levels, run of <= max_run docs over a shared universe
struct Instance {
  std::vector<std::string> run;
  IdealRankingSet ideal;
};

Instance random_instance(Rng *rng, std::size_t max_ideal, std::size_t max_run) {
  std::vector<std::string> universe;
  for (int i = 0; i < 14; i++) universe.push_back("d" + std::to_string(i));
  rng->shuffle(&universe);
  Instance inst;
  std::size_t ideal_docs = 1 + rng->below(max_ideal);
  std::size_t levels = 1 + rng->below(3);
  std::size_t cursor = 0;
  double value = static_cast<double>(levels);
  for (std::size_t l = 0; l < levels && cursor < ideal_docs; l++) {
    IdealLevel level;
    level.value = value--;
    std::size_t remaining = ideal_docs - cursor;
    std::size_t take = l + 1 == levels ? remaining : 1 + rng->below(remaining);
    for (std::size_t i = 0; i < take; i++) level.docs.push_back(universe[cursor++]);
    inst.ideal.levels.push_back(std::move(level));
  }
  std::vector<std::string> pool = universe;
  rng->shuffle(&pool);
  std::size_t run_len = 1 + rng->below(max_run);
  for (std::size_t i = 0; i < run_len && i < pool.size(); i++) inst.run.push_back(pool[i]);
  return inst;
}

}  // namespace

TEST_CASE("rbo hand value: [a,b] vs [b,a] at p=0.9, k=2") {
  double value = rbo({"a", "b"}, {"b", "a"}, {0.9, 2});
  CHECK(value == (1.0 - 0.9) * (0.9 * (2.0 / 2.0)));  // the hand-derived expression
  CHECK(value == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("rbo limits: identical and disjoint lists") {
  std::vector<std::string> list{"a", "b", "c", "d", "e"};
  double value = rbo(list, list, {0.9, list.size()});
  CHECK(value == doctest::Approx(1.0 - std::pow(0.9, 5.0)).epsilon(1e-12));
  CHECK(rbo({"a", "b"}, {"x", "y"}, {0.9, 2}) == 0.0);
  // as k grows the identical-list value approaches 1
  std::vector<std::string> longer;
  for (int i = 0; i < 200; i++) longer.push_back("d" + std::to_string(i));
  CHECK(rbo(longer, longer, {0.9, longer.size()}) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("rbo treats short lists as ending, no extrapolation") {
  // beyond the short list's end only the long side keeps adding docs
  double value = rbo({"a"}, {"a", "b", "c"}, {0.5, 3});
  // A_1 = 1, A_2 = 1/2, A_3 = 1/3
  double expected = 0.5 * (1.0 + 0.5 * 0.5 + 0.25 * (1.0 / 3.0));
  CHECK(value == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("rbo rejects bad parameters and duplicates") {
  CHECK_THROWS_AS(rbo({"a"}, {"a"}, {0.0, 1}), InvalidInput);
  CHECK_THROWS_AS(rbo({"a"}, {"a"}, {1.0, 1}), InvalidInput);
  CHECK_THROWS_AS(rbo({"a"}, {"a"}, {0.9, 0}), InvalidInput);
  CHECK_THROWS_AS(rbo({"a", "a"}, {"b"}, {0.9, 1}), InvalidInput);
}

TEST_CASE("rbo is symmetric") {
  Rng rng(5150);
  for (int i = 0; i < 50; i++) {
    Instance inst = random_instance(&rng, 6, 10);
    Instance other = random_instance(&rng, 6, 10);
    RboParams params{0.9, std::max(inst.run.size(), other.run.size())};
    CHECK(rbo(inst.run, other.run, params) == rbo(other.run, inst.run, params));
  }
}

TEST_CASE("compatibility: run beginning with the unique ideal ordering scores 1") {
  IdealRankingSet ideal;
  ideal.levels.push_back({3.0, {"d1"}});
  ideal.levels.push_back({2.0, {"d2"}});
  ideal.levels.push_back({1.0, {"d3"}});
  CHECK(compatibility({"d1", "d2", "d3", "x", "y"}, ideal, 0.9) == doctest::Approx(1.0));
  CHECK(compatibility({"d1", "d2", "d3"}, ideal, 0.9) == 1.0);
}

TEST_CASE("compatibility: one level permits any order of its docs") {
  IdealRankingSet ideal;
  ideal.levels.push_back({1.0, {"a", "b", "c"}});
  CHECK(compatibility({"c", "a", "b"}, ideal, 0.9) == 1.0);
  CHECK(compatibility({"b", "c", "a"}, ideal, 0.9) == 1.0);
}

TEST_CASE("compatibility penalizes swaps across levels") {
  IdealRankingSet ideal;
  ideal.levels.push_back({2.0, {"hi"}});
  ideal.levels.push_back({1.0, {"lo"}});
  double perfect = compatibility({"hi", "lo"}, ideal, 0.9);
  double swapped = compatibility({"lo", "hi"}, ideal, 0.9);
  CHECK(perfect == 1.0);
  CHECK(swapped < perfect);
}

TEST_CASE("compatibility requires a non-empty ideal") {
  CHECK_THROWS_AS(compatibility({"a"}, IdealRankingSet{}, 0.9), InvalidInput);
}

TEST_CASE("greedy compatibility equals the brute-force permutation max") {
  Rng rng(90210);
  for (int i = 0; i < 500; i++) {
    Instance inst = random_instance(&rng, 6, 10);
    double greedy = compatibility(inst.run, inst.ideal, 0.9);
    double brute = oracle::brute_force_compatibility(inst.run, inst.ideal, 0.9);
    CHECK(greedy == brute);  // bitwise, same arithmetic path
  }
}

TEST_CASE("ndcg hand value") {
  // ranked grades [3, 0, 1]; judged docs: one grade-3 and one grade-1
  std::map<std::string, int> grades{{"d3", 3}, {"d1", 1}};
  std::vector<std::string> ranked{"d3", "unjudged", "d1"};
  double dcg = 3.0 / std::log2(2.0) + 0.0 + 1.0 / std::log2(4.0);
  double idcg = 3.0 / std::log2(2.0) + 1.0 / std::log2(3.0);
  double value = ndcg_at_k(ranked, grades, 3, GainVariant::linear);
  CHECK(value == doctest::Approx(dcg / idcg).epsilon(1e-12));
  CHECK(value == doctest::Approx(0.9639).epsilon(1e-4));
}

TEST_CASE("ndcg: ideal ordering scores 1, all-zero query scores 0") {
  std::map<std::string, int> grades{{"a", 3}, {"b", 2}, {"c", 0}};
  CHECK(ndcg_at_k({"a", "b", "c"}, grades, 10, GainVariant::linear) == 1.0);
  std::map<std::string, int> zero{{"a", 0}, {"b", 0}};
  CHECK(ndcg_at_k({"a", "b"}, zero, 10, GainVariant::linear) == 0.0);
}

TEST_CASE("ndcg is invariant under rank-preserving score changes") {
  // ranking is input as an ordered list, so only order matters by construction;
  // verify the exponential flag changes the value but not the perfect case
  std::map<std::string, int> grades{{"a", 3}, {"b", 1}, {"c", 0}};
  CHECK(ndcg_at_k({"a", "b", "c"}, grades, 10, GainVariant::exponential) == 1.0);
  double linear = ndcg_at_k({"b", "a", "c"}, grades, 10, GainVariant::linear);
  double exponential = ndcg_at_k({"b", "a", "c"}, grades, 10, GainVariant::exponential);
  CHECK(linear != exponential);
  CHECK(gain(0, GainVariant::exponential) == 0.0);
  CHECK(gain(3, GainVariant::exponential) == 7.0);
  CHECK(gain(3, GainVariant::linear) == 3.0);
}

TEST_CASE("kendall tau trivial and derived examples") {
  std::vector<double> x{1, 2, 3, 4};
  CHECK(kendall_tau(x, x) == doctest::Approx(1.0));
  std::vector<double> reversed{4, 3, 2, 1};
  CHECK(kendall_tau(x, reversed) == doctest::Approx(-1.0));
  std::vector<double> y{1, 3, 2, 4};
  CHECK(kendall_tau(x, y) == doctest::Approx((5.0 - 1.0) / 6.0).epsilon(1e-12));
}

TEST_CASE("kendall tau errors") {
  CHECK_THROWS_AS(kendall_tau({1, 2}, {1, 2, 3}), InvalidInput);
  CHECK_THROWS_AS(kendall_tau({1}, {1}), InvalidInput);
  CHECK_THROWS_AS(kendall_tau({2, 2, 2}, {1, 2, 3}), InvalidInput);
}

TEST_CASE("tau-b matches pair enumeration on random tied vectors") {
  Rng rng(777);
  for (int iteration = 0; iteration < 200; iteration++) {
    std::size_t n = 2 + rng.below(11);
    std::vector<double> x(n), y(n);
    bool ok = false;
    while (!ok) {
      for (std::size_t i = 0; i < n; i++) {
        x[i] = static_cast<double>(rng.below(5));  // small ranges force ties
        y[i] = static_cast<double>(rng.below(5));
      }
      auto constant = [](const std::vector<double> &v) {
        return std::all_of(v.begin(), v.end(), [&](double e) { return e == v[0]; });
      };
      ok = !constant(x) && !constant(y);
    }
    double production = kendall_tau(x, y);
    double enumerated = oracle::kendall_tau_by_pairs(x, y);
    CHECK(production == doctest::Approx(enumerated).epsilon(1e-12));
    CHECK(production == kendall_tau(y, x));  // symmetry
  }
}

TEST_CASE("ideal permutation places run-present docs first in run order") {
  IdealRankingSet ideal;
  ideal.levels.push_back({2.0, {"m", "k", "z"}});
  ideal.levels.push_back({1.0, {"q", "a"}});
  // run sees z then m; k absent; q absent; a present
  auto perm = ideal_permutation_for({"z", "a", "m"}, ideal);
  REQUIRE(perm.size() == 5);
  CHECK(perm[0] == "z");
  CHECK(perm[1] == "m");
  CHECK(perm[2] == "k");  // absent, after present ones
  CHECK(perm[3] == "a");
  CHECK(perm[4] == "q");
}
