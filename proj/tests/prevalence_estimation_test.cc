#include "testalloc/prevalence_estimation.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "testalloc/errors.h"

namespace testalloc {
namespace {

TEST(TruePrevalence, Basics) {
  const std::vector<int> pops = {1000, 1000};
  EXPECT_EQ(true_prevalence(std::vector<double>{0, 0}, pops), 0.0);
  EXPECT_EQ(true_prevalence(std::vector<double>{1000, 1000}, pops), 1.0);
  EXPECT_DOUBLE_EQ(true_prevalence(std::vector<double>{100, 50}, pops), 0.075);
}

BatchObservation batch(std::vector<int> pops, std::vector<double> pi,
                       std::vector<int> tests, std::vector<int> positives) {
  BatchObservation obs;
  obs.unit_populations = std::move(pops);
  obs.selection_probs = std::move(pi);
  obs.batch_size = std::accumulate(tests.begin(), tests.end(), 0);
  obs.tests = std::move(tests);
  obs.positives = std::move(positives);
  return obs;
}

TEST(HtEstimate, NoPositivesIsZero) {
  EXPECT_EQ(ht_estimate(batch({50, 70}, {0.3, 0.7}, {4, 6}, {0, 0})), 0.0);
}

TEST(HtEstimate, SingleUnitIsSampleRate) {
  EXPECT_DOUBLE_EQ(ht_estimate(batch({1000}, {1.0}, {10}, {3})), 0.3);
}

TEST(HtEstimate, WeightsByInverseSelectionProbability) {
  // (1 / 20000) * (1250 * 4 + 5000 * 1)
  EXPECT_DOUBLE_EQ(
      ht_estimate(batch({1000, 1000}, {0.8, 0.2}, {8, 2}, {4, 1})), 0.5);
}

TEST(HtEstimate, ProportionalDesignIsPooledRate) {
  const std::vector<int> pops = {30, 120, 50};
  const double total = 200.0;
  const auto obs =
      batch(pops, {30 / total, 120 / total, 50 / total}, {2, 9, 4}, {1, 5, 0});
  EXPECT_DOUBLE_EQ(ht_estimate(obs), 6.0 / 15.0);
}

TEST(HtEstimate, RejectsTestsWithoutProbability) {
  EXPECT_THROW(ht_estimate(batch({10, 10}, {1.0, 0.0}, {2, 1}, {1, 0})),
               InvariantViolation);
  EXPECT_THROW(ht_estimate(batch({10}, {1.0}, {0}, {0})), InvariantViolation);
  EXPECT_THROW(ht_estimate(batch({10}, {1.0}, {3}, {4})), InvariantViolation);
}

TEST(InclusionProbability, Basics) {
  EXPECT_DOUBLE_EQ(inclusion_probability(0.25, 4, 1000), 1.0 / 1000);
  EXPECT_EQ(inclusion_probability(0.0, 7, 10), 0.0);
  EXPECT_DOUBLE_EQ(inclusion_probability(0.3, 20, 1000), 0.006);
  EXPECT_THROW(inclusion_probability(0.9, 20, 10), InvariantViolation);
}

// The two-stage design: m unit draws with replacement from pi, then the
// unit's tests go to distinct individuals chosen uniformly. Individuals
// 0..cases_k-1 of each unit are infected.
struct DesignResult {
  std::vector<double> estimates;
  std::vector<std::vector<long>> inclusions;
};

DesignResult simulate_design(const std::vector<int>& pops,
                             const std::vector<int>& cases,
                             const std::vector<double>& pi, int m, int reps,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(pi.begin(), pi.end());
  const std::size_t k = pops.size();
  DesignResult result;
  result.inclusions.resize(k);
  std::vector<std::vector<int>> people(k);
  for (std::size_t u = 0; u < k; ++u) {
    result.inclusions[u].assign(pops[u], 0);
    people[u].resize(pops[u]);
    std::iota(people[u].begin(), people[u].end(), 0);
  }
  for (int r = 0; r < reps; ++r) {
    std::vector<int> tests(k, 0), positives(k, 0);
    for (int d = 0; d < m; ++d) ++tests[pick(rng)];
    for (std::size_t u = 0; u < k; ++u) {
      // Partial Fisher-Yates: the first tests[u] entries are the sample.
      for (int i = 0; i < tests[u]; ++i) {
        std::uniform_int_distribution<int> j(i, pops[u] - 1);
        std::swap(people[u][i], people[u][j(rng)]);
        const int person = people[u][i];
        ++result.inclusions[u][person];
        if (person < cases[u]) ++positives[u];
      }
    }
    result.estimates.push_back(ht_estimate(batch(pops, pi, tests, positives)));
  }
  return result;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double variance(const std::vector<double>& v) {
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / (v.size() - 1);
}

TEST(HtEstimate, IsUnbiasedOverTheSamplingDesign) {
  struct Scenario {
    std::vector<int> pops, cases;
    std::vector<double> pi;
    int m;
  };
  const std::vector<Scenario> scenarios = {
      {{50, 50, 50}, {5, 30, 0}, {0.5, 0.3, 0.2}, 10},
      {{20, 45, 33, 50, 28}, {20, 1, 17, 9, 0}, {0.1, 0.4, 0.05, 0.25, 0.2}, 20},
      {{40, 25}, {11, 24}, {0.9, 0.1}, 3},
  };
  const int reps = 100'000;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const Scenario& sc = scenarios[s];
    const DesignResult result =
        simulate_design(sc.pops, sc.cases, sc.pi, sc.m, reps, 100 + s);
    std::vector<double> cases(sc.cases.begin(), sc.cases.end());
    const double truth = true_prevalence(cases, sc.pops);
    const double se = std::sqrt(variance(result.estimates) / reps);
    EXPECT_LE(std::abs(mean(result.estimates) - truth), 4.0 * se)
        << "scenario " << s;

    for (std::size_t u = 0; u < sc.pops.size(); ++u) {
      const double p = inclusion_probability(sc.pi[u], sc.m, sc.pops[u]);
      const double tolerance = 4.0 * std::sqrt(p * (1 - p) / reps);
      for (long hits : result.inclusions[u]) {
        ASSERT_NEAR(static_cast<double>(hits) / reps, p, tolerance)
            << "scenario " << s << " unit " << u;
      }
    }
  }
}

TEST(HtEstimate, VarianceShrinksWithBatchSize) {
  const std::vector<int> pops = {100, 100, 100, 100};
  const std::vector<int> cases = {80, 10, 40, 0};
  const std::vector<double> pi = {0.4, 0.3, 0.2, 0.1};
  double previous = INFINITY;
  for (int m : {4, 16, 64}) {
    const double v =
        variance(simulate_design(pops, cases, pi, m, 100'000, 7).estimates);
    EXPECT_LT(v, previous) << "m=" << m;
    previous = v;
  }
}

}  // namespace
}  // namespace testalloc
