// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "testalloc/bandit_strategies.h"
#include "testalloc/cli.h"
#include "testalloc/csv.h"
#include "testalloc/disease_model.h"
#include "testalloc/prevalence_estimation.h"
#include "testalloc/sim_engine.h"

namespace {

using namespace testalloc;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void check(const std::string& name, double budget_seconds,
           const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  const bool in_time = seconds <= budget_seconds;
  const bool pass = outcome.pass && in_time;
  if (!pass) ++failures;
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << " (" << std::fixed
            << std::setprecision(1) << seconds << "s";
  if (!in_time) std::cout << ", over the " << budget_seconds << "s limit";
  std::cout << ") " << outcome.detail << std::endl;
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(6) << x;
  return s.str();
}

// --- closed-form model ---------------------------------------------------

Outcome closed_form_vs_rk4() {
  std::mt19937_64 rng(20211);
  std::uniform_int_distribution<int> initial(1, 20);
  std::uniform_real_distribution<double> alpha(0.0, 1.0);
  std::uniform_int_distribution<int> tests(0, 500);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    UnitDiseaseState state;
    state.population = 1000;
    state.initial_cases = initial(rng);
    do state.growth_rate = alpha(rng); while (state.growth_rate == 0.0);
    state.test_effect = 0.001;
    state.tests_per_step.resize(30);
    for (int& x : state.tests_per_step) x = tests(rng);
    for (double t : {1.0, 5.0, 10.0, 30.0}) {
      worst = std::max(worst, std::abs(cases_at(state, t) - ode_oracle(state, t, 1e-4)));
    }
  }
  return {worst <= 1e-5 * 1000, "max |closed form - RK4| = " + fmt(worst) +
                                    " (limit 1e-2)"};
}

Outcome logistic_reduction() {
  double worst = 0.0;
  for (double alpha : {0.001, 0.05, 0.3, 0.62, 0.999}) {
    for (int c0 : {1, 5, 13, 20}) {
      UnitDiseaseState state;
      state.population = 1000;
      state.initial_cases = c0;
      state.growth_rate = alpha;
      state.test_effect = 0.001;
      state.tests_per_step.assign(30, 0);
      for (int i = 0; i <= 3000; ++i) {
        const double t = i * 0.01;
        worst = std::max(worst, std::abs(cases_at(state, t) -
                                         logistic_cases(1000, c0, alpha, t)));
      }
    }
  }
  return {worst <= 1e-9 * 1000,
          "max |closed form - logistic| = " + fmt(worst) + " (limit 1e-6)"};
}

// --- Clopper-Pearson -----------------------------------------------------

double binomial_cdf(int p, int n, double theta) {
  if (theta <= 0.0) return 1.0;
  if (theta >= 1.0) return p >= n ? 1.0 : 0.0;
  double total = 0.0;
  for (int j = 0; j <= p; ++j) {
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) -
                      std::lgamma(n - j + 1.0) + j * std::log(theta) +
                      (n - j) * std::log1p(-theta));
  }
  return total;
}

double grid_sup(int p, int n, double alpha) {
  constexpr long kGrid = 1'000'000;
  auto ok = [&](long i) {
    return binomial_cdf(p, n, static_cast<double>(i) / kGrid) >= alpha / 2;
  };
  if (ok(kGrid)) return 1.0;
  long lo = 0, hi = kGrid;
  while (hi - lo > 1) {
    const long mid = (lo + hi) / 2;
    (ok(mid) ? lo : hi) = mid;
  }
  return static_cast<double>(lo) / kGrid;
}

Outcome clopper_pearson_grid() {
  double worst = 0.0;
  for (int n = 0; n <= 50; ++n) {
    for (int p = 0; p <= n; ++p) {
      worst = std::max(worst, std::abs(clopper_pearson_upper(p, n, 0.05) -
                                       grid_sup(p, n, 0.05)));
    }
  }
  return {worst <= 2e-6, "max deviation from 1e-6 grid = " + fmt(worst) +
                             " over 1326 (P, n) pairs"};
}

// --- estimator -----------------------------------------------------------

Outcome estimator_unbiased() {
  const std::vector<int> pops = {50, 50, 50};
  const std::vector<int> cases = {5, 30, 12};
  const std::vector<double> pi = {0.5, 0.3, 0.2};
  const int m = 10;
  const int reps = 100'000;

  std::mt19937_64 rng(99);
  std::discrete_distribution<int> pick(pi.begin(), pi.end());
  std::vector<std::vector<int>> people(3);
  std::vector<std::vector<long>> hits(3);
  for (int u = 0; u < 3; ++u) {
    people[u].resize(pops[u]);
    std::iota(people[u].begin(), people[u].end(), 0);
    hits[u].assign(pops[u], 0);
  }
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    BatchObservation obs;
    obs.tests.assign(3, 0);
    obs.positives.assign(3, 0);
    obs.selection_probs = pi;
    obs.batch_size = m;
    obs.unit_populations = pops;
    for (int d = 0; d < m; ++d) ++obs.tests[pick(rng)];
    for (int u = 0; u < 3; ++u) {
      for (int i = 0; i < obs.tests[u]; ++i) {
        std::uniform_int_distribution<int> j(i, pops[u] - 1);
        std::swap(people[u][i], people[u][j(rng)]);
        ++hits[u][people[u][i]];
        if (people[u][i] < cases[u]) ++obs.positives[u];
      }
    }
    const double estimate = ht_estimate(obs);
    sum += estimate;
    sum_sq += estimate * estimate;
  }
  const double mean = sum / reps;
  const double var = (sum_sq - reps * mean * mean) / (reps - 1);
  const double se = std::sqrt(var / reps);
  const std::vector<double> case_counts(cases.begin(), cases.end());
  const double truth = true_prevalence(case_counts, pops);
  const double z = std::abs(mean - truth) / se;

  double worst_z = 0.0;
  for (int u = 0; u < 3; ++u) {
    const double p = inclusion_probability(pi[u], m, pops[u]);
    const double sd = std::sqrt(p * (1 - p) / reps);
    for (long h : hits[u]) {
      worst_z = std::max(worst_z, std::abs(static_cast<double>(h) / reps - p) / sd);
    }
  }
  return {z <= 4.0 && worst_z <= 4.0,
          "mean " + fmt(mean) + " vs mu " + fmt(truth) + " (" + fmt(z) +
              " SE); worst inclusion deviation " + fmt(worst_z) + " SE"};
}

// --- experiments ---------------------------------------------------------

Outcome testing_effect() {
  const std::vector<UnitScenario> unit = {{1000, 10.0, 0.5}};
  double previous = INFINITY;
  std::string detail = "final cases:";
  bool decreasing = true;
  for (int budget : {0, 50, 100, 200}) {
    const std::vector<int> budgets(30, budget);
    Rng strategy_rng(1), outcome_rng(2);
    const double final_cases =
        run_episode(unit, budgets, 0.001, StrategyParams{}, strategy_rng,
                    outcome_rng)
            .final_total_cases();
    detail += " " + std::to_string(budget) + "->" + fmt(final_cases);
    decreasing = decreasing && final_cases < previous;
    previous = final_cases;
  }
  return {decreasing, detail};
}

std::map<std::string, std::map<int, ComparisonRow>> comparison_rows;

Outcome strategy_comparison_run() {
  SimConfig config;
  config.num_units = 100;
  config.horizon = 30;
  config.replications = 30;
  config.strategy.gamma = 0.5;
  std::vector<StrategyParams> strategies;
  for (const char* label : {"thompson", "exp3", "ucb", "greedy:0.01"}) {
    strategies.push_back(parse_strategy_label(label, config.strategy));
  }
  const std::vector<int> budgets = {50, 150, 300, 500};
  for (const ComparisonRow& row :
       run_experiment(config, strategies, budgets, 20211)) {
    comparison_rows[row.strategy][row.budget] = row;
  }
  std::string detail;
  for (const auto& [label, rows] : comparison_rows) {
    detail += "\n         " + label + ":";
    for (const auto& [budget, row] : rows) {
      detail += " " + std::to_string(budget) + "=" +
                fmt(row.mean_diff_vs_random) + " [" + fmt(row.ci68_low) + ", " +
                fmt(row.ci68_high) + "]";
    }
  }
  return {true, "K=100 gamma=0.5 T=30 R=30, mean diff vs random [68% CI]:" + detail};
}

Outcome bandits_beat_random() {
  bool pass = true;
  std::string detail;
  for (const char* label : {"thompson", "exp3", "ucb"}) {
    for (int budget : {300, 500}) {
      const ComparisonRow& row = comparison_rows.at(label).at(budget);
      if (!(row.mean_diff_vs_random < 0.0)) {
        pass = false;
        detail += std::string(label) + "@" + std::to_string(budget) +
                  " not below random; ";
      }
    }
  }
  for (const char* label : {"thompson", "exp3"}) {
    const ComparisonRow& row = comparison_rows.at(label).at(500);
    if (!(row.ci68_high < 0.0)) {
      pass = false;
      detail += std::string(label) + "@500 CI touches zero; ";
    }
  }
  return {pass, pass ? "negative at 300 and 500, CI excludes zero at 500 for "
                       "thompson and exp3"
                     : detail};
}

Outcome greedy_fails() {
  int not_better = 0;
  std::string detail = "greedy:0.01 diffs:";
  for (const auto& [budget, row] : comparison_rows.at("greedy:0.01")) {
    detail += " " + fmt(row.mean_diff_vs_random);
    if (row.mean_diff_vs_random >= 0.0) ++not_better;
  }
  detail += "; fails to improve on " + std::to_string(not_better) +
            "/4 budgets (need >= 2)";
  return {not_better >= 2, detail};
}

Outcome variance_vs_budget() {
  SimConfig config;
  config.num_units = 10;
  config.horizon = 30;
  config.replications = 50;
  config.strategy.kind = StrategyKind::kUcb;
  config.strategy.gamma = 0.5;
  std::vector<EstimationRun> runs;
  for (int budget : {4, 16, 64}) {
    for (int rep = 0; rep < config.replications; ++rep) {
      runs.push_back({budget, rep,
                      run_replication(config, config.strategy, budget, 7, rep)});
    }
  }
  bool pass = true;
  double previous = INFINITY;
  std::string detail;
  for (const ErrorStats& s : error_stats_by_budget(runs)) {
    const double z = std::abs(s.mean_error) / s.standard_error;
    detail += "m=" + std::to_string(s.budget) + ": var " + fmt(s.variance) +
              ", mean err " + fmt(s.mean_error) + " (" + fmt(z) + " SE); ";
    pass = pass && s.variance < previous && z <= 4.0;
    previous = s.variance;
  }
  return {pass, detail};
}

Outcome compare_determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "testalloc_acceptance";
  fs::remove_all(root);
  auto compare_into = [&](const std::vector<std::string>& extra,
                          const fs::path& out) {
    std::vector<std::string> args = {"testalloc", "compare", "--out",
                                     out.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    std::ostringstream sink;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), sink, sink);
    if (code != 0) throw std::runtime_error("compare failed: " + sink.str());
    return read_file((out / "compare.csv").string());
  };
  const std::string original = compare_into(
      {"--seed", "31337", "--set", "units=30", "--set", "replications=5",
       "--set", "budgets=20,80", "--set",
       "strategies=thompson,exp3,ucb,greedy:0.01,greedy:0.1"},
      root / "a");
  const std::string manifest = (root / "a" / "compare_manifest.cfg").string();
  const std::string first = compare_into({"--config", manifest}, root / "b");
  const std::string second = compare_into({"--config", manifest}, root / "c");
  fs::remove_all(root);
  const bool pass = first == second && first == original;
  return {pass, pass ? "manifest replays reproduce compare.csv byte for byte (" +
                           std::to_string(first.size()) + " bytes)"
                     : "outputs differ"};
}

}  // namespace

int main() {
  check("closed-form vs RK4 oracle (100 units, t in {1,5,10,30}, 1e-5*N)", 60,
        closed_form_vs_rk4);
  check("logistic reduction without testing (1e-9*N over [0,30])", 10,
        logistic_reduction);
  check("Clopper-Pearson vs brute-force grid (n <= 50, 2e-6)", 60,
        clopper_pearson_grid);
  check("estimator unbiasedness and inclusion identity (R=1e5, 4 SE)", 120,
        estimator_unbiased);
  check("testing effect: final cases decrease over budgets {0,50,100,200}", 10,
        testing_effect);
  check("strategy comparison run (K=100, budgets {50,150,300,500})", 900,
        strategy_comparison_run);
  check("  (a) thompson, exp3, ucb improve on random at the largest budgets", 1,
        bandits_beat_random);
  check("  (b) greedy:0.01 fails to improve on random on >= half the budgets",
        1, greedy_fails);
  check("variance of mu_hat - mu shrinks with budget {4,16,64}, unbiased", 300,
        variance_vs_budget);
  check("determinism: compare replays byte-identically", 300,
        compare_determinism);
  std::cout << (failures == 0 ? "ALL CRITERIA PASSED"
                              : std::to_string(failures) + " CRITERIA FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
