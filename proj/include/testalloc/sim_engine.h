#ifndef TESTALLOC_SIM_ENGINE_H_
#define TESTALLOC_SIM_ENGINE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "testalloc/bandit_strategies.h"
#include "testalloc/disease_model.h"
#include "testalloc/rng.h"

namespace testalloc {

struct SimConfig {
  int num_units = 10;
  // Per-unit populations. Empty means default_population for every unit.
  std::vector<int> populations;
  int default_population = 1000;
  int init_cases_min = 1;
  int init_cases_max = 20;
  double growth_rate_min = 0.0;
  double growth_rate_max = 1.0;
  double test_effect = 0.001;
  int horizon = 30;
  // Constant per-period budgets to sweep over.
  std::vector<int> budgets = {25, 50, 100, 200, 300, 400, 500};
  // Explicit per-period budget; replaces the sweep when non-empty.
  std::vector<int> budget_schedule;
  StrategyParams strategy;
  // Strategy labels for comparisons; see parse_strategy_label.
  std::vector<std::string> strategies = {"thompson", "ucb", "exp3",
                                         "greedy:0.1", "greedy:0.01"};
  // Comparison sweeps. Empty means {strategy.gamma} and {num_units}.
  std::vector<double> gammas;
  std::vector<int> unit_counts;
  int replications = 1;
  std::optional<std::uint64_t> seed;

  int population_of(int unit) const;
  // One entry per period, from the schedule or a constant sweep budget.
  std::vector<int> budget_path(int constant_budget) const;
};

// Throws ConfigError on any violated field constraint.
void validate(const SimConfig& config);

// Fixed per-replication draw of unit parameters.
struct UnitScenario {
  int population = 1000;
  double initial_cases = 1.0;
  double growth_rate = 0.5;
};

std::vector<UnitScenario> draw_scenario(const SimConfig& config, Rng& rng);

// Hypergeometric draw: tests distinct individuals from a unit of `population`
// of whom round(cases) are infected. Returns (positives, negatives).
std::pair<int, int> draw_outcomes(int population, double cases, int tests,
                                  Rng& rng);
// Same, at the state's current time (its number of recorded steps).
std::pair<int, int> draw_outcomes(const UnitDiseaseState& state, int tests,
                                  Rng& rng);

struct PeriodRecord {
  int t = 0;
  int budget = 0;
  std::vector<int> tests;
  std::vector<int> positives;
  // C_k(t) before this period's tests take effect.
  std::vector<double> cases;
  std::vector<double> selection_probs;
  double mu_true = 0.0;
  // NaN when nothing was tested or the estimate was not requested.
  double mu_hat = 0.0;
  // Some unit was allocated more tests than its population.
  bool saturated = false;
};

struct SimTrace {
  std::vector<PeriodRecord> periods;
  // C_k(T) after the last period.
  std::vector<double> final_cases;

  double final_total_cases() const;
};

struct EpisodeOptions {
  // Compute mu_hat (and Monte Carlo selection probabilities where needed).
  bool estimate = true;
};

// One episode: each period allocates, caps allocations at unit populations,
// draws outcomes, feeds tests into the disease model and updates the
// strategy. Deterministic given both streams.
SimTrace run_episode(std::span<const UnitScenario> units,
                     std::span<const int> budget_per_period,
                     double test_effect, const StrategyParams& strategy,
                     Rng& strategy_rng, Rng& outcome_rng,
                     const EpisodeOptions& options = {});

// Runs replication `replication` of the config under a strategy, with the
// stream split every strategy shares for that replication.
SimTrace run_replication(const SimConfig& config, const StrategyParams& strategy,
                         int constant_budget, std::uint64_t seed,
                         int replication, const EpisodeOptions& options = {});

struct ComparisonRow {
  std::string strategy;
  int budget = 0;
  int num_units = 0;
  double gamma = 0.0;
  double mean_diff_vs_random = 0.0;
  double ci68_low = 0.0;
  double ci68_high = 0.0;
  int replications = 0;
};

// Final total cases of each strategy minus the random baseline, paired by
// replication, with mean +/- one standard error. Uses config.num_units and
// config.strategy.gamma; rows ordered by strategy then budget.
std::vector<ComparisonRow> run_experiment(
    const SimConfig& config, std::span<const StrategyParams> strategies,
    std::span<const int> budgets, std::uint64_t seed, int jobs = 1,
    const std::function<void(const std::string&)>& progress = {});

struct EstimationRun {
  int budget = 0;
  int replication = 0;
  SimTrace trace;
};

struct EstimationSummaryRow {
  int budget = 0;
  int t = 0;
  double mean_mu_true = 0.0;
  double min_mu_hat = 0.0;
  double max_mu_hat = 0.0;
  double mean_error = 0.0;
  double min_error = 0.0;
  double max_error = 0.0;
  int runs = 0;
};

// Per (budget, t) bands over runs. NaN estimates are skipped.
std::vector<EstimationSummaryRow> summarize(std::span<const EstimationRun> runs);

struct ErrorStats {
  int budget = 0;
  long samples = 0;
  double mean_error = 0.0;
  double variance = 0.0;
  double standard_error = 0.0;
};

// mu_hat - mu pooled over every run and period, per budget.
std::vector<ErrorStats> error_stats_by_budget(
    std::span<const EstimationRun> runs);

// Index-parallel loop over [0, count) on `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& body);

}  // namespace testalloc

#endif  // TESTALLOC_SIM_ENGINE_H_
