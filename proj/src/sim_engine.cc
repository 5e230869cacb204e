#include "testalloc/sim_engine.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "testalloc/errors.h"
#include "testalloc/prevalence_estimation.h"

namespace testalloc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CapResult {
  std::vector<int> tests;
  bool saturated = false;
  // Overflow had to land on a unit the strategy gave probability 0.
  bool off_support = false;
};

// Caps each unit at its population and re-draws the overflow from the
// selection distribution restricted to units with room left.
CapResult cap_at_population(const Allocation& allocation,
                            std::span<const int> populations, Rng& rng) {
  CapResult result;
  result.tests = allocation.counts;
  int overflow = 0;
  for (std::size_t k = 0; k < result.tests.size(); ++k) {
    if (result.tests[k] > populations[k]) {
      overflow += result.tests[k] - populations[k];
      result.tests[k] = populations[k];
    }
  }
  if (overflow == 0) return result;
  result.saturated = true;

  std::vector<double> weights(result.tests.size());
  while (overflow > 0) {
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const bool room = result.tests[k] < populations[k];
      weights[k] = room ? allocation.selection_probs[k] : 0.0;
      total += weights[k];
    }
    if (total <= 0.0) {
      result.off_support = true;
      for (std::size_t k = 0; k < weights.size(); ++k) {
        weights[k] = result.tests[k] < populations[k] ? 1.0 : 0.0;
        total += weights[k];
      }
    }
    if (total <= 0.0) {
      throw InvariantViolation("budget exceeds the total population");
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    ++result.tests[pick(rng)];
    --overflow;
  }
  return result;
}

double mean_of(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values, double mean) {
  if (values.size() < 2) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += (v - mean) * (v - mean);
  return sum / static_cast<double>(values.size() - 1);
}

}  // namespace

int SimConfig::population_of(int unit) const {
  if (populations.empty()) return default_population;
  return populations.at(static_cast<std::size_t>(unit));
}

std::vector<int> SimConfig::budget_path(int constant_budget) const {
  if (!budget_schedule.empty()) return budget_schedule;
  return std::vector<int>(static_cast<std::size_t>(horizon), constant_budget);
}

void validate(const SimConfig& config) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (config.num_units < 1) fail("units must be >= 1");
  for (int k : config.unit_counts) {
    if (k < 1) fail("unit_counts entries must be >= 1");
  }
  if (!config.populations.empty()) {
    if (static_cast<int>(config.populations.size()) != config.num_units) {
      fail("populations must list one entry per unit");
    }
    if (!config.unit_counts.empty()) {
      fail("explicit populations cannot be combined with a unit_counts sweep");
    }
  }
  for (int n : config.populations) {
    if (n < 1) fail("populations must be positive");
  }
  if (config.default_population < 1) fail("population must be positive");
  if (config.init_cases_min < 1 || config.init_cases_max < config.init_cases_min) {
    fail("init_cases range must satisfy 1 <= min <= max");
  }
  const int smallest = config.populations.empty()
                           ? config.default_population
                           : *std::min_element(config.populations.begin(),
                                               config.populations.end());
  if (config.init_cases_max > smallest) {
    fail("init_cases_max exceeds a unit population");
  }
  if (!(config.growth_rate_min >= 0.0) ||
      !(config.growth_rate_max >= config.growth_rate_min) ||
      !(config.growth_rate_max > 0.0)) {
    fail("growth_rate range must satisfy 0 <= min <= max, max > 0");
  }
  if (config.growth_rate_min == config.growth_rate_max &&
      config.growth_rate_min <= 0.0) {
    fail("a fixed growth_rate must be positive");
  }
  if (!(config.test_effect >= 0.0)) fail("test_effect must be >= 0");
  if (config.horizon < 1) fail("horizon must be >= 1");
  if (config.budget_schedule.empty() && config.budgets.empty()) {
    fail("budgets must not be empty");
  }
  for (int b : config.budgets) {
    if (b < 0) fail("budgets must be >= 0");
  }
  if (!config.budget_schedule.empty()) {
    if (static_cast<int>(config.budget_schedule.size()) != config.horizon) {
      fail("budget_schedule must have one entry per period (horizon)");
    }
    for (int b : config.budget_schedule) {
      if (b < 0) fail("budget_schedule entries must be >= 0");
    }
  }
  auto check_gamma = [&](double g) {
    if (!(g > 0.0 && g < 1.0)) fail("gamma must lie in (0,1)");
  };
  check_gamma(config.strategy.gamma);
  for (double g : config.gammas) check_gamma(g);
  const StrategyParams& s = config.strategy;
  if (!(s.epsilon >= 0.0 && s.epsilon <= 1.0)) fail("epsilon must lie in [0,1]");
  if (!(s.confidence_alpha > 0.0 && s.confidence_alpha < 1.0)) {
    fail("confidence_alpha must lie in (0,1)");
  }
  if (!(s.exp3_epsilon > 0.0 && s.exp3_epsilon < 1.0)) {
    fail("exp3_epsilon must lie in (0,1)");
  }
  if (s.thompson_mc_draws < 0) fail("thompson_mc_draws must be >= 0");
  if (config.replications < 1) fail("replications must be >= 1");
  for (const std::string& label : config.strategies) {
    try {
      parse_strategy_label(label, s);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
}

std::vector<UnitScenario> draw_scenario(const SimConfig& config, Rng& rng) {
  std::uniform_int_distribution<int> initial(config.init_cases_min,
                                             config.init_cases_max);
  std::uniform_real_distribution<double> growth(config.growth_rate_min,
                                                config.growth_rate_max);
  std::vector<UnitScenario> units(static_cast<std::size_t>(config.num_units));
  for (int k = 0; k < config.num_units; ++k) {
    UnitScenario& unit = units[static_cast<std::size_t>(k)];
    unit.population = config.population_of(k);
    unit.initial_cases = std::min(initial(rng), unit.population);
    if (config.growth_rate_min == config.growth_rate_max) {
      unit.growth_rate = config.growth_rate_min;
    } else {
      // Open interval: a zero growth rate is not a valid unit.
      do {
        unit.growth_rate = growth(rng);
      } while (unit.growth_rate <= config.growth_rate_min);
    }
  }
  return units;
}

std::pair<int, int> draw_outcomes(int population, double cases, int tests,
                                  Rng& rng) {
  if (tests < 0 || tests > population) {
    throw InvariantViolation("tests must lie in [0, population]");
  }
  int infected = static_cast<int>(
      std::clamp<long>(std::lround(cases), 0L, static_cast<long>(population)));
  int remaining = population;
  int positives = 0;
  for (int i = 0; i < tests && infected > 0; ++i, --remaining) {
    std::uniform_int_distribution<int> pick(0, remaining - 1);
    if (pick(rng) < infected) {
      ++positives;
      --infected;
    }
  }
  return {positives, tests - positives};
}

std::pair<int, int> draw_outcomes(const UnitDiseaseState& state, int tests,
                                  Rng& rng) {
  const double now = static_cast<double>(state.tests_per_step.size());
  return draw_outcomes(state.population, cases_at(state, now), tests, rng);
}

double SimTrace::final_total_cases() const {
  return std::accumulate(final_cases.begin(), final_cases.end(), 0.0);
}

SimTrace run_episode(std::span<const UnitScenario> units,
                     std::span<const int> budget_per_period,
                     double test_effect, const StrategyParams& strategy_params,
                     Rng& strategy_rng, Rng& outcome_rng,
                     const EpisodeOptions& options) {
  const int num_units = static_cast<int>(units.size());
  std::vector<UnitDiseaseState> states;
  std::vector<int> populations;
  for (const UnitScenario& unit : units) {
    UnitDiseaseState state;
    state.population = unit.population;
    state.initial_cases = unit.initial_cases;
    state.growth_rate = unit.growth_rate;
    state.test_effect = test_effect;
    validate(state);
    states.push_back(std::move(state));
    populations.push_back(unit.population);
  }

  Strategy strategy(strategy_params, num_units);
  SimTrace trace;
  trace.periods.reserve(budget_per_period.size());
  for (std::size_t t = 0; t < budget_per_period.size(); ++t) {
    PeriodRecord record;
    record.t = static_cast<int>(t);
    record.budget = budget_per_period[t];
    record.cases.resize(static_cast<std::size_t>(num_units));
    for (int k = 0; k < num_units; ++k) {
      record.cases[k] = cases_at(states[k], static_cast<double>(t));
    }
    record.mu_true = true_prevalence(record.cases, populations);

    Allocation allocation =
        strategy.allocate(record.budget, strategy_rng, options.estimate);
    validate(allocation);
    CapResult capped = cap_at_population(allocation, populations, strategy_rng);
    allocation.counts = capped.tests;
    record.saturated = capped.saturated;

    BatchObservation observation;
    observation.tests = capped.tests;
    observation.positives.resize(static_cast<std::size_t>(num_units));
    observation.selection_probs = allocation.selection_probs;
    observation.batch_size = record.budget;
    observation.unit_populations = populations;
    for (int k = 0; k < num_units; ++k) {
      observation.positives[k] = draw_outcomes(
          populations[k], record.cases[k], observation.tests[k], outcome_rng)
                                     .first;
    }

    if (capped.off_support) {
      // Overflow forced tests onto units outside the support of pi.
      for (int k = 0; k < num_units; ++k) {
        if (observation.tests[k] > 0 && !(observation.selection_probs[k] > 0.0)) {
          observation.selection_probs[k] = std::numeric_limits<double>::min();
        }
      }
      record.mu_hat = kNaN;
    } else {
      validate(observation);
      record.mu_hat = (options.estimate && record.budget > 0)
                          ? ht_estimate(observation)
                          : kNaN;
    }

    for (int k = 0; k < num_units; ++k) {
      states[k] = record_tests(std::move(states[k]), observation.tests[k]);
    }
    strategy.observe(allocation, observation);

    record.tests = std::move(observation.tests);
    record.positives = std::move(observation.positives);
    record.selection_probs = std::move(allocation.selection_probs);
    trace.periods.push_back(std::move(record));
  }

  const double end = static_cast<double>(budget_per_period.size());
  for (const UnitDiseaseState& state : states) {
    trace.final_cases.push_back(cases_at(state, end));
  }
  return trace;
}

SimTrace run_replication(const SimConfig& config, const StrategyParams& strategy,
                         int constant_budget, std::uint64_t seed,
                         int replication, const EpisodeOptions& options) {
  const auto rep = static_cast<std::uint64_t>(replication);
  Rng scenario_rng = make_rng(seed, rep, Stream::kScenario);
  Rng strategy_rng = make_rng(seed, rep, Stream::kStrategy);
  Rng outcome_rng = make_rng(seed, rep, Stream::kOutcomes);
  const std::vector<UnitScenario> units = draw_scenario(config, scenario_rng);
  const std::vector<int> budgets = config.budget_path(constant_budget);
  return run_episode(units, budgets, config.test_effect, strategy, strategy_rng,
                     outcome_rng, options);
}

std::vector<ComparisonRow> run_experiment(
    const SimConfig& config, std::span<const StrategyParams> strategies,
    std::span<const int> budgets, std::uint64_t seed, int jobs,
    const std::function<void(const std::string&)>& progress) {
  const int reps = config.replications;
  const EpisodeOptions options{.estimate = false};

  auto final_totals = [&](const StrategyParams& params, int budget) {
    std::vector<double> totals(static_cast<std::size_t>(reps));
    parallel_for(reps, jobs, [&](int rep) {
      totals[static_cast<std::size_t>(rep)] =
          run_replication(config, params, budget, seed, rep, options)
              .final_total_cases();
    });
    return totals;
  };

  StrategyParams baseline = config.strategy;
  baseline.kind = StrategyKind::kRandom;
  std::map<int, std::vector<double>> baseline_totals;
  for (int budget : budgets) {
    if (!baseline_totals.contains(budget)) {
      baseline_totals[budget] = final_totals(baseline, budget);
    }
  }

  std::vector<ComparisonRow> rows;
  for (const StrategyParams& params : strategies) {
    for (int budget : budgets) {
      const std::vector<double>& base = baseline_totals[budget];
      std::vector<double> diffs = params.kind == StrategyKind::kRandom
                                      ? base
                                      : final_totals(params, budget);
      for (std::size_t r = 0; r < diffs.size(); ++r) diffs[r] -= base[r];

      ComparisonRow row;
      row.strategy = strategy_label(params);
      row.budget = budget;
      row.num_units = config.num_units;
      row.gamma = params.gamma;
      row.replications = reps;
      row.mean_diff_vs_random = mean_of(diffs);
      const double se =
          std::sqrt(sample_variance(diffs, row.mean_diff_vs_random) / reps);
      row.ci68_low = row.mean_diff_vs_random - se;
      row.ci68_high = row.mean_diff_vs_random + se;
      rows.push_back(row);
      if (progress) {
        std::ostringstream line;
        line << "K=" << row.num_units << " gamma=" << row.gamma << " "
             << row.strategy << " budget=" << budget
             << " mean_diff=" << row.mean_diff_vs_random;
        progress(line.str());
      }
    }
  }
  return rows;
}

std::vector<EstimationSummaryRow> summarize(
    std::span<const EstimationRun> runs) {
  if (runs.empty()) throw std::invalid_argument("no traces to summarize");
  struct Acc {
    double mu_sum = 0.0;
    int mu_count = 0;
    double hat_min = kNaN, hat_max = kNaN;
    double err_sum = 0.0, err_min = kNaN, err_max = kNaN;
    int hat_count = 0;
  };
  std::map<std::pair<int, int>, Acc> groups;
  for (const EstimationRun& run : runs) {
    for (const PeriodRecord& period : run.trace.periods) {
      Acc& acc = groups[{run.budget, period.t}];
      acc.mu_sum += period.mu_true;
      ++acc.mu_count;
      if (std::isnan(period.mu_hat)) continue;
      const double err = period.mu_hat - period.mu_true;
      if (acc.hat_count == 0) {
        acc.hat_min = acc.hat_max = period.mu_hat;
        acc.err_min = acc.err_max = err;
      } else {
        acc.hat_min = std::min(acc.hat_min, period.mu_hat);
        acc.hat_max = std::max(acc.hat_max, period.mu_hat);
        acc.err_min = std::min(acc.err_min, err);
        acc.err_max = std::max(acc.err_max, err);
      }
      acc.err_sum += err;
      ++acc.hat_count;
    }
  }
  std::vector<EstimationSummaryRow> rows;
  for (const auto& [key, acc] : groups) {
    EstimationSummaryRow row;
    row.budget = key.first;
    row.t = key.second;
    row.mean_mu_true = acc.mu_sum / acc.mu_count;
    row.min_mu_hat = acc.hat_min;
    row.max_mu_hat = acc.hat_max;
    row.mean_error = acc.hat_count > 0 ? acc.err_sum / acc.hat_count : kNaN;
    row.min_error = acc.err_min;
    row.max_error = acc.err_max;
    row.runs = acc.mu_count;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ErrorStats> error_stats_by_budget(
    std::span<const EstimationRun> runs) {
  std::map<int, std::vector<double>> errors;
  for (const EstimationRun& run : runs) {
    std::vector<double>& bucket = errors[run.budget];
    for (const PeriodRecord& period : run.trace.periods) {
      if (!std::isnan(period.mu_hat)) {
        bucket.push_back(period.mu_hat - period.mu_true);
      }
    }
  }
  std::vector<ErrorStats> stats;
  for (const auto& [budget, values] : errors) {
    ErrorStats s;
    s.budget = budget;
    s.samples = static_cast<long>(values.size());
    if (!values.empty()) {
      s.mean_error = mean_of(values);
      s.variance = sample_variance(values, s.mean_error);
      s.standard_error = std::sqrt(s.variance / static_cast<double>(s.samples));
    }
    stats.push_back(s);
  }
  return stats;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  const int threads = std::min(jobs, count);
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& worker : workers) worker.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace testalloc
