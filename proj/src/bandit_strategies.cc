#include "testalloc/bandit_strategies.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "testalloc/errors.h"

namespace testalloc {
namespace {

int sample_index(const std::vector<double>& cumulative, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, cumulative.back());
  const double u = unit(rng);
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const auto index = std::min<std::ptrdiff_t>(
      it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1);
  return static_cast<int>(index);
}

// m draws with replacement from a (normalized) distribution.
std::vector<int> sample_counts(const std::vector<double>& probs, int batch_size,
                               Rng& rng) {
  std::vector<double> cumulative(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cumulative.begin());
  std::vector<int> counts(probs.size(), 0);
  for (int draw = 0; draw < batch_size; ++draw) {
    ++counts[sample_index(cumulative, rng)];
  }
  return counts;
}

void check_batch(int num_units, int batch_size) {
  if (num_units < 1) throw std::invalid_argument("need at least one unit");
  if (batch_size < 0) throw std::invalid_argument("batch size must be >= 0");
}

std::vector<double> normalized(std::vector<double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  return weights;
}

// Independent Beta(P + 1, N + 1) posteriors, sampled as a ratio of gammas.
class BetaPosteriors {
 public:
  explicit BetaPosteriors(const DiscountedCounts& counts) {
    for (int k = 0; k < counts.num_units(); ++k) {
      hits_.emplace_back(counts.positives[k] + 1.0, 1.0);
      misses_.emplace_back(counts.negatives[k] + 1.0, 1.0);
    }
  }

  int argmax_draw(Rng& rng) {
    int best = 0;
    double best_value = -1.0;
    for (std::size_t k = 0; k < hits_.size(); ++k) {
      const double x = hits_[k](rng);
      const double y = misses_[k](rng);
      const double value = x / (x + y);
      if (value > best_value) {
        best_value = value;
        best = static_cast<int>(k);
      }
    }
    return best;
  }

 private:
  std::vector<std::gamma_distribution<double>> hits_;
  std::vector<std::gamma_distribution<double>> misses_;
};

}  // namespace

DiscountedCounts DiscountedCounts::zeros(int num_units, double discount) {
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw std::invalid_argument("discount must lie in (0, 1]");
  }
  return DiscountedCounts{std::vector<double>(num_units, 0.0),
                          std::vector<double>(num_units, 0.0), discount};
}

DiscountedCounts update_discounted(const DiscountedCounts& counts,
                                   const BatchObservation& observation) {
  if (observation.num_units() != counts.num_units() ||
      observation.positives.size() != observation.tests.size()) {
    throw std::invalid_argument("observation has the wrong number of units");
  }
  DiscountedCounts next = counts;
  for (int k = 0; k < counts.num_units(); ++k) {
    const int positives = observation.positives[k];
    const int negatives = observation.tests[k] - positives;
    next.positives[k] = counts.discount * counts.positives[k] + positives;
    next.negatives[k] = counts.discount * counts.negatives[k] + negatives;
  }
  return next;
}

void validate(const Allocation& allocation) {
  if (allocation.counts.size() != allocation.selection_probs.size()) {
    throw InvariantViolation("allocation vectors differ in length");
  }
  long total = 0;
  for (std::size_t k = 0; k < allocation.counts.size(); ++k) {
    if (allocation.counts[k] < 0) {
      throw InvariantViolation("negative test count in allocation");
    }
    if (allocation.counts[k] > 0 && !(allocation.selection_probs[k] > 0.0)) {
      std::ostringstream msg;
      msg << "unit " << k << " allocated tests with selection probability 0";
      throw InvariantViolation(msg.str());
    }
    total += allocation.counts[k];
  }
  if (total != allocation.batch_size) {
    throw InvariantViolation("allocation counts do not sum to the batch size");
  }
}

Allocation allocate_random(int num_units, int batch_size, Rng& rng) {
  check_batch(num_units, batch_size);
  std::uniform_int_distribution<int> pick(0, num_units - 1);
  Allocation allocation;
  allocation.counts.assign(num_units, 0);
  for (int draw = 0; draw < batch_size; ++draw) ++allocation.counts[pick(rng)];
  allocation.selection_probs.assign(num_units, 1.0 / num_units);
  allocation.batch_size = batch_size;
  return allocation;
}

std::vector<double> positivity_rates(const DiscountedCounts& counts) {
  std::vector<double> rates(counts.num_units(), 0.0);
  for (int k = 0; k < counts.num_units(); ++k) {
    const double trials = counts.positives[k] + counts.negatives[k];
    if (trials > 0.0) rates[k] = counts.positives[k] / trials;
  }
  return rates;
}

Allocation allocate_epsilon_greedy(const DiscountedCounts& counts,
                                   double epsilon, int batch_size, Rng& rng) {
  const int num_units = counts.num_units();
  check_batch(num_units, batch_size);
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0,1]");
  }
  const std::vector<double> rates = positivity_rates(counts);
  const double best = *std::max_element(rates.begin(), rates.end());
  std::vector<int> leaders;
  for (int k = 0; k < num_units; ++k) {
    if (rates[k] == best) leaders.push_back(k);
  }

  Allocation allocation;
  allocation.batch_size = batch_size;
  allocation.counts.assign(num_units, 0);
  allocation.selection_probs.assign(num_units, epsilon / num_units);
  const double exploit_share =
      (1.0 - epsilon) / static_cast<double>(leaders.size());
  for (int k : leaders) allocation.selection_probs[k] += exploit_share;

  std::bernoulli_distribution explore(epsilon);
  std::uniform_int_distribution<int> any_unit(0, num_units - 1);
  std::uniform_int_distribution<std::size_t> any_leader(0, leaders.size() - 1);
  for (int draw = 0; draw < batch_size; ++draw) {
    const int unit = explore(rng) ? any_unit(rng) : leaders[any_leader(rng)];
    ++allocation.counts[unit];
  }
  return allocation;
}

Allocation allocate_thompson(const DiscountedCounts& counts, int batch_size,
                             int mc_draws, Rng& rng) {
  const int num_units = counts.num_units();
  check_batch(num_units, batch_size);
  if (mc_draws < 0) throw std::invalid_argument("mc_draws must be >= 0");

  BetaPosteriors posteriors(counts);
  Allocation allocation;
  allocation.batch_size = batch_size;
  allocation.probs_exact = false;
  allocation.counts.assign(num_units, 0);
  for (int draw = 0; draw < batch_size; ++draw) {
    ++allocation.counts[posteriors.argmax_draw(rng)];
  }

  // Pool the batch's own draws with the auxiliary rounds so every tested unit
  // keeps a positive probability.
  std::vector<double> wins(allocation.counts.begin(), allocation.counts.end());
  for (int round = 0; round < mc_draws; ++round) {
    wins[posteriors.argmax_draw(rng)] += 1.0;
  }
  const long rounds = static_cast<long>(batch_size) + mc_draws;
  if (rounds == 0) {
    allocation.selection_probs.assign(num_units, 1.0 / num_units);
  } else {
    for (double& w : wins) w /= static_cast<double>(rounds);
    allocation.selection_probs = std::move(wins);
  }
  return allocation;
}

Allocation allocate_ucb(const DiscountedCounts& counts, double confidence_alpha,
                        int batch_size, Rng& rng) {
  const int num_units = counts.num_units();
  check_batch(num_units, batch_size);
  std::vector<double> scores(num_units);
  for (int k = 0; k < num_units; ++k) {
    scores[k] = clopper_pearson_upper(
        counts.positives[k], counts.positives[k] + counts.negatives[k],
        confidence_alpha);
  }
  Allocation allocation;
  allocation.batch_size = batch_size;
  allocation.selection_probs = normalized(std::move(scores));
  allocation.counts = sample_counts(allocation.selection_probs, batch_size, rng);
  return allocation;
}

Exp3State Exp3State::uniform(int num_units, double exploration,
                             double discount) {
  if (!(exploration > 0.0 && exploration < 1.0)) {
    throw std::invalid_argument("exp3 exploration must lie in (0,1)");
  }
  return Exp3State{std::vector<double>(num_units, 0.0), exploration, discount};
}

RewardMode parse_reward_mode(const std::string& name) {
  if (name == "raw") return RewardMode::kRaw;
  if (name == "batch_fraction") return RewardMode::kBatchFraction;
  if (name == "unit_rate") return RewardMode::kUnitRate;
  throw std::invalid_argument("unknown reward_mode '" + name +
                              "' (expected raw, batch_fraction or unit_rate)");
}

std::string to_string(RewardMode mode) {
  switch (mode) {
    case RewardMode::kRaw:
      return "raw";
    case RewardMode::kBatchFraction:
      return "batch_fraction";
    case RewardMode::kUnitRate:
      return "unit_rate";
  }
  return "raw";
}

std::vector<double> exp3_probabilities(const Exp3State& state) {
  const int num_units = state.num_units();
  if (num_units < 1) throw std::invalid_argument("need at least one unit");
  const double top =
      *std::max_element(state.log_weights.begin(), state.log_weights.end());
  std::vector<double> weights(num_units);
  for (int k = 0; k < num_units; ++k) {
    weights[k] = std::exp(state.log_weights[k] - top);
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double eps = state.exploration;
  std::vector<double> probs(num_units);
  for (int k = 0; k < num_units; ++k) {
    probs[k] = (1.0 - eps) * weights[k] / total + eps / num_units;
  }
  return probs;
}

Allocation allocate_exp3(const Exp3State& state, int batch_size, Rng& rng) {
  check_batch(state.num_units(), batch_size);
  Allocation allocation;
  allocation.batch_size = batch_size;
  allocation.selection_probs = exp3_probabilities(state);
  allocation.counts = sample_counts(allocation.selection_probs, batch_size, rng);
  return allocation;
}

Exp3State exp3_update(const Exp3State& state, const Allocation& allocation,
                      const BatchObservation& observation, RewardMode mode) {
  const int num_units = state.num_units();
  if (allocation.counts.size() != static_cast<std::size_t>(num_units) ||
      observation.num_units() != num_units) {
    throw std::invalid_argument("exp3 update has the wrong number of units");
  }
  Exp3State next = state;
  for (int k = 0; k < num_units; ++k) {
    next.log_weights[k] = state.discount * state.log_weights[k];
    if (allocation.counts[k] == 0) continue;
    const double pi = allocation.selection_probs[k];
    if (!(pi > 0.0)) {
      throw InvariantViolation("exp3 update for a sampled unit with pi = 0");
    }
    const double positives = observation.positives[k];
    double reward = positives;
    if (mode == RewardMode::kBatchFraction) {
      reward = positives / allocation.batch_size;
    } else if (mode == RewardMode::kUnitRate) {
      reward = observation.tests[k] > 0 ? positives / observation.tests[k] : 0.0;
    }
    next.log_weights[k] += state.exploration * reward / (pi * num_units);
  }
  return next;
}

std::vector<double> selection_probability_mc(
    const std::function<int(Rng&)>& sampler, int num_units, long num_draws,
    Rng& rng) {
  if (num_units < 1 || num_draws < 1) {
    throw std::invalid_argument("need units and draws");
  }
  std::vector<double> freq(num_units, 0.0);
  for (long i = 0; i < num_draws; ++i) {
    const int unit = sampler(rng);
    if (unit < 0 || unit >= num_units) {
      throw std::out_of_range("sampler returned an invalid unit");
    }
    freq[unit] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(num_draws);
  return freq;
}

StrategyKind parse_strategy_kind(const std::string& name) {
  if (name == "random") return StrategyKind::kRandom;
  if (name == "greedy") return StrategyKind::kGreedy;
  if (name == "thompson") return StrategyKind::kThompson;
  if (name == "ucb") return StrategyKind::kUcb;
  if (name == "exp3") return StrategyKind::kExp3;
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (expected random, greedy, thompson, ucb, exp3)");
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kRandom:
      return "random";
    case StrategyKind::kGreedy:
      return "greedy";
    case StrategyKind::kThompson:
      return "thompson";
    case StrategyKind::kUcb:
      return "ucb";
    case StrategyKind::kExp3:
      return "exp3";
  }
  return "random";
}

std::string strategy_label(const StrategyParams& params) {
  if (params.kind != StrategyKind::kGreedy) return to_string(params.kind);
  std::ostringstream label;
  label << "greedy:" << params.epsilon;
  return label.str();
}

StrategyParams parse_strategy_label(const std::string& label,
                                    const StrategyParams& defaults) {
  StrategyParams params = defaults;
  const auto colon = label.find(':');
  params.kind = parse_strategy_kind(label.substr(0, colon));
  if (colon == std::string::npos) return params;
  if (params.kind != StrategyKind::kGreedy) {
    throw std::invalid_argument("only greedy takes a parameter: '" + label + "'");
  }
  const std::string value = label.substr(colon + 1);
  std::size_t used = 0;
  try {
    params.epsilon = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() ||
      !(params.epsilon >= 0.0 && params.epsilon <= 1.0)) {
    throw std::invalid_argument("bad greedy epsilon in '" + label + "'");
  }
  return params;
}

Strategy::Strategy(const StrategyParams& params, int num_units)
    : params_(params),
      counts_(DiscountedCounts::zeros(num_units, params.gamma)),
      exp3_(Exp3State::uniform(num_units, params.exp3_epsilon, params.gamma)) {}

Allocation Strategy::allocate(int batch_size, Rng& rng, bool need_probs) const {
  switch (params_.kind) {
    case StrategyKind::kRandom:
      return allocate_random(counts_.num_units(), batch_size, rng);
    case StrategyKind::kGreedy:
      return allocate_epsilon_greedy(counts_, params_.epsilon, batch_size, rng);
    case StrategyKind::kThompson:
      return allocate_thompson(counts_, batch_size,
                               need_probs ? params_.thompson_mc_draws : 0, rng);
    case StrategyKind::kUcb:
      return allocate_ucb(counts_, params_.confidence_alpha, batch_size, rng);
    case StrategyKind::kExp3:
      return allocate_exp3(exp3_, batch_size, rng);
  }
  throw std::logic_error("unhandled strategy kind");
}

void Strategy::observe(const Allocation& allocation,
                       const BatchObservation& observation) {
  counts_ = update_discounted(counts_, observation);
  if (params_.kind == StrategyKind::kExp3) {
    exp3_ = exp3_update(exp3_, allocation, observation, params_.reward_mode);
  }
}

}  // namespace testalloc
