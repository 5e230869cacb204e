#ifndef TESTALLOC_BANDIT_STRATEGIES_H_
#define TESTALLOC_BANDIT_STRATEGIES_H_

#include <functional>
#include <string>
#include <vector>

#include "testalloc/prevalence_estimation.h"
#include "testalloc/rng.h"

namespace testalloc {

// Per-unit positive/negative tallies with geometric forgetting.
struct DiscountedCounts {
  std::vector<double> positives;
  std::vector<double> negatives;
  double discount = 0.5;

  static DiscountedCounts zeros(int num_units, double discount);
  int num_units() const { return static_cast<int>(positives.size()); }
};

// Every entry becomes discount * old + new.
DiscountedCounts update_discounted(const DiscountedCounts& counts,
                                   const BatchObservation& observation);

// One period's allocation of tests to units.
struct Allocation {
  std::vector<int> counts;
  // Probability that a single draw selects each unit. Feeds the estimator.
  std::vector<double> selection_probs;
  int batch_size = 0;
  // False when selection_probs is a Monte Carlo estimate.
  bool probs_exact = true;
};

// Throws InvariantViolation unless sum(counts) == batch_size and every unit
// with tests has positive selection probability.
void validate(const Allocation& allocation);

Allocation allocate_random(int num_units, int batch_size, Rng& rng);

// Discounted positivity rate P / (P + N), with no data counted as rate 0.
std::vector<double> positivity_rates(const DiscountedCounts& counts);

// Each draw explores uniformly with probability epsilon, otherwise picks a
// uniformly random unit among those tied for the highest positivity rate.
Allocation allocate_epsilon_greedy(const DiscountedCounts& counts,
                                   double epsilon, int batch_size, Rng& rng);

// Every draw takes the argmax of fresh Beta(P + 1, N + 1) samples.
// selection_probs is the win frequency over the batch's own draws plus
// mc_draws auxiliary rounds; with mc_draws = 0 it is just counts / batch.
Allocation allocate_thompson(const DiscountedCounts& counts, int batch_size,
                             int mc_draws, Rng& rng);

// Upper Clopper-Pearson limit at two-sided level confidence_alpha: the
// 1 - alpha/2 quantile of Beta(positives + 1, trials - positives), or 1 when
// there is no negative evidence. Non-integer (discounted) counts are fine.
// Throws std::invalid_argument if positives > trials.
double clopper_pearson_upper(double positives, double trials,
                             double confidence_alpha);

// Draws units with replacement from scores normalized to a distribution.
Allocation allocate_ucb(const DiscountedCounts& counts, double confidence_alpha,
                        int batch_size, Rng& rng);

struct Exp3State {
  std::vector<double> log_weights;
  double exploration = 0.1;
  double discount = 0.5;

  static Exp3State uniform(int num_units, double exploration, double discount);
  int num_units() const { return static_cast<int>(log_weights.size()); }
};

enum class RewardMode {
  kRaw,            // positive count
  kBatchFraction,  // positives / batch size
  kUnitRate,       // positives / tests in the unit
};

RewardMode parse_reward_mode(const std::string& name);
std::string to_string(RewardMode mode);

// (1 - eps) * w_k / sum(w) + eps / K, computed from log-weights.
std::vector<double> exp3_probabilities(const Exp3State& state);

Allocation allocate_exp3(const Exp3State& state, int batch_size, Rng& rng);

// One weight update per unit per period. Sampled units get
// log_w <- discount * log_w + eps * r / (pi * K); the rest only decay.
Exp3State exp3_update(const Exp3State& state, const Allocation& allocation,
                      const BatchObservation& observation, RewardMode mode);

// Win frequency of each unit over num_draws independent calls to sampler.
std::vector<double> selection_probability_mc(
    const std::function<int(Rng&)>& sampler, int num_units, long num_draws,
    Rng& rng);

enum class StrategyKind { kRandom, kGreedy, kThompson, kUcb, kExp3 };

struct StrategyParams {
  StrategyKind kind = StrategyKind::kRandom;
  double epsilon = 0.1;
  double gamma = 0.5;
  double confidence_alpha = 0.05;
  double exp3_epsilon = 0.1;
  RewardMode reward_mode = RewardMode::kRaw;
  int thompson_mc_draws = 100000;
};

StrategyKind parse_strategy_kind(const std::string& name);
std::string to_string(StrategyKind kind);

// Label used in output tables, e.g. "greedy:0.01" or "thompson".
std::string strategy_label(const StrategyParams& params);

// Parses a label back into params, filling the rest from defaults. Accepts
// "random", "greedy", "greedy:EPS", "thompson", "ucb", "exp3".
StrategyParams parse_strategy_label(const std::string& label,
                                    const StrategyParams& defaults);

// A running strategy: parameters plus whatever state the kind needs.
class Strategy {
 public:
  Strategy(const StrategyParams& params, int num_units);

  // With need_probs false, Thompson skips its Monte Carlo selection
  // probabilities; the other kinds are exact either way.
  Allocation allocate(int batch_size, Rng& rng, bool need_probs) const;
  void observe(const Allocation& allocation,
               const BatchObservation& observation);

  const StrategyParams& params() const { return params_; }
  const DiscountedCounts& counts() const { return counts_; }
  const Exp3State& exp3() const { return exp3_; }

 private:
  StrategyParams params_;
  DiscountedCounts counts_;
  Exp3State exp3_;
};

}  // namespace testalloc

#endif  // TESTALLOC_BANDIT_STRATEGIES_H_
