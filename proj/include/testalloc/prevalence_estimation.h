#ifndef TESTALLOC_PREVALENCE_ESTIMATION_H_
#define TESTALLOC_PREVALENCE_ESTIMATION_H_

#include <span>
#include <vector>

namespace testalloc {

// Realized outcomes of one period's batch. Tests within a unit are distinct
// individuals; tests are perfect.
struct BatchObservation {
  std::vector<int> tests;
  std::vector<int> positives;
  // Per-draw unit selection distribution the batch was sampled from.
  std::vector<double> selection_probs;
  int batch_size = 0;
  std::vector<int> unit_populations;

  int num_units() const { return static_cast<int>(tests.size()); }
};

// Throws InvariantViolation if the observation is internally inconsistent.
void validate(const BatchObservation& observation);

// Fraction infected across all units.
double true_prevalence(std::span<const double> case_counts,
                       std::span<const int> unit_populations);

// Inverse-probability weighted prevalence estimate
//
//   mu_hat = 1 / (N * m) * sum_k (N_k / pi_k) * positives_k,  N = sum_k N_k.
//
// Unbiased for the prevalence the batch sampled, and unclipped: a single
// realization can exceed 1. Throws InvariantViolation when a tested unit has
// pi_k = 0 or the batch is empty.
double ht_estimate(const BatchObservation& observation);

// Probability that a given individual in unit k is tested in a batch of m
// draws: m * pi_k / N_k. Throws InvariantViolation when m * pi_k > N_k.
double inclusion_probability(double selection_prob, int batch_size,
                             int unit_population);

}  // namespace testalloc

#endif  // TESTALLOC_PREVALENCE_ESTIMATION_H_
