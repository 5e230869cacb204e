#include "testalloc/prevalence_estimation.h"

#include <sstream>
#include <stdexcept>

#include "testalloc/errors.h"

namespace testalloc {

void validate(const BatchObservation& observation) {
  const std::size_t k = observation.tests.size();
  if (observation.positives.size() != k ||
      observation.selection_probs.size() != k ||
      observation.unit_populations.size() != k) {
    throw InvariantViolation("observation vectors differ in length");
  }
  long total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const int tests = observation.tests[i];
    const int positives = observation.positives[i];
    if (positives < 0 || positives > tests ||
        tests > observation.unit_populations[i]) {
      std::ostringstream msg;
      msg << "unit " << i << ": need 0 <= positives <= tests <= population, got "
          << positives << ", " << tests << ", "
          << observation.unit_populations[i];
      throw InvariantViolation(msg.str());
    }
    if (tests > 0 && !(observation.selection_probs[i] > 0.0)) {
      std::ostringstream msg;
      msg << "unit " << i << " was tested with selection probability 0";
      throw InvariantViolation(msg.str());
    }
    total += tests;
  }
  if (total != observation.batch_size) {
    throw InvariantViolation("tests do not sum to the batch size");
  }
}

double true_prevalence(std::span<const double> case_counts,
                       std::span<const int> unit_populations) {
  if (case_counts.size() != unit_populations.size()) {
    throw std::invalid_argument("case and population vectors differ in length");
  }
  double cases = 0.0;
  double population = 0.0;
  for (std::size_t k = 0; k < case_counts.size(); ++k) {
    cases += case_counts[k];
    population += unit_populations[k];
  }
  if (population <= 0.0) throw std::invalid_argument("empty population");
  return cases / population;
}

double ht_estimate(const BatchObservation& observation) {
  validate(observation);
  if (observation.batch_size < 1) {
    throw InvariantViolation("estimate needs at least one test");
  }
  double population = 0.0;
  for (int n : observation.unit_populations) population += n;

  double weighted = 0.0;
  for (int k = 0; k < observation.num_units(); ++k) {
    const int positives = observation.positives[k];
    if (positives == 0) continue;
    weighted += observation.unit_populations[k] /
                observation.selection_probs[k] * positives;
  }
  return weighted / (population * observation.batch_size);
}

double inclusion_probability(double selection_prob, int batch_size,
                             int unit_population) {
  if (unit_population <= 0 || batch_size < 1 || selection_prob < 0.0) {
    throw std::invalid_argument("invalid inclusion probability arguments");
  }
  const double expected_tests = batch_size * selection_prob;
  if (expected_tests > unit_population) {
    std::ostringstream msg;
    msg << "design oversamples the unit: m * pi = " << expected_tests
        << " exceeds population " << unit_population;
    throw InvariantViolation(msg.str());
  }
  return expected_tests / unit_population;
}

}  // namespace testalloc
