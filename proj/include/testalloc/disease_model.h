#ifndef TESTALLOC_DISEASE_MODEL_H_
#define TESTALLOC_DISEASE_MODEL_H_

#include <vector>

namespace testalloc {

// One unit under testing-aware logistic growth:
//
//   dC/dt = alpha * C * (1 - beta * phi(t) - C / N)
//
// where phi is piecewise constant on [tau, tau + 1) and given by
// tests_per_step[tau]. Steps past the recorded history count as untested, so
// a state with n recorded steps can be evaluated on [0, n + 1].
struct UnitDiseaseState {
  int population = 1000;
  double initial_cases = 1.0;
  double growth_rate = 0.5;
  double test_effect = 0.0;
  std::vector<int> tests_per_step;
};

// Checks the field invariants; throws std::invalid_argument.
void validate(const UnitDiseaseState& state);

// Cumulative tests Phi(t) = integral of phi over [0, t]. Linear inside each
// step, so Phi(tau) is the prefix sum of the first tau entries.
double cumulative_tests(const UnitDiseaseState& state, double t);

// Integral over [0, t] of exp(alpha * (x - beta * Phi(x))), evaluated exactly
// one step at a time. Throws std::out_of_range past the history horizon.
double lambda_integral(const UnitDiseaseState& state, double t);

// Closed-form Bernoulli solution
//
//   C(t) = C0 * N * lambda(t) / (N + C0 * alpha * lambda_integral(t)),
//   lambda(t) = exp(alpha * (t - beta * Phi(t))),
//
// clamped to [0, N].
double cases_at(const UnitDiseaseState& state, double t);

// Classical logistic solution; what cases_at reduces to without testing.
double logistic_cases(int population, double initial_cases, double growth_rate,
                      double t);

// Reference solution by classic RK4 with a fixed step, restarting at every
// integer so that phi is constant within each integration segment.
double ode_oracle(const UnitDiseaseState& state, double t, double step);

// Appends one step of tests to the schedule.
UnitDiseaseState record_tests(UnitDiseaseState state, int count);

}  // namespace testalloc

#endif  // TESTALLOC_DISEASE_MODEL_H_
