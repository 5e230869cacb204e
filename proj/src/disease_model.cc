#include "testalloc/disease_model.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace testalloc {
namespace {

int tests_at_step(const UnitDiseaseState& state, long step) {
  if (step < static_cast<long>(state.tests_per_step.size())) {
    return state.tests_per_step[static_cast<std::size_t>(step)];
  }
  return 0;
}

void check_horizon(const UnitDiseaseState& state, double t) {
  if (!(t >= 0.0)) {
    throw std::out_of_range("time must be non-negative");
  }
  const double horizon = static_cast<double>(state.tests_per_step.size()) + 1.0;
  if (t > horizon) {
    std::ostringstream msg;
    msg << "time " << t << " is past the recorded test history horizon "
        << horizon;
    throw std::out_of_range(msg.str());
  }
}

// Integral of exp(rate * u) over [0, s].
double exp_segment(double rate, double s) {
  if (rate == 0.0) return s;
  return std::expm1(rate * s) / rate;
}

}  // namespace

void validate(const UnitDiseaseState& state) {
  if (state.population <= 0) {
    throw std::invalid_argument("population must be positive");
  }
  if (!(state.initial_cases > 0.0) || state.initial_cases > state.population) {
    throw std::invalid_argument("initial cases must lie in (0, population]");
  }
  if (!(state.growth_rate > 0.0)) {
    throw std::invalid_argument("growth rate must be positive");
  }
  if (!(state.test_effect >= 0.0)) {
    throw std::invalid_argument("test effect must be non-negative");
  }
  for (int count : state.tests_per_step) {
    if (count < 0) throw std::invalid_argument("test counts must be >= 0");
  }
}

double cumulative_tests(const UnitDiseaseState& state, double t) {
  check_horizon(state, t);
  const long whole = static_cast<long>(std::floor(t));
  double total = 0.0;
  for (long step = 0; step < whole; ++step) total += tests_at_step(state, step);
  return total + tests_at_step(state, whole) * (t - static_cast<double>(whole));
}

double lambda_integral(const UnitDiseaseState& state, double t) {
  check_horizon(state, t);
  const double alpha = state.growth_rate;
  const double beta = state.test_effect;
  const long whole = static_cast<long>(std::floor(t));

  double integral = 0.0;
  double tests_so_far = 0.0;
  for (long step = 0; step <= whole; ++step) {
    const double width = step < whole ? 1.0 : t - static_cast<double>(whole);
    if (width <= 0.0) break;
    const int tests = tests_at_step(state, step);
    // On [step, step + 1): lambda(step + u) = lambda(step) * exp(rate * u).
    const double log_start =
        alpha * (static_cast<double>(step) - beta * tests_so_far);
    const double rate = alpha * (1.0 - beta * tests);
    integral += std::exp(log_start) * exp_segment(rate, width);
    tests_so_far += tests;
  }
  return integral;
}

double cases_at(const UnitDiseaseState& state, double t) {
  const double integral = lambda_integral(state, t);
  const double n = state.population;
  const double c0 = state.initial_cases;
  const double lambda = std::exp(
      state.growth_rate * (t - state.test_effect * cumulative_tests(state, t)));
  const double cases =
      c0 * n * lambda / (n + c0 * state.growth_rate * integral);
  return std::clamp(cases, 0.0, n);
}

double logistic_cases(int population, double initial_cases, double growth_rate,
                      double t) {
  const double n = population;
  const double growth = std::exp(growth_rate * t);
  return n * initial_cases * growth / (n - initial_cases + initial_cases * growth);
}

double ode_oracle(const UnitDiseaseState& state, double t, double step) {
  check_horizon(state, t);
  if (!(step > 0.0) || step > 0.01) {
    throw std::invalid_argument("oracle step must lie in (0, 0.01]");
  }
  const double alpha = state.growth_rate;
  const double n = state.population;

  double cases = state.initial_cases;
  const long whole = static_cast<long>(std::floor(t));
  for (long segment = 0; segment <= whole; ++segment) {
    const double width =
        segment < whole ? 1.0 : t - static_cast<double>(whole);
    if (width <= 0.0) break;
    const double damping = state.test_effect * tests_at_step(state, segment);
    auto rhs = [&](double c) { return alpha * c * (1.0 - damping - c / n); };

    const long substeps = static_cast<long>(std::ceil(width / step - 1e-9));
    const double h = width / static_cast<double>(substeps);
    for (long i = 0; i < substeps; ++i) {
      const double k1 = rhs(cases);
      const double k2 = rhs(cases + 0.5 * h * k1);
      const double k3 = rhs(cases + 0.5 * h * k2);
      const double k4 = rhs(cases + h * k3);
      cases += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return cases;
}

UnitDiseaseState record_tests(UnitDiseaseState state, int count) {
  if (count < 0) throw std::invalid_argument("test count must be >= 0");
  state.tests_per_step.push_back(count);
  return state;
}

}  // namespace testalloc
