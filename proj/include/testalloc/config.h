#ifndef TESTALLOC_CONFIG_H_
#define TESTALLOC_CONFIG_H_

#include <set>
#include <string>

#include "testalloc/sim_engine.h"

namespace testalloc {

// Flat "key = value" text. Blank lines and lines starting with '#' are
// ignored; lists are comma separated. Keys:
//
//   units, population, populations, init_cases_min, init_cases_max,
//   growth_rate_min, growth_rate_max, test_effect, horizon, budgets,
//   budget_schedule, strategy, strategies, gammas, unit_counts, epsilon,
//   gamma, confidence_alpha, exp3_epsilon, reward_mode, thompson_mc_draws,
//   replications, seed
struct ParsedConfig {
  SimConfig config;
  // Keys given explicitly, so command-specific defaults can fill the rest.
  std::set<std::string> keys;
};

// Throws ConfigError for unknown keys and unparsable values.
void apply_setting(ParsedConfig& parsed, const std::string& key,
                   const std::string& value);

// Applies a "key=value" override.
void apply_override(ParsedConfig& parsed, const std::string& assignment);

ParsedConfig parse_config(const std::string& text,
                          const std::string& source = "<config>");

// Throws ConfigError naming the path when it cannot be read.
ParsedConfig load_config(const std::string& path);

// Every key with its resolved value; parse_config reproduces the config.
std::string serialize_config(const SimConfig& config);

}  // namespace testalloc

#endif  // TESTALLOC_CONFIG_H_
