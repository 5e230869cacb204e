#include "testalloc/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "testalloc/csv.h"
#include "testalloc/errors.h"

namespace testalloc {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  if (trim(value).empty()) return items;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) items.push_back(trim(item));
  return items;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError("bad value for " + key + ": '" + text + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  for (const std::string& item : split_list(value)) {
    out.push_back(parse_number<T>(key, item));
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_real(values[i]);
    } else if constexpr (std::is_same_v<T, std::string>) {
      out += values[i];
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

}  // namespace

void apply_setting(ParsedConfig& parsed, const std::string& key,
                   const std::string& raw_value) {
  SimConfig& c = parsed.config;
  StrategyParams& s = c.strategy;
  const std::string value = trim(raw_value);
  try {
    if (key == "units") {
      c.num_units = parse_number<int>(key, value);
    } else if (key == "population") {
      c.default_population = parse_number<int>(key, value);
    } else if (key == "populations") {
      c.populations = parse_list<int>(key, value);
    } else if (key == "init_cases_min") {
      c.init_cases_min = parse_number<int>(key, value);
    } else if (key == "init_cases_max") {
      c.init_cases_max = parse_number<int>(key, value);
    } else if (key == "growth_rate_min") {
      c.growth_rate_min = parse_number<double>(key, value);
    } else if (key == "growth_rate_max") {
      c.growth_rate_max = parse_number<double>(key, value);
    } else if (key == "test_effect") {
      c.test_effect = parse_number<double>(key, value);
    } else if (key == "horizon") {
      c.horizon = parse_number<int>(key, value);
    } else if (key == "budgets") {
      c.budgets = parse_list<int>(key, value);
    } else if (key == "budget_schedule") {
      c.budget_schedule = parse_list<int>(key, value);
    } else if (key == "strategy") {
      s.kind = parse_strategy_kind(value);
    } else if (key == "strategies") {
      c.strategies = split_list(value);
    } else if (key == "gammas") {
      c.gammas = parse_list<double>(key, value);
    } else if (key == "unit_counts") {
      c.unit_counts = parse_list<int>(key, value);
    } else if (key == "epsilon") {
      s.epsilon = parse_number<double>(key, value);
    } else if (key == "gamma") {
      s.gamma = parse_number<double>(key, value);
    } else if (key == "confidence_alpha") {
      s.confidence_alpha = parse_number<double>(key, value);
    } else if (key == "exp3_epsilon") {
      s.exp3_epsilon = parse_number<double>(key, value);
    } else if (key == "reward_mode") {
      s.reward_mode = parse_reward_mode(value);
    } else if (key == "thompson_mc_draws") {
      s.thompson_mc_draws = parse_number<int>(key, value);
    } else if (key == "replications") {
      c.replications = parse_number<int>(key, value);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  parsed.keys.insert(key);
}

void apply_override(ParsedConfig& parsed, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must look like key=value: '" + assignment + "'");
  }
  apply_setting(parsed, trim(assignment.substr(0, eq)),
                assignment.substr(eq + 1));
}

ParsedConfig parse_config(const std::string& text, const std::string& source) {
  ParsedConfig parsed;
  std::stringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::string content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_number) +
                        ": expected key = value");
    }
    try {
      apply_setting(parsed, trim(content.substr(0, eq)), content.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_number) + ": " +
                        e.what());
    }
  }
  return parsed;
}

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

std::string serialize_config(const SimConfig& c) {
  const StrategyParams& s = c.strategy;
  std::ostringstream out;
  out << "units = " << c.num_units << "\n"
      << "population = " << c.default_population << "\n"
      << "populations = " << join(c.populations) << "\n"
      << "init_cases_min = " << c.init_cases_min << "\n"
      << "init_cases_max = " << c.init_cases_max << "\n"
      << "growth_rate_min = " << format_real(c.growth_rate_min) << "\n"
      << "growth_rate_max = " << format_real(c.growth_rate_max) << "\n"
      << "test_effect = " << format_real(c.test_effect) << "\n"
      << "horizon = " << c.horizon << "\n"
      << "budgets = " << join(c.budgets) << "\n"
      << "budget_schedule = " << join(c.budget_schedule) << "\n"
      << "strategy = " << to_string(s.kind) << "\n"
      << "strategies = " << join(c.strategies) << "\n"
      << "gammas = " << join(c.gammas) << "\n"
      << "unit_counts = " << join(c.unit_counts) << "\n"
      << "epsilon = " << format_real(s.epsilon) << "\n"
      << "gamma = " << format_real(s.gamma) << "\n"
      << "confidence_alpha = " << format_real(s.confidence_alpha) << "\n"
      << "exp3_epsilon = " << format_real(s.exp3_epsilon) << "\n"
      << "reward_mode = " << to_string(s.reward_mode) << "\n"
      << "thompson_mc_draws = " << s.thompson_mc_draws << "\n"
      << "replications = " << c.replications << "\n";
  if (c.seed) out << "seed = " << *c.seed << "\n";
  return out.str();
}

}  // namespace testalloc
