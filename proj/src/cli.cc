#include "testalloc/cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "testalloc/config.h"
#include "testalloc/errors.h"

namespace testalloc {
namespace {

std::vector<int> sorted_budgets(const SimConfig& config) {
  std::vector<int> budgets = config.budgets;
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
  return budgets;
}

// One pass over budgets (or the single schedule) with a label for the
// budget column when it is constant.
std::vector<int> budget_sweep(const SimConfig& config) {
  if (!config.budget_schedule.empty()) return {-1};
  return sorted_budgets(config);
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

void apply_command_defaults(const std::string& command, ParsedConfig& parsed) {
  auto set_default = [&](const std::string& key, const std::string& value) {
    if (!parsed.keys.contains(key)) {
      apply_setting(parsed, key, value);
      parsed.keys.erase(key);
    }
  };
  if (command == "compare") {
    set_default("units", "100");
    set_default("replications", "30");
  } else if (command == "estimate") {
    set_default("units", "10");
    set_default("strategy", "ucb");
    set_default("replications", "50");
    set_default("budgets", "4,16,64");
  }
}

std::string manifest_text(const std::string& command, const SimConfig& config,
                          const std::vector<std::string>& outputs) {
  std::ostringstream out;
  out << "# command: " << command << "\n"
      << "# tool_version: " << kToolVersion << "\n"
      << "# timestamp: " << utc_timestamp() << "\n";
  for (const std::string& path : outputs) out << "# output: " << path << "\n";
  out << "# replay: testalloc " << command << " --config <this file>\n"
      << serialize_config(config);
  return out.str();
}

}  // namespace

CsvTable simulate_table(const SimConfig& config, std::uint64_t seed, int jobs) {
  CsvTable table;
  table.header = {"replication", "t",         "strategy", "budget",
                  "unit",        "tests",     "positives", "cases",
                  "pi",          "mu_true",   "mu_hat",   "mu_hat_clipped"};
  const std::string label = strategy_label(config.strategy);
  for (int budget : budget_sweep(config)) {
    std::vector<SimTrace> traces(static_cast<std::size_t>(config.replications));
    parallel_for(config.replications, jobs, [&](int rep) {
      traces[static_cast<std::size_t>(rep)] =
          run_replication(config, config.strategy, budget, seed, rep);
    });
    for (int rep = 0; rep < config.replications; ++rep) {
      for (const PeriodRecord& period : traces[static_cast<std::size_t>(rep)].periods) {
        const double clipped =
            std::isnan(period.mu_hat) ? period.mu_hat
                                      : std::clamp(period.mu_hat, 0.0, 1.0);
        for (std::size_t k = 0; k < period.tests.size(); ++k) {
          table.rows.push_back({std::to_string(rep), std::to_string(period.t),
                                label, std::to_string(period.budget),
                                std::to_string(k), std::to_string(period.tests[k]),
                                std::to_string(period.positives[k]),
                                format_real(period.cases[k]),
                                format_real(period.selection_probs[k]),
                                format_real(period.mu_true),
                                format_real(period.mu_hat), format_real(clipped)});
        }
      }
    }
  }
  return table;
}

CsvTable compare_table(const SimConfig& config, std::uint64_t seed, int jobs,
                       std::ostream* progress) {
  CsvTable table;
  table.header = {"strategy",  "budget",   "K",         "gamma",
                  "mean_diff_vs_random", "ci68_low", "ci68_high",
                  "replications"};
  std::vector<int> unit_counts = config.unit_counts;
  if (unit_counts.empty()) unit_counts = {config.num_units};
  std::vector<double> gammas = config.gammas;
  if (gammas.empty()) gammas = {config.strategy.gamma};
  std::sort(unit_counts.begin(), unit_counts.end());
  std::sort(gammas.begin(), gammas.end());
  const std::vector<int> budgets = sorted_budgets(config);

  std::vector<ComparisonRow> rows;
  for (int units : unit_counts) {
    for (double gamma : gammas) {
      SimConfig cell = config;
      cell.num_units = units;
      cell.strategy.gamma = gamma;
      std::vector<StrategyParams> strategies;
      for (const std::string& label : config.strategies) {
        strategies.push_back(parse_strategy_label(label, cell.strategy));
      }
      std::function<void(const std::string&)> report;
      if (progress) {
        report = [progress](const std::string& line) {
          *progress << line << std::endl;
        };
      }
      std::vector<ComparisonRow> part =
          run_experiment(cell, strategies, budgets, seed, jobs, report);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) {
                     return std::tie(a.num_units, a.gamma, a.strategy, a.budget) <
                            std::tie(b.num_units, b.gamma, b.strategy, b.budget);
                   });
  for (const ComparisonRow& row : rows) {
    table.rows.push_back({row.strategy, std::to_string(row.budget),
                          std::to_string(row.num_units), format_real(row.gamma),
                          format_real(row.mean_diff_vs_random),
                          format_real(row.ci68_low), format_real(row.ci68_high),
                          std::to_string(row.replications)});
  }
  return table;
}

EstimationTables estimate_tables(const SimConfig& config, std::uint64_t seed,
                                 int jobs) {
  std::vector<EstimationRun> runs;
  for (int budget : budget_sweep(config)) {
    const std::size_t first = runs.size();
    runs.resize(first + static_cast<std::size_t>(config.replications));
    parallel_for(config.replications, jobs, [&](int rep) {
      EstimationRun& run = runs[first + static_cast<std::size_t>(rep)];
      run.budget = budget;
      run.replication = rep;
      run.trace = run_replication(config, config.strategy, budget, seed, rep);
    });
  }

  EstimationTables tables;
  tables.runs.header = {"replication", "t", "budget", "mu_true", "mu_hat"};
  for (const EstimationRun& run : runs) {
    for (const PeriodRecord& period : run.trace.periods) {
      tables.runs.rows.push_back(
          {std::to_string(run.replication), std::to_string(period.t),
           std::to_string(period.budget), format_real(period.mu_true),
           format_real(period.mu_hat)});
    }
  }
  tables.summary.header = {"budget",     "t",          "mean_mu_true",
                           "min_mu_hat", "max_mu_hat", "mean_error",
                           "min_error",  "max_error",  "runs"};
  for (const EstimationSummaryRow& row : summarize(runs)) {
    tables.summary.rows.push_back(
        {std::to_string(row.budget), std::to_string(row.t),
         format_real(row.mean_mu_true), format_real(row.min_mu_hat),
         format_real(row.max_mu_hat), format_real(row.mean_error),
         format_real(row.min_error), format_real(row.max_error),
         std::to_string(row.runs)});
  }
  return tables;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Batched bandit test allocation and prevalence estimation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int jobs = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file (key = value)");
    sub->add_option("--set", overrides, "Override a config key: KEY=VALUE")
        ->allow_extra_args(false);
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--jobs", jobs, "Worker threads")
        ->check(CLI::PositiveNumber);
  };
  CLI::App* simulate = app.add_subcommand("simulate", "Per-period trace CSV");
  CLI::App* compare =
      app.add_subcommand("compare", "Improvement over random, per budget");
  CLI::App* estimate =
      app.add_subcommand("estimate", "True vs estimated prevalence");
  for (CLI::App* sub : {simulate, compare, estimate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    ParsedConfig parsed =
        config_path.empty() ? ParsedConfig{} : load_config(config_path);
    for (const std::string& assignment : overrides) {
      apply_override(parsed, assignment);
    }
    apply_command_defaults(command, parsed);
    SimConfig& config = parsed.config;
    if (seed) config.seed = seed;
    if (!config.seed) {
      throw ConfigError("a master seed is required (config key 'seed' or --seed)");
    }
    validate(config);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    std::vector<std::string> outputs;
    if (command == "simulate") {
      const std::string path = (dir / "trace.csv").string();
      write_file(path, to_csv(simulate_table(config, *config.seed, jobs)));
      outputs.push_back(path);
    } else if (command == "compare") {
      const std::string path = (dir / "compare.csv").string();
      write_file(path, to_csv(compare_table(config, *config.seed, jobs, &err)));
      outputs.push_back(path);
    } else {
      const EstimationTables tables = estimate_tables(config, *config.seed, jobs);
      const std::string runs_path = (dir / "estimate.csv").string();
      const std::string summary_path = (dir / "estimate_summary.csv").string();
      write_file(runs_path, to_csv(tables.runs));
      write_file(summary_path, to_csv(tables.summary));
      outputs = {runs_path, summary_path};
    }
    const std::string manifest_path =
        (dir / (command + "_manifest.cfg")).string();
    write_file(manifest_path, manifest_text(command, config, outputs));
    for (const std::string& path : outputs) out << "wrote " << path << "\n";
    out << "wrote " << manifest_path << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvariant;
  }
}

}  // namespace testalloc
