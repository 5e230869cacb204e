#ifndef TESTALLOC_CLI_H_
#define TESTALLOC_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "testalloc/csv.h"
#include "testalloc/sim_engine.h"

namespace testalloc {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInvariant = 2,
};

// Per-unit, per-period trace for every budget and replication.
CsvTable simulate_table(const SimConfig& config, std::uint64_t seed, int jobs);

// Paired comparison of every configured strategy against random, over the
// budget, gamma and unit-count sweeps.
CsvTable compare_table(const SimConfig& config, std::uint64_t seed, int jobs,
                       std::ostream* progress = nullptr);

// Per-period true and estimated prevalence, plus the per-(budget, t) bands.
struct EstimationTables {
  CsvTable runs;
  CsvTable summary;
};
EstimationTables estimate_tables(const SimConfig& config, std::uint64_t seed,
                                 int jobs);

// Full command line entry point. Returns an ExitCode.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace testalloc

#endif  // TESTALLOC_CLI_H_
