#pragma once

// Subcommands of the ehaoi tool. Each returns the process exit code and writes
// diagnostics to `err`; none of them throw.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ehaoi::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitNotConverged = 2,
  kExitPropertyViolation = 3,
};

struct GlobalOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;  ///< 0 = hardware concurrency
};

struct SolveArgs {
  bool dump_kernel = false;
};

struct SweepArgs {
  std::vector<std::string> axes;  ///< "name=values" specs, first is slowest
};

struct PolicyTableArgs {
  int z = 0;
  std::optional<int> z_d;  ///< defaults: z when the other AoI is 0, 1 - z at its cap
  int other_aoi = 0;
};

struct SimulateArgs {
  /// optimal | never | always | alarm_only | random:<p> | path to a policy CSV
  std::vector<std::string> policies{"optimal"};
  std::optional<long> episodes;
  std::optional<int> horizon;
};

struct CheckArgs {
  std::optional<std::filesystem::path> policy_csv;  ///< threshold-check this policy instead
  bool reachable_only = false;
};

struct TraceArgs {
  std::string policy = "optimal";
  int horizon = 1000;
};

int cmd_solve(const GlobalOptions& g, const SolveArgs& args, std::ostream& err);
int cmd_sweep(const GlobalOptions& g, const SweepArgs& args, std::ostream& err);
int cmd_policy_table(const GlobalOptions& g, const PolicyTableArgs& args, std::ostream& err);
int cmd_simulate(const GlobalOptions& g, const SimulateArgs& args, std::ostream& err);
int cmd_check(const GlobalOptions& g, const CheckArgs& args, std::ostream& err);
int cmd_trace(const GlobalOptions& g, const TraceArgs& args, std::ostream& err);

}  // namespace ehaoi::cli
