// ehaoi: solve, sweep, check and simulate the energy-harvesting AoI MDP.

#include <iostream>

#include "CLI11.hpp"
#include "cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace ehaoi::cli;

  CLI::App app{"Optimal status-update policies for an energy-harvesting sensor monitoring a two-state source"};
  app.require_subcommand(1);

  GlobalOptions global;
  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  app.add_option("--config", config, "Configuration file (key = value)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory for CSV files");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed for simulations (overrides mc.seed)");
  app.add_option("--threads", global.threads, "Worker threads, 0 = auto");

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Value iteration; writes value, policy and report tables");
  solve->add_flag("--dump-kernel", solve_args.dump_kernel, "Also write the sparse transition kernel");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Solve a grid of configurations and tabulate J*(s0)");
  sweep->add_option("--axis", sweep_args.axes, "name=v1,v2,... or name=start:stop:step (p_e, p_s, e_max, p01, p10)")
      ->required();

  PolicyTableArgs table_args;
  int slice_zd = -1;
  auto* table = app.add_subcommand("policy-table", "Optimal actions over (e, AoI of the active state) for one slice");
  table->add_option("--z", table_args.z, "Source state of the slice")->required();
  table->add_option("--zd", slice_zd, "Known state of the slice (default inferred from --other-aoi)");
  table->add_option("--other-aoi", table_args.other_aoi, "AoI of the inactive state");

  SimulateArgs sim_args;
  long episodes = 0;
  int horizon = 0;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of the discounted cost from s0");
  simulate->add_option("--policy", sim_args.policies,
                       "optimal | never | always | alarm_only | random:<p> | policy CSV (repeatable)");
  auto* episodes_opt = simulate->add_option("--episodes", episodes, "Episodes (overrides mc.episodes)");
  auto* horizon_opt = simulate->add_option("--horizon", horizon, "Slots per episode (overrides mc.horizon)");

  CheckArgs check_args;
  std::string check_policy;
  auto* check = app.add_subcommand("check", "Solve and verify threshold structure, gap monotonicity and the energy-level inequality");
  check->add_option("--policy", check_policy, "Policy CSV to threshold-check instead of the optimal policy");
  check->add_flag("--reachable-only", check_args.reachable_only, "Restrict checks to states reachable from s0");

  TraceArgs trace_args;
  auto* trace = app.add_subcommand("trace", "One simulated episode with recursive and history-based AoI columns");
  trace->add_option("--policy", trace_args.policy, "Policy source, as for simulate");
  trace->add_option("--horizon", trace_args.horizon, "Slots to simulate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInputError;
  }

  global.config = config;
  global.out_dir = out_dir;
  if (seed_opt->count() > 0) global.seed = seed;

  if (*solve) return cmd_solve(global, solve_args, std::cerr);
  if (*sweep) return cmd_sweep(global, sweep_args, std::cerr);
  if (*table) {
    if (slice_zd >= 0) table_args.z_d = slice_zd;
    return cmd_policy_table(global, table_args, std::cerr);
  }
  if (*simulate) {
    if (sim_args.policies.empty()) sim_args.policies = {"optimal"};
    if (episodes_opt->count() > 0) sim_args.episodes = episodes;
    if (horizon_opt->count() > 0) sim_args.horizon = horizon;
    return cmd_simulate(global, sim_args, std::cerr);
  }
  if (*check) {
    if (!check_policy.empty()) check_args.policy_csv = check_policy;
    return cmd_check(global, check_args, std::cerr);
  }
  if (*trace) return cmd_trace(global, trace_args, std::cerr);
  return kExitInputError;
}
