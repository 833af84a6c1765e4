#include "cli/commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cli/experiment.hpp"
#include "ehaoi/csv.hpp"
#include "ehaoi/kernel.hpp"
#include "ehaoi/parallel.hpp"
#include "ehaoi/simulator.hpp"
#include "ehaoi/solver.hpp"

namespace ehaoi::cli {

namespace {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream open_output(const GlobalOptions& g, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(g.out_dir, ec);
  const auto path = g.out_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void write_value_csv(std::ostream& out, const StateSpace& space, const ValueFunction& v) {
  CsvWriter csv(out);
  csv.header({"index", "z", "z_d", "e", "d0", "d1", "value"});
  for (std::size_t i = 0; i < space.size(); ++i) {
    const SystemState s = space.state_of(i);
    csv.row(i, s.z, s.z_d, s.e, s.d0, s.d1, v[i]);
  }
}

void write_policy_csv(std::ostream& out, const StateSpace& space, const Policy& p) {
  CsvWriter csv(out);
  csv.header({"index", "z", "z_d", "e", "d0", "d1", "action"});
  for (std::size_t i = 0; i < space.size(); ++i) {
    const SystemState s = space.state_of(i);
    csv.row(i, s.z, s.z_d, s.e, s.d0, s.d1, to_int(p[i]));
  }
}

void write_report_csv(std::ostream& out, const SolveReport& r, double j_star_s0) {
  CsvWriter csv(out);
  csv.header({"iterations", "residual", "optimality_bound", "converged", "J_star_s0"});
  csv.row(r.iterations, r.residual, r.optimality_bound, r.converged, j_star_s0);
}

void write_violations_csv(std::ostream& out, const StructureReport& report) {
  CsvWriter csv(out);
  csv.header({"z", "z_d", "e", "lower_d0", "lower_d1", "upper_d0", "upper_d1", "excess"});
  for (const Violation& v : report.violations) {
    csv.row(v.z, v.z_d, v.e, v.lower_d0, v.lower_d1, v.upper_d0, v.upper_d1, v.excess);
  }
}

// Reads the format written by write_policy_csv. Rows must cover the state
// space in index order with admissible actions.
Policy read_policy_csv(const std::filesystem::path& path, const StateSpace& space) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read policy file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError("policy file is empty");
  Policy policy(space.size());
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<long long> values;
    while (std::getline(fields, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stoll(cell, &used));
        if (used != cell.size() && !(used + 1 == cell.size() && cell.back() == '\r')) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputError("policy file row " + std::to_string(rows + 1) + ": malformed field '" + cell + "'");
      }
    }
    if (values.size() != 7) throw InputError("policy file row " + std::to_string(rows + 1) + ": expected 7 columns");
    if (rows >= space.size()) throw InputError("policy file has more rows than the state space");
    if (values[0] != static_cast<long long>(rows)) throw InputError("policy file rows must be in index order");
    const SystemState s = space.state_of(rows);
    if (values[1] != s.z || values[2] != s.z_d || values[3] != s.e || values[4] != s.d0 || values[5] != s.d1) {
      throw InputError("policy file row " + std::to_string(rows) + " does not match state " + to_string(s));
    }
    if (values[6] != 0 && values[6] != 1) throw InputError("policy action must be 0 or 1");
    const Action a = values[6] == 1 ? Action::kTransmit : Action::kHold;
    if (!is_admissible(s, a)) throw InputError("inadmissible transmit action at " + to_string(s));
    policy[rows] = a;
    ++rows;
  }
  if (rows != space.size()) {
    throw InputError("policy file has " + std::to_string(rows) + " rows, expected " + std::to_string(space.size()));
  }
  return policy;
}

struct Solved {
  TransitionKernel kernel;
  Solution solution;
};

// Throws NotConverged.
Solved solve(const ExperimentSpec& spec, unsigned threads) {
  TransitionKernel kernel = build_kernel(spec.base, threads);
  SolveOptions options = spec.solver;
  options.threads = threads;
  Solution solution = value_iteration(kernel, options);
  return {std::move(kernel), std::move(solution)};
}

DecisionRule resolve_policy(const std::string& source, const ExperimentSpec& spec, unsigned threads) {
  const StateSpace space(spec.base);
  if (source == "optimal") return DecisionRule::from_table(solve(spec, threads).solution.policy, "optimal");
  if (source == "never") return make_baseline(BaselineKind::kNever, space);
  if (source == "always") return make_baseline(BaselineKind::kAlways, space);
  if (source == "alarm_only") return make_baseline(BaselineKind::kAlarmOnly, space);
  if (source.rfind("random:", 0) == 0) {
    double p = 0.0;
    try {
      p = std::stod(source.substr(7));
    } catch (const std::exception&) {
      throw InputError("malformed random policy '" + source + "'");
    }
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("random policy probability must lie in [0, 1]");
    return make_baseline(BaselineKind::kRandom, space, p);
  }
  return DecisionRule::from_table(read_policy_csv(source, space), source);
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const NotConverged& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace

int cmd_solve(const GlobalOptions& g, const SolveArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentSpec spec = load_experiment(g.config);
    const TransitionKernel kernel = build_kernel(spec.base, g.threads);
    SolveOptions options = spec.solver;
    options.threads = g.threads;

    int code = kExitOk;
    Solution solution;
    try {
      solution = value_iteration(kernel, options);
    } catch (const NotConverged& e) {
      err << "error: " << e.what() << '\n';
      solution = e.partial();
      code = kExitNotConverged;
    }
    const StateSpace& space = kernel.space();
    auto value_out = open_output(g, "value.csv");
    write_value_csv(value_out, space, solution.value);
    auto policy_out = open_output(g, "policy.csv");
    write_policy_csv(policy_out, space, solution.policy);
    auto report_out = open_output(g, "solve_report.csv");
    write_report_csv(report_out, solution.report, solution.value[space.index_of(spec.s0)]);
    if (args.dump_kernel) {
      auto kernel_out = open_output(g, "kernel.csv");
      write_kernel_csv(kernel_out, kernel);
    }
    return code;
  });
}

int cmd_sweep(const GlobalOptions& g, const SweepArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    ExperimentSpec spec = load_experiment(g.config);
    for (const std::string& a : args.axes) spec.axes.push_back(parse_axis(a));
    const std::vector<SweepPoint> points = expand_sweep(spec);

    struct Outcome {
      double j_star = 0.0;
      SolveReport report;
    };
    std::vector<Outcome> outcomes(points.size());
    // Points run concurrently; each solve is single-threaded.
    parallel_for(points.size(), g.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const TransitionKernel kernel = build_kernel(points[i].config);
        SolveOptions options = spec.solver;
        options.threads = 1;
        Solution solution;
        try {
          solution = value_iteration(kernel, options);
        } catch (const NotConverged& e) {
          solution = e.partial();
        }
        outcomes[i] = {solution.value[kernel.space().index_of(spec.s0)], solution.report};
      }
    });

    auto out = open_output(g, "sweep.csv");
    CsvWriter csv(out);
    std::vector<std::string> columns;
    for (const SweepAxis& axis : spec.axes) columns.push_back(axis.name);
    columns.insert(columns.end(), {"J_star_s0", "iterations", "residual"});
    for (std::size_t c = 0; c < columns.size(); ++c) csv.cell(columns[c], c == 0);
    csv.end_row();
    int code = kExitOk;
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (std::size_t a = 0; a < points[i].coordinates.size(); ++a) csv.cell(points[i].coordinates[a], a == 0);
      csv.cell(outcomes[i].j_star, points[i].coordinates.empty());
      csv.cell(outcomes[i].report.iterations, false);
      csv.cell(outcomes[i].report.residual, false);
      csv.end_row();
      if (!outcomes[i].report.converged) code = kExitNotConverged;
    }
    if (code != kExitOk) err << "error: at least one sweep point did not converge\n";
    return code;
  });
}

int cmd_policy_table(const GlobalOptions& g, const PolicyTableArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentSpec spec = load_experiment(g.config);
    const ScenarioConfig& cfg = spec.base;
    if (args.z != 0 && args.z != 1) throw InputError("slice z must be 0 or 1");
    const int other = 1 - args.z;
    const int other_cap = cfg.aoi_cap(other);
    if (args.other_aoi < 0 || args.other_aoi > other_cap) {
      throw InputError("other AoI " + std::to_string(args.other_aoi) + " outside [0, " + std::to_string(other_cap) +
                       "]");
    }
    int z_d = 0;
    if (args.z_d) {
      if (*args.z_d != 0 && *args.z_d != 1) throw InputError("slice z_d must be 0 or 1");
      z_d = *args.z_d;
    } else if (args.other_aoi == 0) {
      z_d = args.z;
    } else if (args.other_aoi == other_cap) {
      z_d = other;
    } else {
      throw InputError("z_d must be given when the other AoI is neither 0 nor its cap");
    }

    const Solved solved = solve(spec, g.threads);
    const StateSpace& space = solved.kernel.space();
    const int cap = cfg.aoi_cap(args.z);
    auto out = open_output(g, "policy_table.csv");
    CsvWriter csv(out);
    csv.cell("e", true);
    for (int d = 0; d <= cap; ++d) csv.cell("aoi_" + std::to_string(d), false);
    csv.end_row();
    for (int e = 0; e <= cfg.e_max; ++e) {
      csv.cell(e, true);
      for (int d = 0; d <= cap; ++d) {
        SystemState s{args.z, z_d, e, 0, 0};
        (args.z == 0 ? s.d0 : s.d1) = d;
        (args.z == 0 ? s.d1 : s.d0) = args.other_aoi;
        csv.cell(to_int(solved.solution.policy[space.index_of(s)]), false);
      }
      csv.end_row();
    }
    return kExitOk;
  });
}

int cmd_simulate(const GlobalOptions& g, const SimulateArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentSpec spec = load_experiment(g.config);
    const long episodes = args.episodes.value_or(spec.mc.episodes);
    int horizon = args.horizon.value_or(spec.mc.horizon);
    if (horizon == 0) horizon = default_horizon(spec.base);
    const std::uint64_t seed = g.seed.value_or(spec.mc.seed);

    std::vector<std::pair<std::string, EvalSummary>> rows;
    for (const std::string& source : args.policies) {
      const DecisionRule rule = resolve_policy(source, spec, g.threads);
      rows.emplace_back(source, evaluate_policy_mc(rule, spec.base, spec.s0, horizon, episodes, seed, g.threads));
    }
    auto out = open_output(g, "summary.csv");
    CsvWriter csv(out);
    csv.header({"policy", "mean", "std_error", "n_episodes", "horizon", "truncation_bound"});
    for (const auto& [name, s] : rows) {
      csv.row(name, s.mean_discounted_cost, s.std_error, s.n_episodes, s.horizon, s.truncation_bound);
    }
    return kExitOk;
  });
}

int cmd_check(const GlobalOptions& g, const CheckArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentSpec spec = load_experiment(g.config);
    const Solved solved = solve(spec, g.threads);
    const TransitionKernel& kernel = solved.kernel;
    const StateSpace& space = kernel.space();

    StateMask mask;
    const StateMask* scope = nullptr;
    if (args.reachable_only) {
      mask = make_mask(space.size(), reachable_states(kernel, spec.s0));
      scope = &mask;
    }
    const Policy policy = args.policy_csv ? read_policy_csv(*args.policy_csv, space) : solved.solution.policy;

    const StructureReport threshold = check_threshold_structure(policy, space, scope);
    const StructureReport gap = check_gap_monotonicity(solved.solution.value, kernel, kCheckSlack, scope);
    const StructureReport energy = check_lemma1_inequality(solved.solution.value, spec.base, kCheckSlack, scope);

    auto summary = open_output(g, "check_summary.csv");
    CsvWriter csv(summary);
    csv.header({"check", "holds", "violations"});
    csv.row("threshold_structure", threshold.holds, threshold.violations.size());
    csv.row("gap_monotonicity", gap.holds, gap.violations.size());
    csv.row("energy_inequality", energy.holds, energy.violations.size());
    auto t_out = open_output(g, "threshold_violations.csv");
    write_violations_csv(t_out, threshold);
    auto g_out = open_output(g, "gap_violations.csv");
    write_violations_csv(g_out, gap);
    auto l_out = open_output(g, "energy_inequality_violations.csv");
    write_violations_csv(l_out, energy);

    if (threshold.holds && gap.holds && energy.holds) return kExitOk;
    err << "property violation: threshold=" << threshold.violations.size() << " gap=" << gap.violations.size()
        << " energy_inequality=" << energy.violations.size() << '\n';
    return kExitPropertyViolation;
  });
}

int cmd_trace(const GlobalOptions& g, const TraceArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentSpec spec = load_experiment(g.config);
    if (args.horizon < 1) throw InputError("horizon must be >= 1");
    const DecisionRule rule = resolve_policy(args.policy, spec, g.threads);
    const std::uint64_t seed = g.seed.value_or(spec.mc.seed);
    const EpisodeTrace trace = simulate_episode(rule, spec.base, spec.s0, args.horizon, seed);
    const std::vector<AoiPair> direct = direct_aoi_trace(trace);

    auto out = open_output(g, "trace.csv");
    CsvWriter csv(out);
    csv.header({"k", "z", "z_d", "e", "d0", "d1", "action", "w_s", "w_e", "w_z", "cost", "direct_d0", "direct_d1",
                "consistent"});
    bool all_consistent = true;
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
      const TraceStep& st = trace.steps[k];
      const bool ok = st.state.d0 == direct[k].d0 && st.state.d1 == direct[k].d1;
      all_consistent = all_consistent && ok;
      csv.row(k, st.state.z, st.state.z_d, st.state.e, st.state.d0, st.state.d1, to_int(st.action), st.w.w_s, st.w.w_e,
              st.w.w_z, st.cost, direct[k].d0, direct[k].d1, ok);
    }
    const AoiPair last = direct.back();
    all_consistent = all_consistent && last.d0 == trace.final_state.d0 && last.d1 == trace.final_state.d1;
    if (all_consistent) return kExitOk;
    err << "AoI mismatch between the recursive and the history-based definition\n";
    return kExitPropertyViolation;
  });
}

}  // namespace ehaoi::cli
