#include "ehaoi/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ehaoi/parallel.hpp"

namespace ehaoi {

namespace {

double expected_value(std::span<const Atom> row, const ValueFunction& v) {
  double acc = 0.0;
  for (const Atom& a : row) acc += a.probability * v[a.successor];
  return acc;
}

bool masked_out(const StateMask* mask, std::size_t i) { return mask != nullptr && (*mask)[i] == 0; }

// Calls visit(lower_d0, lower_d1, upper_d0, upper_d1) for every element-wise
// ordered pair of AoI tuples on the grid.
template <typename Visit>
void for_each_ordered_pair(int d_max0, int d_max1, Visit&& visit) {
  for (int l0 = 0; l0 <= d_max0; ++l0)
    for (int l1 = 0; l1 <= d_max1; ++l1)
      for (int u0 = l0; u0 <= d_max0; ++u0)
        for (int u1 = l1; u1 <= d_max1; ++u1) visit(l0, l1, u0, u1);
}

}  // namespace

NotConverged::NotConverged(Solution partial)
    : std::runtime_error("value iteration did not converge within " + std::to_string(partial.report.iterations) +
                         " iterations (residual " + std::to_string(partial.report.residual) + ")"),
      partial_(std::move(partial)) {}

double bellman_backup(const ValueFunction& v, const TransitionKernel& kernel, ValueFunction& out, unsigned threads) {
  const std::size_t n = kernel.num_states();
  const double gamma = kernel.config().gamma;
  out.values.resize(n);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n));
  std::vector<double> deltas(std::max(1u, workers), 0.0);

  // Chunk boundaries mirror parallel_for, so chunk w owns deltas[w].
  const std::size_t chunk = workers > 1 ? (n + workers - 1) / workers : n;
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    double local = 0.0;
    for (std::size_t s = begin; s < end; ++s) {
      double best = expected_value(kernel.row(s, Action::kHold), v);
      if (kernel.can_transmit(s)) best = std::min(best, expected_value(kernel.row(s, Action::kTransmit), v));
      const double updated = kernel.cost(s) + gamma * best;
      local = std::max(local, std::abs(updated - v[s]));
      out[s] = updated;
    }
    if (begin < end) deltas[chunk == 0 ? 0 : begin / chunk] = local;
  });
  return *std::max_element(deltas.begin(), deltas.end());
}

BackupResult bellman_backup(const ValueFunction& v, const TransitionKernel& kernel) {
  BackupResult r;
  r.delta = bellman_backup(v, kernel, r.value);
  return r;
}

Solution value_iteration(const TransitionKernel& kernel, const SolveOptions& options) {
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  const double gamma = kernel.config().gamma;
  ValueFunction current(kernel.num_states(), 0.0);
  ValueFunction next(kernel.num_states(), 0.0);

  SolveReport report;
  report.residual = std::numeric_limits<double>::infinity();
  while (report.iterations < options.max_iterations) {
    report.residual = bellman_backup(current, kernel, next, options.threads);
    ++report.iterations;
    std::swap(current, next);
    if (report.residual < options.tolerance) {
      report.converged = true;
      break;
    }
  }
  report.optimality_bound = gamma * report.residual / (1.0 - gamma);

  Solution solution;
  solution.policy = extract_policy(current, kernel);
  solution.value = std::move(current);
  solution.report = report;
  if (!report.converged) throw NotConverged(std::move(solution));
  return solution;
}

Solution value_iteration(const ScenarioConfig& cfg, double tolerance, long max_iterations) {
  SolveOptions options;
  options.tolerance = tolerance;
  options.max_iterations = max_iterations;
  return value_iteration(build_kernel(cfg), options);
}

double action_value_gap(const ValueFunction& v, const TransitionKernel& kernel, std::size_t state) {
  if (!kernel.can_transmit(state)) return 0.0;
  // The stage cost is action-independent and cancels.
  const double hold = expected_value(kernel.row(state, Action::kHold), v);
  const double transmit = expected_value(kernel.row(state, Action::kTransmit), v);
  return kernel.config().gamma * (transmit - hold);
}

double action_value_gap(const ValueFunction& v, const TransitionKernel& kernel, const SystemState& s) {
  return action_value_gap(v, kernel, kernel.space().index_of(s));
}

Policy extract_policy(const ValueFunction& v, const TransitionKernel& kernel) {
  Policy p(kernel.num_states());
  for (std::size_t s = 0; s < kernel.num_states(); ++s) {
    if (action_value_gap(v, kernel, s) < -kTieTolerance) p[s] = Action::kTransmit;
  }
  return p;
}

ValueFunction finite_horizon_oracle(const ScenarioConfig& raw, int horizon) {
  if (horizon < 1) throw std::invalid_argument("oracle horizon must be >= 1");
  const StateSpace space(raw);
  const ScenarioConfig& cfg = space.config();
  const std::size_t n = space.size();

  ValueFunction later(n, 0.0);
  ValueFunction now(n, 0.0);
  for (int stage = 0; stage < horizon; ++stage) {
    for (std::size_t i = 0; i < n; ++i) {
      const SystemState s = space.state_of(i);
      double best = std::numeric_limits<double>::infinity();
      for (Action a : admissible_actions(s)) {
        const double success = a == Action::kTransmit ? cfg.p_s : 0.0;
        double expect = 0.0;
        for (int w_s = 0; w_s < 2; ++w_s) {
          const double p_s = w_s == 1 ? success : 1.0 - success;
          for (int w_e = 0; w_e < 2; ++w_e) {
            const double p_e = w_e == 1 ? cfg.p_e : 1.0 - cfg.p_e;
            for (int w_z = 0; w_z < 2; ++w_z) {
              const double p = p_s * p_e * cfg.p_z[s.z][w_z];
              if (p == 0.0) continue;
              expect += p * later[space.index_of(next_state(s, a, {w_s, w_e, w_z}, cfg))];
            }
          }
        }
        best = std::min(best, expect);
      }
      now[i] = stage_cost(s, cfg) + cfg.gamma * best;
    }
    std::swap(now, later);
  }
  return later;
}

StructureReport check_threshold_structure(const Policy& policy, const StateSpace& space, const StateMask* mask) {
  const ScenarioConfig& cfg = space.config();
  if (policy.size() != space.size()) throw std::invalid_argument("policy size does not match the state space");
  StructureReport report;
  for (int z = 0; z < 2; ++z)
    for (int z_d = 0; z_d < 2; ++z_d)
      for (int e = 0; e <= cfg.e_max; ++e) {
        for_each_ordered_pair(cfg.d_max0, cfg.d_max1, [&](int l0, int l1, int u0, int u1) {
          const std::size_t lo = space.unchecked_index({z, z_d, e, l0, l1});
          const std::size_t hi = space.unchecked_index({z, z_d, e, u0, u1});
          if (masked_out(mask, lo) || masked_out(mask, hi)) return;
          if (policy[lo] == Action::kTransmit && policy[hi] == Action::kHold) {
            report.violations.push_back({z, z_d, e, l0, l1, u0, u1, 0.0});
          }
        });
      }
  report.holds = report.violations.empty();
  return report;
}

StructureReport check_gap_monotonicity(const ValueFunction& v, const TransitionKernel& kernel, double slack,
                                       const StateMask* mask) {
  const StateSpace& space = kernel.space();
  const ScenarioConfig& cfg = space.config();
  std::vector<double> gap(space.size());
  for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = action_value_gap(v, kernel, i);

  StructureReport report;
  for (int z = 0; z < 2; ++z)
    for (int z_d = 0; z_d < 2; ++z_d)
      for (int e = 0; e <= cfg.e_max; ++e) {
        if (e == 0) {
          // Exactly zero, no slack.
          for (int d0 = 0; d0 <= cfg.d_max0; ++d0)
            for (int d1 = 0; d1 <= cfg.d_max1; ++d1) {
              const std::size_t i = space.unchecked_index({z, z_d, 0, d0, d1});
              if (!masked_out(mask, i) && gap[i] != 0.0) {
                report.violations.push_back({z, z_d, 0, d0, d1, d0, d1, std::abs(gap[i])});
              }
            }
          continue;
        }
        for_each_ordered_pair(cfg.d_max0, cfg.d_max1, [&](int l0, int l1, int u0, int u1) {
          const std::size_t lo = space.unchecked_index({z, z_d, e, l0, l1});
          const std::size_t hi = space.unchecked_index({z, z_d, e, u0, u1});
          if (masked_out(mask, lo) || masked_out(mask, hi)) return;
          const double excess = gap[hi] - gap[lo];
          if (excess > slack) report.violations.push_back({z, z_d, e, l0, l1, u0, u1, excess});
        });
      }
  report.holds = report.violations.empty();
  return report;
}

StructureReport check_lemma1_inequality(const ValueFunction& v, const ScenarioConfig& raw, double slack,
                                        const StateMask* mask) {
  const StateSpace space(raw);
  const ScenarioConfig& cfg = space.config();
  if (v.size() != space.size()) throw std::invalid_argument("value function size does not match the state space");
  const double keep = 1.0 - cfg.p_s;

  StructureReport report;
  for (int z = 0; z < 2; ++z)
    for (int z_d = 0; z_d < 2; ++z_d)
      for (int e = 1; e <= cfg.e_max; ++e) {
        for_each_ordered_pair(cfg.d_max0, cfg.d_max1, [&](int l0, int l1, int u0, int u1) {
          const std::size_t lo = space.unchecked_index({z, z_d, e, l0, l1});
          const std::size_t hi = space.unchecked_index({z, z_d, e, u0, u1});
          const std::size_t lo_below = space.unchecked_index({z, z_d, e - 1, l0, l1});
          const std::size_t hi_below = space.unchecked_index({z, z_d, e - 1, u0, u1});
          if (masked_out(mask, lo) || masked_out(mask, hi) || masked_out(mask, lo_below) ||
              masked_out(mask, hi_below)) {
            return;
          }
          const double lhs = keep * (v[hi_below] - v[lo_below]);
          const double rhs = v[hi] - v[lo];
          if (lhs - rhs > slack) report.violations.push_back({z, z_d, e, l0, l1, u0, u1, lhs - rhs});
        });
      }
  report.holds = report.violations.empty();
  return report;
}

StateMask make_mask(std::size_t size, const std::vector<StateIndex>& states) {
  StateMask mask(size, 0);
  for (StateIndex i : states) mask.at(i) = 1;
  return mask;
}

}  // namespace ehaoi
