#pragma once

// Discounted-cost Bellman machinery and numerical checkers for the structural
// properties of optimal solutions (threshold policies, monotone action-value
// gaps, the energy-level value-difference inequality).

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ehaoi/kernel.hpp"
#include "ehaoi/model.hpp"

namespace ehaoi {

struct ValueFunction {
  std::vector<double> values;

  ValueFunction() = default;
  explicit ValueFunction(std::size_t n, double fill = 0.0) : values(n, fill) {}

  [[nodiscard]] std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

struct Policy {
  std::vector<Action> actions;

  Policy() = default;
  explicit Policy(std::size_t n, Action fill = Action::kHold) : actions(n, fill) {}

  [[nodiscard]] std::size_t size() const { return actions.size(); }
  Action& operator[](std::size_t i) { return actions[i]; }
  Action operator[](std::size_t i) const { return actions[i]; }

  friend bool operator==(const Policy&, const Policy&) = default;
};

struct SolveOptions {
  double tolerance = 1e-9;
  long max_iterations = 100000;
  unsigned threads = 1;
};

struct SolveReport {
  long iterations = 0;
  double residual = 0.0;          ///< sup-norm of the last Bellman update
  double optimality_bound = 0.0;  ///< gamma * residual / (1 - gamma)
  bool converged = false;
};

struct Solution {
  ValueFunction value;
  Policy policy;
  SolveReport report;
};

/// Value iteration hit its iteration cap; the partial solution is attached.
class NotConverged : public std::runtime_error {
 public:
  explicit NotConverged(Solution partial);
  [[nodiscard]] const Solution& partial() const { return partial_; }

 private:
  Solution partial_;
};

/// Absolute tolerance below which the transmit/hold gap counts as a tie.
inline constexpr double kTieTolerance = 1e-12;
/// Default numerical slack of the structure checkers.
inline constexpr double kCheckSlack = 1e-8;

/// out[s] = min_a sum_{s'} P(s'|s,a) (g(s) + gamma v[s']). Returns the sup-norm
/// of out - v. `out` is resized as needed and must not alias `v`.
double bellman_backup(const ValueFunction& v, const TransitionKernel& kernel, ValueFunction& out,
                      unsigned threads = 1);

struct BackupResult {
  ValueFunction value;
  double delta;
};
BackupResult bellman_backup(const ValueFunction& v, const TransitionKernel& kernel);

/// Synchronous value iteration from V = 0. Throws NotConverged when the
/// residual is still >= tolerance after max_iterations backups.
Solution value_iteration(const TransitionKernel& kernel, const SolveOptions& options = {});
Solution value_iteration(const ScenarioConfig& cfg, double tolerance, long max_iterations);

/// Q(s, transmit) - Q(s, hold); exactly 0 on an empty buffer.
double action_value_gap(const ValueFunction& v, const TransitionKernel& kernel, std::size_t state);
double action_value_gap(const ValueFunction& v, const TransitionKernel& kernel, const SystemState& s);

/// Greedy policy: transmit iff the gap is below -kTieTolerance.
Policy extract_policy(const ValueFunction& v, const TransitionKernel& kernel);

/// N-stage discounted cost with zero terminal value by plain backward
/// induction. Enumerates disturbances directly and shares no code with the
/// kernel or the value-iteration backup.
ValueFunction finite_horizon_oracle(const ScenarioConfig& cfg, int horizon);

/// One witness of a structural property failing. The slice key is
/// (z, z_d, e); `lower` <= `upper` element-wise in (d0, d1).
struct Violation {
  int z = 0;
  int z_d = 0;
  int e = 0;
  int lower_d0 = 0;
  int lower_d1 = 0;
  int upper_d0 = 0;
  int upper_d1 = 0;
  double excess = 0.0;  ///< how far the inequality is violated (0 for policy checks)
};

struct StructureReport {
  bool holds = true;
  std::vector<Violation> violations;
};

/// Optional per-state inclusion mask; pairs touching an excluded state are skipped.
using StateMask = std::vector<unsigned char>;

/// Transmit region of every (z, z_d, e) slice must be up-closed in (d0, d1).
StructureReport check_threshold_structure(const Policy& policy, const StateSpace& space,
                                          const StateMask* mask = nullptr);

/// Within every slice, gap(upper) <= gap(lower) + slack; gap == 0 exactly at e = 0.
StructureReport check_gap_monotonicity(const ValueFunction& v, const TransitionKernel& kernel,
                                       double slack = kCheckSlack, const StateMask* mask = nullptr);

/// For every (z, z_d), e in [1, e_max] and (d0, d1) pairs upper >= lower:
/// (1 - p_s) [V(e-1, upper) - V(e-1, lower)] <= V(e, upper) - V(e, lower) + slack.
StructureReport check_lemma1_inequality(const ValueFunction& v, const ScenarioConfig& cfg,
                                        double slack = kCheckSlack, const StateMask* mask = nullptr);

/// Mask with 1 at every index in `states`.
StateMask make_mask(std::size_t size, const std::vector<StateIndex>& states);

}  // namespace ehaoi
