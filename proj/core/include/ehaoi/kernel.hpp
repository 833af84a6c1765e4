#pragma once

// Single-slot dynamics, disturbance law, stage cost and the sparse transition
// kernel assembled from them.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "ehaoi/model.hpp"

namespace ehaoi {

/// Thrown when a disturbance breaks the forcing rule (w_s = 1 without a
/// transmission backed by energy) or has non-binary components.
class InvalidDisturbance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an action is not admissible at the given state.
class InadmissibleAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WeightedDisturbance {
  RandomVector w;
  double probability;
};

struct WeightedState {
  SystemState state;
  double probability;
};

/// Single successor of a kernel row.
struct Atom {
  StateIndex successor;
  double probability;
};

[[nodiscard]] inline bool is_admissible(const SystemState& s, Action a) { return a == Action::kHold || s.e > 0; }

/// {hold} on an empty buffer, {hold, transmit} otherwise.
std::vector<Action> admissible_actions(const SystemState& s);

/// Applies one slot of dynamics. Throws InadmissibleAction / InvalidDisturbance
/// on precondition violations. A unit harvested into a full buffer is discarded.
SystemState next_state(const SystemState& s, Action a, const RandomVector& w, const ScenarioConfig& cfg);

/// True when the slot would push the buffer above e_max (the harvested unit is lost).
[[nodiscard]] bool energy_overflows(const SystemState& s, Action a, const RandomVector& w, const ScenarioConfig& cfg);

/// Product law of (w_s, w_e, w_z) given the state and action. Zero-probability
/// atoms are omitted. Throws InadmissibleAction for transmit on an empty buffer.
std::vector<WeightedDisturbance> disturbance_distribution(const SystemState& s, Action a, const ScenarioConfig& cfg);

/// Successor distribution with duplicate successors merged, ordered by state
/// index. Transmit on an empty buffer is treated as hold, matching the kernel.
std::vector<WeightedState> transition_distribution(const SystemState& s, Action a, const ScenarioConfig& cfg);

/// (1 - z) f(d0) + z h(d1); independent of the action and the disturbance.
double stage_cost(const SystemState& s, const ScenarioConfig& cfg);

/// Sparse (state, action) -> successor table in compressed-row form. Rows for
/// the transmit action at e = 0 duplicate the hold row.
class TransitionKernel {
 public:
  TransitionKernel(StateSpace space, std::vector<std::size_t> row_offsets, std::vector<Atom> atoms,
                   std::vector<double> stage_costs);

  [[nodiscard]] const StateSpace& space() const { return space_; }
  [[nodiscard]] const ScenarioConfig& config() const { return space_.config(); }
  [[nodiscard]] std::size_t num_states() const { return space_.size(); }
  [[nodiscard]] std::size_t num_rows() const { return row_offsets_.size() - 1; }
  [[nodiscard]] std::size_t num_atoms() const { return atoms_.size(); }

  [[nodiscard]] std::span<const Atom> row(std::size_t state, Action a) const {
    const std::size_t r = 2 * state + static_cast<std::size_t>(a);
    return {atoms_.data() + row_offsets_[r], row_offsets_[r + 1] - row_offsets_[r]};
  }

  [[nodiscard]] double cost(std::size_t state) const { return stage_costs_[state]; }
  [[nodiscard]] std::span<const double> costs() const { return stage_costs_; }

  /// Whether transmitting is admissible at `state` (buffer non-empty).
  [[nodiscard]] bool can_transmit(std::size_t state) const { return can_transmit_[state] != 0; }

 private:
  StateSpace space_;
  std::vector<std::size_t> row_offsets_;
  std::vector<Atom> atoms_;
  std::vector<double> stage_costs_;
  std::vector<unsigned char> can_transmit_;
};

/// Builds every (state, action) row. `threads` = 0 picks the hardware concurrency.
TransitionKernel build_kernel(const ScenarioConfig& cfg, unsigned threads = 1);

/// Forward closure of {s0} under positive-probability transitions with any
/// admissible action. Returned indices are sorted ascending.
std::vector<StateIndex> reachable_states(const ScenarioConfig& cfg, const SystemState& s0);
std::vector<StateIndex> reachable_states(const TransitionKernel& kernel, const SystemState& s0);

/// CSV dump with columns state_index,action,successor_index,probability.
void write_kernel_csv(std::ostream& out, const TransitionKernel& kernel);

}  // namespace ehaoi
