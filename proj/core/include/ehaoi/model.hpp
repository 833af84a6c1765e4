#pragma once

// Domain types for the energy-harvesting, state-aware AoI status-update MDP.
//
// A sensor monitors a two-state Markov source (0 = normal, 1 = alarm), stores
// harvested energy units in a finite buffer and decides every slot whether to
// spend one unit on a status update. The destination keeps one AoI counter per
// source state.

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ehaoi {

using StateIndex = std::uint32_t;

/// Thrown when a configuration violates a model constraint. The message names
/// the first violated constraint.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown for out-of-range states or indices.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Weighted power-law staleness penalties: f(d) = f_weight * d^f_exponent in the
/// normal state and h(d) = h_weight * d^h_exponent in the alarm state. The
/// defaults give the linear / quadratic pair.
struct CostSpec {
  double f_weight = 1.0;
  double f_exponent = 1.0;
  double h_weight = 1.0;
  double h_exponent = 2.0;

  [[nodiscard]] double normal_cost(int aoi) const;
  [[nodiscard]] double alarm_cost(int aoi) const;

  friend bool operator==(const CostSpec&, const CostSpec&) = default;
};

struct ScenarioConfig {
  double p_e = 0.8;  ///< energy-unit arrival probability per slot
  double p_s = 0.8;  ///< transmission success probability
  /// Source transition matrix, p_z[z][z'] = P(Z_{k+1} = z' | Z_k = z).
  std::array<std::array<double, 2>, 2> p_z{{{0.9, 0.1}, {0.2, 0.8}}};
  int e_max = 5;
  int d_max0 = 10;
  int d_max1 = 10;
  double gamma = 0.99;
  CostSpec cost_shape{};

  [[nodiscard]] int aoi_cap(int z) const { return z == 0 ? d_max0 : d_max1; }
  /// Upper bound of the stage cost over the whole state space.
  [[nodiscard]] double max_stage_cost() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Returns `raw` unchanged if every invariant holds, otherwise throws ConfigError.
ScenarioConfig validate_config(const ScenarioConfig& raw);

enum class Action : std::uint8_t { kHold = 0, kTransmit = 1 };

constexpr int to_int(Action a) { return static_cast<int>(a); }

struct SystemState {
  int z = 0;    ///< true source state
  int z_d = 0;  ///< source state known at the destination
  int e = 0;    ///< buffered energy units
  int d0 = 0;   ///< AoI for source state 0
  int d1 = 0;   ///< AoI for source state 1

  [[nodiscard]] int aoi(int state) const { return state == 0 ? d0 : d1; }

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

std::string to_string(const SystemState& s);

/// One realization of the per-slot randomness.
struct RandomVector {
  int w_s = 0;  ///< channel success
  int w_e = 0;  ///< energy arrival
  int w_z = 0;  ///< next source state

  friend bool operator==(const RandomVector&, const RandomVector&) = default;
};

/// Dense mixed-radix enumeration of the product space with axes
/// (z, z_d, e, d0, d1) from slowest to fastest.
class StateSpace {
 public:
  explicit StateSpace(const ScenarioConfig& config);

  [[nodiscard]] const ScenarioConfig& config() const { return config_; }
  [[nodiscard]] std::size_t size() const { return size_; }

  [[nodiscard]] bool contains(const SystemState& s) const;
  [[nodiscard]] StateIndex index_of(const SystemState& s) const;
  [[nodiscard]] SystemState state_of(std::size_t index) const;

  /// Index without range checks; the caller guarantees `s` is valid.
  [[nodiscard]] StateIndex unchecked_index(const SystemState& s) const {
    return static_cast<StateIndex>(
        (((s.z * 2 + s.z_d) * energy_levels_ + s.e) * aoi0_levels_ + s.d0) * aoi1_levels_ + s.d1);
  }

 private:
  ScenarioConfig config_;
  int energy_levels_;
  int aoi0_levels_;
  int aoi1_levels_;
  std::size_t size_;
};

}  // namespace ehaoi
