#pragma once

// Seeded Monte Carlo rollouts, baseline policies and a history-based AoI
// reference used to cross-check the recursive AoI dynamics.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehaoi/kernel.hpp"
#include "ehaoi/model.hpp"
#include "ehaoi/solver.hpp"

namespace ehaoi {

/// Counter-based generator: output k of a stream is a SplitMix64 finalizer of
/// (key + k * golden). Streams are keyed by (master seed, stream, substream),
/// so episodes can be generated in any order or concurrently.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key) : key_(key) {}
  static Rng for_stream(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t substream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stationary decision rule: either a deterministic table over the state
/// index or "transmit with probability p whenever energy is available".
class DecisionRule {
 public:
  static DecisionRule from_table(Policy policy, std::string name = "table");
  static DecisionRule randomized(double transmit_probability, std::string name = "random");

  /// `policy_rng` is only consumed by randomized rules.
  Action choose(const SystemState& s, StateIndex index, Rng& policy_rng) const;

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] bool is_randomized() const { return !table_.has_value(); }
  [[nodiscard]] const std::optional<Policy>& table() const { return table_; }

 private:
  DecisionRule() = default;
  std::optional<Policy> table_;
  double transmit_probability_ = 0.0;
  std::string name_;
};

enum class BaselineKind { kNever, kAlways, kRandom, kAlarmOnly };

/// never: hold everywhere; always: transmit whenever e > 0; random(p):
/// transmit with probability p when e > 0; alarm_only: transmit iff z = 1 and e > 0.
DecisionRule make_baseline(BaselineKind kind, const StateSpace& space, double transmit_probability = 0.0);

struct TraceStep {
  SystemState state;
  Action action = Action::kHold;
  RandomVector w;
  double cost = 0.0;
  bool energy_discarded = false;  ///< harvested unit lost to a full buffer
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  SystemState final_state;  ///< state after the last step
  std::uint64_t seed = 0;
  int horizon = 0;
  int d_max0 = 0;
  int d_max1 = 0;
};

struct EvalSummary {
  double mean_discounted_cost = 0.0;
  double std_error = 0.0;
  long n_episodes = 0;
  int horizon = 0;
  double truncation_bound = 0.0;  ///< gamma^horizon * g_max / (1 - gamma)
};

class TruncationTooCoarse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draws (w_s, w_e, w_z); three uniforms are consumed regardless of the
/// action so that streams stay aligned across policies.
RandomVector sample_disturbance(const SystemState& s, Action a, const ScenarioConfig& cfg, Rng& rng);

/// Deterministic in (rule, cfg, s0, horizon, seed, episode).
EpisodeTrace simulate_episode(const DecisionRule& rule, const ScenarioConfig& cfg, const SystemState& s0, int horizon,
                              std::uint64_t seed, std::uint64_t episode = 0);

/// Replays a given action/disturbance sequence through the dynamics.
EpisodeTrace build_trace(const ScenarioConfig& cfg, const SystemState& s0, std::span<const Action> actions,
                         std::span<const RandomVector> disturbances);

double truncation_bound(const ScenarioConfig& cfg, int horizon);

/// Smallest horizon whose truncation bound is at most 1e-6 * g_max / (1 - gamma).
int default_horizon(const ScenarioConfig& cfg);

/// Mean and standard error of the truncated discounted cost over independent
/// episodes. Throws TruncationTooCoarse if the truncation bound exceeds
/// `truncation_cap`.
EvalSummary evaluate_policy_mc(const DecisionRule& rule, const ScenarioConfig& cfg, const SystemState& s0,
                               int horizon, long n_episodes, std::uint64_t seed, unsigned threads = 1,
                               double truncation_cap = std::numeric_limits<double>::infinity());

struct AoiPair {
  int d0 = 0;
  int d1 = 0;
  friend bool operator==(const AoiPair&, const AoiPair&) = default;
};

/// AoI of both source states at k = 0..horizon, recomputed from the history of
/// source states and successful deliveries (latest delivery time, latest source
/// change) rather than by the one-step recursion. Entry 0 is the initial state.
std::vector<AoiPair> direct_aoi_trace(const EpisodeTrace& trace);

struct AoiConsistency {
  bool consistent = true;
  std::optional<std::size_t> first_mismatch;  ///< slot index k
  AoiPair recursive;
  AoiPair direct;
};

AoiConsistency verify_aoi_consistency(const EpisodeTrace& trace);

}  // namespace ehaoi
