#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ehaoi/simulator.hpp"
#include "support/generators.hpp"
#include "support/scenarios.hpp"

namespace ehaoi {
namespace {

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  Rng a = Rng::for_stream(42, 3, 0);
  Rng b = Rng::for_stream(42, 3, 0);
  Rng c = Rng::for_stream(42, 3, 1);
  Rng d = Rng::for_stream(42, 4, 0);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(x, d());
  }
}

TEST(Rng, UniformStaysInUnitInterval) {
  Rng r(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / 100000.0));
}

TEST(SampleDisturbance, ForcingRule) {
  const ScenarioConfig c;
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_EQ(sample_disturbance({0, 0, 3, 1, 0}, Action::kHold, c, r).w_s, 0);
    EXPECT_EQ(sample_disturbance({1, 0, 0, 1, 0}, Action::kTransmit, c, r).w_s, 0);
  }
}

TEST(SampleDisturbance, MarginalFrequenciesWithinFourSigma) {
  ScenarioConfig c;
  c.p_e = 0.3;
  c.p_s = 0.65;
  c.p_z = {{{0.75, 0.25}, {0.4, 0.6}}};
  Rng r(99);
  const int n = 200000;
  long succ = 0;
  long harvest = 0;
  long flip0 = 0;
  long stay1 = 0;
  for (int i = 0; i < n; ++i) {
    const RandomVector w0 = sample_disturbance({0, 0, 2, 1, 0}, Action::kTransmit, c, r);
    succ += w0.w_s;
    harvest += w0.w_e;
    flip0 += w0.w_z;
    stay1 += sample_disturbance({1, 0, 2, 1, 0}, Action::kHold, c, r).w_z;
  }
  auto within = [n](long count, double p) {
    const double sigma = std::sqrt(n * p * (1.0 - p));
    return std::abs(static_cast<double>(count) - n * p) <= 4.0 * sigma;
  };
  EXPECT_TRUE(within(succ, 0.65));
  EXPECT_TRUE(within(harvest, 0.3));
  EXPECT_TRUE(within(flip0, 0.25));
  EXPECT_TRUE(within(stay1, 0.6));
}

TEST(SimulateEpisode, DeterministicInSeed) {
  const ScenarioConfig c;
  const auto rule = DecisionRule::randomized(0.4);
  const auto a = simulate_episode(rule, c, {0, 0, 0, 1, 0}, 300, 5, 2);
  const auto b = simulate_episode(rule, c, {0, 0, 0, 1, 0}, 300, 5, 2);
  const auto other = simulate_episode(rule, c, {0, 0, 0, 1, 0}, 300, 6, 2);
  ASSERT_EQ(a.steps.size(), 300u);
  bool differs = false;
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    EXPECT_EQ(a.steps[k].state, b.steps[k].state);
    EXPECT_EQ(a.steps[k].w, b.steps[k].w);
    EXPECT_EQ(a.steps[k].action, b.steps[k].action);
    differs = differs || !(a.steps[k].w == other.steps[k].w);
  }
  EXPECT_EQ(a.final_state, b.final_state);
  EXPECT_TRUE(differs);
}

TEST(SimulateEpisode, NoHarvestDrainsBuffer) {
  ScenarioConfig c;
  c.p_e = 0.0;
  const StateSpace space(c);
  const auto trace = simulate_episode(make_baseline(BaselineKind::kAlways, space), c, {0, 0, 3, 1, 0}, 200, 3);
  int previous = 3;
  for (const TraceStep& step : trace.steps) {
    EXPECT_LE(step.state.e, previous);
    previous = step.state.e;
  }
  EXPECT_EQ(trace.final_state.e, 0);
}

TEST(SimulateEpisode, PerfectChannelAndHarvestAlwaysTransmit) {
  ScenarioConfig c;
  c.p_e = 1.0;
  c.p_s = 1.0;
  const StateSpace space(c);
  const auto trace = simulate_episode(make_baseline(BaselineKind::kAlways, space), c, {0, 0, 1, 1, 0}, 5, 11);
  ASSERT_EQ(trace.steps.size(), 5u);
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const TraceStep& st = trace.steps[k];
    EXPECT_EQ(st.action, Action::kTransmit);
    EXPECT_EQ(st.w.w_s, 1);
    EXPECT_EQ(st.w.w_e, 1);
    EXPECT_EQ(st.state.e, 1);
    if (k > 0) {
      const SystemState& prev = trace.steps[k - 1].state;
      EXPECT_EQ(st.state.z_d, prev.z);
      EXPECT_EQ(st.state.aoi(prev.z), 1);
      EXPECT_EQ(st.state.aoi(1 - prev.z), 0);
    }
  }
}

TEST(SimulateEpisode, RandomZeroMatchesNever) {
  const ScenarioConfig c;
  const StateSpace space(c);
  const auto a = simulate_episode(DecisionRule::randomized(0.0), c, {0, 0, 2, 1, 0}, 500, 8);
  const auto b = simulate_episode(make_baseline(BaselineKind::kNever, space), c, {0, 0, 2, 1, 0}, 500, 8);
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    ASSERT_EQ(a.steps[k].state, b.steps[k].state);
    ASSERT_EQ(a.steps[k].action, Action::kHold);
  }
}

TEST(SimulateEpisode, RecordsDiscardedEnergy) {
  ScenarioConfig c;
  c.p_e = 1.0;
  c.e_max = 1;
  const StateSpace space(c);
  const auto trace = simulate_episode(make_baseline(BaselineKind::kNever, space), c, {0, 0, 0, 1, 0}, 4, 1);
  EXPECT_FALSE(trace.steps[0].energy_discarded);
  EXPECT_TRUE(trace.steps[1].energy_discarded);
  EXPECT_TRUE(trace.steps[3].energy_discarded);
}

TEST(Baselines, TablesMatchDefinitions) {
  const StateSpace space(ScenarioConfig{});
  const auto always = make_baseline(BaselineKind::kAlways, space);
  const auto alarm = make_baseline(BaselineKind::kAlarmOnly, space);
  const auto never = make_baseline(BaselineKind::kNever, space);
  EXPECT_TRUE(make_baseline(BaselineKind::kRandom, space, 0.3).is_randomized());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const SystemState s = space.state_of(i);
    EXPECT_EQ((*always.table())[i], s.e > 0 ? Action::kTransmit : Action::kHold);
    EXPECT_EQ((*alarm.table())[i], s.e > 0 && s.z == 1 ? Action::kTransmit : Action::kHold);
    EXPECT_EQ((*never.table())[i], Action::kHold);
  }
  EXPECT_THROW((void)DecisionRule::randomized(1.5), std::invalid_argument);
}

TEST(Truncation, HorizonAndBound) {
  const ScenarioConfig c;
  EXPECT_EQ(default_horizon(c), 1375);
  EXPECT_NEAR(truncation_bound(c, 0), 100.0 / 0.01, 1e-9);
  EXPECT_LE(truncation_bound(c, 1834), 1e-4);
  EXPECT_GT(truncation_bound(c, 1800), 1e-4);
  EXPECT_THROW((void)evaluate_policy_mc(DecisionRule::randomized(0.5), c, {0, 0, 0, 1, 0}, 100, 10, 1, 1, 1e-4),
               TruncationTooCoarse);
}

TEST(EvaluatePolicyMc, ThreadCountDoesNotChangeSummary) {
  const ScenarioConfig c;
  const auto rule = DecisionRule::randomized(0.5);
  const auto a = evaluate_policy_mc(rule, c, {0, 0, 0, 1, 0}, 400, 64, 3, 1);
  const auto b = evaluate_policy_mc(rule, c, {0, 0, 0, 1, 0}, 400, 64, 3, 4);
  EXPECT_EQ(a.mean_discounted_cost, b.mean_discounted_cost);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(evaluate_policy_mc(rule, c, {0, 0, 0, 1, 0}, 50, 1, 3).std_error, 0.0);
}

TEST(EvaluatePolicyMc, UncontrolledSystemMatchesSolve) {
  ScenarioConfig c;
  c.e_max = 0;
  c.gamma = 0.9;
  const SystemState s0{0, 0, 0, 1, 0};
  const Solution sol = value_iteration(build_kernel(c), {});
  const int horizon = 250;
  const auto mc = evaluate_policy_mc(DecisionRule::randomized(0.5), c, s0, horizon, 20000, 12);
  const double exact = sol.value[StateSpace(c).index_of(s0)];
  EXPECT_NEAR(mc.mean_discounted_cost, exact, 3.0 * mc.std_error + mc.truncation_bound);
}

TEST(EvaluatePolicyMc, OptimalBeatsBaselines) {
  const ScenarioConfig c;
  const SystemState s0{0, 0, 0, 1, 0};
  const TransitionKernel k = build_kernel(c);
  const Solution sol = value_iteration(k, {});
  const int horizon = default_horizon(c);
  const auto opt = evaluate_policy_mc(DecisionRule::from_table(sol.policy), c, s0, horizon, 2000, 4);
  for (BaselineKind kind : {BaselineKind::kNever, BaselineKind::kAlways, BaselineKind::kAlarmOnly,
                            BaselineKind::kRandom}) {
    const auto base = evaluate_policy_mc(make_baseline(kind, k.space(), 0.5), c, s0, horizon, 2000, 4);
    const double margin = 3.0 * std::hypot(opt.std_error, base.std_error);
    EXPECT_LT(opt.mean_discounted_cost, base.mean_discounted_cost - margin) << static_cast<int>(kind);
  }
}

using testing::two_change_scenario;

TEST(AoiReference, TwoChangeScenario) {
  const EpisodeTrace trace = two_change_scenario();
  const std::vector<AoiPair> expected = testing::two_change_expected_aoi();
  const auto direct = direct_aoi_trace(trace);
  EXPECT_EQ(direct, expected);
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    EXPECT_EQ((AoiPair{trace.steps[k].state.d0, trace.steps[k].state.d1}), expected[k]) << k;
  }
  EXPECT_EQ((AoiPair{trace.final_state.d0, trace.final_state.d1}), expected.back());
  EXPECT_TRUE(verify_aoi_consistency(trace).consistent);
}

TEST(AoiReference, DetectsCorruptedTrace) {
  EpisodeTrace trace = two_change_scenario();
  trace.steps[7].state.d0 += 1;
  const AoiConsistency r = verify_aoi_consistency(trace);
  EXPECT_FALSE(r.consistent);
  ASSERT_TRUE(r.first_mismatch.has_value());
  EXPECT_EQ(*r.first_mismatch, 7u);
  EXPECT_EQ(r.recursive.d0, r.direct.d0 + 1);
}

TEST(AoiReference, AgreesWithRecursionOnRandomTraces) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 1500; ++i) {
    const ScenarioConfig c = testing::random_config(rng, 4, 8);
    const SystemState s0 = testing::random_state(rng, c);
    const auto rule = DecisionRule::randomized(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    const auto trace = simulate_episode(rule, c, s0, 60, rng(), static_cast<std::uint64_t>(i));
    const AoiConsistency r = verify_aoi_consistency(trace);
    ASSERT_TRUE(r.consistent) << "trace " << i << " from " << to_string(s0) << " mismatch at "
                              << r.first_mismatch.value_or(0);
  }
}

}  // namespace
}  // namespace ehaoi
