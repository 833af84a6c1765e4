#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ehaoi/solver.hpp"
#include "support/generators.hpp"
#include "support/linear.hpp"

namespace ehaoi {
namespace {

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.e_max = 2;
  c.d_max0 = 4;
  c.d_max1 = 4;
  c.gamma = 0.9;
  return validate_config(c);
}

double sup_distance(const ValueFunction& a, const ValueFunction& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

TEST(BellmanBackup, FromZeroGivesStageCost) {
  const TransitionKernel k = build_kernel(ScenarioConfig{});
  const auto [value, delta] = bellman_backup(ValueFunction(k.num_states()), k);
  for (std::size_t s = 0; s < k.num_states(); ++s) ASSERT_DOUBLE_EQ(value[s], k.cost(s));
  EXPECT_DOUBLE_EQ(delta, 100.0);
}

TEST(BellmanBackup, IsAGammaContraction) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const ScenarioConfig c = testing::random_config(rng, 3, 5);
    const TransitionKernel k = build_kernel(c);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    ValueFunction a(k.num_states());
    ValueFunction b(k.num_states());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    const auto ta = bellman_backup(a, k).value;
    const auto tb = bellman_backup(b, k).value;
    EXPECT_LE(sup_distance(ta, tb), c.gamma * sup_distance(a, b) + 1e-12);
  }
}

TEST(BellmanBackup, ThreadCountIsBitIdentical) {
  const TransitionKernel k = build_kernel(ScenarioConfig{});
  ValueFunction v(k.num_states());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(static_cast<double>(i));
  ValueFunction one;
  ValueFunction many;
  const double d1 = bellman_backup(v, k, one, 1);
  const double d4 = bellman_backup(v, k, many, 4);
  EXPECT_EQ(one.values, many.values);
  EXPECT_EQ(d1, d4);
}

TEST(ValueIteration, UncontrolledSystemMatchesLinearSolve) {
  ScenarioConfig c;
  c.e_max = 0;
  c.d_max0 = 4;
  c.d_max1 = 3;
  c.gamma = 0.95;
  const Solution sol = value_iteration(build_kernel(c), {1e-11, 100000, 1});
  const auto exact = testing::evaluate_policy_exactly(c, std::vector<int>(sol.value.size(), 0));
  for (std::size_t i = 0; i < exact.size(); ++i) EXPECT_NEAR(sol.value[i], exact[i], 1e-8);
  for (Action a : sol.policy.actions) EXPECT_EQ(a, Action::kHold);
}

TEST(ValueIteration, GreedyPolicyValueMatchesOptimum) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    ScenarioConfig c = testing::random_config(rng, 2, 3);
    const Solution sol = value_iteration(build_kernel(c), {1e-10, 100000, 1});
    std::vector<int> actions(sol.policy.size());
    for (std::size_t i = 0; i < actions.size(); ++i) actions[i] = to_int(sol.policy[i]);
    const auto exact = testing::evaluate_policy_exactly(c, actions);
    const double bound = 2.0 * sol.report.optimality_bound + 1e-9;
    for (std::size_t i = 0; i < exact.size(); ++i) ASSERT_NEAR(sol.value[i], exact[i], bound) << trial;
  }
}

TEST(ValueIteration, ReportsBoundAndIterations) {
  const Solution sol = value_iteration(ScenarioConfig{}, 1e-9, 100000);
  EXPECT_TRUE(sol.report.converged);
  EXPECT_LT(sol.report.residual, 1e-9);
  EXPECT_NEAR(sol.report.optimality_bound, 0.99 * sol.report.residual / 0.01, 1e-18);
  EXPECT_GT(sol.report.iterations, 1);
}

TEST(ValueIteration, NotConvergedCarriesPartialSolution) {
  try {
    (void)value_iteration(ScenarioConfig{}, 1e-9, 10);
    FAIL() << "expected NotConverged";
  } catch (const NotConverged& e) {
    EXPECT_EQ(e.partial().report.iterations, 10);
    EXPECT_FALSE(e.partial().report.converged);
    EXPECT_EQ(e.partial().value.size(), 2904u);
    EXPECT_EQ(e.partial().policy.size(), 2904u);
  }
}

TEST(ValueIteration, BracketedByFiniteHorizonOracle) {
  const ScenarioConfig c = small_config();
  const Solution sol = value_iteration(build_kernel(c), {1e-11, 100000, 1});
  const double tail_scale = c.max_stage_cost() / (1.0 - c.gamma);
  ValueFunction previous;
  for (int n : {5, 40, 200}) {
    const ValueFunction vn = finite_horizon_oracle(c, n);
    const double tail = std::pow(c.gamma, n) * tail_scale;
    for (std::size_t i = 0; i < vn.size(); ++i) {
      ASSERT_LE(vn[i], sol.value[i] + 1e-8);
      ASSERT_GE(vn[i] + tail, sol.value[i] - 1e-8);
      if (!previous.values.empty()) {
        ASSERT_GE(vn[i], previous[i] - 1e-12);
      }
    }
    previous = vn;
  }
}

TEST(ValueIteration, ValueIsNonNegativeAndMonotoneInAge) {
  const ScenarioConfig c = small_config();
  const Solution sol = value_iteration(build_kernel(c), {1e-11, 100000, 1});
  const StateSpace space(c);
  for (std::size_t i = 0; i < space.size(); ++i) {
    ASSERT_GE(sol.value[i], 0.0);
    const SystemState s = space.state_of(i);
    if (s.d0 < c.d_max0) {
      ASSERT_LE(sol.value[i], sol.value[space.index_of({s.z, s.z_d, s.e, s.d0 + 1, s.d1})] + 1e-8);
    }
    if (s.d1 < c.d_max1) {
      ASSERT_LE(sol.value[i], sol.value[space.index_of({s.z, s.z_d, s.e, s.d0, s.d1 + 1})] + 1e-8);
    }
  }
}

TEST(ActionValueGap, ZeroOnEmptyBuffer) {
  const ScenarioConfig c = small_config();
  const TransitionKernel k = build_kernel(c);
  const Solution sol = value_iteration(k, {});
  for (std::size_t i = 0; i < k.num_states(); ++i) {
    if (!k.can_transmit(i)) {
      EXPECT_EQ(action_value_gap(sol.value, k, i), 0.0);
    }
  }
  EXPECT_EQ(action_value_gap(sol.value, k, SystemState{1, 0, 0, 2, 3}), 0.0);
}

TEST(ActionValueGap, MatchesExplicitQDifference) {
  const ScenarioConfig c = small_config();
  const TransitionKernel k = build_kernel(c);
  const Solution sol = value_iteration(k, {});
  const StateSpace& space = k.space();
  for (std::size_t i = 0; i < space.size(); ++i) {
    const SystemState s = space.state_of(i);
    double q[2] = {0.0, 0.0};
    for (int a = 0; a <= 1; ++a) {
      for (const auto& [key, p] : testing::reference_distribution(c, testing::key_of(s), a)) {
        const auto [z, zd, e, d0, d1] = key;
        q[a] += p * (k.cost(i) + c.gamma * sol.value[space.index_of({z, zd, e, d0, d1})]);
      }
    }
    ASSERT_NEAR(action_value_gap(sol.value, k, i), q[1] - q[0], 1e-9);
  }
}

TEST(ExtractPolicy, HoldsWhenChannelNeverDelivers) {
  ScenarioConfig c = small_config();
  c.p_s = 0.0;
  const TransitionKernel k = build_kernel(c);
  const Solution sol = value_iteration(k, {});
  for (Action a : sol.policy.actions) EXPECT_EQ(a, Action::kHold);
  EXPECT_EQ(extract_policy(sol.value, k), sol.policy);
}

TEST(ExtractPolicy, NeverTransmitsOnEmptyBuffer) {
  const TransitionKernel k = build_kernel(ScenarioConfig{});
  const Solution sol = value_iteration(k, {});
  for (std::size_t i = 0; i < k.num_states(); ++i) {
    if (!k.can_transmit(i)) {
      EXPECT_EQ(sol.policy[i], Action::kHold);
    }
  }
}

TEST(ThresholdCheck, IsolatedTransmitPointIsReported) {
  ScenarioConfig c;
  c.e_max = 1;
  c.d_max0 = 2;
  c.d_max1 = 2;
  const StateSpace space(c);
  Policy p(space.size());
  p[space.index_of({0, 0, 1, 1, 1})] = Action::kTransmit;
  const StructureReport r = check_threshold_structure(p, space);
  EXPECT_FALSE(r.holds);
  EXPECT_EQ(r.violations.size(), 3u);
  const bool has_corner = std::any_of(r.violations.begin(), r.violations.end(), [](const Violation& v) {
    return v.z == 0 && v.z_d == 0 && v.e == 1 && v.lower_d0 == 1 && v.lower_d1 == 1 && v.upper_d0 == 2 &&
           v.upper_d1 == 2;
  });
  EXPECT_TRUE(has_corner);
}

TEST(ThresholdCheck, TrivialPoliciesHold) {
  const StateSpace space(ScenarioConfig{});
  EXPECT_TRUE(check_threshold_structure(Policy(space.size()), space).holds);
  EXPECT_TRUE(check_threshold_structure(Policy(space.size(), Action::kTransmit), space).holds);
}

TEST(ThresholdCheck, MaskSkipsExcludedStates) {
  ScenarioConfig c;
  c.e_max = 1;
  c.d_max0 = 2;
  c.d_max1 = 2;
  const StateSpace space(c);
  Policy p(space.size());
  p[space.index_of({0, 0, 1, 1, 1})] = Action::kTransmit;
  const StateMask mask = make_mask(space.size(), {space.index_of({0, 0, 1, 1, 1})});
  EXPECT_TRUE(check_threshold_structure(p, space, &mask).holds);
}

TEST(StructureChecks, HoldOnRandomSmallInstances) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const ScenarioConfig c = testing::random_config(rng, 3, 5);
    const TransitionKernel k = build_kernel(c);
    const Solution sol = value_iteration(k, {1e-11, 200000, 1});
    EXPECT_TRUE(check_gap_monotonicity(sol.value, k).holds) << "trial " << trial;
    EXPECT_TRUE(check_lemma1_inequality(sol.value, c).holds) << "trial " << trial;
  }
}

TEST(EnergyInequalityCheck, PerfectChannelReducesToMonotonicity) {
  ScenarioConfig c = small_config();
  c.p_s = 1.0;
  const Solution sol = value_iteration(build_kernel(c), {});
  EXPECT_TRUE(check_lemma1_inequality(sol.value, c).holds);
}

TEST(EnergyInequalityCheck, DetectsAConstructedViolation) {
  ScenarioConfig c;
  c.e_max = 1;
  c.d_max0 = 1;
  c.d_max1 = 1;
  c.p_s = 0.0;
  const StateSpace space(c);
  ValueFunction v(space.size());
  // At e = 0 the value grows with d0; at e = 1 it shrinks.
  v[space.index_of({0, 0, 0, 1, 0})] = 5.0;
  v[space.index_of({0, 0, 1, 0, 0})] = 1.0;
  const StructureReport r = check_lemma1_inequality(v, c);
  ASSERT_FALSE(r.holds);
  double worst = 0.0;
  for (const Violation& x : r.violations) worst = std::max(worst, x.excess);
  EXPECT_NEAR(worst, 6.0, 1e-12);
}

}  // namespace
}  // namespace ehaoi
