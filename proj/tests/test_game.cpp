#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cismarl/environments.hpp"
#include "cismarl/game.hpp"
#include "cismarl/oracles.hpp"
#include "test_support.hpp"

namespace cismarl {
namespace {

using testing::deterministic_chain;
using testing::random_policy;

TEST(ValidateGame, WellFormedGameHasNoViolations) {
  EXPECT_TRUE(validate_game(build_trap2()).empty());
}

TEST(ValidateGame, TransitionOutOfRangeNamesStateAndJointAction) {
  Game game = build_trap2();
  game.transition[1 * 4 + 2] = 99;
  const auto violations = validate_game(game);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].field, "transition");
  EXPECT_EQ(violations[0].index, 6);
  EXPECT_NE(violations[0].message.find("state=1, joint_action=2"),
            std::string::npos);
}

TEST(ValidateGame, DiscountOfOneIsRejected) {
  Game game = build_trap2();
  game.gamma_h = 1.0;
  const auto violations = validate_game(game);
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].message, "gamma_h out of (0,1)");
}

TEST(ValidateGame, ReportsDistributionAndLengthProblems) {
  Game game = build_trap2();
  game.initial_dist = {0.5, 0.6};
  game.reward.pop_back();
  const auto violations = validate_game(game);
  ASSERT_EQ(violations.size(), 2u);
  EXPECT_EQ(violations[0].field, "reward");
  EXPECT_EQ(violations[1].field, "initial_dist");
}

TEST(JointActionEncoding, AgentZeroIsLeastSignificant) {
  Game game;
  game.n_agents = 3;
  game.actions_per_agent = {2, 3, 2};
  const std::vector<int> actions = {1, 2, 1};
  EXPECT_EQ(game.encode(actions), 1u + 2u * 2u + 1u * 6u);
  EXPECT_EQ(game.strides(), (std::vector<std::size_t>{1, 2, 6}));
  for (JointActionId u = 0; u < game.joint_action_count(); ++u) {
    EXPECT_EQ(game.encode(game.decode(u)), u);
  }
}

TEST(Rollout, SelfLoop) {
  const Game game = deterministic_chain({0}, {1.0}, {0.0});
  const TrajectorySummary t = rollout(game, JointPolicy(1, 1), 0);
  EXPECT_TRUE(t.prefix.empty());
  EXPECT_EQ(t.cycle, (std::vector<StateId>{0}));
}

TEST(Rollout, ChainIntoAbsorbingState) {
  const Game game = deterministic_chain({1, 1}, {1.0, -1.0}, {0.0, 0.0});
  const TrajectorySummary t = rollout(game, JointPolicy(2, 1), 0);
  EXPECT_EQ(t.prefix, (std::vector<StateId>{0}));
  EXPECT_EQ(t.cycle, (std::vector<StateId>{1}));
  EXPECT_EQ(t.min_h, -1.0);
}

TEST(Rollout, ThreeCycle) {
  const Game game =
      deterministic_chain({1, 2, 0}, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0});
  const TrajectorySummary t = rollout(game, JointPolicy(3, 1), 0);
  EXPECT_TRUE(t.prefix.empty());
  EXPECT_EQ(t.cycle, (std::vector<StateId>{0, 1, 2}));
}

TEST(Rollout, ResimulationReproducesPrefixThenTwoCycles) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Game game = build_random_game(seed, 12, 2, {2, 3}, 0.3);
    const JointPolicy policy = random_policy(game, seed + 1000);
    for (StateId start = 0; start < game.n_states; ++start) {
      const TrajectorySummary t = rollout(game, policy, start);
      std::vector<StateId> expected = t.prefix;
      expected.insert(expected.end(), t.cycle.begin(), t.cycle.end());
      expected.insert(expected.end(), t.cycle.begin(), t.cycle.end());

      std::vector<StateId> simulated;
      StateId x = start;
      for (std::size_t k = 0; k < expected.size(); ++k) {
        simulated.push_back(x);
        x = game.next(x, policy.joint_action(game, x));
      }
      ASSERT_EQ(simulated, expected) << "seed " << seed << " start " << start;

      std::set<StateId> distinct(t.prefix.begin(), t.prefix.end());
      distinct.insert(t.cycle.begin(), t.cycle.end());
      EXPECT_EQ(distinct.size(), t.prefix.size() + t.cycle.size());
      EXPECT_LE(t.prefix.size() + t.cycle.size(), game.n_states);
      EXPECT_GE(t.cycle.size(), 1u);
    }
  }
}

TEST(ExactSafetyValue, PositiveSelfLoopHasInfimumZero) {
  const Game game = deterministic_chain({0}, {1.0}, {0.0});
  EXPECT_EQ(exact_safety_value(game, JointPolicy(1, 1), 0), 0.0);
}

TEST(ExactSafetyValue, UnsafeAbsorbingState) {
  const Game game = deterministic_chain({0}, {-1.0}, {0.0});
  EXPECT_DOUBLE_EQ(exact_safety_value(game, JointPolicy(1, 1), 0), -0.9);
}

TEST(ExactSafetyValue, ChainIntoUnsafeState) {
  const Game game = deterministic_chain({1, 1}, {1.0, -1.0}, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(exact_safety_value(game, JointPolicy(2, 1), 0), -0.81);
}

TEST(ExactRewardValue, SelfLoop) {
  const Game game = deterministic_chain({0}, {1.0}, {1.0});
  EXPECT_NEAR(exact_reward_value(game, JointPolicy(1, 1), 0), 10.0, 1e-12);
}

TEST(ExactRewardValue, ZeroRewards) {
  const Game game =
      deterministic_chain({1, 2, 0}, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0});
  EXPECT_EQ(exact_reward_value(game, JointPolicy(3, 1), 1), 0.0);
}

TEST(ExactRewardValue, ChainIntoAbsorbingState) {
  const Game game =
      deterministic_chain({1, 1}, {1.0, -1.0}, {1.0, 0.0}, 0.5, 0.9);
  EXPECT_EQ(exact_reward_value(game, JointPolicy(2, 1), 0), 1.0);
}

TEST(EvaluatePolicy, ChainTables) {
  const Game safety_game =
      deterministic_chain({1, 1}, {1.0, -1.0}, {1.0, 0.0}, 0.5, 0.9);
  const ValueTable vh =
      evaluate_policy(safety_game, JointPolicy(2, 1), ValueKind::kSafety);
  EXPECT_DOUBLE_EQ(vh[0], -0.81);
  EXPECT_DOUBLE_EQ(vh[1], -0.9);
  const ValueTable v =
      evaluate_policy(safety_game, JointPolicy(2, 1), ValueKind::kReward);
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 0.0);
}

TEST(EvaluatePolicy, MatchesIterativeOracleOnTwentyStateGame) {
  const Game game = build_random_game(20240611, 20, 2, {3, 3}, 0.3);
  const JointPolicy policy = random_policy(game, 7);
  for (ValueKind kind : {ValueKind::kSafety, ValueKind::kReward}) {
    const ValueTable exact = evaluate_policy(game, policy, kind);
    const ValueTable iterated =
        iterative_fixed_point(game, policy, kind, 5000, 1e-13);
    EXPECT_LE(sup_norm_distance(exact, iterated), 1e-9);
  }
}

// The memoized table and the single-start evaluators share arithmetic, so the
// agreement is exact regardless of the order in which states are visited.
TEST(EvaluatePolicy, BitIdenticalToSingleStateEvaluation) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Game game = build_random_game(seed, 2 + seed % 11, 1 + seed % 3,
                                        std::vector<int>(1 + seed % 3, 3), 0.4);
    const JointPolicy policy = random_policy(game, seed * 31 + 5);
    const ValueTable vh = evaluate_policy(game, policy, ValueKind::kSafety);
    const ValueTable v = evaluate_policy(game, policy, ValueKind::kReward);
    for (StateId x = 0; x < game.n_states; ++x) {
      ASSERT_EQ(vh[x], exact_safety_value(game, policy, x)) << "seed " << seed;
      ASSERT_EQ(v[x], exact_reward_value(game, policy, x)) << "seed " << seed;
    }
  }
}

TEST(EvaluatePolicy, AgreesWithTwoThousandOperatorApplications) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Game game = build_random_game(seed, 2 + seed % 11, 2, {2, 3}, 0.5);
    const JointPolicy policy = random_policy(game, seed + 17);
    // tol = 0 forces every one of the 2000 sweeps to run.
    const FixedPointRun run =
        iterate_operator(game, policy, ValueKind::kSafety, 2000, 0.0);
    const ValueTable exact = evaluate_policy(game, policy, ValueKind::kSafety);
    EXPECT_LE(sup_norm_distance(exact, run.table), 1e-9) << "seed " << seed;
  }
}

TEST(EvaluatePolicy, ValuesRespectDiscountBounds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Game game = build_random_game(seed, 10, 2, {2, 2}, 0.3);
    const JointPolicy policy = random_policy(game, seed);
    const double max_r = std::ranges::max(game.reward, {}, [](double r) {
      return std::abs(r);
    });
    const double max_h = std::ranges::max(game.constraint, {}, [](double h) {
      return std::abs(h);
    });
    const ValueTable v = evaluate_policy(game, policy, ValueKind::kReward);
    const ValueTable vh = evaluate_policy(game, policy, ValueKind::kSafety);
    for (StateId x = 0; x < game.n_states; ++x) {
      EXPECT_LE(std::abs(v[x]), std::abs(max_r) / (1.0 - game.gamma) + 1e-12);
      EXPECT_LE(std::abs(vh[x]), game.gamma_h * std::abs(max_h) + 1e-15);
      EXPECT_TRUE(std::isfinite(v[x]) && std::isfinite(vh[x]));
    }
  }
}

TEST(StateSet, CisIsInsideConstraintSet) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Game game = build_random_game(seed, 12, 2, {2, 2}, 0.4);
    const JointPolicy policy = random_policy(game, seed ^ 0xABCDu);
    const StateSet cis = StateSet::nonnegative(
        evaluate_policy(game, policy, ValueKind::kSafety));
    EXPECT_TRUE(cis.subset_of(StateSet::constraint_set(game)));
  }
}

TEST(StateSet, ClassificationIsMonotone) {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    ValueTable a{ValueKind::kSafety, std::vector<double>(16)};
    ValueTable b = a;
    for (std::size_t x = 0; x < 16; ++x) {
      a.values[x] = rng.uniform(-1.0, 1.0);
      b.values[x] = a.values[x] + (rng.below(3) == 0 ? 0.0 : rng.uniform01());
    }
    EXPECT_TRUE(StateSet::nonnegative(a).subset_of(StateSet::nonnegative(b)));
  }
}

TEST(StateSet, BoundaryIsIncluded) {
  const ValueTable vh{ValueKind::kSafety, {0.0, -1e-300, 0.5}};
  const StateSet cis = StateSet::nonnegative(vh);
  EXPECT_EQ(cis.elements(), (std::vector<StateId>{0, 2}));
}

TEST(InvariantActionSet, FullSetWhenEverySuccessorIsSafe) {
  const Game game = testing::trap2_unconstrained();
  const ValueTable vh =
      evaluate_policy(game, JointPolicy(2, 2), ValueKind::kSafety);
  const std::vector<int> joint = {0, 1};
  EXPECT_EQ(invariant_action_set(game, vh, 0, 0, joint),
            (std::vector<int>{0, 1}));
}

TEST(InvariantActionSet, TrapRestrictsAgentOne) {
  const Game game = build_trap2();
  const ValueTable vh =
      evaluate_policy(game, JointPolicy(2, 2), ValueKind::kSafety);
  // Enumerate agent 0's two successors with agent 1 on action 0.
  ASSERT_EQ(vh[game.next(0, game.encode(std::vector<int>{0, 0}))], 0.0);
  ASSERT_DOUBLE_EQ(vh[game.next(0, game.encode(std::vector<int>{1, 0}))], -0.9);
  const std::vector<int> joint = {1, 0};  // agent 0's own entry is ignored
  EXPECT_EQ(invariant_action_set(game, vh, 0, 0, joint), (std::vector<int>{0}));
}

TEST(InvariantActionSet, ThrowsWhenNoActionIsSafe) {
  const Game game = build_trap2();
  const ValueTable vh =
      evaluate_policy(game, JointPolicy(2, 2), ValueKind::kSafety);
  const std::vector<int> joint = {0, 0};
  EXPECT_THROW(invariant_action_set(game, vh, 1, 0, joint), EmptyFeasibleSet);
  EXPECT_TRUE(feasible_actions(game, vh, 1, 1, joint).empty());
}

TEST(DegenerateGames, SingleStateSingleAgent) {
  const Game game = deterministic_chain({0}, {0.0}, {2.0});
  EXPECT_TRUE(validate_game(game).empty());
  EXPECT_EQ(exact_safety_value(game, JointPolicy(1, 1), 0), 0.0);
  EXPECT_TRUE(StateSet::nonnegative(evaluate_policy(game, JointPolicy(1, 1),
                                                    ValueKind::kSafety))
                  .contains(0));
}

}  // namespace
}  // namespace cismarl
