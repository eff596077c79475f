#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cismarl/environments.hpp"
#include "cismarl/game_io.hpp"
#include "cismarl/oracles.hpp"
#include "cismarl/safety_iteration.hpp"

namespace cismarl {
namespace {

GridSpec corridor() {
  GridSpec spec;
  spec.width = 3;
  spec.height = 1;
  spec.hazards = {{2, 0}};
  spec.goals = {{0, 0}};
  return spec;
}

GridSpec two_agent_3x3() {
  GridSpec spec;
  spec.width = 3;
  spec.height = 3;
  spec.n_agents = 2;
  spec.walls = {{1, 1}};
  spec.hazards = {{2, 0}};
  spec.goals = {{0, 2}, {2, 2}};
  return spec;
}

TEST(Trap2, Constants) {
  const Game game = build_trap2();
  EXPECT_TRUE(validate_game(game).empty());
  EXPECT_EQ(game.transition, (std::vector<StateId>{0, 1, 1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(game.reward, (std::vector<double>{0, 10, 10, 10, 0, 0, 0, 0}));
  EXPECT_EQ(game.constraint, (std::vector<double>{1.0, -1.0}));
  EXPECT_EQ(game.initial_dist, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(game.gamma, 0.9);
  EXPECT_EQ(game.gamma_h, 0.9);
}

TEST(Trap2, JointOptimumCis) {
  const JointOptimum opt = joint_safety_optimum(build_trap2());
  EXPECT_EQ(StateSet::nonnegative(opt.vh).elements(), (std::vector<StateId>{0}));
}

TEST(Gridworld, CorridorConstraintValues) {
  const GridSpec spec = corridor();
  const Game game = build_gridworld(spec);
  EXPECT_TRUE(validate_game(game).empty());
  EXPECT_EQ(game.constraint[grid_state(spec, {{0, 0}})], 1.5);
  EXPECT_EQ(game.constraint[grid_state(spec, {{1, 0}})], 0.5);
  EXPECT_EQ(game.constraint[grid_state(spec, {{2, 0}})], -0.5);
}

TEST(Gridworld, CorridorMovesAndRewards) {
  const GridSpec spec = corridor();
  const Game game = build_gridworld(spec);
  const StateId left = grid_state(spec, {{0, 0}});
  const StateId mid = grid_state(spec, {{1, 0}});
  EXPECT_EQ(game.next(left, kLeft), left);   // off-grid
  EXPECT_EQ(game.next(left, kUp), left);
  EXPECT_EQ(game.next(left, kRight), mid);
  EXPECT_EQ(game.next(mid, kStay), mid);
  EXPECT_DOUBLE_EQ(game.reward_at(left, kStay), 1.0);
  EXPECT_DOUBLE_EQ(game.reward_at(mid, kStay), -0.05);
}

TEST(Gridworld, NoHazardsMeansConstraintIsSlack) {
  GridSpec spec = corridor();
  spec.hazards.clear();
  const Game game = build_gridworld(spec);
  for (double h : game.constraint) EXPECT_EQ(h, 4.0 - 0.5);
}

TEST(Gridworld, WallsBlockMovement) {
  const GridSpec spec = two_agent_3x3();
  const Game game = build_gridworld(spec);
  const StateId x = grid_state(spec, {{1, 0}, {0, 2}});
  const JointActionId down_stay =
      game.encode(std::vector<int>{kDown, kStay});
  EXPECT_EQ(game.next(x, down_stay), x);
}

TEST(Gridworld, BlockBothStopsAgentsTargetingTheSameCell) {
  const GridSpec spec = two_agent_3x3();
  const Game game = build_gridworld(spec);
  const StateId x = grid_state(spec, {{0, 0}, {2, 0}});
  EXPECT_EQ(game.next(x, game.encode(std::vector<int>{kRight, kLeft})), x);
  // A chain: agent 1 stays in the cell agent 0 wants.
  const StateId y = grid_state(spec, {{0, 0}, {1, 0}});
  EXPECT_EQ(game.next(y, game.encode(std::vector<int>{kRight, kStay})), y);
  // Following an agent that moves away is allowed.
  EXPECT_EQ(game.next(y, game.encode(std::vector<int>{kRight, kRight})),
            grid_state(spec, {{1, 0}, {2, 0}}));
}

TEST(Gridworld, AllowOverlapLetsAgentsShareCells) {
  GridSpec spec = two_agent_3x3();
  spec.collision_rule = CollisionRule::kAllowOverlap;
  const Game game = build_gridworld(spec);
  const StateId x = grid_state(spec, {{0, 0}, {2, 0}});
  EXPECT_EQ(game.next(x, game.encode(std::vector<int>{kRight, kLeft})),
            grid_state(spec, {{1, 0}, {1, 0}}));
}

TEST(Gridworld, InitialDistribution) {
  GridSpec spec = two_agent_3x3();
  const Game uniform = build_gridworld(spec);
  // 8 free cells, ordered pairs of distinct cells.
  const double p = 1.0 / (8.0 * 7.0);
  EXPECT_DOUBLE_EQ(uniform.initial_dist[grid_state(spec, {{0, 0}, {2, 2}})], p);
  EXPECT_EQ(uniform.initial_dist[grid_state(spec, {{0, 0}, {0, 0}})], 0.0);
  EXPECT_EQ(uniform.initial_dist[grid_state(spec, {{1, 1}, {0, 0}})], 0.0);

  spec.starts = {{0, 0}, {2, 1}};
  const Game point = build_gridworld(spec);
  EXPECT_EQ(point.initial_dist[grid_state(spec, spec.starts)], 1.0);
  EXPECT_TRUE(validate_game(point).empty());
}

TEST(Gridworld, PermutationConsistency) {
  const GridSpec spec = two_agent_3x3();
  GridSpec swapped = spec;
  std::swap(swapped.goals[0], swapped.goals[1]);
  const Game a = build_gridworld(spec);
  const Game b = build_gridworld(swapped);
  auto relabel = [&](StateId x) {
    std::vector<Cell> pos = grid_positions(spec, x);
    std::swap(pos[0], pos[1]);
    return grid_state(spec, pos);
  };
  for (StateId x = 0; x < a.n_states; ++x) {
    const StateId y = relabel(x);
    EXPECT_EQ(a.constraint[x], b.constraint[y]);
    EXPECT_EQ(a.initial_dist[x], b.initial_dist[y]);
    for (JointActionId u = 0; u < a.joint_action_count(); ++u) {
      std::vector<int> actions = a.decode(u);
      std::swap(actions[0], actions[1]);
      const JointActionId v = b.encode(actions);
      EXPECT_EQ(relabel(a.next(x, u)), b.next(y, v));
      EXPECT_DOUBLE_EQ(a.reward_at(x, u), b.reward_at(y, v));
    }
  }
}

TEST(Gridworld, InvalidSpecsAreNamed) {
  GridSpec goal_on_hazard = corridor();
  goal_on_hazard.goals = {{2, 0}};
  EXPECT_THROW(build_gridworld(goal_on_hazard), SpecInvalid);

  GridSpec missing_goal = two_agent_3x3();
  missing_goal.goals.pop_back();
  EXPECT_THROW(build_gridworld(missing_goal), SpecInvalid);

  GridSpec too_big;
  too_big.width = 20;
  too_big.height = 20;
  too_big.n_agents = 2;
  too_big.goals = {{0, 0}, {1, 0}};
  try {
    build_gridworld(too_big);
    FAIL() << "expected SpecInvalid";
  } catch (const SpecInvalid& e) {
    EXPECT_NE(std::string(e.what()).find("1e5"), std::string::npos);
  }

  GridSpec start_on_wall = two_agent_3x3();
  start_on_wall.starts = {{1, 1}, {0, 0}};
  EXPECT_THROW(build_gridworld(start_on_wall), SpecInvalid);
}

TEST(Gridworld, Grid5CisAvoidsHazards) {
  const GridSpec spec = grid5_spec();
  const Game game = build_gridworld(spec);
  EXPECT_EQ(game.n_states, 625u);
  EXPECT_TRUE(validate_game(game).empty());
  SafetyIterationConfig config;
  config.seed = 42;
  const SafetyIterationResult result =
      run_safety_iteration(game, JointPolicy(game.n_states, 2), config);
  ASSERT_TRUE(result.converged);
  for (StateId x = 0; x < game.n_states; ++x) {
    const std::vector<Cell> pos = grid_positions(spec, x);
    const bool on_hazard = std::ranges::any_of(pos, [&](Cell c) {
      return std::ranges::find(spec.hazards, c) != spec.hazards.end();
    });
    if (on_hazard) EXPECT_FALSE(result.cis.contains(x));
    // Off the hazard row every state can simply stay put.
    if (!on_hazard) EXPECT_TRUE(result.cis.contains(x));
  }
}

TEST(RandomGame, SameSeedSameBytes) {
  const std::string a = serialize_game(build_random_game(123, 9, 3, {2, 3, 2}, 0.3));
  const std::string b = serialize_game(build_random_game(123, 9, 3, {2, 3, 2}, 0.3));
  const std::string c = serialize_game(build_random_game(124, 9, 3, {2, 3, 2}, 0.3));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(RandomGame, HazardFractionIsExact) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (double f : {0.0, 0.15, 0.3, 0.45, 0.6, 1.0}) {
      const std::size_t n = 2 + seed % 11;
      const Game game = build_random_game(seed, n, 2, {2, 2}, f);
      const auto negatives = static_cast<std::size_t>(
          std::ranges::count_if(game.constraint, [](double h) { return h < 0; }));
      EXPECT_EQ(negatives, static_cast<std::size_t>(std::floor(f * n)));
      for (double h : game.constraint) {
        EXPECT_GE(h, -1.0);
        EXPECT_LT(h, 1.0);
      }
      for (double r : game.reward) {
        EXPECT_GE(r, -1.0);
        EXPECT_LT(r, 1.0);
      }
    }
  }
}

TEST(RandomGame, ExtremeFractions) {
  const Game safe = build_random_game(3, 10, 2, {2, 2}, 0.0);
  EXPECT_EQ(StateSet::constraint_set(safe).count(), 10u);
  const Game unsafe = build_random_game(3, 10, 2, {2, 2}, 1.0);
  EXPECT_TRUE(StateSet::constraint_set(unsafe).empty());
}

TEST(RandomSuite, SpecsStayInRange) {
  const auto suite = random_suite(200, 1);
  ASSERT_EQ(suite.size(), 200u);
  for (const RandomGameSpec& spec : suite) {
    EXPECT_GE(spec.n_states, 2u);
    EXPECT_LE(spec.n_states, 12u);
    EXPECT_GE(spec.n_agents, 1u);
    EXPECT_LE(spec.n_agents, 3u);
    ASSERT_EQ(spec.actions_per_agent.size(), spec.n_agents);
    for (int c : spec.actions_per_agent) {
      EXPECT_GE(c, 2);
      EXPECT_LE(c, 3);
    }
    EXPECT_TRUE(validate_game(build_random_game(spec)).empty());
  }
  EXPECT_EQ(serialize_game(build_random_game(random_suite(5, 9)[4])),
            serialize_game(build_random_game(random_suite(5, 9)[4])));
}

}  // namespace
}  // namespace cismarl
