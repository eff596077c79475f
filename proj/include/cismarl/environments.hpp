#pragma once

// Game builders: the two-state trap used as a hand-checkable fixture,
// multi-agent gridworlds with hazard cells, and seeded random games.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cismarl/game.hpp"

namespace cismarl {

class SpecInvalid : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two states, two agents with two actions each. Only joint action (0,0)
/// keeps s0; everything else falls into the absorbing unsafe s1.
/// h = {1, -1}; r(s0,(0,0)) = 0, r(s0,other) = 10, r(s1,.) = 0;
/// gamma = gamma_h = 0.9; uniform initial distribution.
Game build_trap2();

struct Cell {
  int col = 0;
  int row = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class CollisionRule { kBlockBoth, kAllowOverlap };

enum GridAction : int { kStay = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4 };
inline constexpr int kGridActions = 5;

struct GridSpec {
  int width = 1;
  int height = 1;
  std::size_t n_agents = 1;
  std::vector<Cell> walls;
  std::vector<Cell> hazards;
  std::vector<Cell> goals;   // one per agent
  std::vector<Cell> starts;  // optional, one per agent
  CollisionRule collision_rule = CollisionRule::kBlockBoth;
};

/// Joint states enumerate every assignment of agents to cells, mixed-radix
/// with agent 0 least significant and cell = row * width + col.
///
/// Moving off the grid or into a wall leaves the agent in place. Under
/// kBlockBoth, agents whose targets coincide stay where they are (repeated
/// until no two targets clash).
///
/// h(x) = min over agents of (Manhattan distance to the nearest hazard) - 0.5.
/// r(x,u) = sum over agents of -0.05 * Manhattan(pos, goal), plus 1 for each
/// agent on its goal.
///
/// The initial distribution is a point mass on `starts` when given, otherwise
/// uniform over joint states with no agent on a wall (and, under kBlockBoth,
/// no two agents sharing a cell).
///
/// Throws SpecInvalid naming the violated requirement.
Game build_gridworld(const GridSpec& spec, double gamma = 0.9,
                     double gamma_h = 0.9);

std::vector<Cell> grid_positions(const GridSpec& spec, StateId x);
StateId grid_state(const GridSpec& spec, const std::vector<Cell>& positions);

/// 5x5, two agents, hazards on the middle row except its centre cell,
/// goals in the bottom corners, agents blocking each other.
GridSpec grid5_spec();

/// Transitions uniform over states, rewards uniform in [-1, 1), and h with
/// exactly floor(hazard_fraction * n_states) negative entries;
/// gamma = gamma_h = 0.9, uniform initial distribution.
///
/// Draw order from SplitMix64(seed): transitions (state-major, then joint
/// action) as below(n_states); rewards in the same order as
/// uniform(-1, 1); one magnitude m = uniform01() per state; then a
/// Fisher-Yates permutation whose first k states become negative. Negative
/// states get h = -(1 - m), the rest h = m.
Game build_random_game(std::uint64_t seed, std::size_t n_states,
                       std::size_t n_agents,
                       const std::vector<int>& actions_per_agent,
                       double hazard_fraction);

struct RandomGameSpec {
  std::uint64_t seed = 0;
  std::size_t n_states = 1;
  std::size_t n_agents = 1;
  std::vector<int> actions_per_agent;
  double hazard_fraction = 0.0;
};

Game build_random_game(const RandomGameSpec& spec);

/// `count` game specs with 2..12 states, 1..3 agents, 2..3 actions per agent
/// and hazard fractions in {0, 0.15, 0.3, 0.45, 0.6}, all drawn from
/// SplitMix64(suite_seed).
std::vector<RandomGameSpec> random_suite(std::size_t count,
                                         std::uint64_t suite_seed);

}  // namespace cismarl
