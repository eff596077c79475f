#include "cismarl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "cismarl/rng.hpp"

namespace cismarl {

Game build_trap2() {
  Game game;
  game.n_agents = 2;
  game.n_states = 2;
  game.actions_per_agent = {2, 2};
  // Joint action index = a0 + 2 * a1.
  game.transition = {0, 1, 1, 1,   // s0
                     1, 1, 1, 1};  // s1
  game.reward = {0.0, 10.0, 10.0, 10.0,  // s0
                 0.0, 0.0, 0.0, 0.0};    // s1
  game.constraint = {1.0, -1.0};
  game.gamma = 0.9;
  game.gamma_h = 0.9;
  game.initial_dist = {0.5, 0.5};
  return game;
}

namespace {

int manhattan(Cell a, Cell b) {
  return std::abs(a.col - b.col) + std::abs(a.row - b.row);
}

bool contains(const std::vector<Cell>& cells, Cell c) {
  return std::find(cells.begin(), cells.end(), c) != cells.end();
}

void check_spec(const GridSpec& spec) {
  auto fail = [](const std::string& what) { throw SpecInvalid(what); };
  if (spec.width < 1 || spec.height < 1) fail("width and height must be >= 1");
  if (spec.n_agents < 1) fail("n_agents must be >= 1");
  auto inside = [&](Cell c) {
    return c.col >= 0 && c.col < spec.width && c.row >= 0 &&
           c.row < spec.height;
  };
  for (Cell c : spec.walls) {
    if (!inside(c)) fail("wall cell outside the grid");
  }
  for (Cell c : spec.hazards) {
    if (!inside(c)) fail("hazard cell outside the grid");
  }
  if (spec.goals.size() != spec.n_agents) fail("goals must list one cell per agent");
  for (Cell c : spec.goals) {
    if (!inside(c)) fail("goal cell outside the grid");
    if (contains(spec.walls, c) || contains(spec.hazards, c)) {
      fail("goal cell is a wall or hazard");
    }
  }
  if (!spec.starts.empty()) {
    if (spec.starts.size() != spec.n_agents) {
      fail("starts must list one cell per agent");
    }
    for (std::size_t i = 0; i < spec.starts.size(); ++i) {
      const Cell c = spec.starts[i];
      if (!inside(c)) fail("start cell outside the grid");
      if (contains(spec.walls, c) || contains(spec.hazards, c)) {
        fail("start cell is a wall or hazard");
      }
      if (spec.collision_rule == CollisionRule::kBlockBoth) {
        for (std::size_t j = 0; j < i; ++j) {
          if (spec.starts[j] == c) fail("start cells overlap under block-both");
        }
      }
    }
  }
  const double cells = static_cast<double>(spec.width) * spec.height;
  if (std::pow(cells, static_cast<double>(spec.n_agents)) > 1e5) {
    fail("(width * height)^n_agents exceeds 1e5");
  }
}

}  // namespace

std::vector<Cell> grid_positions(const GridSpec& spec, StateId x) {
  const auto cells = static_cast<std::size_t>(spec.width * spec.height);
  std::vector<Cell> out(spec.n_agents);
  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    const auto cell = static_cast<int>(x % cells);
    out[i] = {cell % spec.width, cell / spec.width};
    x /= cells;
  }
  return out;
}

StateId grid_state(const GridSpec& spec, const std::vector<Cell>& positions) {
  const auto cells = static_cast<std::size_t>(spec.width * spec.height);
  StateId x = 0;
  for (std::size_t i = spec.n_agents; i-- > 0;) {
    x = x * cells +
        static_cast<std::size_t>(positions[i].row * spec.width +
                                 positions[i].col);
  }
  return x;
}

Game build_gridworld(const GridSpec& spec, double gamma, double gamma_h) {
  check_spec(spec);
  const auto cells = static_cast<std::size_t>(spec.width * spec.height);

  std::vector<int> hazard_distance(cells, spec.width + spec.height);
  for (std::size_t c = 0; c < cells; ++c) {
    const Cell here{static_cast<int>(c) % spec.width,
                    static_cast<int>(c) / spec.width};
    for (Cell hz : spec.hazards) {
      hazard_distance[c] = std::min(hazard_distance[c], manhattan(here, hz));
    }
  }

  Game game;
  game.n_agents = spec.n_agents;
  game.n_states = 1;
  for (std::size_t i = 0; i < spec.n_agents; ++i) game.n_states *= cells;
  game.actions_per_agent.assign(spec.n_agents, kGridActions);
  game.gamma = gamma;
  game.gamma_h = gamma_h;
  const std::size_t joint = game.joint_action_count();
  game.transition.resize(game.n_states * joint);
  game.reward.resize(game.n_states * joint);
  game.constraint.resize(game.n_states);
  game.initial_dist.assign(game.n_states, 0.0);

  auto step = [&](Cell c, int action) {
    Cell t = c;
    switch (action) {
      case kUp: --t.row; break;
      case kDown: ++t.row; break;
      case kLeft: --t.col; break;
      case kRight: ++t.col; break;
      default: break;
    }
    const bool off = t.col < 0 || t.col >= spec.width || t.row < 0 ||
                     t.row >= spec.height;
    return off || contains(spec.walls, t) ? c : t;
  };

  for (StateId x = 0; x < game.n_states; ++x) {
    const std::vector<Cell> pos = grid_positions(spec, x);

    double h = spec.width + spec.height;
    double r = 0.0;
    for (std::size_t i = 0; i < spec.n_agents; ++i) {
      const auto c = static_cast<std::size_t>(pos[i].row * spec.width + pos[i].col);
      h = std::min(h, hazard_distance[c] - 0.5);
      r += -0.05 * manhattan(pos[i], spec.goals[i]);
      if (pos[i] == spec.goals[i]) r += 1.0;
    }
    game.constraint[x] = h;

    for (JointActionId u = 0; u < joint; ++u) {
      const std::vector<int> actions = game.decode(u);
      std::vector<Cell> target(spec.n_agents);
      for (std::size_t i = 0; i < spec.n_agents; ++i) {
        target[i] = step(pos[i], actions[i]);
      }
      if (spec.collision_rule == CollisionRule::kBlockBoth) {
        // Clashes are judged on a snapshot of the targets so that the
        // outcome does not depend on agent labels.
        bool clash = true;
        while (clash) {
          clash = false;
          std::vector<bool> blocked(spec.n_agents, false);
          for (std::size_t i = 0; i < spec.n_agents; ++i) {
            if (target[i] == pos[i]) continue;
            for (std::size_t j = 0; j < spec.n_agents; ++j) {
              if (j != i && target[j] == target[i]) blocked[i] = true;
            }
          }
          for (std::size_t i = 0; i < spec.n_agents; ++i) {
            if (blocked[i]) {
              target[i] = pos[i];
              clash = true;
            }
          }
        }
      }
      game.transition[x * joint + u] = grid_state(spec, target);
      game.reward[x * joint + u] = r;
    }
  }

  if (!spec.starts.empty()) {
    game.initial_dist[grid_state(spec, spec.starts)] = 1.0;
  } else {
    std::vector<StateId> admissible;
    for (StateId x = 0; x < game.n_states; ++x) {
      const std::vector<Cell> pos = grid_positions(spec, x);
      bool ok = true;
      for (std::size_t i = 0; i < spec.n_agents && ok; ++i) {
        if (contains(spec.walls, pos[i])) ok = false;
        for (std::size_t j = 0; j < i && ok; ++j) {
          if (spec.collision_rule == CollisionRule::kBlockBoth &&
              pos[i] == pos[j]) {
            ok = false;
          }
        }
      }
      if (ok) admissible.push_back(x);
    }
    if (admissible.empty()) throw SpecInvalid("no admissible start state");
    const double p = 1.0 / static_cast<double>(admissible.size());
    for (StateId x : admissible) game.initial_dist[x] = p;
  }
  return game;
}

GridSpec grid5_spec() {
  GridSpec spec;
  spec.width = 5;
  spec.height = 5;
  spec.n_agents = 2;
  spec.hazards = {{0, 2}, {1, 2}, {3, 2}, {4, 2}};
  spec.goals = {{0, 4}, {4, 4}};
  spec.collision_rule = CollisionRule::kBlockBoth;
  return spec;
}

Game build_random_game(std::uint64_t seed, std::size_t n_states,
                       std::size_t n_agents,
                       const std::vector<int>& actions_per_agent,
                       double hazard_fraction) {
  SplitMix64 rng(seed);
  Game game;
  game.n_agents = n_agents;
  game.n_states = n_states;
  game.actions_per_agent = actions_per_agent;
  game.gamma = 0.9;
  game.gamma_h = 0.9;
  const std::size_t cells = n_states * game.joint_action_count();

  game.transition.resize(cells);
  for (auto& next : game.transition) next = rng.below(n_states);
  game.reward.resize(cells);
  for (auto& r : game.reward) r = rng.uniform(-1.0, 1.0);

  std::vector<double> magnitude(n_states);
  for (auto& m : magnitude) m = rng.uniform01();
  const auto negatives = static_cast<std::size_t>(
      std::floor(hazard_fraction * static_cast<double>(n_states)));
  const std::vector<std::size_t> order = shuffled_order(n_states, rng);
  game.constraint = magnitude;
  for (std::size_t k = 0; k < std::min(negatives, n_states); ++k) {
    game.constraint[order[k]] = -(1.0 - magnitude[order[k]]);
  }

  game.initial_dist.assign(n_states, 1.0 / static_cast<double>(n_states));
  return game;
}

Game build_random_game(const RandomGameSpec& spec) {
  return build_random_game(spec.seed, spec.n_states, spec.n_agents,
                           spec.actions_per_agent, spec.hazard_fraction);
}

std::vector<RandomGameSpec> random_suite(std::size_t count,
                                         std::uint64_t suite_seed) {
  SplitMix64 rng(suite_seed);
  std::vector<RandomGameSpec> out;
  out.reserve(count);
  for (std::size_t g = 0; g < count; ++g) {
    RandomGameSpec spec;
    spec.seed = rng.next();
    spec.n_states = 2 + rng.below(11);
    spec.n_agents = 1 + rng.below(3);
    for (std::size_t i = 0; i < spec.n_agents; ++i) {
      spec.actions_per_agent.push_back(2 + static_cast<int>(rng.below(2)));
    }
    spec.hazard_fraction = 0.15 * static_cast<double>(rng.below(5));
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace cismarl
