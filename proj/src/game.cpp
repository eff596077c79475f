#include "cismarl/game.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cismarl {

std::size_t Game::joint_action_count() const {
  std::size_t count = 1;
  for (int c : actions_per_agent) count *= static_cast<std::size_t>(c);
  return count;
}

std::vector<std::size_t> Game::strides() const {
  std::vector<std::size_t> out(n_agents);
  std::size_t place = 1;
  for (std::size_t i = 0; i < n_agents; ++i) {
    out[i] = place;
    place *= static_cast<std::size_t>(actions_per_agent[i]);
  }
  return out;
}

JointActionId Game::encode(std::span<const int> actions) const {
  JointActionId joint = 0;
  for (std::size_t i = n_agents; i-- > 0;) {
    joint = joint * static_cast<std::size_t>(actions_per_agent[i]) +
            static_cast<std::size_t>(actions[i]);
  }
  return joint;
}

std::vector<int> Game::decode(JointActionId joint) const {
  std::vector<int> actions(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) {
    const auto radix = static_cast<std::size_t>(actions_per_agent[i]);
    actions[i] = static_cast<int>(joint % radix);
    joint /= radix;
  }
  return actions;
}

std::vector<Violation> validate_game(const Game& game) {
  std::vector<Violation> out;
  auto report = [&out](std::string field, long long index, std::string msg) {
    out.push_back({std::move(field), index, std::move(msg)});
  };

  if (game.n_agents == 0) report("n_agents", -1, "n_agents must be positive");
  if (game.n_states == 0) report("n_states", -1, "n_states must be positive");
  if (game.actions_per_agent.size() != game.n_agents) {
    report("actions_per_agent", -1,
           "actions_per_agent has " +
               std::to_string(game.actions_per_agent.size()) +
               " entries, expected n_agents = " +
               std::to_string(game.n_agents));
    // Without a consistent action layout nothing else can be indexed.
    return out;
  }
  bool actions_ok = true;
  for (std::size_t i = 0; i < game.n_agents; ++i) {
    if (game.actions_per_agent[i] < 1) {
      report("actions_per_agent", static_cast<long long>(i),
             "agent " + std::to_string(i) + " has no actions");
      actions_ok = false;
    }
  }
  if (!actions_ok) return out;

  const std::size_t joint = game.joint_action_count();
  const std::size_t cells = game.n_states * joint;
  if (game.transition.size() != cells) {
    report("transition", -1,
           "transition has " + std::to_string(game.transition.size()) +
               " entries, expected n_states * joint actions = " +
               std::to_string(cells));
  } else {
    for (std::size_t k = 0; k < cells; ++k) {
      if (game.transition[k] >= game.n_states) {
        std::ostringstream msg;
        msg << "transition[state=" << k / joint << ", joint_action="
            << k % joint << "] = " << game.transition[k]
            << " is not a valid state";
        report("transition", static_cast<long long>(k), msg.str());
      }
    }
  }
  if (game.reward.size() != cells) {
    report("reward", -1,
           "reward has " + std::to_string(game.reward.size()) +
               " entries, expected " + std::to_string(cells));
  } else {
    for (std::size_t k = 0; k < cells; ++k) {
      if (!std::isfinite(game.reward[k])) {
        report("reward", static_cast<long long>(k), "reward is not finite");
      }
    }
  }
  if (game.constraint.size() != game.n_states) {
    report("h", -1,
           "h has " + std::to_string(game.constraint.size()) +
               " entries, expected n_states = " +
               std::to_string(game.n_states));
  } else {
    for (std::size_t x = 0; x < game.n_states; ++x) {
      if (!std::isfinite(game.constraint[x])) {
        report("h", static_cast<long long>(x), "h is not finite");
      }
    }
  }
  if (!(game.gamma > 0.0 && game.gamma < 1.0)) {
    report("gamma", -1, "gamma out of (0,1)");
  }
  if (!(game.gamma_h > 0.0 && game.gamma_h < 1.0)) {
    report("gamma_h", -1, "gamma_h out of (0,1)");
  }
  if (game.initial_dist.size() != game.n_states) {
    report("initial_dist", -1,
           "initial_dist has " + std::to_string(game.initial_dist.size()) +
               " entries, expected n_states = " +
               std::to_string(game.n_states));
  } else {
    double total = 0.0;
    for (std::size_t x = 0; x < game.n_states; ++x) {
      const double p = game.initial_dist[x];
      if (!(p >= 0.0) || !std::isfinite(p)) {
        report("initial_dist", static_cast<long long>(x),
               "probability must be finite and >= 0");
      }
      total += p;
    }
    if (!(std::abs(total - 1.0) <= 1e-12)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "initial_dist sums to " << total << ", expected 1";
      report("initial_dist", -1, msg.str());
    }
  }
  return out;
}

JointPolicy JointPolicy::uniform(const Game& game, int action) {
  JointPolicy policy(game.n_states, game.n_agents);
  for (StateId x = 0; x < game.n_states; ++x) {
    for (std::size_t i = 0; i < game.n_agents; ++i) {
      policy.set(x, i, std::clamp(action, 0, game.actions_per_agent[i] - 1));
    }
  }
  return policy;
}

bool JointPolicy::valid_for(const Game& game) const {
  if (n_states_ != game.n_states || n_agents_ != game.n_agents) return false;
  for (StateId x = 0; x < n_states_; ++x) {
    for (std::size_t i = 0; i < n_agents_; ++i) {
      const int a = (*this)(x, i);
      if (a < 0 || a >= game.actions_per_agent[i]) return false;
    }
  }
  return true;
}

double sup_norm_distance(const ValueTable& a, const ValueTable& b) {
  double worst = 0.0;
  for (std::size_t x = 0; x < a.values.size(); ++x) {
    worst = std::max(worst, std::abs(a.values[x] - b.values[x]));
  }
  return worst;
}

StateSet StateSet::constraint_set(const Game& game) {
  StateSet set(game.n_states);
  for (StateId x = 0; x < game.n_states; ++x) {
    if (game.constraint[x] >= 0.0) set.insert(x);
  }
  return set;
}

StateSet StateSet::nonnegative(const ValueTable& vh) {
  StateSet set(vh.size());
  for (StateId x = 0; x < vh.size(); ++x) {
    if (vh[x] >= 0.0) set.insert(x);
  }
  return set;
}

std::size_t StateSet::count() const {
  return static_cast<std::size_t>(
      std::count(members_.begin(), members_.end(), true));
}

bool StateSet::subset_of(const StateSet& other) const {
  for (StateId x = 0; x < members_.size(); ++x) {
    if (members_[x] && !other.members_[x]) return false;
  }
  return true;
}

std::vector<StateId> StateSet::elements() const {
  std::vector<StateId> out;
  for (StateId x = 0; x < members_.size(); ++x) {
    if (members_[x]) out.push_back(x);
  }
  return out;
}

namespace {

StateId successor(const Game& game, const JointPolicy& policy, StateId x) {
  return game.next(x, policy.joint_action(game, x));
}

// One application of the self-consistency operator at x, given the value of
// the successor. Both the single-state and the memoized evaluators go through
// this so their results agree bit-for-bit.
double backup(const Game& game, const JointPolicy& policy, ValueKind kind,
              StateId x, double next_value) {
  if (kind == ValueKind::kSafety) {
    return game.gamma_h * std::min(game.constraint[x], next_value);
  }
  return game.reward_at(x, policy.joint_action(game, x)) +
         game.gamma * next_value;
}

// Values of the states of a cycle, aligned with `cycle`. The closed form is
// evaluated once at the smallest-index cycle state and propagated backwards
// around the cycle, so the result does not depend on where the cycle was
// entered.
std::vector<double> cycle_values(const Game& game, const JointPolicy& policy,
                                 ValueKind kind,
                                 std::span<const StateId> cycle) {
  const std::size_t len = cycle.size();
  const std::size_t anchor = static_cast<std::size_t>(
      std::min_element(cycle.begin(), cycle.end()) - cycle.begin());

  double anchor_value = 0.0;
  if (kind == ValueKind::kSafety) {
    double discount = game.gamma_h;
    for (std::size_t k = 0; k < len; ++k) {
      const StateId x = cycle[(anchor + k) % len];
      anchor_value = std::min(anchor_value, discount * game.constraint[x]);
      discount *= game.gamma_h;
    }
  } else {
    double discount = 1.0;
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const StateId x = cycle[(anchor + k) % len];
      total += discount *
               game.reward_at(x, policy.joint_action(game, x));
      discount *= game.gamma;
    }
    anchor_value = total / (1.0 - discount);
  }

  std::vector<double> values(len);
  values[anchor] = anchor_value;
  for (std::size_t step = 1; step < len; ++step) {
    const std::size_t j = (anchor + len - step) % len;
    values[j] = backup(game, policy, kind, cycle[j], values[(j + 1) % len]);
  }
  return values;
}

double exact_value(const Game& game, const JointPolicy& policy, ValueKind kind,
                   StateId start) {
  const TrajectorySummary traj = rollout(game, policy, start);
  const std::vector<double> on_cycle =
      cycle_values(game, policy, kind, traj.cycle);
  double value = on_cycle.front();
  for (std::size_t i = traj.prefix.size(); i-- > 0;) {
    value = backup(game, policy, kind, traj.prefix[i], value);
  }
  return value;
}

}  // namespace

TrajectorySummary rollout(const Game& game, const JointPolicy& policy,
                          StateId start) {
  constexpr std::size_t kUnseen = static_cast<std::size_t>(-1);
  std::vector<std::size_t> position(game.n_states, kUnseen);
  std::vector<StateId> path;
  StateId x = start;
  while (position[x] == kUnseen) {
    position[x] = path.size();
    path.push_back(x);
    x = successor(game, policy, x);
  }
  TrajectorySummary out;
  const auto entry = static_cast<std::ptrdiff_t>(position[x]);
  out.prefix.assign(path.begin(), path.begin() + entry);
  out.cycle.assign(path.begin() + entry, path.end());
  out.min_h = game.constraint[path.front()];
  for (StateId s : path) out.min_h = std::min(out.min_h, game.constraint[s]);
  return out;
}

double exact_safety_value(const Game& game, const JointPolicy& policy,
                          StateId start) {
  return exact_value(game, policy, ValueKind::kSafety, start);
}

double exact_reward_value(const Game& game, const JointPolicy& policy,
                          StateId start) {
  return exact_value(game, policy, ValueKind::kReward, start);
}

ValueTable evaluate_policy(const Game& game, const JointPolicy& policy,
                           ValueKind kind) {
  enum class Mark : unsigned char { kNew, kOnPath, kDone };
  ValueTable table{kind, std::vector<double>(game.n_states, 0.0)};
  std::vector<Mark> mark(game.n_states, Mark::kNew);
  std::vector<std::size_t> position(game.n_states, 0);
  std::vector<StateId> path;

  for (StateId start = 0; start < game.n_states; ++start) {
    if (mark[start] != Mark::kNew) continue;
    path.clear();
    StateId x = start;
    while (mark[x] == Mark::kNew) {
      mark[x] = Mark::kOnPath;
      position[x] = path.size();
      path.push_back(x);
      x = successor(game, policy, x);
    }
    std::size_t prefix_len = path.size();
    if (mark[x] == Mark::kOnPath) {
      prefix_len = position[x];
      const std::span<const StateId> cycle(path.data() + prefix_len,
                                           path.size() - prefix_len);
      const std::vector<double> values =
          cycle_values(game, policy, kind, cycle);
      for (std::size_t j = 0; j < cycle.size(); ++j) {
        table.values[cycle[j]] = values[j];
        mark[cycle[j]] = Mark::kDone;
      }
    }
    for (std::size_t i = prefix_len; i-- > 0;) {
      const StateId s = path[i];
      table.values[s] = backup(game, policy, kind, s,
                               table.values[successor(game, policy, s)]);
      mark[s] = Mark::kDone;
    }
  }
  return table;
}

std::vector<int> feasible_actions(const Game& game, const ValueTable& vh,
                                  StateId x, std::size_t agent,
                                  std::span<const int> joint) {
  const std::size_t stride = game.strides()[agent];
  const JointActionId base =
      game.encode(joint) - static_cast<std::size_t>(joint[agent]) * stride;
  std::vector<int> out;
  for (int u = 0; u < game.actions_per_agent[agent]; ++u) {
    if (vh[game.next(x, base + static_cast<std::size_t>(u) * stride)] >= 0.0) {
      out.push_back(u);
    }
  }
  return out;
}

std::vector<int> invariant_action_set(const Game& game, const ValueTable& vh,
                                      StateId x, std::size_t agent,
                                      std::span<const int> joint) {
  std::vector<int> out = feasible_actions(game, vh, x, agent, joint);
  if (out.empty()) {
    throw EmptyFeasibleSet("no invariant action for agent " +
                           std::to_string(agent) + " at state " +
                           std::to_string(x));
  }
  return out;
}

}  // namespace cismarl
