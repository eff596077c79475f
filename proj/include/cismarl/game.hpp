#pragma once

// Core types for finite, deterministic, state-wise constrained cooperative
// Markov games: the game tuple, deterministic joint policies, value tables,
// state sets, and exact policy evaluation by trajectory cycle detection.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cismarl {

using StateId = std::size_t;
using JointActionId = std::size_t;

/// A finite deterministic cooperative Markov game with a state constraint.
///
/// Joint actions are encoded mixed-radix with agent 0 as the least
/// significant digit. `transition` and `reward` are row-major over
/// (state, joint action).
struct Game {
  std::size_t n_agents = 0;
  std::size_t n_states = 0;
  std::vector<int> actions_per_agent;
  std::vector<StateId> transition;
  std::vector<double> reward;
  std::vector<double> constraint;  // h(x)
  double gamma = 0.9;
  double gamma_h = 0.9;
  std::vector<double> initial_dist;

  /// Product of the per-agent action counts.
  std::size_t joint_action_count() const;

  /// Place value of each agent's digit in the joint-action encoding.
  std::vector<std::size_t> strides() const;

  JointActionId encode(std::span<const int> actions) const;
  std::vector<int> decode(JointActionId joint) const;

  StateId next(StateId x, JointActionId u) const {
    return transition[x * joint_action_count() + u];
  }
  double reward_at(StateId x, JointActionId u) const {
    return reward[x * joint_action_count() + u];
  }
};

/// One problem found by validate_game. `index` is the offending flat index
/// (or state, or agent) when the field is an array, otherwise -1.
struct Violation {
  std::string field;
  long long index = -1;
  std::string message;
};

/// Checks every structural invariant of a game; never throws.
std::vector<Violation> validate_game(const Game& game);

/// Deterministic joint policy: one action index per (state, agent).
class JointPolicy {
 public:
  JointPolicy() = default;
  JointPolicy(std::size_t n_states, std::size_t n_agents, int fill = 0)
      : n_states_(n_states), n_agents_(n_agents),
        choice_(n_states * n_agents, fill) {}

  /// Policy that plays `action` for every agent at every state, clamped to
  /// each agent's action range.
  static JointPolicy uniform(const Game& game, int action);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_agents() const { return n_agents_; }

  int operator()(StateId x, std::size_t agent) const {
    return choice_[x * n_agents_ + agent];
  }
  void set(StateId x, std::size_t agent, int action) {
    choice_[x * n_agents_ + agent] = action;
  }

  std::span<const int> row(StateId x) const {
    return {choice_.data() + x * n_agents_, n_agents_};
  }
  std::span<int> row(StateId x) {
    return {choice_.data() + x * n_agents_, n_agents_};
  }

  JointActionId joint_action(const Game& game, StateId x) const {
    return game.encode(row(x));
  }

  /// True when every entry is a valid action for its agent.
  bool valid_for(const Game& game) const;

  friend bool operator==(const JointPolicy&, const JointPolicy&) = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_agents_ = 0;
  std::vector<int> choice_;
};

enum class ValueKind { kReward, kSafety };

struct ValueTable {
  ValueKind kind = ValueKind::kReward;
  std::vector<double> values;

  double operator[](StateId x) const { return values[x]; }
  std::size_t size() const { return values.size(); }
};

/// Largest absolute pointwise difference; tables must have equal size.
double sup_norm_distance(const ValueTable& a, const ValueTable& b);

/// Subset of the state space, stored as a bitset.
class StateSet {
 public:
  StateSet() = default;
  explicit StateSet(std::size_t n_states, bool full = false)
      : members_(n_states, full) {}

  /// The constraint set {x : h(x) >= 0}.
  static StateSet constraint_set(const Game& game);
  /// Zero-superlevel set {x : V_h(x) >= 0} of a safety table.
  static StateSet nonnegative(const ValueTable& vh);

  std::size_t universe() const { return members_.size(); }
  bool contains(StateId x) const { return members_[x]; }
  void insert(StateId x) { members_[x] = true; }
  void erase(StateId x) { members_[x] = false; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool subset_of(const StateSet& other) const;
  std::vector<StateId> elements() const;

  friend bool operator==(const StateSet&, const StateSet&) = default;

 private:
  std::vector<bool> members_;
};

/// Eventually periodic trajectory of a deterministic policy: `prefix` is
/// visited once, then `cycle` repeats forever.
struct TrajectorySummary {
  std::vector<StateId> prefix;
  std::vector<StateId> cycle;
  double min_h = 0.0;
};

TrajectorySummary rollout(const Game& game, const JointPolicy& policy,
                          StateId start);

/// Infimum over t of gamma_h^(t+1) * h(x_t) along the trajectory from `start`.
double exact_safety_value(const Game& game, const JointPolicy& policy,
                          StateId start);

/// Discounted return along the trajectory from `start`.
double exact_reward_value(const Game& game, const JointPolicy& policy,
                          StateId start);

/// Exact evaluation of every state in one memoized pass. Entry x is
/// bit-identical to exact_safety_value / exact_reward_value at x.
ValueTable evaluate_policy(const Game& game, const JointPolicy& policy,
                           ValueKind kind);

class EmptyFeasibleSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Actions u_i with vh(f(x, (u_i, u_-i))) >= 0. `joint` supplies the other
/// agents' actions; its entry for `agent` is ignored. May be empty.
std::vector<int> feasible_actions(const Game& game, const ValueTable& vh,
                                  StateId x, std::size_t agent,
                                  std::span<const int> joint);

/// Invariant action set of `agent` at `x`. Throws EmptyFeasibleSet when no
/// action keeps the successor inside the safety policy's CIS.
std::vector<int> invariant_action_set(const Game& game, const ValueTable& vh,
                                      StateId x, std::size_t agent,
                                      std::span<const int> joint);

}  // namespace cismarl
