#pragma once

// Multi-agent dual policy iteration. A safety thread runs the safety policy
// iteration; a task thread improves the reward value inside the current
// controlled invariant set using only invariant actions, and copies the
// safety policy everywhere outside it.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cismarl/agent_order.hpp"
#include "cismarl/game.hpp"
#include "cismarl/safety_iteration.hpp"

namespace cismarl {

struct DualIterationConfig {
  std::size_t m_outer = 1000;
  std::size_t k_safety_per_outer = 1;
  AgentOrder agent_order = AgentOrder::kShuffled;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct DualTraceRow {
  std::size_t iteration = 0;
  std::size_t cis_size = 0;
  double objective = 0.0;
  double safety_residual = 0.0;  // sup-norm change of the safety table
  std::size_t safety_changed = 0;
  std::size_t task_changed = 0;  // includes entries rewritten by the copy
  std::size_t fallbacks = 0;
  std::size_t evaluations = 0;   // task sweep candidates scored
  StateSet cis;                  // S_c after this iteration
  ValueTable v;                  // reward value of the task policy after it
};

struct DualIterationResult {
  JointPolicy task_policy;
  JointPolicy safety_policy;
  ValueTable v;
  ValueTable vh_safety;
  ValueTable vh_task;
  StateSet cis;
  double objective = 0.0;
  std::vector<DualTraceRow> trace;
  bool converged = false;
};

/// Expected value under the initial distribution of v inside `cis` and of
/// vh_task outside it.
double objective_value(const Game& game, const ValueTable& v,
                       const ValueTable& vh_task, const StateSet& cis);

/// `safety` outside `current_cis`, `task` inside it.
JointPolicy failsafe_copy(const JointPolicy& task, const JointPolicy& safety,
                          const StateSet& current_cis);

/// One constrained improvement sweep over the states of `new_cis`. Each agent
/// maximizes r(x,u) + gamma * v(f(x,u)) over its invariant action set given
/// the other agents' current choices. A state whose set turns out empty is
/// reset to `safety` and counted as a fallback.
SweepResult constrained_task_sweep(const Game& game, const JointPolicy& task,
                                   const ValueTable& v, const ValueTable& vh,
                                   const JointPolicy& safety,
                                   const StateSet& new_cis,
                                   std::span<const std::size_t> order,
                                   std::size_t threads = 1);

DualIterationResult run_dual_iteration(const Game& game,
                                       const JointPolicy& initial_safety,
                                       const DualIterationConfig& config);

/// Seed offset of the task thread's order stream. The safety thread uses the
/// configured seed directly, so it replays run_safety_iteration exactly.
inline constexpr std::uint64_t kTaskOrderStream = 0xD1B54A32D192ED03ULL;

}  // namespace cismarl
