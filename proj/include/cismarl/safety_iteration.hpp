#pragma once

// Multi-agent safety policy iteration: exact joint evaluation of the safety
// value followed by an agent-by-agent sequential improvement sweep, repeated
// until no (state, agent) choice changes.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cismarl/agent_order.hpp"
#include "cismarl/game.hpp"

namespace cismarl {

struct SafetyIterationConfig {
  std::size_t max_outer_iters = 1000;
  AgentOrder agent_order = AgentOrder::kShuffled;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // states are split across this many workers
};

struct SweepResult {
  JointPolicy policy;
  std::size_t changed = 0;      // (state, agent) entries that differ
  std::size_t evaluations = 0;  // candidate actions scored
  std::size_t fallbacks = 0;    // constrained sweeps only
};

/// One improvement sweep. At every state the agents in `order` each pick
/// argmax_u vh(f(x, u)) over their own action, seeing predecessors' new
/// choices and successors' current ones. The incumbent wins ties; otherwise
/// the smallest maximizing index.
SweepResult safety_improvement_sweep(const Game& game,
                                     const JointPolicy& policy,
                                     const ValueTable& vh,
                                     std::span<const std::size_t> order,
                                     std::size_t threads = 1);

struct SafetyTraceRow {
  std::size_t iteration = 0;
  double value_change = 0.0;  // sup-norm vs previous iteration's table
  std::size_t changed = 0;
  std::size_t cis_size = 0;
  std::size_t evaluations = 0;
  JointPolicy policy;  // policy evaluated at this iteration
  ValueTable vh;       // and its safety table
};

struct SafetyIterationResult {
  JointPolicy policy;
  ValueTable vh;
  StateSet cis;
  std::vector<SafetyTraceRow> trace;
  bool converged = false;
};

SafetyIterationResult run_safety_iteration(const Game& game,
                                           const JointPolicy& initial,
                                           const SafetyIterationConfig& config);

}  // namespace cismarl
