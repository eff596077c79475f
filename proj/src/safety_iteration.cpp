#include "cismarl/safety_iteration.hpp"

#include <algorithm>
#include <numeric>

#include "cismarl/parallel.hpp"

namespace cismarl {

SweepResult safety_improvement_sweep(const Game& game,
                                     const JointPolicy& policy,
                                     const ValueTable& vh,
                                     std::span<const std::size_t> order,
                                     std::size_t threads) {
  threads = std::max<std::size_t>(threads, 1);
  SweepResult out{policy, 0, 0, 0};
  const std::vector<std::size_t> strides = game.strides();
  std::vector<std::size_t> changed(threads, 0);
  std::vector<std::size_t> evaluations(threads, 0);

  for_each_chunk(game.n_states, threads, [&](std::size_t chunk,
                                             std::size_t begin,
                                             std::size_t end) {
    for (StateId x = begin; x < end; ++x) {
      std::span<int> choice = out.policy.row(x);
      for (std::size_t agent : order) {
        const std::size_t stride = strides[agent];
        const JointActionId base =
            game.encode(choice) -
            static_cast<std::size_t>(choice[agent]) * stride;
        int best = choice[agent];
        double best_value =
            vh[game.next(x, base + static_cast<std::size_t>(best) * stride)];
        for (int u = 0; u < game.actions_per_agent[agent]; ++u) {
          const double value =
              vh[game.next(x, base + static_cast<std::size_t>(u) * stride)];
          if (value > best_value) {
            best = u;
            best_value = value;
          }
        }
        evaluations[chunk] +=
            static_cast<std::size_t>(game.actions_per_agent[agent]);
        choice[agent] = best;
      }
      for (std::size_t agent = 0; agent < game.n_agents; ++agent) {
        if (choice[agent] != policy(x, agent)) ++changed[chunk];
      }
    }
  });

  out.changed = std::accumulate(changed.begin(), changed.end(), std::size_t{0});
  out.evaluations =
      std::accumulate(evaluations.begin(), evaluations.end(), std::size_t{0});
  return out;
}

SafetyIterationResult run_safety_iteration(
    const Game& game, const JointPolicy& initial,
    const SafetyIterationConfig& config) {
  SafetyIterationResult result;
  result.policy = initial;
  AgentOrderSource orders(config.agent_order, config.seed, game.n_agents);

  ValueTable previous;
  for (std::size_t k = 1; k <= config.max_outer_iters; ++k) {
    ValueTable vh = evaluate_policy(game, result.policy, ValueKind::kSafety);
    SafetyTraceRow row;
    row.iteration = k;
    row.value_change = k == 1 ? 0.0 : sup_norm_distance(vh, previous);
    row.cis_size = StateSet::nonnegative(vh).count();

    const std::vector<std::size_t> order = orders.next();
    SweepResult sweep = safety_improvement_sweep(game, result.policy, vh,
                                                 order, config.threads);
    row.changed = sweep.changed;
    row.evaluations = sweep.evaluations;
    row.policy = result.policy;
    row.vh = vh;
    result.trace.push_back(std::move(row));
    previous = std::move(vh);
    if (sweep.changed == 0) {
      result.converged = true;
      break;
    }
    result.policy = std::move(sweep.policy);
  }

  result.vh = result.converged
                  ? std::move(previous)
                  : evaluate_policy(game, result.policy, ValueKind::kSafety);
  result.cis = StateSet::nonnegative(result.vh);
  return result;
}

}  // namespace cismarl
