#include "cismarl/dual_iteration.hpp"

#include <algorithm>
#include <numeric>

#include "cismarl/parallel.hpp"

namespace cismarl {

namespace {

std::size_t count_differences(const JointPolicy& a, const JointPolicy& b) {
  std::size_t n = 0;
  for (StateId x = 0; x < a.n_states(); ++x) {
    for (std::size_t i = 0; i < a.n_agents(); ++i) {
      if (a(x, i) != b(x, i)) ++n;
    }
  }
  return n;
}

}  // namespace

double objective_value(const Game& game, const ValueTable& v,
                       const ValueTable& vh_task, const StateSet& cis) {
  double total = 0.0;
  for (StateId x = 0; x < game.n_states; ++x) {
    total += game.initial_dist[x] * (cis.contains(x) ? v[x] : vh_task[x]);
  }
  return total;
}

JointPolicy failsafe_copy(const JointPolicy& task, const JointPolicy& safety,
                          const StateSet& current_cis) {
  JointPolicy out = task;
  for (StateId x = 0; x < out.n_states(); ++x) {
    if (current_cis.contains(x)) continue;
    std::ranges::copy(safety.row(x), out.row(x).begin());
  }
  return out;
}

SweepResult constrained_task_sweep(const Game& game, const JointPolicy& task,
                                   const ValueTable& v, const ValueTable& vh,
                                   const JointPolicy& safety,
                                   const StateSet& new_cis,
                                   std::span<const std::size_t> order,
                                   std::size_t threads) {
  threads = std::max<std::size_t>(threads, 1);
  SweepResult out{task, 0, 0, 0};
  const std::vector<std::size_t> strides = game.strides();
  std::vector<std::size_t> changed(threads, 0);
  std::vector<std::size_t> evaluations(threads, 0);
  std::vector<std::size_t> fallbacks(threads, 0);

  for_each_chunk(game.n_states, threads, [&](std::size_t chunk,
                                             std::size_t begin,
                                             std::size_t end) {
    for (StateId x = begin; x < end; ++x) {
      if (!new_cis.contains(x)) continue;
      std::span<int> choice = out.policy.row(x);
      for (std::size_t agent : order) {
        const std::size_t stride = strides[agent];
        const JointActionId base =
            game.encode(choice) -
            static_cast<std::size_t>(choice[agent]) * stride;
        int best = -1;
        double best_q = 0.0;
        bool incumbent_feasible = false;
        double incumbent_q = 0.0;
        for (int u = 0; u < game.actions_per_agent[agent]; ++u) {
          const JointActionId joint = base + static_cast<std::size_t>(u) * stride;
          const StateId next = game.next(x, joint);
          if (vh[next] < 0.0) continue;
          const double q = game.reward_at(x, joint) + game.gamma * v[next];
          if (best < 0 || q > best_q) {
            best = u;
            best_q = q;
          }
          if (u == choice[agent]) {
            incumbent_feasible = true;
            incumbent_q = q;
          }
        }
        evaluations[chunk] +=
            static_cast<std::size_t>(game.actions_per_agent[agent]);
        if (best < 0) {
          std::ranges::copy(safety.row(x), choice.begin());
          ++fallbacks[chunk];
          break;
        }
        if (!(incumbent_feasible && incumbent_q >= best_q)) {
          choice[agent] = best;
        }
      }
      for (std::size_t agent = 0; agent < game.n_agents; ++agent) {
        if (choice[agent] != task(x, agent)) ++changed[chunk];
      }
    }
  });

  out.changed = std::accumulate(changed.begin(), changed.end(), std::size_t{0});
  out.evaluations =
      std::accumulate(evaluations.begin(), evaluations.end(), std::size_t{0});
  out.fallbacks =
      std::accumulate(fallbacks.begin(), fallbacks.end(), std::size_t{0});
  return out;
}

DualIterationResult run_dual_iteration(const Game& game,
                                       const JointPolicy& initial_safety,
                                       const DualIterationConfig& config) {
  DualIterationResult result;
  JointPolicy safety = initial_safety;
  JointPolicy task = initial_safety;
  StateSet cis(game.n_states);
  AgentOrderSource safety_orders(config.agent_order, config.seed,
                                 game.n_agents);
  AgentOrderSource task_orders(config.agent_order,
                               config.seed ^ kTaskOrderStream, game.n_agents);

  ValueTable vh = evaluate_policy(game, safety, ValueKind::kSafety);
  for (std::size_t m = 1; m <= config.m_outer; ++m) {
    DualTraceRow row;
    row.iteration = m;

    const ValueTable vh_before = vh;
    for (std::size_t k = 0; k < config.k_safety_per_outer; ++k) {
      vh = evaluate_policy(game, safety, ValueKind::kSafety);
      const std::vector<std::size_t> order = safety_orders.next();
      SweepResult sweep =
          safety_improvement_sweep(game, safety, vh, order, config.threads);
      row.safety_changed += sweep.changed;
      if (sweep.changed == 0) break;
      safety = std::move(sweep.policy);
    }
    vh = evaluate_policy(game, safety, ValueKind::kSafety);
    row.safety_residual = sup_norm_distance(vh, vh_before);

    // The reward table is taken before the copy, following the algorithm's
    // line order.
    const ValueTable v = evaluate_policy(game, task, ValueKind::kReward);
    const JointPolicy task_before = task;
    task = failsafe_copy(task, safety, cis);
    const StateSet cis_new = StateSet::nonnegative(vh);

    const std::vector<std::size_t> order = task_orders.next();
    SweepResult sweep = constrained_task_sweep(game, task, v, vh, safety,
                                               cis_new, order, config.threads);
    task = std::move(sweep.policy);
    cis = cis_new;

    row.task_changed = count_differences(task_before, task);
    row.fallbacks = sweep.fallbacks;
    row.evaluations = sweep.evaluations;
    row.cis_size = cis.count();
    row.cis = cis;
    row.v = evaluate_policy(game, task, ValueKind::kReward);
    row.objective = objective_value(
        game, row.v, evaluate_policy(game, task, ValueKind::kSafety), cis);
    const bool quiet = row.safety_changed == 0 && row.task_changed == 0;
    result.trace.push_back(std::move(row));
    if (quiet) {
      result.converged = true;
      break;
    }
  }

  result.v = evaluate_policy(game, task, ValueKind::kReward);
  result.vh_task = evaluate_policy(game, task, ValueKind::kSafety);
  result.vh_safety = std::move(vh);
  result.cis = std::move(cis);
  result.objective =
      objective_value(game, result.v, result.vh_task, result.cis);
  result.task_policy = std::move(task);
  result.safety_policy = std::move(safety);
  return result;
}

}  // namespace cismarl
