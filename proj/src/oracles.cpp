#include "cismarl/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cismarl {

namespace {

constexpr std::size_t kMaxOracleSweeps = 100'000;

double sup_change(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) {
    worst = std::max(worst, std::abs(a[x] - b[x]));
  }
  return worst;
}

// Value iteration from the zero table; `backup(values, x)` returns the new
// value of x. Stops below kOracleTolerance.
template <class Backup>
std::vector<double> value_iteration(std::size_t n_states, Backup&& backup,
                                    std::size_t* sweeps_out = nullptr) {
  std::vector<double> values(n_states, 0.0);
  std::vector<double> next(n_states, 0.0);
  for (std::size_t sweep = 1; sweep <= kMaxOracleSweeps; ++sweep) {
    for (StateId x = 0; x < n_states; ++x) next[x] = backup(values, x);
    const double residual = sup_change(next, values);
    values.swap(next);
    if (residual < kOracleTolerance) {
      if (sweeps_out != nullptr) *sweeps_out = sweep;
      return values;
    }
  }
  throw NonConvergence("value iteration did not reach tolerance " +
                       std::to_string(kOracleTolerance));
}

void guard_joint_space(const Game& game) {
  if (game.joint_action_count() > kJointActionCap) {
    throw SizeGuard("joint action space of " +
                    std::to_string(game.joint_action_count()) +
                    " exceeds the oracle cap of " +
                    std::to_string(kJointActionCap));
  }
}

// Joint action with agent `agent` replaced by u.
JointActionId with_action(const Game& game, std::span<const int> row,
                          std::size_t agent, int u) {
  std::vector<int> actions(row.begin(), row.end());
  actions[agent] = u;
  return game.encode(actions);
}

struct AgentResponse {
  std::vector<double> values;
  std::vector<int> greedy;  // -1 where no action is admissible
};

AgentResponse safety_response(const Game& game, const JointPolicy& policy,
                              std::size_t agent) {
  const int actions = game.actions_per_agent[agent];
  auto best_next = [&](const std::vector<double>& values, StateId x) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int u = 0; u < actions; ++u) {
      const double value =
          values[game.next(x, with_action(game, policy.row(x), agent, u))];
      if (value > best) {
        best = value;
        arg = u;
      }
    }
    return std::pair{best, arg};
  };
  AgentResponse out;
  out.values = value_iteration(game.n_states, [&](const auto& values, StateId x) {
    return game.gamma_h * std::min(game.constraint[x], best_next(values, x).first);
  });
  out.greedy.resize(game.n_states);
  for (StateId x = 0; x < game.n_states; ++x) {
    out.greedy[x] = best_next(out.values, x).second;
  }
  return out;
}

// Single-agent reward optimum inside `cis`, restricted to actions whose
// successor has vh >= 0. Values outside `cis` stay zero.
AgentResponse constrained_reward_response(const Game& game,
                                          const JointPolicy& policy,
                                          std::size_t agent,
                                          const std::vector<double>& vh,
                                          const StateSet& cis) {
  const int actions = game.actions_per_agent[agent];
  auto best_q = [&](const std::vector<double>& values, StateId x) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int u = 0; u < actions; ++u) {
      const JointActionId joint = with_action(game, policy.row(x), agent, u);
      const StateId next = game.next(x, joint);
      if (vh[next] < 0.0) continue;
      const double q = game.reward_at(x, joint) + game.gamma * values[next];
      if (q > best) {
        best = q;
        arg = u;
      }
    }
    return std::pair{best, arg};
  };
  AgentResponse out;
  out.values = value_iteration(game.n_states, [&](const auto& values, StateId x) {
    if (!cis.contains(x)) return 0.0;
    const double best = best_q(values, x).first;
    // An empty admissible set is reported by the caller; freeze at zero here.
    return std::isfinite(best) ? best : 0.0;
  });
  out.greedy.assign(game.n_states, -1);
  for (StateId x = 0; x < game.n_states; ++x) {
    if (cis.contains(x)) out.greedy[x] = best_q(out.values, x).second;
  }
  return out;
}

Certificate make_certificate(CertificateKind kind, double tol,
                             double worst, std::optional<Witness> witness) {
  Certificate cert;
  cert.kind = kind;
  cert.tolerance = tol;
  cert.worst_violation = worst;
  cert.passed = worst <= tol;
  cert.witness = witness;
  return cert;
}

}  // namespace

std::string_view to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::kNashSafety:
      return "nash-safety";
    case CertificateKind::kGneTask:
      return "gne-task";
    case CertificateKind::kJointOptimumGap:
      return "joint-optimum-gap";
    case CertificateKind::kFixedPoint:
      return "fixed-point";
  }
  return "unknown";
}

FixedPointRun iterate_operator(const Game& game, const JointPolicy& policy,
                               ValueKind kind, std::size_t sweeps, double tol) {
  std::vector<StateId> successor(game.n_states);
  std::vector<double> stage(game.n_states);
  for (StateId x = 0; x < game.n_states; ++x) {
    const JointActionId u = game.encode(policy.row(x));
    successor[x] = game.next(x, u);
    stage[x] = kind == ValueKind::kSafety ? game.constraint[x]
                                          : game.reward_at(x, u);
  }

  FixedPointRun run{{kind, std::vector<double>(game.n_states, 0.0)}, {}};
  std::vector<double> next(game.n_states);
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (StateId x = 0; x < game.n_states; ++x) {
      const double ahead = run.table.values[successor[x]];
      next[x] = kind == ValueKind::kSafety
                    ? game.gamma_h * std::min(stage[x], ahead)
                    : stage[x] + game.gamma * ahead;
    }
    run.residuals.push_back(sup_change(next, run.table.values));
    run.table.values.swap(next);
    if (run.residuals.back() < tol) break;
  }
  return run;
}

ValueTable iterative_fixed_point(const Game& game, const JointPolicy& policy,
                                 ValueKind kind, std::size_t sweeps,
                                 double tol) {
  FixedPointRun run = iterate_operator(game, policy, kind, sweeps, tol);
  if (run.residuals.empty() || run.residuals.back() >= tol) {
    throw NonConvergence("operator residual still >= " + std::to_string(tol) +
                         " after " + std::to_string(sweeps) + " sweeps");
  }
  return std::move(run.table);
}

JointOptimum joint_safety_optimum(const Game& game) {
  guard_joint_space(game);
  const std::size_t joint = game.joint_action_count();
  JointOptimum out;
  std::size_t evaluations = 0;
  out.vh.kind = ValueKind::kSafety;
  out.vh.values = value_iteration(
      game.n_states,
      [&](const std::vector<double>& values, StateId x) {
        double best = -std::numeric_limits<double>::infinity();
        for (JointActionId u = 0; u < joint; ++u) {
          best = std::max(best, values[game.next(x, u)]);
        }
        evaluations += joint;
        return game.gamma_h * std::min(game.constraint[x], best);
      },
      &out.sweeps);
  out.evaluations = evaluations;
  out.policy.resize(game.n_states);
  for (StateId x = 0; x < game.n_states; ++x) {
    JointActionId arg = 0;
    for (JointActionId u = 1; u < joint; ++u) {
      if (out.vh[game.next(x, u)] > out.vh[game.next(x, arg)]) arg = u;
    }
    out.policy[x] = arg;
  }
  return out;
}

ValueTable best_response_safety(const Game& game, const JointPolicy& policy,
                                std::size_t agent) {
  return {ValueKind::kSafety, safety_response(game, policy, agent).values};
}

Certificate certify_nash_safety(const Game& game,
                                const SafetyIterationResult& result,
                                double tol) {
  const ValueTable own = iterative_fixed_point(
      game, result.policy, ValueKind::kSafety, kMaxOracleSweeps,
      kOracleTolerance);
  std::vector<AgentResponse> responses;
  for (std::size_t i = 0; i < game.n_agents; ++i) {
    responses.push_back(safety_response(game, result.policy, i));
  }
  double worst = -std::numeric_limits<double>::infinity();
  std::optional<Witness> witness;
  for (StateId x = 0; x < game.n_states; ++x) {
    for (std::size_t i = 0; i < game.n_agents; ++i) {
      const double gain = responses[i].values[x] - own[x];
      if (gain > worst) {
        worst = gain;
        witness = Witness{x, static_cast<long>(i), responses[i].greedy[x]};
      }
    }
  }
  return make_certificate(CertificateKind::kNashSafety, tol, worst, witness);
}

Certificate certify_gne_task(const Game& game,
                             const DualIterationResult& result, double tol) {
  const ValueTable vh = iterative_fixed_point(
      game, result.safety_policy, ValueKind::kSafety, kMaxOracleSweeps,
      kOracleTolerance);
  const StateSet cis = StateSet::nonnegative(vh);
  const ValueTable own = iterative_fixed_point(
      game, result.task_policy, ValueKind::kReward, kMaxOracleSweeps,
      kOracleTolerance);

  double worst = 0.0;
  std::optional<Witness> witness;
  bool any = false;
  std::vector<AgentResponse> responses;
  for (std::size_t i = 0; i < game.n_agents; ++i) {
    responses.push_back(constrained_reward_response(
        game, result.task_policy, i, vh.values, cis));
  }
  for (StateId x : cis.elements()) {
    const JointActionId played = game.encode(result.task_policy.row(x));
    const double successor_vh = vh[game.next(x, played)];
    for (std::size_t i = 0; i < game.n_agents; ++i) {
      // The played action must itself be admissible; otherwise the violation
      // is how far its successor falls outside the CIS.
      const double gain = successor_vh < 0.0
                              ? -successor_vh
                              : responses[i].values[x] - own[x];
      const int action = successor_vh < 0.0 ? result.task_policy(x, i)
                                            : responses[i].greedy[x];
      if (!any || gain > worst) {
        any = true;
        worst = gain;
        witness = Witness{x, static_cast<long>(i), action};
      }
    }
  }
  return make_certificate(CertificateKind::kGneTask, tol, worst, witness);
}

InducedOptimum induced_joint_optimum(const Game& game, const ValueTable& vh) {
  guard_joint_space(game);
  InducedOptimum out;
  out.cis = StateSet::nonnegative(vh);
  if (out.cis.empty()) {
    throw std::invalid_argument("induced game needs a nonempty CIS");
  }
  const std::size_t joint = game.joint_action_count();
  out.v.kind = ValueKind::kReward;
  out.v.values = value_iteration(
      game.n_states, [&](const std::vector<double>& values, StateId x) {
        if (!out.cis.contains(x)) return 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (JointActionId u = 0; u < joint; ++u) {
          const StateId next = game.next(x, u);
          if (vh[next] < 0.0) continue;
          best = std::max(best, game.reward_at(x, u) + game.gamma * values[next]);
        }
        return best;
      });
  return out;
}

Certificate certify_upper_bound(const ValueTable& values,
                                const ValueTable& bound, const StateSet& on,
                                double tol) {
  double worst = 0.0;
  std::optional<Witness> witness;
  bool any = false;
  for (StateId x : on.elements()) {
    const double excess = values[x] - bound[x];
    if (!any || excess > worst) {
      any = true;
      worst = excess;
      witness = Witness{x, -1, -1};
    }
  }
  return make_certificate(CertificateKind::kJointOptimumGap, tol, worst,
                          witness);
}

Certificate certify_fixed_point(const Game& game, const JointPolicy& policy,
                                double tol) {
  double worst = 0.0;
  std::optional<Witness> witness;
  for (ValueKind kind : {ValueKind::kSafety, ValueKind::kReward}) {
    const ValueTable exact = evaluate_policy(game, policy, kind);
    const ValueTable iterated = iterative_fixed_point(
        game, policy, kind, kMaxOracleSweeps, kOracleTolerance);
    for (StateId x = 0; x < game.n_states; ++x) {
      const double gap = std::abs(exact[x] - iterated[x]);
      if (!witness || gap > worst) {
        worst = gap;
        witness = Witness{x, -1, -1};
      }
    }
  }
  return make_certificate(CertificateKind::kFixedPoint, tol, worst, witness);
}

}  // namespace cismarl
