#include "cismarl/runner.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cismarl/dual_iteration.hpp"
#include "cismarl/environments.hpp"
#include "cismarl/game_io.hpp"
#include "cismarl/oracles.hpp"
#include "cismarl/safety_iteration.hpp"

namespace cismarl {

using nlohmann::json;

std::optional<Command> parse_command(const std::string& name) {
  if (name == "solve-safety") return Command::kSolveSafety;
  if (name == "solve-dual") return Command::kSolveDual;
  if (name == "certify") return Command::kCertify;
  if (name == "oracle-compare") return Command::kOracleCompare;
  return std::nullopt;
}

std::string to_string(Command command) {
  switch (command) {
    case Command::kSolveSafety:
      return "solve-safety";
    case Command::kSolveDual:
      return "solve-dual";
    case Command::kCertify:
      return "certify";
    case Command::kOracleCompare:
      return "oracle-compare";
  }
  return "unknown";
}

Game load_source(const RunConfig& config, std::uint64_t env_seed) {
  if (config.game_file.has_value() == !config.env.empty()) {
    throw FormatError("exactly one of --game and --env is required");
  }
  if (config.game_file) return load_game(*config.game_file);
  if (config.env == "trap2") return build_trap2();
  if (config.env == "grid5") return build_gridworld(grid5_spec());
  if (config.env == "random") {
    if (config.states < 1 || config.agents < 1 || config.actions < 1) {
      throw FormatError("random env needs positive --states, --agents, --actions");
    }
    if (!(config.hazard >= 0.0 && config.hazard <= 1.0)) {
      throw FormatError("--hazard must lie in [0, 1]");
    }
    return build_random_game(
        env_seed, config.states, config.agents,
        std::vector<int>(config.agents, config.actions), config.hazard);
  }
  throw FormatError("unknown --env '" + config.env +
                    "' (expected trap2, grid5 or random)");
}

namespace {

std::string initial_dist_note(const RunConfig& config) {
  if (config.game_file) return "from game file";
  if (config.env == "grid5") return "uniform over admissible joint states";
  return "uniform over states";
}

json certificate_json(const Certificate& cert) {
  json out;
  out["kind"] = std::string(to_string(cert.kind));
  out["passed"] = cert.passed;
  out["tolerance"] = cert.tolerance;
  out["worst_violation"] = cert.worst_violation;
  if (cert.witness) {
    out["witness"] = {{"state", cert.witness->state},
                      {"agent", cert.witness->agent},
                      {"action", cert.witness->action}};
  } else {
    out["witness"] = nullptr;
  }
  return out;
}

json config_json(const RunConfig& config) {
  json out;
  out["command"] = to_string(config.command);
  if (config.game_file) {
    out["game"] = config.game_file->string();
  } else {
    out["env"] = config.env;
    if (config.env == "random") {
      out["env_seed"] = config.env_seed;
      out["states"] = config.states;
      out["agents"] = config.agents;
      out["actions"] = config.actions;
      out["hazard"] = config.hazard;
    }
  }
  out["seed"] = config.seed;
  out["m_outer"] = config.m_outer;
  out["k_safety"] = config.k_safety;
  out["order"] = std::string(to_string(config.order));
  out["init_action"] = config.init_action;
  if (config.policy_file) out["policy"] = config.policy_file->string();
  if (config.command == Command::kOracleCompare) out["batch"] = config.batch;
  out["initial_dist"] = initial_dist_note(config);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::string values_csv(const ValueTable& v, const ValueTable& vh_task,
                       const ValueTable& vh_safety, const StateSet& cis) {
  std::ostringstream out;
  out << "state_id,V,V_h_task,V_h_safety,in_cis\n";
  for (StateId x = 0; x < v.size(); ++x) {
    out << x << ',' << format_real(v[x]) << ',' << format_real(vh_task[x])
        << ',' << format_real(vh_safety[x]) << ','
        << (cis.contains(x) ? 1 : 0) << '\n';
  }
  return out.str();
}

struct TraceLine {
  std::size_t iteration;
  std::size_t cis_size;
  double objective;
  double safety_residual;
  std::size_t task_changed;
  std::size_t fallbacks;
};

std::string trace_csv(const std::vector<TraceLine>& lines) {
  std::ostringstream out;
  out << "iteration,cis_size,objective,safety_residual,task_changed,fallbacks\n";
  for (const TraceLine& t : lines) {
    out << t.iteration << ',' << t.cis_size << ',' << format_real(t.objective)
        << ',' << format_real(t.safety_residual) << ',' << t.task_changed
        << ',' << t.fallbacks << '\n';
  }
  return out.str();
}

bool joint_oracle_fits(const Game& game) {
  return game.joint_action_count() <= kJointActionCap;
}

// Certificates for a task/safety policy pair, whichever way it was produced.
std::vector<Certificate> certify_pair(const Game& game,
                                      const DualIterationResult& dual) {
  SafetyIterationResult safety;
  safety.policy = dual.safety_policy;
  safety.vh = dual.vh_safety;
  safety.cis = StateSet::nonnegative(dual.vh_safety);
  safety.converged = true;

  std::vector<Certificate> certs;
  certs.push_back(certify_nash_safety(game, safety));
  certs.push_back(certify_gne_task(game, dual));
  if (joint_oracle_fits(game) && !safety.cis.empty()) {
    const InducedOptimum induced = induced_joint_optimum(game, dual.vh_safety);
    certs.push_back(certify_upper_bound(dual.v, induced.v, induced.cis));
  }
  certs.push_back(certify_fixed_point(game, dual.task_policy));
  return certs;
}

DualIterationResult pair_from_policies(const Game& game, JointPolicy task,
                                       JointPolicy safety) {
  DualIterationResult out;
  out.v = evaluate_policy(game, task, ValueKind::kReward);
  out.vh_task = evaluate_policy(game, task, ValueKind::kSafety);
  out.vh_safety = evaluate_policy(game, safety, ValueKind::kSafety);
  out.cis = StateSet::nonnegative(out.vh_safety);
  out.objective = objective_value(game, out.v, out.vh_task, out.cis);
  out.task_policy = std::move(task);
  out.safety_policy = std::move(safety);
  out.converged = true;
  return out;
}

bool all_passed(const std::vector<Certificate>& certs) {
  for (const Certificate& c : certs) {
    if (!c.passed) return false;
  }
  return true;
}

void report_failures(const std::vector<Certificate>& certs, std::ostream& log) {
  for (const Certificate& c : certs) {
    if (c.passed) continue;
    log << "certificate " << to_string(c.kind) << " failed: worst violation "
        << format_real(c.worst_violation);
    if (c.witness) {
      log << " at state " << c.witness->state << ", agent "
          << c.witness->agent << ", action " << c.witness->action;
    }
    log << '\n';
  }
}

int finish(const RunConfig& config, json summary, bool converged,
           const std::vector<Certificate>& certs, std::ostream& log) {
  json list = json::array();
  for (const Certificate& c : certs) list.push_back(certificate_json(c));
  summary["certificates"] = list;
  const int status = converged && all_passed(certs) ? kExitOk : kExitFailed;
  summary["exit_status"] = status;
  write_file(config.out_dir / "summary.json", summary.dump(2) + "\n");
  report_failures(certs, log);
  if (!converged) log << "run did not converge within the iteration cap\n";
  return status;
}

int solve_safety(const RunConfig& config, const Game& game, std::ostream& log) {
  SafetyIterationConfig cfg;
  cfg.max_outer_iters = config.m_outer;
  cfg.agent_order = config.order;
  cfg.seed = config.seed;
  cfg.threads = config.threads;
  const SafetyIterationResult result = run_safety_iteration(
      game, JointPolicy::uniform(game, config.init_action), cfg);

  const ValueTable v = evaluate_policy(game, result.policy, ValueKind::kReward);
  write_file(config.out_dir / "values.csv",
             values_csv(v, result.vh, result.vh, result.cis));
  write_file(config.out_dir / "policy.csv",
             policy_csv(result.policy, result.policy));

  // The task policy of a safety-only run is the safety policy itself.
  std::vector<TraceLine> lines;
  for (const SafetyTraceRow& row : result.trace) {
    const ValueTable row_v =
        evaluate_policy(game, row.policy, ValueKind::kReward);
    const StateSet row_cis = StateSet::nonnegative(row.vh);
    lines.push_back({row.iteration, row.cis_size,
                     objective_value(game, row_v, row.vh, row_cis),
                     row.value_change, row.changed, 0});
  }
  write_file(config.out_dir / "trace.csv", trace_csv(lines));

  std::vector<Certificate> certs;
  if (result.converged) certs.push_back(certify_nash_safety(game, result));
  if (joint_oracle_fits(game)) {
    const JointOptimum opt = joint_safety_optimum(game);
    certs.push_back(certify_upper_bound(result.vh, opt.vh,
                                        StateSet(game.n_states, true)));
  }
  certs.push_back(certify_fixed_point(game, result.policy));

  json summary;
  summary["config"] = config_json(config);
  summary["n_states"] = game.n_states;
  summary["n_agents"] = game.n_agents;
  summary["converged"] = {{"safety", result.converged}};
  summary["iterations"] = result.trace.size();
  summary["objective"] = objective_value(game, v, result.vh, result.cis);
  summary["cis_size"] = result.cis.count();
  log << "solve-safety: " << result.trace.size() << " sweeps, CIS "
      << result.cis.count() << "/" << game.n_states << " states\n";
  return finish(config, std::move(summary), result.converged, certs, log);
}

void write_pair_outputs(const RunConfig& config, const DualIterationResult& r) {
  write_file(config.out_dir / "values.csv",
             values_csv(r.v, r.vh_task, r.vh_safety, r.cis));
  write_file(config.out_dir / "policy.csv",
             policy_csv(r.task_policy, r.safety_policy));
}

int solve_dual(const RunConfig& config, const Game& game, std::ostream& log) {
  DualIterationConfig cfg;
  cfg.m_outer = config.m_outer;
  cfg.k_safety_per_outer = config.k_safety;
  cfg.agent_order = config.order;
  cfg.seed = config.seed;
  cfg.threads = config.threads;
  const DualIterationResult result = run_dual_iteration(
      game, JointPolicy::uniform(game, config.init_action), cfg);

  write_pair_outputs(config, result);
  std::vector<TraceLine> lines;
  for (const DualTraceRow& row : result.trace) {
    lines.push_back({row.iteration, row.cis_size, row.objective,
                     row.safety_residual, row.task_changed, row.fallbacks});
  }
  write_file(config.out_dir / "trace.csv", trace_csv(lines));

  const std::vector<Certificate> certs =
      result.converged ? certify_pair(game, result) : std::vector<Certificate>{};

  json summary;
  summary["config"] = config_json(config);
  summary["n_states"] = game.n_states;
  summary["n_agents"] = game.n_agents;
  summary["converged"] = {{"dual", result.converged}};
  summary["iterations"] = result.trace.size();
  summary["objective"] = result.objective;
  summary["cis_size"] = result.cis.count();
  std::size_t fallbacks = 0;
  for (const DualTraceRow& row : result.trace) fallbacks += row.fallbacks;
  summary["fallbacks"] = fallbacks;
  log << "solve-dual: " << result.trace.size() << " outer iterations, CIS "
      << result.cis.count() << "/" << game.n_states << " states, objective "
      << format_real(result.objective) << '\n';
  return finish(config, std::move(summary), result.converged, certs, log);
}

int certify(const RunConfig& config, const Game& game, std::ostream& log) {
  if (!config.policy_file) {
    log << "certify: no --policy given, solving with dual iteration first\n";
    return solve_dual(config, game, log);
  }
  PolicyPair pair = read_policy_csv(game, *config.policy_file);
  const DualIterationResult result =
      pair_from_policies(game, std::move(pair.task), std::move(pair.safety));
  write_pair_outputs(config, result);
  write_file(config.out_dir / "trace.csv", trace_csv({}));

  const std::vector<Certificate> certs = certify_pair(game, result);
  json summary;
  summary["config"] = config_json(config);
  summary["n_states"] = game.n_states;
  summary["n_agents"] = game.n_agents;
  summary["converged"] = json::object();
  summary["objective"] = result.objective;
  summary["cis_size"] = result.cis.count();
  return finish(config, std::move(summary), true, certs, log);
}

template <class F>
double timed(F&& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

std::vector<CompareRow> oracle_compare(const RunConfig& config) {
  std::vector<CompareRow> rows;
  const std::size_t games = config.game_file ? 1 : std::max<std::size_t>(1, config.batch);
  for (std::size_t g = 0; g < games; ++g) {
    const std::uint64_t env_seed = config.env_seed + g;
    const Game game = load_source(config, env_seed);
    if (!joint_oracle_fits(game)) {
      throw SizeGuard("joint action space of " +
                      std::to_string(game.joint_action_count()) +
                      " exceeds the oracle cap");
    }
    CompareRow row;
    row.game = config.game_file ? config.game_file->filename().string()
               : config.env == "random"
                   ? "random:" + std::to_string(env_seed)
                   : config.env;
    row.n_states = game.n_states;
    row.n_agents = game.n_agents;
    for (int c : game.actions_per_agent) row.sum_actions += static_cast<std::size_t>(c);
    row.joint_actions = game.joint_action_count();

    SafetyIterationConfig cfg;
    cfg.max_outer_iters = config.m_outer;
    cfg.agent_order = config.order;
    cfg.seed = config.seed;
    cfg.threads = config.threads;
    SafetyIterationResult nash;
    row.nash_seconds = timed([&] {
      nash = run_safety_iteration(
          game, JointPolicy::uniform(game, config.init_action), cfg);
    });
    JointOptimum opt;
    row.oracle_seconds = timed([&] { opt = joint_safety_optimum(game); });

    std::size_t evaluations = 0;
    for (const SafetyTraceRow& t : nash.trace) evaluations += t.evaluations;
    row.nash_sweeps = nash.trace.size();
    row.oracle_sweeps = opt.sweeps;
    row.sequential_evals_per_state_sweep =
        static_cast<double>(evaluations) /
        static_cast<double>(game.n_states * nash.trace.size());
    row.joint_evals_per_state_sweep =
        static_cast<double>(opt.evaluations) /
        static_cast<double>(game.n_states * opt.sweeps);
    row.vh_gap = sup_norm_distance(opt.vh, nash.vh);
    row.cis_nash = nash.cis.count();
    row.cis_opt = StateSet::nonnegative(opt.vh).count();
    row.cis_ratio = row.cis_opt == 0 ? 1.0
                                     : static_cast<double>(row.cis_nash) /
                                           static_cast<double>(row.cis_opt);
    row.bound = certify_upper_bound(nash.vh, opt.vh,
                                    StateSet(game.n_states, true));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

int compare(const RunConfig& config, std::ostream& log) {
  const std::vector<CompareRow> rows = oracle_compare(config);
  std::ostringstream csv;
  csv << "game,n_states,n_agents,sum_actions,joint_actions,nash_sweeps,"
         "oracle_sweeps,sequential_evals_per_state_sweep,"
         "joint_evals_per_state_sweep,vh_gap,cis_nash,cis_opt,cis_ratio\n";
  json list = json::array();
  bool bounded = true;
  for (const CompareRow& r : rows) {
    csv << r.game << ',' << r.n_states << ',' << r.n_agents << ','
        << r.sum_actions << ',' << r.joint_actions << ',' << r.nash_sweeps
        << ',' << r.oracle_sweeps << ','
        << format_real(r.sequential_evals_per_state_sweep) << ','
        << format_real(r.joint_evals_per_state_sweep) << ','
        << format_real(r.vh_gap) << ',' << r.cis_nash << ',' << r.cis_opt
        << ',' << format_real(r.cis_ratio) << '\n';
    list.push_back({{"game", r.game},
                    {"vh_gap", r.vh_gap},
                    {"cis_nash", r.cis_nash},
                    {"cis_opt", r.cis_opt},
                    {"sequential_evals_per_state_sweep",
                     r.sequential_evals_per_state_sweep},
                    {"joint_evals_per_state_sweep",
                     r.joint_evals_per_state_sweep},
                    {"certificate", certificate_json(r.bound)}});
    if (!r.bound.passed) bounded = false;
    log << r.game << ": nash " << r.nash_sweeps << " sweeps in "
        << r.nash_seconds << " s, joint oracle " << r.oracle_sweeps
        << " sweeps in " << r.oracle_seconds << " s, V_h gap "
        << format_real(r.vh_gap) << '\n';
  }
  write_file(config.out_dir / "oracle_compare.csv", csv.str());
  json summary;
  summary["config"] = config_json(config);
  summary["rows"] = list;
  const int status = bounded ? kExitOk : kExitFailed;
  summary["exit_status"] = status;
  write_file(config.out_dir / "summary.json", summary.dump(2) + "\n");
  return status;
}

}  // namespace

int run(const RunConfig& config, std::ostream& log) {
  try {
    std::filesystem::create_directories(config.out_dir);
    if (config.m_outer < 1 || config.k_safety < 1) {
      throw FormatError("--m-outer and --k-safety must be >= 1");
    }
    if (config.command == Command::kOracleCompare) return compare(config, log);

    const Game game = load_source(config, config.env_seed);
    for (std::size_t i = 0; i < game.n_agents; ++i) {
      if (config.init_action < 0 ||
          config.init_action >= game.actions_per_agent[i]) {
        throw FormatError("--init-action " + std::to_string(config.init_action) +
                          " is not a valid action for agent " +
                          std::to_string(i));
      }
    }
    switch (config.command) {
      case Command::kSolveSafety:
        return solve_safety(config, game, log);
      case Command::kSolveDual:
        return solve_dual(config, game, log);
      case Command::kCertify:
        return certify(config, game, log);
      case Command::kOracleCompare:
        break;
    }
  } catch (const FormatError& e) {
    log << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const SpecInvalid& e) {
    log << "error: invalid grid spec: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const SizeGuard& e) {
    log << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return kExitBadInput;
}

}  // namespace cismarl
