#pragma once

// Batch runner behind the command-line tool. Each run writes its results to
// an output directory:
//
//   values.csv     state_id,V,V_h_task,V_h_safety,in_cis
//   policy.csv     state_id,agent,task_action,safety_action
//   trace.csv      iteration,cis_size,objective,safety_residual,task_changed,fallbacks
//   summary.json   config echo, convergence flags, objective, CIS size and
//                  every certificate with its worst violation
//
// oracle-compare writes oracle_compare.csv and summary.json instead. Wall
// times go to the log stream only, so output files are reproducible
// byte-for-byte from the same configuration.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cismarl/agent_order.hpp"
#include "cismarl/game.hpp"
#include "cismarl/oracles.hpp"

namespace cismarl {

enum class Command { kSolveSafety, kSolveDual, kCertify, kOracleCompare };

struct RunConfig {
  Command command = Command::kSolveDual;

  // Game source: exactly one of game_file / env.
  std::optional<std::filesystem::path> game_file;
  std::string env;  // trap2 | grid5 | random
  std::uint64_t env_seed = 0;
  std::size_t states = 10;
  std::size_t agents = 2;
  int actions = 2;
  double hazard = 0.3;
  std::size_t batch = 1;  // oracle-compare: consecutive env seeds

  std::uint64_t seed = 0;
  std::size_t m_outer = 1000;
  std::size_t k_safety = 1;
  AgentOrder order = AgentOrder::kShuffled;
  int init_action = 0;
  std::optional<std::filesystem::path> policy_file;  // certify
  std::filesystem::path out_dir = "out";
  std::size_t threads = 1;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitBadInput = 2;

std::optional<Command> parse_command(const std::string& name);
std::string to_string(Command command);

/// Builds the game named by the config's source. Throws FormatError or
/// SpecInvalid on bad input.
Game load_source(const RunConfig& config, std::uint64_t env_seed);

/// One row of the oracle comparison.
struct CompareRow {
  std::string game;
  std::size_t n_states = 0;
  std::size_t n_agents = 0;
  std::size_t sum_actions = 0;
  std::size_t joint_actions = 0;
  std::size_t nash_sweeps = 0;
  std::size_t oracle_sweeps = 0;
  double sequential_evals_per_state_sweep = 0.0;
  double joint_evals_per_state_sweep = 0.0;
  double vh_gap = 0.0;  // sup-norm of V_h^opt - V_h^nash
  std::size_t cis_nash = 0;
  std::size_t cis_opt = 0;
  double cis_ratio = 1.0;
  Certificate bound;  // V_h^nash <= V_h^opt everywhere
  double nash_seconds = 0.0;
  double oracle_seconds = 0.0;
};

std::vector<CompareRow> oracle_compare(const RunConfig& config);

/// Runs the configured command and writes its output files. Returns the
/// exit status: 0 converged with every certificate passing, 1 otherwise,
/// 2 on malformed input. Diagnostics go to `log`.
int run(const RunConfig& config, std::ostream& log);

}  // namespace cismarl
