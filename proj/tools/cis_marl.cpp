// Command-line front end: cis_marl <command> [options]

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cismarl/runner.hpp"

int main(int argc, char** argv) {
  using cismarl::AgentOrder;
  cismarl::RunConfig config;

  CLI::App app{"Safety and dual policy iteration for state-wise constrained "
               "cooperative Markov games"};
  std::string command;
  std::string game_file;
  std::string policy_file;
  std::string out_dir = "out";
  std::string order = "shuffle";

  app.add_option("command", command,
                 "solve-safety | solve-dual | certify | oracle-compare")
      ->required()
      ->check(CLI::IsMember(
          {"solve-safety", "solve-dual", "certify", "oracle-compare"}));
  auto* game_opt = app.add_option("--game", game_file, "game file (JSON)");
  auto* env_opt = app.add_option("--env", config.env,
                                 "builtin game: trap2 | grid5 | random");
  game_opt->excludes(env_opt);
  app.add_option("--env-seed", config.env_seed, "seed of the random env");
  app.add_option("--states", config.states, "random env: number of states");
  app.add_option("--agents", config.agents, "random env: number of agents");
  app.add_option("--actions", config.actions, "random env: actions per agent");
  app.add_option("--hazard", config.hazard,
                 "random env: fraction of states with h < 0");
  app.add_option("--batch", config.batch,
                 "oracle-compare: games with consecutive env seeds");
  app.add_option("--seed", config.seed, "seed of the agent-order shuffle");
  app.add_option("--m-outer", config.m_outer, "outer iteration cap");
  app.add_option("--k-safety", config.k_safety,
                 "safety sweeps per dual outer iteration");
  app.add_option("--order", order, "agent order: shuffle | fixed")
      ->check(CLI::IsMember({"shuffle", "fixed"}));
  app.add_option("--init-action", config.init_action,
                 "initial safety action for every agent and state");
  app.add_option("--policy", policy_file, "certify: policy.csv to check");
  app.add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cismarl::kExitBadInput;
  }

  config.command = *cismarl::parse_command(command);
  if (!game_file.empty()) config.game_file = game_file;
  if (!policy_file.empty()) config.policy_file = policy_file;
  config.out_dir = out_dir;
  config.order = order == "fixed" ? AgentOrder::kFixed : AgentOrder::kShuffled;
  if (const char* threads = std::getenv("CIS_MARL_THREADS")) {
    const long n = std::strtol(threads, nullptr, 10);
    if (n > 0) config.threads = static_cast<std::size_t>(n);
  }
  return cismarl::run(config, std::cerr);
}
