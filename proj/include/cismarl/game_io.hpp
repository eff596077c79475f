#pragma once

// Game files (JSON) and policy CSV files.
//
// A game file is one JSON object:
//   n_agents, n_states     integers
//   actions_per_agent      [C_0, ..., C_{n-1}]
//   transition, reward     flat arrays over state x joint action, row-major,
//                          joint action mixed-radix with agent 0 least
//                          significant
//   h, initial_dist        arrays over states
//   gamma, gamma_h         numbers
// Reals are written in shortest round-trip form, so save/load is lossless.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "cismarl/game.hpp"

namespace cismarl {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json game_to_json(const Game& game);

/// Throws FormatError for missing or mistyped fields, and for any
/// validate_game violation (the message lists them).
Game game_from_json(const nlohmann::json& doc);

std::string serialize_game(const Game& game);
void save_game(const Game& game, const std::filesystem::path& path);
Game load_game(const std::filesystem::path& path);

/// 17 significant digits, enough to round-trip any double.
std::string format_real(double value);

struct PolicyPair {
  JointPolicy task;
  JointPolicy safety;
};

/// Columns: state_id,agent,task_action,safety_action.
std::string policy_csv(const JointPolicy& task, const JointPolicy& safety);

/// Parses policy_csv output for `game`; every (state, agent) must appear once
/// with a valid action. Throws FormatError naming the line.
PolicyPair read_policy_csv(const Game& game, const std::filesystem::path& path);

}  // namespace cismarl
