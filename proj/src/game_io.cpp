#include "cismarl/game_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace cismarl {

using nlohmann::json;

json game_to_json(const Game& game) {
  json doc;
  doc["n_agents"] = game.n_agents;
  doc["n_states"] = game.n_states;
  doc["actions_per_agent"] = game.actions_per_agent;
  doc["transition"] = game.transition;
  doc["reward"] = game.reward;
  doc["h"] = game.constraint;
  doc["gamma"] = game.gamma;
  doc["gamma_h"] = game.gamma_h;
  doc["initial_dist"] = game.initial_dist;
  return doc;
}

namespace {

const json& field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) {
    throw FormatError(std::string("missing field '") + name + "'");
  }
  return *it;
}

template <class T>
T read_as(const json& doc, const char* name) {
  const json& value = field(doc, name);
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field '") + name + "': " + e.what());
  }
}

std::size_t read_count(const json& doc, const char* name) {
  const json& value = field(doc, name);
  if (!value.is_number_integer() || value.get<long long>() < 0) {
    throw FormatError(std::string("field '") + name +
                      "' must be a non-negative integer");
  }
  return value.get<std::size_t>();
}

std::vector<StateId> read_states(const json& doc, const char* name) {
  const json& value = field(doc, name);
  if (!value.is_array()) {
    throw FormatError(std::string("field '") + name + "' must be an array");
  }
  std::vector<StateId> out;
  out.reserve(value.size());
  for (std::size_t k = 0; k < value.size(); ++k) {
    const json& entry = value[k];
    if (!entry.is_number_integer() || entry.get<long long>() < 0) {
      throw FormatError(std::string("field '") + name + "' index " +
                        std::to_string(k) +
                        " must be a non-negative integer");
    }
    out.push_back(entry.get<StateId>());
  }
  return out;
}

}  // namespace

Game game_from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError("game file must be a JSON object");
  Game game;
  game.n_agents = read_count(doc, "n_agents");
  game.n_states = read_count(doc, "n_states");
  game.actions_per_agent = read_as<std::vector<int>>(doc, "actions_per_agent");
  game.transition = read_states(doc, "transition");
  game.reward = read_as<std::vector<double>>(doc, "reward");
  game.constraint = read_as<std::vector<double>>(doc, "h");
  game.gamma = read_as<double>(doc, "gamma");
  game.gamma_h = read_as<double>(doc, "gamma_h");
  game.initial_dist = read_as<std::vector<double>>(doc, "initial_dist");

  const std::vector<Violation> violations = validate_game(game);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "invalid game:";
    for (const Violation& v : violations) {
      msg << "\n  " << v.field;
      if (v.index >= 0) msg << "[" << v.index << "]";
      msg << ": " << v.message;
    }
    throw FormatError(msg.str());
  }
  return game;
}

std::string serialize_game(const Game& game) {
  return game_to_json(game).dump(1) + "\n";
}

void save_game(const Game& game, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << serialize_game(game);
}

Game load_game(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open game file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    return game_from_json(doc);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string policy_csv(const JointPolicy& task, const JointPolicy& safety) {
  std::ostringstream out;
  out << "state_id,agent,task_action,safety_action\n";
  for (StateId x = 0; x < task.n_states(); ++x) {
    for (std::size_t i = 0; i < task.n_agents(); ++i) {
      out << x << ',' << i << ',' << task(x, i) << ',' << safety(x, i) << '\n';
    }
  }
  return out.str();
}

PolicyPair read_policy_csv(const Game& game, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open policy file " + path.string());
  PolicyPair out{JointPolicy(game.n_states, game.n_agents),
                 JointPolicy(game.n_states, game.n_agents)};
  std::vector<bool> seen(game.n_states * game.n_agents, false);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " +
                      what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    long long state = 0, agent = 0, task = 0, safety = 0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lld%c", &state, &agent,
                    &task, &safety, &tail) != 4) {
      fail("expected state_id,agent,task_action,safety_action");
    }
    if (state < 0 || static_cast<std::size_t>(state) >= game.n_states) {
      fail("state_id out of range");
    }
    if (agent < 0 || static_cast<std::size_t>(agent) >= game.n_agents) {
      fail("agent out of range");
    }
    const int actions = game.actions_per_agent[static_cast<std::size_t>(agent)];
    if (task < 0 || task >= actions || safety < 0 || safety >= actions) {
      fail("action out of range for agent " + std::to_string(agent));
    }
    const auto x = static_cast<StateId>(state);
    const auto i = static_cast<std::size_t>(agent);
    if (seen[x * game.n_agents + i]) fail("duplicate (state, agent) row");
    seen[x * game.n_agents + i] = true;
    out.task.set(x, i, static_cast<int>(task));
    out.safety.set(x, i, static_cast<int>(safety));
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw FormatError(path.string() + ": no row for state " +
                        std::to_string(k / game.n_agents) + ", agent " +
                        std::to_string(k % game.n_agents));
    }
  }
  return out;
}

}  // namespace cismarl
