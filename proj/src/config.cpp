#include "uavsc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "uavsc/errors.hpp"

namespace uavsc {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& field, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    field = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

EnvConfig parse_env(const json& obj) {
  const std::string where = "env";
  reject_unknown(obj,
                 {"num_cells", "cell_length_m", "position_step_m", "speeds_mps", "energy_cost", "arrival_probs",
                  "battery_capacity", "mean_charging_slots", "reward_base", "weight_data", "weight_energy",
                  "slot_seconds"},
                 where);
  EnvConfig c;
  read(obj, "num_cells", c.num_cells, where);
  read(obj, "cell_length_m", c.cell_length_m, where);
  read(obj, "position_step_m", c.position_step_m, where);
  read(obj, "speeds_mps", c.speeds_mps, where);
  read(obj, "energy_cost", c.energy_cost, where);
  read(obj, "arrival_probs", c.arrival_probs, where);
  read(obj, "battery_capacity", c.battery_capacity, where);
  read(obj, "mean_charging_slots", c.mean_charging_slots, where);
  read(obj, "reward_base", c.reward_base, where);
  read(obj, "weight_data", c.weight_data, where);
  read(obj, "weight_energy", c.weight_energy, where);
  read(obj, "slot_seconds", c.slot_seconds, where);
  c.validate();
  return c;
}

QLConfig parse_tabular(const json& obj) {
  const std::string where = "tabular";
  reject_unknown(obj,
                 {"beta", "gamma", "epsilon_start", "epsilon_end", "epsilon_decay_fraction", "steps",
                  "beta_decay_exponent"},
                 where);
  QLConfig c;
  read(obj, "beta", c.beta, where);
  read(obj, "gamma", c.gamma, where);
  read(obj, "epsilon_start", c.epsilon_start, where);
  read(obj, "epsilon_end", c.epsilon_end, where);
  read(obj, "epsilon_decay_fraction", c.epsilon_decay_fraction, where);
  read(obj, "steps", c.steps, where);
  read(obj, "beta_decay_exponent", c.beta_decay_exponent, where);
  return c;
}

D3QLConfig parse_d3ql(const json& obj) {
  const std::string where = "d3ql";
  reject_unknown(obj,
                 {"gamma", "epsilon_start", "epsilon_end", "epsilon_decay_fraction", "batch_size", "buffer_capacity",
                  "sync_interval", "learning_start", "steps", "learning_rate", "learning_rate_decay", "trunk"},
                 where);
  D3QLConfig c;
  read(obj, "gamma", c.gamma, where);
  read(obj, "epsilon_start", c.epsilon_start, where);
  read(obj, "epsilon_end", c.epsilon_end, where);
  read(obj, "epsilon_decay_fraction", c.epsilon_decay_fraction, where);
  read(obj, "batch_size", c.batch_size, where);
  read(obj, "buffer_capacity", c.buffer_capacity, where);
  read(obj, "sync_interval", c.sync_interval, where);
  read(obj, "learning_start", c.learning_start, where);
  read(obj, "steps", c.steps, where);
  read(obj, "learning_rate", c.learning_rate, where);
  read(obj, "learning_rate_decay", c.learning_rate_decay, where);
  read(obj, "trunk", c.architecture.trunk, where);
  return c;
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

EnvConfig env_config_from_json(const std::string& text) { return parse_env(parse_document(text)); }

ExperimentSpec experiment_from_json(const std::string& text) {
  const json doc = parse_document(text);
  reject_unknown(doc, {"env", "tabular", "d3ql", "experiment"}, "config");

  ExperimentSpec spec;
  if (doc.contains("env")) spec.env = parse_env(doc["env"]);
  if (doc.contains("tabular")) spec.tabular = parse_tabular(doc["tabular"]);
  if (doc.contains("d3ql")) spec.d3ql = parse_d3ql(doc["d3ql"]);
  spec.d3ql.architecture.num_actions = spec.env.num_actions();

  if (doc.contains("experiment")) {
    const json& e = doc["experiment"];
    const std::string where = "experiment";
    reject_unknown(e,
                   {"kind", "seeds", "sweep_z", "train_steps", "eval_horizon", "trace_horizon", "window", "output",
                    "checkpoint"},
                   where);
    std::string kind = to_string(spec.kind);
    read(e, "kind", kind, where);
    spec.kind = parse_experiment_kind(kind);
    read(e, "seeds", spec.seeds, where);
    read(e, "sweep_z", spec.sweep_z, where);
    read(e, "train_steps", spec.train_steps, where);
    read(e, "eval_horizon", spec.eval_horizon, where);
    read(e, "trace_horizon", spec.trace_horizon, where);
    read(e, "window", spec.window, where);
    std::string output, checkpoint;
    read(e, "output", output, where);
    read(e, "checkpoint", checkpoint, where);
    spec.output = output;
    spec.checkpoint = checkpoint;
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return experiment_from_json(buffer.str());
}

}  // namespace uavsc
