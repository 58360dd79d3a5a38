#include "uavsc/policy.hpp"

#include <map>
#include <memory>

#include "uavsc/errors.hpp"

namespace uavsc {

Policy Policy::fixed_speed(int speed_level) {
  if (speed_level < 1) throw DomainError("fixed speed level must be >= 1");
  return Policy("fixed:" + std::to_string(speed_level), [speed_level](const UavState&) { return speed_level; });
}

Policy Policy::greedy_table(QTable table, const EnvConfig& config) {
  if (table.num_states() != state_count(config) || table.num_actions() != static_cast<std::size_t>(config.num_actions()))
    throw DomainError("Q-table shape does not match the environment");
  auto shared = std::make_shared<const QTable>(std::move(table));
  return Policy("q_learning", [shared, config](const UavState& s) {
    return static_cast<int>(argmax(shared->row(state_index(s, config)))) + 1;
  });
}

Policy Policy::greedy_net(NetParams params, const EnvConfig& config) {
  if (params.architecture().num_actions != config.num_actions() || params.architecture().input_dim != 3)
    throw DomainError("network shape does not match the environment");
  auto shared = std::make_shared<const NetParams>(std::move(params));
  return Policy("d3ql", [shared, config](const UavState& s) {
    return static_cast<int>(argmax(forward(*shared, featurize(s, config)))) + 1;
  });
}

EvalReport evaluate_policy(const Policy& policy, const EnvConfig& config, std::size_t horizon, std::uint64_t seed,
                           const EvalOptions& options) {
  if (horizon == 0) throw DomainError("evaluation horizon must be >= 1");
  UavEnv env(config);
  env.force_charging_duration(options.forced_charging_duration);
  UavState s = env.reset(seed);

  double reward = 0.0;
  long packets = 0;
  long energy = 0;
  long charging_slots = 0;
  for (std::size_t t = 0; t < horizon; ++t) {
    if (s.is_charging()) ++charging_slots;
    const StepOutcome out = env.step(policy(s));
    reward += out.reward;
    packets += out.packets;
    energy += out.energy_spent;
    s = out.next_state;
  }
  const auto n = static_cast<double>(horizon);
  return {reward / n, packets / n, energy / n, charging_slots / n, horizon, seed};
}

std::vector<TraceRow> trace_policy(const Policy& policy, const EnvConfig& config, std::size_t horizon,
                                   std::uint64_t seed) {
  UavEnv env(config);
  UavState s = env.reset(seed);
  std::vector<TraceRow> rows;
  rows.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const int speed = policy(s);
    rows.push_back({t + 1, s.cell, s.location, s.energy, s.is_charging() ? 0 : speed, s.is_charging()});
    s = env.step(speed).next_state;
  }
  return rows;
}

std::optional<int> modal_speed(const std::vector<TraceRow>& trace, int cell) {
  std::map<int, long> counts;
  for (const auto& row : trace) {
    if (!row.charging && row.cell == cell) ++counts[row.speed];
  }
  if (counts.empty()) return std::nullopt;
  int best = counts.begin()->first;
  for (const auto& [speed, n] : counts) {
    if (n > counts[best]) best = speed;
  }
  return best;
}

}  // namespace uavsc
