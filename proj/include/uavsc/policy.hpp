#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uavsc/dueling_net.hpp"
#include "uavsc/env.hpp"
#include "uavsc/tabular_q.hpp"

namespace uavsc {

/// Maps an observable state to a 1-based speed level. The value returned for
/// the charging sentinel is ignored by the environment.
class Policy {
public:
  Policy(std::string name, std::function<int(const UavState&)> choose)
      : name_(std::move(name)), choose_(std::move(choose)) {}

  static Policy fixed_speed(int speed_level);
  static Policy greedy_table(QTable table, const EnvConfig& config);
  static Policy greedy_net(NetParams params, const EnvConfig& config);

  int operator()(const UavState& s) const { return s.is_charging() ? 1 : choose_(s); }
  const std::string& name() const { return name_; }

private:
  std::string name_;
  std::function<int(const UavState&)> choose_;
};

/// Long-run per-slot averages of a frozen policy. Charging slots count in
/// every denominator.
struct EvalReport {
  double avg_reward = 0.0;
  double avg_throughput = 0.0;  // packets per slot
  double avg_energy = 0.0;      // energy units per slot
  double charging_fraction = 0.0;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
};

struct EvalOptions {
  /// Replaces the random charging duration (closed-form checks).
  std::optional<int> forced_charging_duration;
};

EvalReport evaluate_policy(const Policy& policy, const EnvConfig& config, std::size_t horizon, std::uint64_t seed,
                           const EvalOptions& options = {});

/// One slot of a policy rollout; state fields are -1 and speed is 0 while
/// charging.
struct TraceRow {
  std::size_t slot = 0;
  int cell = 0;
  int location = 0;
  int energy = 0;
  int speed = 0;
  bool charging = false;
};

std::vector<TraceRow> trace_policy(const Policy& policy, const EnvConfig& config, std::size_t horizon,
                                   std::uint64_t seed);

/// Most frequent speed level chosen in `cell` over the working slots of a
/// trace; ties go to the lowest level. Empty when the cell is never visited.
std::optional<int> modal_speed(const std::vector<TraceRow>& trace, int cell);

}  // namespace uavsc
