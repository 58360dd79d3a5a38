#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uavsc/random.hpp"

namespace uavsc {

/// Parameters of the data-collection loop, battery and reward.
///
/// Defaults reproduce the reference scenario: four 60 m cells sampled every
/// 5 m, three speed levels, 120-unit battery, mean charging time of 10 slots.
struct EnvConfig {
  int num_cells = 4;
  double cell_length_m = 60.0;
  double position_step_m = 5.0;
  std::vector<double> speeds_mps{5.0, 10.0, 15.0};
  std::vector<int> energy_cost{2, 3, 4};
  std::vector<double> arrival_probs{0.1, 0.25, 0.6, 0.15};
  int battery_capacity = 120;
  double mean_charging_slots = 10.0;
  double reward_base = 15.0;
  double weight_data = 1.0;
  double weight_energy = 0.5;
  double slot_seconds = 1.0;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  int num_actions() const { return static_cast<int>(speeds_mps.size()); }
  /// Positions per cell (L).
  int cell_positions() const;
  /// Grid steps advanced per slot at a 1-based speed level.
  int steps_per_slot(int speed_level) const;
  int min_energy_cost() const;
  int max_energy_cost() const;
};

/// Observable state: (cell, location, energy), or all -1 while charging.
struct UavState {
  int cell = -1;
  int location = -1;
  int energy = -1;

  static constexpr UavState charging() { return {-1, -1, -1}; }
  constexpr bool is_charging() const { return cell == -1 && location == -1 && energy == -1; }

  friend constexpr bool operator==(const UavState&, const UavState&) = default;
};

struct ChargingStatus {
  int remaining_slots = 0;
  int resume_cell = 1;
  int resume_location = 0;
};

struct StepOutcome {
  UavState next_state;
  double reward = 0.0;
  int packets = 0;
  int energy_spent = 0;
  bool was_working = false;

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

struct Position {
  int cell = 1;
  int location = 0;
  friend constexpr bool operator==(const Position&, const Position&) = default;
};

/// Moves along the cyclic loop 1 -> 2 -> ... -> C -> 1 by the number of grid
/// steps the speed level covers in one slot. Throws DomainError on
/// out-of-range inputs.
Position advance(Position from, int speed_level, const EnvConfig& config);

/// Bernoulli packet arrival: 1 iff u < p.
inline int sample_arrival(double p, double u) { return u < p ? 1 : 0; }

/// Geometric(1/z) quantile on {1, 2, ...}: the smallest k with
/// 1 - (1 - 1/z)^k > u. Mean is exactly z. Throws DomainError if z < 1.
int sample_charging_duration(double mean_slots, double u);

/// Per-slot reward: reward_base + weight_data*d - weight_energy*cost when
/// working, 0 otherwise.
double compute_reward(bool was_working, int packets, int speed_level, const EnvConfig& config);

/// Number of distinct observable states, C*L*(E+1) + 1.
std::size_t state_count(const EnvConfig& config);

/// Flat state index. The charging sentinel maps to 0 and (c, l, e) maps to
/// 1 + ((c-1)*L + l)*(E+1) + e, a bijection onto [0, state_count).
std::size_t state_index(const UavState& s, const EnvConfig& config);
UavState state_from_index(std::size_t index, const EnvConfig& config);

/// Slotted UAV data-collection environment.
///
/// Single-threaded; each instance owns its generator. The RNG consumes one
/// uniform per working slot (arrival) and one per charging episode
/// (duration), so identical seeds and actions give identical outcomes.
class UavEnv {
public:
  explicit UavEnv(EnvConfig config);

  const EnvConfig& config() const { return config_; }

  UavState reset(std::uint64_t seed);

  /// Speed level is 1-based. While charging the action is ignored.
  StepOutcome step(int speed_level);

  const UavState& state() const;
  const ChargingStatus& charging() const { return charging_; }
  bool is_reset() const { return started_; }

  /// Replaces the random charging duration with a fixed one (test hook).
  void force_charging_duration(std::optional<int> slots);

  /// Places the UAV at an arbitrary in-bounds working state (test hook).
  void set_state(const UavState& s);

private:
  void check_in_bounds(const UavState& s) const;

  EnvConfig config_;
  Rng rng_;
  UavState state_;
  ChargingStatus charging_;
  std::optional<int> forced_duration_;
  bool started_ = false;
};

}  // namespace uavsc
