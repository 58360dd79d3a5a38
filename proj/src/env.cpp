#include "uavsc/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uavsc/errors.hpp"

namespace uavsc {

namespace {

bool is_grid_multiple(double length, double step) {
  const double ratio = length / step;
  return std::abs(ratio - std::round(ratio)) < 1e-9 && std::round(ratio) >= 1.0;
}

}  // namespace

void EnvConfig::validate() const {
  if (num_cells < 1) throw ConfigError("num_cells must be >= 1");
  if (!(position_step_m > 0.0)) throw ConfigError("position_step_m must be positive");
  if (!(slot_seconds > 0.0)) throw ConfigError("slot_seconds must be positive");
  if (!is_grid_multiple(cell_length_m, position_step_m))
    throw ConfigError("cell_length_m must be a positive integer multiple of position_step_m");
  if (speeds_mps.empty()) throw ConfigError("speeds_mps must be non-empty");
  if (speeds_mps.size() != energy_cost.size())
    throw ConfigError("speeds_mps and energy_cost must have the same length");
  for (std::size_t a = 0; a < speeds_mps.size(); ++a) {
    if (a > 0 && !(speeds_mps[a] > speeds_mps[a - 1]))
      throw ConfigError("speeds_mps must be strictly increasing");
    if (a > 0 && !(energy_cost[a] > energy_cost[a - 1]))
      throw ConfigError("energy_cost must be strictly increasing");
    if (!is_grid_multiple(speeds_mps[a] * slot_seconds, position_step_m))
      throw ConfigError("speeds_mps[" + std::to_string(a) +
                        "] * slot_seconds must be a positive integer multiple of position_step_m");
  }
  if (energy_cost.front() < 1) throw ConfigError("energy_cost entries must be >= 1");
  if (static_cast<int>(arrival_probs.size()) != num_cells)
    throw ConfigError("arrival_probs must have num_cells entries");
  for (double p : arrival_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("arrival_probs entries must lie in [0, 1]");
  }
  if (battery_capacity < energy_cost.back())
    throw ConfigError("battery_capacity must be >= max(energy_cost)");
  if (!(mean_charging_slots >= 1.0)) throw ConfigError("mean_charging_slots must be >= 1");
  if (!std::isfinite(reward_base) || !std::isfinite(weight_data) || !std::isfinite(weight_energy))
    throw ConfigError("reward weights must be finite");
}

int EnvConfig::cell_positions() const {
  return static_cast<int>(std::lround(cell_length_m / position_step_m));
}

int EnvConfig::steps_per_slot(int speed_level) const {
  return static_cast<int>(std::lround(speeds_mps.at(speed_level - 1) * slot_seconds / position_step_m));
}

int EnvConfig::min_energy_cost() const { return energy_cost.front(); }
int EnvConfig::max_energy_cost() const { return energy_cost.back(); }

Position advance(Position from, int speed_level, const EnvConfig& config) {
  const int cells = config.num_cells;
  const int positions = config.cell_positions();
  if (from.cell < 1 || from.cell > cells || from.location < 0 || from.location >= positions)
    throw DomainError("advance: position out of bounds");
  if (speed_level < 1 || speed_level > config.num_actions())
    throw DomainError("advance: speed level out of range");

  const long loop = static_cast<long>(cells) * positions;
  const long flat = static_cast<long>(from.cell - 1) * positions + from.location;
  const long moved = (flat + config.steps_per_slot(speed_level)) % loop;
  return {static_cast<int>(moved / positions) + 1, static_cast<int>(moved % positions)};
}

int sample_charging_duration(double mean_slots, double u) {
  if (!(mean_slots >= 1.0)) throw DomainError("charging duration mean must be >= 1");
  if (mean_slots == 1.0) return 1;
  const double stay = 1.0 - 1.0 / mean_slots;
  // smallest k >= 1 with stay^k < 1 - u
  double k = std::floor(std::log1p(-u) / std::log1p(-1.0 / mean_slots)) + 1.0;
  k = std::max(k, 1.0);
  auto cdf = [&](double n) { return 1.0 - std::pow(stay, n); };
  while (k > 1.0 && cdf(k - 1.0) > u) k -= 1.0;
  while (!(cdf(k) > u)) k += 1.0;
  return static_cast<int>(k);
}

double compute_reward(bool was_working, int packets, int speed_level, const EnvConfig& config) {
  if (!was_working) return 0.0;
  return config.reward_base + config.weight_data * packets -
         config.weight_energy * config.energy_cost.at(speed_level - 1);
}

std::size_t state_count(const EnvConfig& config) {
  return static_cast<std::size_t>(config.num_cells) * config.cell_positions() *
             (config.battery_capacity + 1) +
         1;
}

std::size_t state_index(const UavState& s, const EnvConfig& config) {
  if (s.is_charging()) return 0;
  const int positions = config.cell_positions();
  if (s.cell < 1 || s.cell > config.num_cells || s.location < 0 || s.location >= positions ||
      s.energy < 0 || s.energy > config.battery_capacity)
    throw DomainError("state_index: state out of bounds");
  const std::size_t pos = static_cast<std::size_t>(s.cell - 1) * positions + s.location;
  return 1 + pos * (config.battery_capacity + 1) + s.energy;
}

UavState state_from_index(std::size_t index, const EnvConfig& config) {
  if (index >= state_count(config)) throw DomainError("state_from_index: index out of range");
  if (index == 0) return UavState::charging();
  const std::size_t flat = index - 1;
  const std::size_t levels = config.battery_capacity + 1;
  const std::size_t pos = flat / levels;
  const int positions = config.cell_positions();
  return {static_cast<int>(pos / positions) + 1, static_cast<int>(pos % positions),
          static_cast<int>(flat % levels)};
}

UavEnv::UavEnv(EnvConfig config) : config_(std::move(config)) { config_.validate(); }

UavState UavEnv::reset(std::uint64_t seed) {
  rng_.reseed(seed);
  state_ = {1, 0, config_.battery_capacity};
  charging_ = {};
  started_ = true;
  return state_;
}

const UavState& UavEnv::state() const {
  if (!started_) throw UsageError("environment used before reset");
  return state_;
}

void UavEnv::force_charging_duration(std::optional<int> slots) {
  if (slots && *slots < 1) throw DomainError("forced charging duration must be >= 1");
  forced_duration_ = slots;
}

void UavEnv::check_in_bounds(const UavState& s) const {
  if (s.cell < 1 || s.cell > config_.num_cells || s.location < 0 ||
      s.location >= config_.cell_positions() || s.energy < 0 || s.energy > config_.battery_capacity)
    throw DomainError("state out of bounds");
}

void UavEnv::set_state(const UavState& s) {
  if (!started_) throw UsageError("environment used before reset");
  check_in_bounds(s);
  state_ = s;
  charging_ = {0, s.cell, s.location};
}

StepOutcome UavEnv::step(int speed_level) {
  if (!started_) throw UsageError("step called before reset");
  if (speed_level < 1 || speed_level > config_.num_actions())
    throw DomainError("step: speed level out of range");

  StepOutcome out;
  if (state_.is_charging()) {
    charging_.remaining_slots -= 1;
    if (charging_.remaining_slots <= 0) {
      charging_.remaining_slots = 0;
      state_ = {charging_.resume_cell, charging_.resume_location, config_.battery_capacity};
    }
    out.next_state = state_;
    return out;
  }

  out.was_working = true;
  out.packets = sample_arrival(config_.arrival_probs[state_.cell - 1], rng_.uniform());
  out.energy_spent = config_.energy_cost[speed_level - 1];
  out.reward = compute_reward(true, out.packets, speed_level, config_);

  const Position next = advance({state_.cell, state_.location}, speed_level, config_);
  const int energy = std::max(0, state_.energy - out.energy_spent);
  if (energy < config_.min_energy_cost()) {
    const double u = rng_.uniform();
    const int duration =
        forced_duration_ ? *forced_duration_ : sample_charging_duration(config_.mean_charging_slots, u);
    charging_ = {duration, next.cell, next.location};
    state_ = UavState::charging();
  } else {
    state_ = {next.cell, next.location, energy};
  }
  out.next_state = state_;
  return out;
}

}  // namespace uavsc
