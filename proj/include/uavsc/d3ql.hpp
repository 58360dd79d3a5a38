#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uavsc/dueling_net.hpp"
#include "uavsc/env.hpp"
#include "uavsc/random.hpp"
#include "uavsc/tabular_q.hpp"

namespace uavsc {

struct Transition {
  FeatureVector state{};
  std::size_t action = 0;
  double reward = 0.0;
  FeatureVector next_state{};

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Fixed-capacity FIFO of transitions; a push beyond capacity evicts the
/// oldest entry.
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }

  /// i = 0 is the oldest stored transition.
  const Transition& operator[](std::size_t i) const;

  /// k uniform draws with replacement. Throws DomainError for k = 0 and
  /// InsufficientDataError when fewer than k transitions are stored.
  std::vector<Transition> sample(std::size_t k, Rng& rng) const;

private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest entry once full
  std::size_t size_ = 0;
  std::vector<Transition> storage_;
};

struct D3QLConfig {
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  /// Fraction of the run over which epsilon anneals linearly.
  double epsilon_decay_fraction = 0.2;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 100'000;
  std::size_t sync_interval = 1'000;
  std::size_t learning_start = 1'000;
  std::size_t steps = 50'000;
  double learning_rate = 1e-3;
  /// Multiplicative decay applied to the step size after every update.
  double learning_rate_decay = 1.0;
  NetArchitecture architecture{};

  void validate() const;
  EpsilonSchedule epsilon_schedule() const;
};

/// Double-Q target: the online values pick the action (lowest index on
/// ties), the target values score it.
double double_target(double reward, double gamma, std::span<const double> q_online_next,
                     std::span<const double> q_target_next);

/// Independent copy of the online parameters.
inline NetParams sync_target(const NetParams& online) { return online; }

struct TrainStepResult {
  UavState state;  // state the action was chosen in
  int speed_level = 1;
  double reward = 0.0;
  double epsilon = 0.0;
  std::optional<double> loss;
  UavState next_state;
};

/// Online/target dueling networks plus replay memory, trained on a live
/// environment one slot at a time.
class D3QLAgent {
public:
  D3QLAgent(const EnvConfig& env_config, D3QLConfig config, std::uint64_t seed);

  /// One iteration: epsilon-greedy action, environment step, store the
  /// transition, and (past the warm-up) one mini-batch SGD update. Syncs the
  /// target network every sync_interval steps. `env` must have been reset.
  TrainStepResult train_step(UavEnv& env);

  /// Greedy action (0-based) from the online network.
  std::size_t greedy_action(const UavState& s) const;

  const NetParams& online() const { return online_; }
  const NetParams& target() const { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const D3QLConfig& config() const { return config_; }
  std::size_t steps_taken() const { return step_; }
  double current_learning_rate() const { return learning_rate_; }

private:
  double learn();

  EnvConfig env_config_;
  D3QLConfig config_;
  EpsilonSchedule schedule_;
  NetParams online_;
  NetParams target_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::size_t step_ = 0;
  double learning_rate_;
};

struct HistoryRow {
  std::size_t step = 0;
  double reward = 0.0;
  std::optional<double> loss;
  double epsilon = 0.0;
  int energy = 0;
  int cell = 0;
};

struct D3QLResult {
  NetParams params;
  std::vector<double> rewards;
  std::vector<double> losses;
  std::vector<HistoryRow> history;
};

/// Runs `config.steps` training iterations on a fresh environment seeded
/// with `seed`. Deterministic per seed.
D3QLResult train_d3ql(const EnvConfig& env_config, const D3QLConfig& config, std::uint64_t seed);

}  // namespace uavsc
