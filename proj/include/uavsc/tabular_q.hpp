#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uavsc/env.hpp"
#include "uavsc/errors.hpp"
#include "uavsc/random.hpp"

namespace uavsc {

/// Linear annealing from `start` to `end` over `decay_steps`, then constant.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.01;
  std::size_t decay_steps = 1;

  double at(std::size_t step) const {
    if (step >= decay_steps) return end;
    const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
    return start + (end - start) * frac;
  }

  /// Decays over `fraction` of a `total`-step run.
  static EpsilonSchedule over_fraction(double start, double end, double fraction, std::size_t total);
};

struct QLConfig {
  double beta = 0.1;
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  double epsilon_decay_fraction = 0.8;
  std::size_t steps = 50'000;
  /// 0 keeps beta constant; w > 0 uses beta / n^w with n the visit count of
  /// the updated (state, action) pair.
  double beta_decay_exponent = 0.0;

  void validate() const;
  EpsilonSchedule epsilon_schedule() const;
};

/// Dense (state, action) -> value table, zero-initialized.
class QTable {
public:
  QTable() = default;
  QTable(std::size_t num_states, std::size_t num_actions)
      : states_(num_states), actions_(num_actions), values_(num_states * num_actions, 0.0) {}

  std::size_t num_states() const { return states_; }
  std::size_t num_actions() const { return actions_; }

  double& operator()(std::size_t s, std::size_t a) { return values_[s * actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values_[s * actions_ + a]; }

  std::span<const double> row(std::size_t s) const { return {values_.data() + s * actions_, actions_}; }
  std::span<const double> values() const { return values_; }

  /// CSV rows of (state_index, action_index, value), with a header.
  void save_csv(const std::filesystem::path& path) const;
  static QTable load_csv(const std::filesystem::path& path);

  friend bool operator==(const QTable&, const QTable&) = default;

private:
  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> values_;
};

inline double q_update(double q, double reward, double max_next_q, double beta, double gamma) {
  return q + beta * (reward + gamma * max_next_q - q);
}

/// Index of the largest element; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

std::size_t select_epsilon_greedy(std::span<const double> q_row, double epsilon, double u_explore,
                                  double u_choice);

/// Minimal interface the tabular learner needs from an environment.
template <class E>
concept TabularEnvironment = requires(E& env, std::size_t action, std::uint64_t seed) {
  { env.num_states() } -> std::convertible_to<std::size_t>;
  { env.num_actions() } -> std::convertible_to<std::size_t>;
  env.reset(seed);
  { env.observe() } -> std::convertible_to<std::size_t>;
  { env.controllable() } -> std::convertible_to<bool>;
  { env.act(action) } -> std::convertible_to<double>;
};

/// Presents UavEnv through TabularEnvironment (0-based actions, flat states).
class UavTabularEnv {
public:
  explicit UavTabularEnv(UavEnv& env) : env_(&env) {}

  std::size_t num_states() const { return state_count(env_->config()); }
  std::size_t num_actions() const { return static_cast<std::size_t>(env_->config().num_actions()); }
  void reset(std::uint64_t seed) { env_->reset(seed); }
  std::size_t observe() const { return state_index(env_->state(), env_->config()); }
  bool controllable() const { return !env_->state().is_charging(); }
  double act(std::size_t action) {
    last_ = env_->step(static_cast<int>(action) + 1);
    return last_.reward;
  }

  const UavEnv& env() const { return *env_; }
  const StepOutcome& last_outcome() const { return last_; }

private:
  UavEnv* env_;
  StepOutcome last_;
};

struct TabularResult {
  QTable table;
  std::vector<double> rewards;
};

struct NoStepObserver {
  void operator()(std::size_t, std::size_t, double, double) const {}
};

/// Continuing-task Q-learning: T act/observe/update steps on a live
/// environment. Uncontrollable states (charging) submit action 0 and are
/// still bootstrapped through as ordinary states. Deterministic per seed.
///
/// `on_step(step, action, reward, epsilon)` is called after each update.
template <TabularEnvironment E, class OnStep = NoStepObserver>
TabularResult train_q_learning(E& env, const QLConfig& config, std::uint64_t seed, OnStep&& on_step = {}) {
  config.validate();
  const std::size_t num_actions = env.num_actions();
  TabularResult out{QTable(env.num_states(), num_actions), {}};
  out.rewards.reserve(config.steps);
  std::vector<std::uint32_t> visits;
  if (config.beta_decay_exponent > 0.0) visits.assign(out.table.num_states() * num_actions, 0);

  const EpsilonSchedule schedule = config.epsilon_schedule();
  Rng rng(seed, 0x71u);
  env.reset(seed);
  std::size_t s = env.observe();
  for (std::size_t t = 0; t < config.steps; ++t) {
    const double epsilon = schedule.at(t);
    std::size_t a = 0;
    if (env.controllable()) {
      const double u_explore = rng.uniform();
      const double u_choice = rng.uniform();
      a = select_epsilon_greedy(out.table.row(s), epsilon, u_explore, u_choice);
    }
    const double r = env.act(a);
    const std::size_t next = env.observe();
    const auto next_row = out.table.row(next);
    const double max_next = *std::max_element(next_row.begin(), next_row.end());

    double beta = config.beta;
    if (!visits.empty()) {
      const std::uint32_t n = ++visits[s * num_actions + a];
      beta = config.beta / std::pow(static_cast<double>(n), config.beta_decay_exponent);
    }
    out.table(s, a) = q_update(out.table(s, a), r, max_next, beta, config.gamma);
    out.rewards.push_back(r);
    on_step(t, a, r, epsilon);
    s = next;
  }
  return out;
}

/// Tabular training on the UAV environment built from `env_config`.
TabularResult train_tabular(const EnvConfig& env_config, const QLConfig& config, std::uint64_t seed);

}  // namespace uavsc
