#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

#include "uavsc/errors.hpp"
#include "uavsc/random.hpp"
#include "uavsc/tabular_q.hpp"

using namespace uavsc;

namespace {

/// Two states, two actions, deterministic: action 0 stays, action 1 switches.
struct TwoStateMdp {
  static constexpr std::array<std::array<double, 2>, 2> reward{{{1.0, 0.0}, {2.0, 0.5}}};
  static constexpr std::array<std::array<std::size_t, 2>, 2> next{{{0, 1}, {1, 0}}};
  std::size_t state = 0;

  std::size_t num_states() const { return 2; }
  std::size_t num_actions() const { return 2; }
  void reset(std::uint64_t) { state = 0; }
  std::size_t observe() const { return state; }
  bool controllable() const { return true; }
  double act(std::size_t a) {
    const double r = reward[state][a];
    state = next[state][a];
    return r;
  }
};

/// Independent oracle: value iteration on the known model.
std::array<std::array<double, 2>, 2> value_iteration(double gamma) {
  std::array<std::array<double, 2>, 2> q{};
  for (int it = 0; it < 5000; ++it) {
    auto next_q = q;
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t a = 0; a < 2; ++a) {
        const auto& row = q[TwoStateMdp::next[s][a]];
        next_q[s][a] = TwoStateMdp::reward[s][a] + gamma * std::max(row[0], row[1]);
      }
    q = next_q;
  }
  return q;
}

/// One fixed reward, one state, one action.
struct ConstantReward {
  double r = 3.0;
  std::size_t num_states() const { return 1; }
  std::size_t num_actions() const { return 1; }
  void reset(std::uint64_t) {}
  std::size_t observe() const { return 0; }
  bool controllable() const { return true; }
  double act(std::size_t) { return r; }
};

}  // namespace

TEST_CASE("q_update examples") {
  CHECK(q_update(0, 10, 0, 0.1, 0.9) == doctest::Approx(1.0));
  CHECK(q_update(5, 0, 5, 0.1, 0.9) == doctest::Approx(4.95));
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double q = rng.uniform(-10, 10), r = rng.uniform(-10, 10), m = rng.uniform(-10, 10);
    CHECK(q_update(q, r, m, 0.0, 0.9) == q);
  }
}

TEST_CASE("epsilon-greedy selection") {
  const std::vector<double> row{1, 3, 2};
  CHECK(select_epsilon_greedy(row, 0.0, 0.5, 0.9) == 1);
  CHECK(select_epsilon_greedy(row, 1.0, 0.5, 0.5) == 1);
  CHECK(select_epsilon_greedy(row, 1.0, 0.5, 0.0) == 0);
  CHECK(select_epsilon_greedy(row, 1.0, 0.5, 0.99) == 2);
  const std::vector<double> tie{2, 2, 0};
  CHECK(select_epsilon_greedy(tie, 0.0, 0.1, 0.1) == 0);
  CHECK_THROWS_AS(select_epsilon_greedy(std::vector<double>{}, 0.5, 0.1, 0.1), DomainError);
}

TEST_CASE("greedy choice is invariant to a constant shift") {
  // Integer-valued rows and shifts keep ties exact in floating point.
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> row(3);
    for (double& v : row) v = std::round(rng.uniform(-5, 5));
    const double k = std::round(rng.uniform(-100, 100));
    std::vector<double> shifted = row;
    for (double& v : shifted) v += k;
    CHECK(select_epsilon_greedy(shifted, 0.0, 0.5, 0.5) == select_epsilon_greedy(row, 0.0, 0.5, 0.5));
  }
}

TEST_CASE("epsilon schedule decays linearly over 80% then holds") {
  QLConfig c;
  c.steps = 1000;
  const EpsilonSchedule s = c.epsilon_schedule();
  CHECK(s.decay_steps == 800);
  CHECK(s.at(0) == 1.0);
  CHECK(s.at(400) == doctest::Approx(0.505));
  CHECK(s.at(800) == 0.01);
  CHECK(s.at(999) == 0.01);
  for (std::size_t t = 1; t < 1000; ++t) {
    CHECK(s.at(t) <= s.at(t - 1));
    CHECK(s.at(t) >= 0.0);
    CHECK(s.at(t) <= 1.0);
  }
}

TEST_CASE("config validation") {
  QLConfig c;
  CHECK_NOTHROW(c.validate());
  c.beta = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.epsilon_end = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("T = 0 leaves the table at zero") {
  QLConfig c;
  c.steps = 0;
  const TabularResult r = train_tabular(EnvConfig{}, c, 1);
  CHECK(r.rewards.empty());
  CHECK(r.table.num_states() == 4u * 12u * 121u + 1u);
  CHECK(r.table.num_actions() == 3u);
  CHECK(std::all_of(r.table.values().begin(), r.table.values().end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("T = 1 writes beta * r into exactly one entry") {
  QLConfig c;
  c.steps = 1;
  const TabularResult r = train_tabular(EnvConfig{}, c, 9);
  REQUIRE(r.rewards.size() == 1);
  int nonzero = 0;
  for (double v : r.table.values()) {
    if (v != 0.0) {
      ++nonzero;
      CHECK(v == doctest::Approx(c.beta * r.rewards[0]));
    }
  }
  CHECK(nonzero == 1);
}

TEST_CASE("each step changes at most one entry") {
  // With a constant epsilon, a run of n + 1 steps extends the run of n steps.
  QLConfig c;
  c.epsilon_start = c.epsilon_end = 0.3;
  for (std::size_t n : {1u, 50u, 200u, 999u}) {
    c.steps = n;
    const TabularResult shorter = train_tabular(EnvConfig{}, c, 4);
    c.steps = n + 1;
    const TabularResult longer = train_tabular(EnvConfig{}, c, 4);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < longer.table.values().size(); ++i)
      changed += longer.table.values()[i] != shorter.table.values()[i];
    CHECK(changed <= 1);
  }
}

TEST_CASE("gamma = 0 converges to the constant reward") {
  ConstantReward env;
  QLConfig c;
  c.gamma = 0.0;
  c.steps = 1000;
  const TabularResult r = train_q_learning(env, c, 1);
  CHECK(std::abs(r.table(0, 0) - env.r) < 1e-6);
}

TEST_CASE("two-state MDP reaches the value-iteration fixed point") {
  const auto oracle = value_iteration(0.9);
  TwoStateMdp env;
  QLConfig c;
  c.steps = 100'000;
  c.beta = 0.5;
  c.beta_decay_exponent = 0.3;
  c.epsilon_start = c.epsilon_end = 0.5;
  const TabularResult r = train_q_learning(env, c, 12);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < 2; ++a) CHECK(std::abs(r.table(s, a) - oracle[s][a]) < 1e-3);
}

TEST_CASE("training is deterministic per seed") {
  QLConfig c;
  c.steps = 5000;
  const TabularResult a = train_tabular(EnvConfig{}, c, 21);
  const TabularResult b = train_tabular(EnvConfig{}, c, 21);
  CHECK(a.table == b.table);
  CHECK(a.rewards == b.rewards);
}

TEST_CASE("Q-table CSV round trip") {
  QLConfig c;
  c.steps = 3000;
  const TabularResult r = train_tabular(EnvConfig{}, c, 5);
  const auto path = std::filesystem::temp_directory_path() / "uavsc_qtable_test.csv";
  r.table.save_csv(path);
  CHECK(QTable::load_csv(path) == r.table);
  std::filesystem::remove(path);
}
