#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "uavsc/env.hpp"
#include "uavsc/errors.hpp"
#include "uavsc/random.hpp"

using namespace uavsc;

namespace {

// Brute-force geometric quantile: walk the CDF one slot at a time.
int geometric_quantile_by_enumeration(double z, double u) {
  const double stay = 1.0 - 1.0 / z;
  double survival = 1.0;
  for (int k = 1;; ++k) {
    survival *= stay;
    if (1.0 - survival > u) return k;
  }
}

EnvConfig tiny_config() {
  EnvConfig c;
  c.num_cells = 1;
  c.cell_length_m = 5.0;
  c.speeds_mps = {5.0};
  c.energy_cost = {2};
  c.arrival_probs = {0.5};
  c.battery_capacity = 10;
  return c;
}

}  // namespace

TEST_CASE("config validation names the violated invariant") {
  EnvConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.cell_positions() == 12);
  CHECK(c.steps_per_slot(1) == 1);
  CHECK(c.steps_per_slot(3) == 3);

  auto expect = [](EnvConfig bad, const char* fragment) {
    try {
      bad.validate();
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  EnvConfig bad = c;
  bad.speeds_mps = {5, 5, 15};
  expect(bad, "speeds_mps must be strictly increasing");
  bad = c;
  bad.energy_cost = {2, 4, 3};
  expect(bad, "energy_cost must be strictly increasing");
  bad = c;
  bad.speeds_mps = {5, 7, 15};
  expect(bad, "speeds_mps[1]");
  bad = c;
  bad.cell_length_m = 62;
  expect(bad, "cell_length_m");
  bad = c;
  bad.arrival_probs = {0.1, 0.2, 1.2, 0.0};
  expect(bad, "arrival_probs");
  bad = c;
  bad.arrival_probs = {0.1};
  expect(bad, "num_cells entries");
  bad = c;
  bad.battery_capacity = 3;
  expect(bad, "battery_capacity");
  bad = c;
  bad.mean_charging_slots = 0.5;
  expect(bad, "mean_charging_slots");

  CHECK_THROWS_AS(UavEnv{bad}, ConfigError);
}

TEST_CASE("reset returns the full-battery origin") {
  UavEnv env(EnvConfig{});
  CHECK(env.reset(7) == UavState{1, 0, 120});
  CHECK(env.charging().remaining_slots == 0);

  UavEnv tiny(tiny_config());
  CHECK(tiny.config().cell_positions() == 1);
  CHECK(tiny.reset(123) == UavState{1, 0, 10});
}

TEST_CASE("advance moves along the cyclic loop") {
  const EnvConfig c;
  CHECK(advance({1, 0}, 1, c) == Position{1, 1});
  CHECK(advance({1, 11}, 3, c) == Position{2, 2});
  CHECK(advance({4, 11}, 2, c) == Position{1, 1});
  CHECK(advance({2, 5}, 2, c) == Position{2, 7});

  CHECK_THROWS_AS(advance({0, 0}, 1, c), DomainError);
  CHECK_THROWS_AS(advance({1, 12}, 1, c), DomainError);
  CHECK_THROWS_AS(advance({1, 0}, 4, c), DomainError);
  CHECK_THROWS_AS(advance({1, 0}, 0, c), DomainError);

  const EnvConfig tiny = tiny_config();
  CHECK(advance({1, 0}, 1, tiny) == Position{1, 0});
}

TEST_CASE("sample_arrival is a Bernoulli threshold") {
  CHECK(sample_arrival(0.6, 0.3) == 1);
  CHECK(sample_arrival(0.6, 0.9) == 0);
  CHECK(sample_arrival(0.6, 0.6) == 0);
  for (double u : {0.0, 0.3, 0.999}) CHECK(sample_arrival(0.0, u) == 0);
  CHECK(sample_arrival(1.0, 0.999999) == 1);
}

TEST_CASE("charging duration is the geometric quantile") {
  for (double u : {0.0, 0.2, 0.5, 0.99}) CHECK(sample_charging_duration(1.0, u) == 1);
  CHECK(sample_charging_duration(10.0, 0.0) == 1);
  CHECK_THROWS_AS(sample_charging_duration(0.9, 0.5), DomainError);

  Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    const double z = rng.uniform(1.0, 40.0);
    const double u = rng.uniform();
    CHECK(sample_charging_duration(z, u) == geometric_quantile_by_enumeration(z, u));
  }
}

TEST_CASE("charging duration mean matches z over 1e6 draws") {
  for (double z : {5.0, 10.0, 20.0}) {
    Rng rng(static_cast<std::uint64_t>(z));
    double sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) sum += sample_charging_duration(z, rng.uniform());
    const double mean = sum / n;
    CHECK(std::abs(mean - z) <= 0.01 * z);
    if (z == 10.0) {
      CHECK(mean >= 9.9);
      CHECK(mean <= 10.1);
    }
  }
}

TEST_CASE("compute_reward follows the working/idle split") {
  const EnvConfig c;
  CHECK(compute_reward(true, 1, 1, c) == doctest::Approx(15.0));
  CHECK(compute_reward(true, 0, 3, c) == doctest::Approx(13.0));
  CHECK(compute_reward(false, 1, 3, c) == 0.0);
  CHECK(compute_reward(false, 0, 1, c) == 0.0);
}

TEST_CASE("state index is a bijection") {
  EnvConfig c;
  c.battery_capacity = 20;
  const std::size_t n = state_count(c);
  CHECK(n == 4u * 12u * 21u + 1u);
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const UavState s = state_from_index(i, c);
    CHECK(state_index(s, c) == i);
    seen.insert(i);
  }
  CHECK(state_index(UavState::charging(), c) == 0);
  CHECK_THROWS_AS(state_index({5, 0, 0}, c), DomainError);
  CHECK_THROWS_AS(state_from_index(n, c), DomainError);
}

TEST_CASE("step before reset is a usage error") {
  UavEnv env(EnvConfig{});
  CHECK_THROWS_AS(env.step(1), UsageError);
  CHECK_THROWS_AS(env.state(), UsageError);
}

TEST_CASE("working step accounting") {
  UavEnv env(EnvConfig{});
  env.reset(3);
  env.set_state({3, 5, 120});
  const StepOutcome out = env.step(3);
  CHECK(out.was_working);
  CHECK(out.next_state == UavState{3, 8, 116});
  CHECK(out.energy_spent == 4);
  CHECK((out.reward == 13.0 || out.reward == 14.0));
  CHECK(out.reward == 13.0 + out.packets);
  CHECK_THROWS_AS(env.step(4), DomainError);
}

TEST_CASE("energy below the cheapest action triggers charging") {
  UavEnv env(EnvConfig{});
  env.reset(11);
  env.set_state({2, 0, 3});
  const StepOutcome out = env.step(3);
  CHECK(out.was_working);
  CHECK(out.next_state == UavState::charging());
  CHECK(env.charging().remaining_slots >= 1);
  CHECK(env.charging().resume_cell == 2);
  CHECK(env.charging().resume_location == 3);
}

TEST_CASE("charging slots count down and resume at full battery") {
  UavEnv env(EnvConfig{});
  env.force_charging_duration(3);
  env.reset(5);
  env.set_state({4, 10, 2});
  CHECK(env.step(1).next_state == UavState::charging());
  CHECK(env.charging().remaining_slots == 3);

  const StepOutcome first = env.step(3);
  CHECK(first.next_state == UavState::charging());
  CHECK(first.reward == 0.0);
  CHECK(first.packets == 0);
  CHECK(first.energy_spent == 0);
  CHECK_FALSE(first.was_working);
  CHECK(env.charging().remaining_slots == 2);

  CHECK(env.step(2).next_state == UavState::charging());
  const StepOutcome last = env.step(1);
  CHECK(last.next_state == UavState{4, 11, 120});
  CHECK(env.charging().remaining_slots == 0);
}

TEST_CASE("trajectory invariants under random actions") {
  const EnvConfig c;
  UavEnv env(c);
  Rng actions(99);
  UavState s = env.reset(2024);
  int last_cell = s.cell;
  int charges = 0;
  for (int t = 0; t < 50'000; ++t) {
    const int a = static_cast<int>(actions.index(3)) + 1;
    const bool was_charging = s.is_charging();
    const auto resume = env.charging();
    const StepOutcome out = env.step(a);

    if (was_charging) {
      CHECK(out.reward == 0.0);
      if (!out.next_state.is_charging()) {
        ++charges;
        CHECK(out.next_state == UavState{resume.resume_cell, resume.resume_location, c.battery_capacity});
      }
    }
    CHECK(out.was_working != was_charging);
    if (!out.was_working) {
      CHECK(out.reward == 0.0);
      CHECK(out.packets == 0);
      CHECK(out.energy_spent == 0);
    }
    const UavState& n = out.next_state;
    if (!n.is_charging()) {
      CHECK(n.energy >= 0);
      CHECK(n.energy <= c.battery_capacity);
      // cells are visited in cyclic order
      const bool same = n.cell == last_cell;
      const bool next = n.cell == (last_cell % c.num_cells) + 1;
      CHECK((same || next));
      last_cell = n.cell;
    } else {
      CHECK(env.charging().remaining_slots > 0);
    }
    s = n;
  }
  CHECK(charges > 100);
}

TEST_CASE("no arrivals when every probability is zero") {
  EnvConfig c;
  c.arrival_probs = {0, 0, 0, 0};
  UavEnv env(c);
  env.reset(8);
  Rng actions(8);
  long packets = 0;
  for (int t = 0; t < 20'000; ++t) packets += env.step(static_cast<int>(actions.index(3)) + 1).packets;
  CHECK(packets == 0);
}

TEST_CASE("same seed and actions give identical outcomes") {
  auto run = [](std::uint64_t seed) {
    UavEnv env(EnvConfig{});
    env.reset(seed);
    Rng actions(17);
    std::vector<StepOutcome> log;
    for (int t = 0; t < 5000; ++t) log.push_back(env.step(static_cast<int>(actions.index(3)) + 1));
    return log;
  };
  CHECK(run(31) == run(31));
  CHECK(run(31) != run(32));
}
