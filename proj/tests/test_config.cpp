#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "uavsc/config.hpp"
#include "uavsc/errors.hpp"

using namespace uavsc;

TEST_CASE("empty document keeps every default") {
  const ExperimentSpec spec = experiment_from_json("{}");
  CHECK(spec.env.battery_capacity == 120);
  CHECK(spec.tabular.beta == 0.1);
  CHECK(spec.d3ql.batch_size == 32);
  CHECK(spec.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(spec.sweep_z == std::vector<double>{5, 10, 15, 20, 25, 30});
}

TEST_CASE("partial sections override only the given keys") {
  const ExperimentSpec spec = experiment_from_json(R"({
    "env": {"mean_charging_slots": 20, "arrival_probs": [0, 0, 0, 0]},
    "tabular": {"beta": 0.2},
    "d3ql": {"trunk": [32], "learning_rate": 0.01},
    "experiment": {"kind": "sweep", "seeds": [7], "sweep_z": [5, 30], "train_steps": 100,
                   "output": "out/sweep.csv", "checkpoint": "net.bin"}
  })");
  CHECK(spec.env.mean_charging_slots == 20.0);
  CHECK(spec.env.arrival_probs == std::vector<double>{0, 0, 0, 0});
  CHECK(spec.env.num_cells == 4);
  CHECK(spec.tabular.beta == 0.2);
  CHECK(spec.tabular.gamma == 0.9);
  CHECK(spec.d3ql.architecture.trunk == std::vector<int>{32});
  CHECK(spec.d3ql.learning_rate == 0.01);
  CHECK(spec.kind == ExperimentKind::ChargingSweep);
  CHECK(spec.seeds == std::vector<std::uint64_t>{7});
  CHECK(spec.train_steps == 100);
  CHECK(spec.output == "out/sweep.csv");
  CHECK(spec.checkpoint == "net.bin");
  CHECK(spec.d3ql_config().steps == 100);
  CHECK(spec.tabular_config().steps == 100);
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK_THROWS_AS(experiment_from_json(R"({"envv": {}})"), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(R"({"env": {"battery": 100}})"), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(R"({"d3ql": {"lr": 0.1}})"), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(R"({"experiment": {"plot": true}})"), ConfigError);
}

TEST_CASE("malformed or invalid values are config errors") {
  CHECK_THROWS_AS(experiment_from_json("{"), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(R"({"env": {"battery_capacity": "lots"}})"), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(R"({"env": {"battery_capacity": 1}})"), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(R"({"tabular": {"gamma": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(R"({"experiment": {"seeds": []}})"), ConfigError);
  CHECK_THROWS_AS(experiment_from_json(R"({"experiment": {"kind": "plot"}})"), ConfigError);
}

TEST_CASE("env-only parsing") {
  const EnvConfig c = env_config_from_json(R"({"num_cells": 2, "arrival_probs": [0.5, 0.5]})");
  CHECK(c.num_cells == 2);
  CHECK_THROWS_AS(env_config_from_json(R"({"num_cells": 2})"), ConfigError);
}

TEST_CASE("config files") {
  CHECK_THROWS_AS(load_experiment("/nonexistent/uavsc.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "uavsc_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"experiment": {"seeds": [3, 4]}})";
  }
  CHECK(load_experiment(path).seeds == std::vector<std::uint64_t>{3, 4});
  std::filesystem::remove(path);
}

TEST_CASE("shipped reference config matches the built-in defaults") {
  const ExperimentSpec spec = load_experiment(std::filesystem::path(UAVSC_CONFIG_DIR) / "reference.json");
  const ExperimentSpec defaults;
  CHECK(spec.env.speeds_mps == defaults.env.speeds_mps);
  CHECK(spec.env.energy_cost == defaults.env.energy_cost);
  CHECK(spec.env.arrival_probs == defaults.env.arrival_probs);
  CHECK(spec.env.battery_capacity == defaults.env.battery_capacity);
  CHECK(spec.env.mean_charging_slots == defaults.env.mean_charging_slots);
  CHECK(spec.d3ql.epsilon_decay_fraction == defaults.d3ql.epsilon_decay_fraction);
  CHECK(spec.d3ql.architecture == defaults.d3ql.architecture);
  CHECK(spec.tabular.epsilon_decay_fraction == defaults.tabular.epsilon_decay_fraction);
  CHECK(spec.train_steps == defaults.train_steps);
  CHECK(spec.sweep_z == defaults.sweep_z);
}
