#pragma once

#include <filesystem>
#include <string>

#include "uavsc/experiments.hpp"

namespace uavsc {

/// Parses an EnvConfig from a JSON object whose keys are the EnvConfig field
/// names. Missing keys keep their defaults; unknown keys are a ConfigError.
EnvConfig env_config_from_json(const std::string& text);

/// Parses a full experiment document with optional sections `env`,
/// `tabular`, `d3ql` and `experiment`. Unknown sections or keys are a
/// ConfigError. The result is validated.
ExperimentSpec experiment_from_json(const std::string& text);

/// Reads and parses a config file; a missing file is a ConfigError.
ExperimentSpec load_experiment(const std::filesystem::path& path);

}  // namespace uavsc
