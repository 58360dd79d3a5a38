#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uavsc/d3ql.hpp"
#include "uavsc/env.hpp"
#include "uavsc/policy.hpp"
#include "uavsc/tabular_q.hpp"

namespace uavsc {

enum class ExperimentKind { Convergence, PolicyTrace, ChargingSweep };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Convergence;
  EnvConfig env{};
  QLConfig tabular{};
  D3QLConfig d3ql{};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> sweep_z{5, 10, 15, 20, 25, 30};
  /// Training iterations for both learners; overrides their own `steps`.
  std::size_t train_steps = 50'000;
  std::size_t eval_horizon = 100'000;
  std::size_t trace_horizon = 1'000;
  std::size_t window = 1'000;
  /// Destination CSV; empty means "do not write".
  std::filesystem::path output;
  /// D3QL checkpoint for the policy-trace experiment.
  std::filesystem::path checkpoint;

  void validate() const;
  QLConfig tabular_config() const;
  D3QLConfig d3ql_config() const;
};

/// Seed used for evaluation rollouts of policies trained with `seed`; all
/// policies compared at one (z, seed) share it.
std::uint64_t evaluation_seed(std::uint64_t seed);

/// Trailing moving average with a window of `window` (shorter at the start).
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);

/// Runs `count` independent jobs on up to hardware_concurrency threads. Each
/// job writes only its own result slot; the first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job);

// ---------------------------------------------------------------------------

struct ConvergenceRun {
  std::string algorithm;  // "d3ql" or "q_learning"
  std::uint64_t seed = 0;
  std::vector<double> window_avg;
  std::optional<NetParams> d3ql_params;
};

struct ConvergenceResult {
  std::vector<ConvergenceRun> runs;  // sorted by (algorithm, seed)
};

/// Trains both agents per seed on the same environment seed and records the
/// moving-average reward. Writes `algorithm,seed,step,window_avg_reward`
/// when spec.output is set.
ConvergenceResult run_convergence(const ExperimentSpec& spec);
void write_convergence_csv(const ConvergenceResult& result, const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct PolicyTrace {
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;
};

/// Greedy rollouts of a trained network, one per spec seed. Writes
/// `seed,slot,cell,location,energy,speed,charging` when spec.output is set.
std::vector<PolicyTrace> run_policy_trace(const ExperimentSpec& spec, const NetParams& params);

/// Loads spec.checkpoint (UsageError when missing) and runs the trace.
std::vector<PolicyTrace> run_policy_trace(const ExperimentSpec& spec);
void write_trace_csv(const std::vector<PolicyTrace>& traces, const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct SweepRow {
  std::string policy;
  double z = 0.0;
  std::uint64_t seed = 0;
  EvalReport report;
};

/// Policy names in sweep order: d3ql, q_learning, fixed:1 .. fixed:A.
std::vector<std::string> sweep_policy_names(const EnvConfig& env);

/// For each (z, seed): trains D3QL and Q-learning on the environment with
/// mean charging time z, then evaluates them with the fixed-speed baselines
/// on a shared evaluation seed. Rows are sorted by (z, policy, seed). Writes
/// `policy,z,seed,avg_reward,avg_throughput,avg_energy` when spec.output
/// is set.
std::vector<SweepRow> run_charging_sweep(const ExperimentSpec& spec);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

/// Writes `contents` to `path` through a temporary file and rename, so a
/// failed run never leaves a partial file behind.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

}  // namespace uavsc
