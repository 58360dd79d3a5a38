#include "uavsc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "uavsc/errors.hpp"

namespace uavsc {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::PolicyTrace: return "policy-trace";
    case ExperimentKind::ChargingSweep: return "charging-sweep";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  if (text == "convergence") return ExperimentKind::Convergence;
  if (text == "policy-trace" || text == "trace") return ExperimentKind::PolicyTrace;
  if (text == "charging-sweep" || text == "sweep") return ExperimentKind::ChargingSweep;
  throw ConfigError("unknown experiment kind: " + text);
}

void ExperimentSpec::validate() const {
  env.validate();
  tabular.validate();
  d3ql.validate();
  if (seeds.empty()) throw ConfigError("experiment seeds must be non-empty");
  for (double z : sweep_z) {
    if (!(z >= 1.0)) throw ConfigError("sweep values for z must be >= 1");
  }
  if (kind == ExperimentKind::ChargingSweep && sweep_z.empty()) throw ConfigError("sweep values must be non-empty");
  if (eval_horizon == 0 || trace_horizon == 0) throw ConfigError("horizons must be >= 1");
  if (window == 0) throw ConfigError("moving-average window must be >= 1");
}

QLConfig ExperimentSpec::tabular_config() const {
  QLConfig config = tabular;
  config.steps = train_steps;
  return config;
}

D3QLConfig ExperimentSpec::d3ql_config() const {
  D3QLConfig config = d3ql;
  config.steps = train_steps;
  return config;
}

std::uint64_t evaluation_seed(std::uint64_t seed) { return seed + 0x9e3779b97f4a7c15ULL; }

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string format_number(double v) { return fmt::format("{}", v); }

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("failed writing " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

ConvergenceResult run_convergence(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t n = spec.seeds.size();
  ConvergenceResult result;
  result.runs.resize(2 * n);
  parallel_for(2 * n, [&](std::size_t job) {
    const bool deep = job < n;
    const std::uint64_t seed = spec.seeds[job % n];
    ConvergenceRun& run = result.runs[job];
    run.seed = seed;
    if (deep) {
      D3QLResult trained = train_d3ql(spec.env, spec.d3ql_config(), seed);
      run.algorithm = "d3ql";
      run.window_avg = moving_average(trained.rewards, spec.window);
      run.d3ql_params = std::move(trained.params);
    } else {
      const TabularResult trained = train_tabular(spec.env, spec.tabular_config(), seed);
      run.algorithm = "q_learning";
      run.window_avg = moving_average(trained.rewards, spec.window);
    }
  });
  if (!spec.output.empty()) write_convergence_csv(result, spec.output);
  return result;
}

void write_convergence_csv(const ConvergenceResult& result, const std::filesystem::path& path) {
  std::string out = "algorithm,seed,step,window_avg_reward\n";
  for (const auto& run : result.runs) {
    for (std::size_t t = 0; t < run.window_avg.size(); ++t)
      out += fmt::format("{},{},{},{}\n", run.algorithm, run.seed, t + 1, run.window_avg[t]);
  }
  write_file_atomically(path, out);
}

std::vector<PolicyTrace> run_policy_trace(const ExperimentSpec& spec, const NetParams& params) {
  spec.validate();
  const Policy policy = Policy::greedy_net(params, spec.env);
  std::vector<PolicyTrace> traces(spec.seeds.size());
  for (std::size_t i = 0; i < spec.seeds.size(); ++i) {
    traces[i] = {spec.seeds[i], trace_policy(policy, spec.env, spec.trace_horizon, spec.seeds[i])};
  }
  if (!spec.output.empty()) write_trace_csv(traces, spec.output);
  return traces;
}

std::vector<PolicyTrace> run_policy_trace(const ExperimentSpec& spec) {
  if (spec.checkpoint.empty() || !std::filesystem::exists(spec.checkpoint))
    throw UsageError("policy trace needs an existing D3QL checkpoint");
  return run_policy_trace(spec, load_params(spec.checkpoint));
}

void write_trace_csv(const std::vector<PolicyTrace>& traces, const std::filesystem::path& path) {
  std::string out = "seed,slot,cell,location,energy,speed,charging\n";
  for (const auto& trace : traces) {
    for (const auto& r : trace.rows)
      out += fmt::format("{},{},{},{},{},{},{}\n", trace.seed, r.slot, r.cell, r.location, r.energy, r.speed,
                         r.charging ? 1 : 0);
  }
  write_file_atomically(path, out);
}

std::vector<std::string> sweep_policy_names(const EnvConfig& env) {
  std::vector<std::string> names{"d3ql", "q_learning"};
  for (int a = 1; a <= env.num_actions(); ++a) names.push_back(Policy::fixed_speed(a).name());
  return names;
}

std::vector<SweepRow> run_charging_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const std::vector<std::string> names = sweep_policy_names(spec.env);
  const std::size_t jobs = spec.sweep_z.size() * spec.seeds.size();
  std::vector<std::vector<SweepRow>> per_job(jobs);

  parallel_for(jobs, [&](std::size_t job) {
    const double z = spec.sweep_z[job / spec.seeds.size()];
    const std::uint64_t seed = spec.seeds[job % spec.seeds.size()];
    EnvConfig env = spec.env;
    env.mean_charging_slots = z;

    std::vector<Policy> policies{Policy::greedy_net(train_d3ql(env, spec.d3ql_config(), seed).params, env),
                                 Policy::greedy_table(train_tabular(env, spec.tabular_config(), seed).table, env)};
    for (int a = 1; a <= env.num_actions(); ++a) policies.push_back(Policy::fixed_speed(a));

    for (const auto& policy : policies) {
      per_job[job].push_back({policy.name(), z, seed,
                              evaluate_policy(policy, env, spec.eval_horizon, evaluation_seed(seed))});
    }
  });

  std::vector<SweepRow> rows;
  for (auto& job_rows : per_job) std::move(job_rows.begin(), job_rows.end(), std::back_inserter(rows));
  auto rank = [&](const std::string& name) { return std::find(names.begin(), names.end(), name) - names.begin(); };
  std::stable_sort(rows.begin(), rows.end(), [&](const SweepRow& a, const SweepRow& b) {
    if (a.z != b.z) return a.z < b.z;
    if (a.policy != b.policy) return rank(a.policy) < rank(b.policy);
    return a.seed < b.seed;
  });
  if (!spec.output.empty()) write_sweep_csv(rows, spec.output);
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::string out = "policy,z,seed,avg_reward,avg_throughput,avg_energy\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{}\n", r.policy, r.z, r.seed, r.report.avg_reward, r.report.avg_throughput,
                       r.report.avg_energy);
  write_file_atomically(path, out);
}

}  // namespace uavsc
