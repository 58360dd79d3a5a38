// Command-line driver for training, evaluation and the experiment suite.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "uavsc/config.hpp"
#include "uavsc/d3ql.hpp"
#include "uavsc/dueling_net.hpp"
#include "uavsc/errors.hpp"
#include "uavsc/experiments.hpp"
#include "uavsc/policy.hpp"
#include "uavsc/tabular_q.hpp"

namespace fs = std::filesystem;
using namespace uavsc;

namespace {

constexpr const char* kOutputDirVar = "UAVSC_OUTPUT_DIR";

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> steps;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON config with env/tabular/d3ql/experiment sections");
  cmd->add_option("--seed", o.seed, "Run a single seed instead of the configured list");
  cmd->add_option("--out", o.out, "Output directory (default: $UAVSC_OUTPUT_DIR or .)");
  cmd->add_option("--steps", o.steps, "Training iterations per learner");
}

ExperimentSpec load_spec(const CommonOptions& o) {
  ExperimentSpec spec = o.config.empty() ? ExperimentSpec{} : load_experiment(o.config);
  if (o.seed) spec.seeds = {*o.seed};
  if (o.steps) spec.train_steps = *o.steps;
  spec.d3ql.architecture.num_actions = spec.env.num_actions();
  spec.validate();
  return spec;
}

/// --out wins, then the config's experiment.output, then the environment
/// variable, then the working directory.
fs::path output_path(const CommonOptions& o, const ExperimentSpec& spec, const std::string& file) {
  if (!o.out.empty()) return fs::path(o.out) / file;
  if (!spec.output.empty()) return spec.output;
  if (const char* dir = std::getenv(kOutputDirVar); dir && *dir) return fs::path(dir) / file;
  return fs::path(file);
}

fs::path output_dir(const CommonOptions& o) {
  if (!o.out.empty()) return o.out;
  if (const char* dir = std::getenv(kOutputDirVar); dir && *dir) return dir;
  return ".";
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::string out = "step,reward,loss,epsilon,energy,cell\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", r.step, r.reward, r.loss ? format_number(*r.loss) : "", r.epsilon,
                       r.energy, r.cell);
  }
  return out;
}

/// Tabular view that remembers the state each action was taken in.
struct RecordingEnv {
  UavTabularEnv view;
  UavState before;

  std::size_t num_states() const { return view.num_states(); }
  std::size_t num_actions() const { return view.num_actions(); }
  void reset(std::uint64_t s) { view.reset(s); }
  std::size_t observe() const { return view.observe(); }
  bool controllable() const { return view.controllable(); }
  double act(std::size_t a) {
    before = view.env().state();
    return view.act(a);
  }
};

int cmd_train(const CommonOptions& o, const std::string& agent) {
  const ExperimentSpec spec = load_spec(o);
  const std::uint64_t seed = spec.seeds.front();
  const fs::path dir = output_dir(o);
  const std::string stem = fmt::format("{}_seed{}", agent, seed);

  if (agent == "d3ql") {
    const D3QLResult result = train_d3ql(spec.env, spec.d3ql_config(), seed);
    fs::create_directories(dir);
    const fs::path ckpt = dir / (stem + ".bin");
    save_params(result.params, ckpt);
    write_file_atomically(dir / (stem + "_history.csv"), history_csv(result.history));
    std::cout << "checkpoint: " << ckpt.string() << "\n";
  } else {
    UavEnv env(spec.env);
    RecordingEnv recorder{UavTabularEnv(env), {}};
    const QLConfig config = spec.tabular_config();
    std::vector<HistoryRow> history;
    history.reserve(config.steps);
    auto observer = [&](std::size_t t, std::size_t, double r, double eps) {
      history.push_back({t + 1, r, std::nullopt, eps, recorder.before.energy, recorder.before.cell});
    };
    const TabularResult result = train_q_learning(recorder, config, seed, observer);
    fs::create_directories(dir);
    const fs::path table = dir / (stem + ".csv");
    result.table.save_csv(table);
    write_file_atomically(dir / (stem + "_history.csv"), history_csv(history));
    std::cout << "q-table: " << table.string() << "\n";
  }
  return 0;
}

Policy make_policy(const std::string& text, const EnvConfig& env) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "fixed") {
    int level = 0;
    try {
      level = std::stoi(arg);
    } catch (const std::exception&) {
      throw UsageError("fixed policy needs a speed level, e.g. fixed:1");
    }
    if (level < 1 || level > env.num_actions()) throw UsageError("fixed speed level out of range");
    return Policy::fixed_speed(level);
  }
  if (arg.empty() || !fs::exists(arg)) throw UsageError("policy file not found: " + arg);
  if (kind == "d3ql") return Policy::greedy_net(load_params(arg), env);
  if (kind == "q_learning") return Policy::greedy_table(QTable::load_csv(arg), env);
  throw UsageError("unknown policy '" + text + "' (use fixed:<level>, d3ql:<ckpt>, q_learning:<csv>)");
}

int cmd_evaluate(const CommonOptions& o, const std::string& policy_text, std::optional<std::size_t> horizon) {
  const ExperimentSpec spec = load_spec(o);
  const Policy policy = make_policy(policy_text, spec.env);
  const std::size_t slots = horizon.value_or(spec.eval_horizon);

  std::string out = "policy,z,seed,avg_reward,avg_throughput,avg_energy,charging_fraction,horizon\n";
  for (std::uint64_t seed : spec.seeds) {
    const EvalReport r = evaluate_policy(policy, spec.env, slots, seed);
    out += fmt::format("{},{},{},{},{},{},{},{}\n", policy.name(), spec.env.mean_charging_slots, seed, r.avg_reward,
                       r.avg_throughput, r.avg_energy, r.charging_fraction, r.horizon);
  }
  const fs::path path = output_path(o, spec, "evaluate.csv");
  write_file_atomically(path, out);
  std::cout << out;
  return 0;
}

int cmd_convergence(const CommonOptions& o) {
  ExperimentSpec spec = load_spec(o);
  spec.output = output_path(o, spec, "convergence.csv");
  run_convergence(spec);
  std::cout << "wrote " << spec.output.string() << "\n";
  return 0;
}

int cmd_trace(const CommonOptions& o, const std::string& checkpoint, std::optional<std::size_t> horizon) {
  ExperimentSpec spec = load_spec(o);
  if (!checkpoint.empty()) spec.checkpoint = checkpoint;
  if (horizon) spec.trace_horizon = *horizon;
  spec.output = output_path(o, spec, "trace.csv");
  run_policy_trace(spec);
  std::cout << "wrote " << spec.output.string() << "\n";
  return 0;
}

int cmd_sweep(const CommonOptions& o) {
  ExperimentSpec spec = load_spec(o);
  spec.output = output_path(o, spec, "sweep.csv");
  run_charging_sweep(spec);
  std::cout << "wrote " << spec.output.string() << "\n";
  return 0;
}

int cmd_grad_check(std::size_t draws, std::size_t batch, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const GradientCheckReport report = run_gradient_check(NetArchitecture{}, draws, batch, seed);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = report.max_relative_error < 1e-4;
  std::cout << fmt::format("max relative error {:.3e} over {} draws ({} parameters checked) in {:.2f} s: {}\n",
                           report.max_relative_error, report.draws, report.parameters_checked, seconds,
                           ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV speed-control simulator and learners"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string agent = "d3ql";
  std::string policy;
  std::string checkpoint;
  std::optional<std::size_t> horizon;
  std::size_t draws = 20;
  std::size_t batch = 8;
  std::uint64_t check_seed = 1;

  auto* train = app.add_subcommand("train", "Train an agent and write its checkpoint and history");
  add_common(train, common);
  train->add_option("--agent", agent, "d3ql or q_learning")->check(CLI::IsMember({"d3ql", "q_learning"}));

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a frozen policy");
  add_common(evaluate, common);
  evaluate->add_option("--policy", policy, "fixed:<level>, d3ql:<checkpoint> or q_learning:<table.csv>")->required();
  evaluate->add_option("--horizon", horizon, "Evaluation slots");

  auto* convergence = app.add_subcommand("convergence", "Learning curves of both agents");
  add_common(convergence, common);

  auto* trace = app.add_subcommand("trace", "Greedy rollout of a D3QL checkpoint");
  add_common(trace, common);
  trace->add_option("--checkpoint", checkpoint, "D3QL checkpoint file");
  trace->add_option("--horizon", horizon, "Slots to roll out");

  auto* sweep = app.add_subcommand("sweep", "Performance versus mean charging time");
  add_common(sweep, common);

  auto* grad = app.add_subcommand("grad-check", "Finite-difference check of the network gradient");
  grad->add_option("--draws", draws, "Random (params, batch) draws");
  grad->add_option("--batch", batch, "Samples per batch");
  grad->add_option("--seed", check_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*train) return cmd_train(common, agent);
    if (*evaluate) return cmd_evaluate(common, policy, horizon);
    if (*convergence) return cmd_convergence(common);
    if (*trace) return cmd_trace(common, checkpoint, horizon);
    if (*sweep) return cmd_sweep(common);
    if (*grad) return cmd_grad_check(draws, batch, check_seed);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
