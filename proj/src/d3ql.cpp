#include "uavsc/d3ql.hpp"

#include <cmath>

#include "uavsc/errors.hpp"

namespace uavsc {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
  storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(const Transition& t) {
  if (size_ < capacity_) {
    storage_.push_back(t);
    ++size_;
    return;
  }
  storage_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::operator[](std::size_t i) const {
  if (i >= size_) throw DomainError("replay buffer index out of range");
  return storage_[(head_ + i) % capacity_];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t k, Rng& rng) const {
  if (k == 0) throw DomainError("sample size must be >= 1");
  if (size_ < k) throw InsufficientDataError("replay buffer holds fewer transitions than requested");
  std::vector<Transition> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(storage_[rng.index(size_)]);
  return out;
}

void D3QLConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("d3ql gamma must lie in [0, 1)");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) || !(epsilon_end >= 0.0 && epsilon_end <= 1.0))
    throw ConfigError("d3ql epsilon must lie in [0, 1]");
  if (epsilon_end > epsilon_start) throw ConfigError("d3ql epsilon must be non-increasing");
  if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0))
    throw ConfigError("d3ql epsilon_decay_fraction must lie in (0, 1]");
  if (batch_size < 1) throw ConfigError("d3ql batch_size must be >= 1");
  if (batch_size > buffer_capacity) throw ConfigError("d3ql batch_size must not exceed buffer_capacity");
  if (sync_interval < 1) throw ConfigError("d3ql sync_interval must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("d3ql learning_rate must be positive");
  if (!(learning_rate_decay > 0.0 && learning_rate_decay <= 1.0))
    throw ConfigError("d3ql learning_rate_decay must lie in (0, 1]");
  architecture.validate();
  if (architecture.input_dim != 3) throw ConfigError("d3ql network input_dim must be 3");
}

EpsilonSchedule D3QLConfig::epsilon_schedule() const {
  return EpsilonSchedule::over_fraction(epsilon_start, epsilon_end, epsilon_decay_fraction, steps);
}

double double_target(double reward, double gamma, std::span<const double> q_online_next,
                     std::span<const double> q_target_next) {
  if (q_online_next.size() != q_target_next.size())
    throw DomainError("online and target value vectors differ in length");
  return reward + gamma * q_target_next[argmax(q_online_next)];
}

D3QLAgent::D3QLAgent(const EnvConfig& env_config, D3QLConfig config, std::uint64_t seed)
    : env_config_(env_config),
      config_(std::move(config)),
      buffer_(config_.buffer_capacity),
      rng_(seed, 0xd3u),
      learning_rate_(config_.learning_rate) {
  env_config_.validate();
  config_.architecture.num_actions = env_config_.num_actions();
  config_.validate();
  schedule_ = config_.epsilon_schedule();
  online_ = init_params(config_.architecture, seed);
  target_ = sync_target(online_);
}

std::size_t D3QLAgent::greedy_action(const UavState& s) const {
  const std::vector<double> q = forward(online_, featurize(s, env_config_));
  return argmax(q);
}

TrainStepResult D3QLAgent::train_step(UavEnv& env) {
  TrainStepResult out;
  out.state = env.state();
  out.epsilon = schedule_.at(step_);

  const FeatureVector x = featurize(out.state, env_config_);
  std::size_t action = 0;
  if (!out.state.is_charging()) {
    const double u_explore = rng_.uniform();
    const double u_choice = rng_.uniform();
    action = select_epsilon_greedy(forward(online_, x), out.epsilon, u_explore, u_choice);
  }
  out.speed_level = static_cast<int>(action) + 1;

  const StepOutcome outcome = env.step(out.speed_level);
  out.reward = outcome.reward;
  out.next_state = outcome.next_state;
  buffer_.push({x, action, outcome.reward, featurize(outcome.next_state, env_config_)});

  if (buffer_.size() >= std::max(config_.learning_start, config_.batch_size)) out.loss = learn();

  ++step_;
  if (step_ % config_.sync_interval == 0) target_ = sync_target(online_);
  return out;
}

double D3QLAgent::learn() {
  const std::vector<Transition> batch = buffer_.sample(config_.batch_size, rng_);
  const auto n = static_cast<Eigen::Index>(batch.size());

  Eigen::MatrixXd next_inputs(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) next_inputs(k, i) = batch[static_cast<std::size_t>(i)].next_state[k];
  }
  const Eigen::MatrixXd q_online_next = forward_batch(online_, next_inputs).q;
  const Eigen::MatrixXd q_target_next = forward_batch(target_, next_inputs).q;

  std::vector<TrainingSample> samples(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd online_col = q_online_next.col(col);
    const Eigen::VectorXd target_col = q_target_next.col(col);
    samples[i].x = batch[i].state;
    samples[i].action = batch[i].action;
    samples[i].target = double_target(batch[i].reward, config_.gamma,
                                      {online_col.data(), static_cast<std::size_t>(online_col.size())},
                                      {target_col.data(), static_cast<std::size_t>(target_col.size())});
  }

  const LossAndGradient lg = loss_and_gradient(online_, samples);
  apply_sgd(online_, lg.grad, learning_rate_);
  if (!online_.all_finite()) throw NumericalError("training produced non-finite network parameters");
  learning_rate_ *= config_.learning_rate_decay;
  return lg.loss;
}

D3QLResult train_d3ql(const EnvConfig& env_config, const D3QLConfig& config, std::uint64_t seed) {
  UavEnv env(env_config);
  env.reset(seed);
  D3QLAgent agent(env_config, config, seed);

  D3QLResult out;
  out.rewards.reserve(config.steps);
  out.history.reserve(config.steps);
  for (std::size_t t = 0; t < config.steps; ++t) {
    const TrainStepResult r = agent.train_step(env);
    out.rewards.push_back(r.reward);
    if (r.loss) out.losses.push_back(*r.loss);
    out.history.push_back({t + 1, r.reward, r.loss, r.epsilon, r.state.energy, r.state.cell});
  }
  out.params = agent.online();
  return out;
}

}  // namespace uavsc
