#include "uavsc/dueling_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "uavsc/errors.hpp"
#include "uavsc/random.hpp"

namespace uavsc {

namespace {

DenseLayer zero_layer(int outputs, int inputs) {
  return {Eigen::MatrixXd::Zero(outputs, inputs), Eigen::VectorXd::Zero(outputs)};
}

template <class Fn>
void for_each_layer(NetParams& p, Fn&& fn) {
  for (auto& layer : p.trunk) fn(layer);
  fn(p.value);
  fn(p.advantage);
}

template <class Fn>
void for_each_layer(const NetParams& p, Fn&& fn) {
  for (const auto& layer : p.trunk) fn(layer);
  fn(p.value);
  fn(p.advantage);
}

void check_shapes(const NetParams& params, Eigen::Index input_rows) {
  Eigen::Index width = input_rows;
  auto check = [&](const DenseLayer& layer) {
    if (layer.weight.cols() != width || layer.bias.size() != layer.weight.rows())
      throw DomainError("network parameter shapes are inconsistent with the input");
  };
  for (const auto& layer : params.trunk) {
    check(layer);
    width = layer.weight.rows();
  }
  check(params.value);
  check(params.advantage);
  if (params.value.weight.rows() != 1) throw DomainError("value head must have one output");
}

Eigen::MatrixXd batch_inputs(std::span<const TrainingSample> batch) {
  Eigen::MatrixXd inputs(3, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (int k = 0; k < 3; ++k) inputs(k, static_cast<Eigen::Index>(i)) = batch[i].x[k];
  }
  return inputs;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

void write_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw std::runtime_error("truncated checkpoint header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("truncated checkpoint payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

constexpr char kMagic[8] = {'U', 'A', 'V', 'S', 'C', 'N', 'E', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

// Central differences carry ~1e-11 absolute round-off at step 1e-5, so entries
// smaller than this are compared absolutely.
constexpr double kRelativeFloor = 1e-6;

}  // namespace

void NetArchitecture::validate() const {
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (num_actions < 1) throw ConfigError("num_actions must be >= 1");
  for (int w : trunk) {
    if (w < 1) throw ConfigError("trunk widths must be >= 1");
  }
}

NetParams NetParams::zeros(const NetArchitecture& arch) {
  arch.validate();
  NetParams p;
  int width = arch.input_dim;
  for (int w : arch.trunk) {
    p.trunk.push_back(zero_layer(w, width));
    width = w;
  }
  p.value = zero_layer(1, width);
  p.advantage = zero_layer(arch.num_actions, width);
  return p;
}

NetArchitecture NetParams::architecture() const {
  NetArchitecture arch;
  arch.input_dim = trunk.empty() ? static_cast<int>(value.weight.cols()) : static_cast<int>(trunk.front().weight.cols());
  arch.trunk.clear();
  for (const auto& layer : trunk) arch.trunk.push_back(static_cast<int>(layer.weight.rows()));
  arch.num_actions = static_cast<int>(advantage.weight.rows());
  return arch;
}

std::size_t NetParams::size() const {
  std::size_t n = 0;
  for_each_layer(*this, [&](const DenseLayer& l) { n += l.weight.size() + l.bias.size(); });
  return n;
}

bool NetParams::all_finite() const {
  bool ok = true;
  for_each_layer(*this, [&](const DenseLayer& l) { ok = ok && l.weight.allFinite() && l.bias.allFinite(); });
  return ok;
}

std::vector<double> NetParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for_each_layer(*this, [&](const DenseLayer& l) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
  });
  return flat;
}

void NetParams::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw DomainError("flat parameter vector has the wrong length");
  std::size_t i = 0;
  for_each_layer(*this, [&](DenseLayer& l) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[i++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[i++];
  });
}

FeatureVector featurize(const UavState& s, const EnvConfig& config) {
  if (s.is_charging()) return {-1.0, -1.0, -1.0};
  const double max_location = std::max(1, config.cell_positions() - 1);
  return {static_cast<double>(s.cell) / config.num_cells, static_cast<double>(s.location) / max_location,
          static_cast<double>(s.energy) / config.battery_capacity};
}

NetParams init_params(const NetArchitecture& arch, std::uint64_t seed) {
  NetParams p = NetParams::zeros(arch);
  Rng rng(seed, 0x1a17u);
  for_each_layer(p, [&](DenseLayer& l) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = rng.uniform(-limit, limit);
  });
  return p;
}

std::vector<double> combine(double v, std::span<const double> adv) {
  if (adv.empty()) throw DomainError("combine needs at least one advantage");
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size());
  std::vector<double> q(adv.size());
  for (std::size_t a = 0; a < adv.size(); ++a) q[a] = v + (adv[a] - mean);
  return q;
}

ForwardCache forward_batch(const NetParams& params, const Eigen::MatrixXd& inputs) {
  check_shapes(params, inputs.rows());
  ForwardCache cache;
  cache.activations.reserve(params.trunk.size() + 1);
  cache.activations.push_back(inputs);
  for (const auto& layer : params.trunk) {
    Eigen::MatrixXd z = layer.weight * cache.activations.back();
    z.colwise() += layer.bias;
    cache.activations.push_back(z.cwiseMax(0.0));
  }
  const Eigen::MatrixXd& hidden = cache.activations.back();
  cache.value = (params.value.weight * hidden).row(0).array() + params.value.bias(0);
  cache.advantage = params.advantage.weight * hidden;
  cache.advantage.colwise() += params.advantage.bias;

  const Eigen::RowVectorXd adv_mean = cache.advantage.colwise().mean();
  cache.q = cache.advantage;
  cache.q.rowwise() += cache.value - adv_mean;
  return cache;
}

std::vector<double> forward(const NetParams& params, const FeatureVector& x) {
  const Eigen::MatrixXd input = Eigen::Map<const Eigen::VectorXd>(x.data(), 3);
  const ForwardCache cache = forward_batch(params, input);
  return {cache.q.data(), cache.q.data() + cache.q.rows()};
}

double batch_loss(const NetParams& params, std::span<const TrainingSample> batch) {
  if (batch.empty()) throw DomainError("loss over an empty batch");
  const ForwardCache cache = forward_batch(params, batch_inputs(batch));
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double residual = batch[i].target - cache.q(static_cast<Eigen::Index>(batch[i].action), static_cast<Eigen::Index>(i));
    loss += residual * residual;
  }
  return loss / static_cast<double>(batch.size());
}

LossAndGradient loss_and_gradient(const NetParams& params, std::span<const TrainingSample> batch) {
  if (batch.empty()) throw DomainError("loss over an empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const ForwardCache cache = forward_batch(params, batch_inputs(batch));
  const Eigen::Index actions = cache.q.rows();

  LossAndGradient out{0.0, NetParams::zeros(params.architecture())};
  // dL/dq is non-zero only at the taken action of each sample.
  Eigen::MatrixXd grad_q = Eigen::MatrixXd::Zero(actions, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = static_cast<Eigen::Index>(batch[static_cast<std::size_t>(i)].action);
    if (a >= actions) throw DomainError("training sample action out of range");
    const double residual = batch[static_cast<std::size_t>(i)].target - cache.q(a, i);
    out.loss += residual * residual;
    grad_q(a, i) = -2.0 * residual / static_cast<double>(n);
  }
  out.loss /= static_cast<double>(n);

  // Through q = v + adv - mean(adv).
  const Eigen::RowVectorXd grad_value = grad_q.colwise().sum();
  Eigen::MatrixXd grad_adv = grad_q;
  grad_adv.rowwise() -= grad_value / static_cast<double>(actions);

  const Eigen::MatrixXd& hidden = cache.activations.back();
  out.grad.value.weight = grad_value * hidden.transpose();
  out.grad.value.bias(0) = grad_value.sum();
  out.grad.advantage.weight = grad_adv * hidden.transpose();
  out.grad.advantage.bias = grad_adv.rowwise().sum();

  Eigen::MatrixXd grad_hidden = params.value.weight.transpose() * grad_value + params.advantage.weight.transpose() * grad_adv;
  for (std::size_t k = params.trunk.size(); k-- > 0;) {
    const Eigen::MatrixXd& post = cache.activations[k + 1];
    const Eigen::MatrixXd grad_pre = (post.array() > 0.0).select(grad_hidden, 0.0);
    out.grad.trunk[k].weight = grad_pre * cache.activations[k].transpose();
    out.grad.trunk[k].bias = grad_pre.rowwise().sum();
    if (k > 0) grad_hidden = params.trunk[k].weight.transpose() * grad_pre;
  }
  return out;
}

void apply_sgd(NetParams& params, const NetParams& grads, double eta) {
  if (!(eta > 0.0)) throw DomainError("SGD step size must be positive");
  if (!grads.all_finite()) throw NumericalError("non-finite gradient in SGD step");
  if (grads.trunk.size() != params.trunk.size()) throw DomainError("gradient shape mismatch");
  auto update = [eta](DenseLayer& p, const DenseLayer& g) {
    if (p.weight.rows() != g.weight.rows() || p.weight.cols() != g.weight.cols() || p.bias.size() != g.bias.size())
      throw DomainError("gradient shape mismatch");
    p.weight -= eta * g.weight;
    p.bias -= eta * g.bias;
  };
  for (std::size_t k = 0; k < params.trunk.size(); ++k) update(params.trunk[k], grads.trunk[k]);
  update(params.value, grads.value);
  update(params.advantage, grads.advantage);
}

NetParams sgd_step(const NetParams& params, const NetParams& grads, double eta) {
  NetParams next = params;
  apply_sgd(next, grads, eta);
  return next;
}

GradientCheckReport check_gradient(const NetParams& params, std::span<const TrainingSample> batch, double step) {
  const std::vector<double> analytic = loss_and_gradient(params, batch).grad.flatten();
  std::vector<double> flat = params.flatten();
  NetParams probe = params;

  GradientCheckReport report;
  report.draws = 1;
  report.parameters_checked = flat.size();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double original = flat[i];
    flat[i] = original + step;
    probe.assign(flat);
    const double plus = batch_loss(probe, batch);
    flat[i] = original - step;
    probe.assign(flat);
    const double minus = batch_loss(probe, batch);
    flat[i] = original;

    const double numeric = (plus - minus) / (2.0 * step);
    const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), kRelativeFloor);
    report.max_relative_error = std::max(report.max_relative_error, std::abs(analytic[i] - numeric) / denom);
  }
  return report;
}

GradientCheckReport run_gradient_check(const NetArchitecture& arch, std::size_t draws, std::size_t batch_size,
                                       std::uint64_t seed, double step) {
  arch.validate();
  if (arch.input_dim != 3) throw ConfigError("gradient check expects the 3-feature input");
  Rng rng(seed, 0x9c3u);
  GradientCheckReport total;
  for (std::size_t d = 0; d < draws; ++d) {
    NetParams params = init_params(arch, seed * 1000 + d);
    // Non-zero biases so that every code path carries gradient.
    std::vector<double> flat = params.flatten();
    for (double& v : flat) v += rng.uniform(-0.1, 0.1);
    params.assign(flat);

    std::vector<TrainingSample> batch(batch_size);
    for (auto& sample : batch) {
      sample.x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      sample.action = rng.index(static_cast<std::size_t>(arch.num_actions));
      sample.target = rng.uniform(-5.0, 5.0);
    }
    const GradientCheckReport one = check_gradient(params, batch, step);
    total.max_relative_error = std::max(total.max_relative_error, one.max_relative_error);
    total.parameters_checked += one.parameters_checked;
    total.draws += 1;
  }
  return total;
}

void save_params(const NetParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const NetArchitecture arch = params.architecture();
  out.write(kMagic, sizeof kMagic);
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(arch.input_dim));
  write_u32(out, static_cast<std::uint32_t>(arch.trunk.size()));
  for (int w : arch.trunk) write_u32(out, static_cast<std::uint32_t>(w));
  write_u32(out, static_cast<std::uint32_t>(arch.num_actions));
  for (double v : params.flatten()) write_f64(out, v);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

NetParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("not a network checkpoint: " + path.string());
  if (read_u32(in) != kFormatVersion) throw std::runtime_error("unsupported checkpoint version");
  NetArchitecture arch;
  arch.input_dim = static_cast<int>(read_u32(in));
  const std::uint32_t depth = read_u32(in);
  if (depth > 64) throw std::runtime_error("implausible trunk depth in checkpoint");
  arch.trunk.clear();
  for (std::uint32_t k = 0; k < depth; ++k) arch.trunk.push_back(static_cast<int>(read_u32(in)));
  arch.num_actions = static_cast<int>(read_u32(in));
  NetParams params = NetParams::zeros(arch);
  std::vector<double> flat(params.size());
  for (double& v : flat) v = read_f64(in);
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in checkpoint");
  params.assign(flat);
  return params;
}

}  // namespace uavsc
