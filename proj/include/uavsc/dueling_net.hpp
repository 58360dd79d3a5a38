#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "uavsc/env.hpp"

namespace uavsc {

/// Shared ReLU trunk feeding a scalar value head and an A-wide advantage head.
struct NetArchitecture {
  int input_dim = 3;
  std::vector<int> trunk{64, 64};
  int num_actions = 3;

  void validate() const;
  friend bool operator==(const NetArchitecture&, const NetArchitecture&) = default;
};

/// y = W x + b, with W stored as (outputs x inputs).
struct DenseLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
           a.bias.size() == b.bias.size() && a.weight == b.weight && a.bias == b.bias;
  }
};

/// Network parameters. Gradients use the same type.
struct NetParams {
  std::vector<DenseLayer> trunk;
  DenseLayer value;
  DenseLayer advantage;

  static NetParams zeros(const NetArchitecture& arch);

  NetArchitecture architecture() const;
  std::size_t size() const;
  bool all_finite() const;

  /// Flat view in a fixed order: trunk layers, value head, advantage head;
  /// each layer's weights row-major followed by its bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  friend bool operator==(const NetParams&, const NetParams&) = default;
};

/// (cell, location, energy) scaled to [0, 1]; all -1 for the charging sentinel.
using FeatureVector = std::array<double, 3>;

FeatureVector featurize(const UavState& s, const EnvConfig& config);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
NetParams init_params(const NetArchitecture& arch, std::uint64_t seed);

/// q[a] = v + adv[a] - mean(adv).
std::vector<double> combine(double v, std::span<const double> adv);

/// Activations kept for the backward pass. Columns index the batch.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // input, then each trunk layer after ReLU
  Eigen::RowVectorXd value;
  Eigen::MatrixXd advantage;
  Eigen::MatrixXd q;  // num_actions x batch
};

/// Batched forward pass; `inputs` is (input_dim x batch).
ForwardCache forward_batch(const NetParams& params, const Eigen::MatrixXd& inputs);

/// Single-input forward pass returning the A action values.
std::vector<double> forward(const NetParams& params, const FeatureVector& x);

struct TrainingSample {
  FeatureVector x{};
  std::size_t action = 0;
  double target = 0.0;
};

struct LossAndGradient {
  double loss = 0.0;
  NetParams grad;
};

/// Mean squared TD error over the batch and its exact gradient. Only the
/// selected action's value contributes per sample.
LossAndGradient loss_and_gradient(const NetParams& params, std::span<const TrainingSample> batch);

/// Loss only (no backward pass).
double batch_loss(const NetParams& params, std::span<const TrainingSample> batch);

/// p <- p - eta * g for every parameter. Throws NumericalError on
/// non-finite gradients, DomainError on eta <= 0.
void apply_sgd(NetParams& params, const NetParams& grads, double eta);
NetParams sgd_step(const NetParams& params, const NetParams& grads, double eta);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  std::size_t draws = 0;
};

/// Compares the analytic gradient against central differences for every
/// parameter. Relative error per entry is |a - n| / max(|a| + |n|, 1e-6).
GradientCheckReport check_gradient(const NetParams& params, std::span<const TrainingSample> batch,
                                   double step = 1e-5);

/// Runs check_gradient over `draws` random (params, batch) pairs.
GradientCheckReport run_gradient_check(const NetArchitecture& arch, std::size_t draws, std::size_t batch_size,
                                       std::uint64_t seed, double step = 1e-5);

/// Binary checkpoint: "UAVSCNET" magic, u32 version, u32 input_dim,
/// u32 trunk depth, u32 widths..., u32 num_actions, then little-endian
/// float64 parameters in flatten() order.
void save_params(const NetParams& params, const std::filesystem::path& path);
NetParams load_params(const std::filesystem::path& path);

}  // namespace uavsc
