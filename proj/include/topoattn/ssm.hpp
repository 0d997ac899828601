#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "topoattn/tensor.hpp"

namespace topoattn::ssm {

/// Continuous single-input single-output state space model
///   h'(t) = A h(t) + B x(t),  y(t) = C h(t)
/// with timestep `delta` for discretization.
struct SSMParams {
  Eigen::MatrixXd A;     // N x N
  Eigen::VectorXd B;     // N x 1
  Eigen::RowVectorXd C;  // 1 x N
  double delta = 1.0;

  std::size_t state_dim() const { return static_cast<std::size_t>(A.rows()); }
  void validate() const;
};

struct DiscreteSSM {
  Eigen::MatrixXd A_bar;
  Eigen::VectorXd B_bar;
  Eigen::RowVectorXd C;

  std::size_t state_dim() const { return static_cast<std::size_t>(A_bar.rows()); }
  void validate() const;
};

/// exp(Z) and phi1(Z) = sum_k Z^k / (k+1)! evaluated together.
struct ExpPhi1 {
  Eigen::MatrixXd exp;
  Eigen::MatrixXd phi1;
};

/// Taylor series on Z / 2^s with ||Z / 2^s||_1 <= 1/2, then s squaring steps
/// using exp(2Z) = exp(Z)^2 and phi1(2Z) = (exp(Z) + I) phi1(Z) / 2.
ExpPhi1 exp_phi1(const Eigen::MatrixXd& Z);

/// Zero-order hold: A_bar = exp(delta A), B_bar = delta phi1(delta A) B. This is
/// (delta A)^-1 (exp(delta A) - I) delta B when delta A is invertible and its
/// continuous extension otherwise. Throws InvariantError on non-finite output.
DiscreteSSM discretize_zoh(const SSMParams& params);

/// h_{-1} = 0, h_t = A_bar h_{t-1} + B_bar x_t, y_t = C h_t.
std::vector<double> scan_recurrence(const DiscreteSSM& d, std::span<const double> x);

/// K_j = C A_bar^j B_bar, j = 0..length-1.
std::vector<double> conv_kernel(const DiscreteSSM& d, std::size_t length);

/// Causal convolution y_t = sum_{j<=t} K_j x_{t-j}. Lengths must match.
std::vector<double> apply_conv(std::span<const double> x, std::span<const double> kernel);

using ScanPaths = std::array<std::vector<double>, 4>;

/// Unfolds a single-channel map along four paths: row-major, reversed row-major,
/// column-major, reversed column-major.
ScanPaths cross_scan(const FeatureTensor& map);

/// Inverse of each path, summed into one single-channel H x W map.
FeatureTensor cross_merge(const ScanPaths& paths, std::size_t height, std::size_t width);

/// Random stable system: diagonal of A in [-2, -0.1], off-diagonal in [-0.1, 0.1],
/// B and C entries in [-1, 1], delta in [0.01, 0.5].
SSMParams random_stable_system(std::mt19937_64& rng, std::size_t state_dim);

struct DualityReport {
  double max_abs_error = 0.0;
  std::size_t trials = 0;
};

/// Largest |recurrence - convolution| over `trials` random stable systems driven
/// by random inputs of `length` samples in [-1, 1]. Deterministic in `seed`.
DualityReport check_duality(std::size_t state_dim, std::size_t length, std::size_t trials,
                            std::uint64_t seed);

}  // namespace topoattn::ssm
