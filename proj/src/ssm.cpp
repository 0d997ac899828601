#include "topoattn/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "topoattn/error.hpp"

namespace topoattn::ssm {

namespace {

// Terms of the Taylor series; with ||Z||_1 <= 1/2 the truncation error is far below 1e-16.
constexpr int kTaylorTerms = 20;

// Position of path element k in row-major order, for each of the four paths.
std::size_t path_index(int path, std::size_t k, std::size_t height, std::size_t width) {
  const std::size_t n = height * width;
  switch (path) {
    case 0:
      return k;
    case 1:
      return n - 1 - k;
    case 2:
      return (k % height) * width + k / height;
    default: {
      const std::size_t m = n - 1 - k;
      return (m % height) * width + m / height;
    }
  }
}

}  // namespace

void SSMParams::validate() const {
  const auto n = A.rows();
  if (n < 1 || A.cols() != n) throw ValidationError("A must be a nonempty square matrix");
  if (B.size() != n) throw ValidationError("B must have " + std::to_string(n) + " rows");
  if (C.size() != n) throw ValidationError("C must have " + std::to_string(n) + " columns");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError("delta must be positive");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite()) {
    throw ValidationError("SSM parameters must be finite");
  }
}

void DiscreteSSM::validate() const {
  const auto n = A_bar.rows();
  if (n < 1 || A_bar.cols() != n || B_bar.size() != n || C.size() != n) {
    throw ValidationError("discrete SSM shapes are inconsistent");
  }
}

ExpPhi1 exp_phi1(const Eigen::MatrixXd& Z) {
  const auto n = Z.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const double norm = Z.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm)) throw InvariantError("matrix exponential of a non-finite matrix");

  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd S = Z * std::ldexp(1.0, -squarings);

  // exp(S) = sum S^k / k!, phi1(S) = sum S^k / (k+1)!
  Eigen::MatrixXd term = I;  // S^k / k!
  Eigen::MatrixXd e = I;
  Eigen::MatrixXd p = I;
  for (int k = 1; k <= kTaylorTerms; ++k) {
    term = term * S / static_cast<double>(k);
    e += term;
    p += term / static_cast<double>(k + 1);
  }
  for (int s = 0; s < squarings; ++s) {
    p = 0.5 * (e + I) * p;
    e = e * e;
  }
  return {std::move(e), std::move(p)};
}

DiscreteSSM discretize_zoh(const SSMParams& params) {
  params.validate();
  const Eigen::MatrixXd Z = params.delta * params.A;
  ExpPhi1 f = exp_phi1(Z);
  DiscreteSSM d{std::move(f.exp), params.delta * (f.phi1 * params.B), params.C};
  if (!d.A_bar.allFinite() || !d.B_bar.allFinite()) {
    throw InvariantError("zero-order hold overflowed to a non-finite result");
  }
  return d;
}

std::vector<double> scan_recurrence(const DiscreteSSM& d, std::span<const double> x) {
  d.validate();
  if (x.empty()) throw ValidationError("sequence length must be at least 1");
  Eigen::VectorXd h = Eigen::VectorXd::Zero(d.A_bar.rows());
  std::vector<double> y;
  y.reserve(x.size());
  for (double xt : x) {
    h = d.A_bar * h + d.B_bar * xt;
    y.push_back(d.C.dot(h));
  }
  return y;
}

std::vector<double> conv_kernel(const DiscreteSSM& d, std::size_t length) {
  d.validate();
  if (length == 0) throw ValidationError("kernel length must be at least 1");
  std::vector<double> k;
  k.reserve(length);
  Eigen::VectorXd v = d.B_bar;  // A_bar^j B_bar
  for (std::size_t j = 0; j < length; ++j) {
    k.push_back(d.C.dot(v));
    v = d.A_bar * v;
  }
  return k;
}

std::vector<double> apply_conv(std::span<const double> x, std::span<const double> kernel) {
  if (x.size() != kernel.size()) {
    throw ValidationError("sequence length " + std::to_string(x.size()) +
                          " does not match kernel length " + std::to_string(kernel.size()));
  }
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= t; ++j) acc += kernel[j] * x[t - j];
    y[t] = acc;
  }
  return y;
}

ScanPaths cross_scan(const FeatureTensor& map) {
  if (map.channels() != 1) throw ValidationError("cross_scan expects a single-channel map");
  const std::size_t h = map.height();
  const std::size_t w = map.width();
  const auto values = map.values();
  ScanPaths paths;
  for (int p = 0; p < 4; ++p) {
    auto& seq = paths[static_cast<std::size_t>(p)];
    seq.resize(h * w);
    for (std::size_t k = 0; k < h * w; ++k) seq[k] = values[path_index(p, k, h, w)];
  }
  return paths;
}

FeatureTensor cross_merge(const ScanPaths& paths, std::size_t height, std::size_t width) {
  const std::size_t n = height * width;
  std::array<std::vector<double>, 4> grids;
  for (int p = 0; p < 4; ++p) {
    const auto& seq = paths[static_cast<std::size_t>(p)];
    if (seq.size() != n) {
      throw ValidationError("scan path " + std::to_string(p + 1) + " has length " +
                            std::to_string(seq.size()) + ", expected " + std::to_string(n));
    }
    auto& g = grids[static_cast<std::size_t>(p)];
    g.resize(n);
    for (std::size_t k = 0; k < n; ++k) g[path_index(p, k, height, width)] = seq[k];
  }
  // Pairwise sum, so four equal contributions add up to exactly 4x.
  std::vector<double> merged(n);
  for (std::size_t i = 0; i < n; ++i) {
    merged[i] = (grids[0][i] + grids[1][i]) + (grids[2][i] + grids[3][i]);
  }
  return FeatureTensor(height, width, 1, std::move(merged));
}

SSMParams random_stable_system(std::mt19937_64& rng, std::size_t state_dim) {
  if (state_dim == 0) throw ValidationError("state dimension must be at least 1");
  std::uniform_real_distribution<double> diag(-2.0, -0.1);
  std::uniform_real_distribution<double> off(-0.1, 0.1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> step(0.01, 0.5);
  const auto n = static_cast<Eigen::Index>(state_dim);
  SSMParams p;
  p.A.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) p.A(r, c) = r == c ? diag(rng) : off(rng);
  }
  p.B.resize(n);
  p.C.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) p.B(i) = unit(rng);
  for (Eigen::Index i = 0; i < n; ++i) p.C(i) = unit(rng);
  p.delta = step(rng);
  return p;
}

DualityReport check_duality(std::size_t state_dim, std::size_t length, std::size_t trials,
                            std::uint64_t seed) {
  if (state_dim == 0) throw ValidationError("state dimension must be at least 1");
  if (length == 0) throw ValidationError("sequence length must be at least 1");
  if (trials == 0) throw ValidationError("trial count must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  DualityReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    const DiscreteSSM d = discretize_zoh(random_stable_system(rng, state_dim));
    std::vector<double> x(length);
    for (double& v : x) v = unit(rng);
    const auto rec = scan_recurrence(d, x);
    const auto conv = apply_conv(x, conv_kernel(d, length));
    for (std::size_t i = 0; i < length; ++i) {
      report.max_abs_error = std::max(report.max_abs_error, std::abs(rec[i] - conv[i]));
    }
    ++report.trials;
  }
  return report;
}

}  // namespace topoattn::ssm
