#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "topoattn/attention.hpp"
#include "topoattn/tensor.hpp"

namespace topoattn::sdi {

/// External stand-in for the learned per-scale channel/spatial attention block.
/// Receives the feature map and its scale index; must preserve the shape.
using CbamHook = std::function<FeatureTensor(const FeatureTensor&, std::size_t scale)>;

/// 3x3 convolution, zero "same" padding, no bias. Weights indexed [out][in][ky][kx].
struct Conv3x3 {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<double> weights;

  static Conv3x3 identity(std::size_t channels);
  double& w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return weights[((o * in_channels + i) * 3 + ky) * 3 + kx];
  }
  double w(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return weights[((o * in_channels + i) * 3 + ky) * 3 + kx];
  }
};

/// Identity passthrough, or `hook` when one is given. A hook that changes the
/// shape is rejected with InvariantError.
FeatureTensor cbam_stub(const FeatureTensor& f0, const CbamHook& hook = {}, std::size_t scale = 0);

/// 1x1 convolution: out[h, w, :] = weights * in[h, w, :], weights c_out x c_in.
FeatureTensor channel_reduce(const FeatureTensor& f1, const Eigen::MatrixXd& weights);

/// Bilinear resize with half-pixel centres (align_corners = false), edge-clamped.
AttentionMap resize_attention(const AttentionMap& attn, std::size_t height, std::size_t width);

/// f3[h, w, ch] = f2[h, w, ch] * T[h, w].
FeatureTensor hadamard_inject(const FeatureTensor& f2, const AttentionMap& attn);

/// Output cell (a, b) averages rows [floor(aH/h), ceil((a+1)H/h)) and the
/// matching column window.
FeatureTensor adaptive_avg_pool(const FeatureTensor& f, std::size_t height, std::size_t width);
FeatureTensor bilinear_resize(const FeatureTensor& f, std::size_t height, std::size_t width);
FeatureTensor conv3x3(const FeatureTensor& f, const Conv3x3& kernel);

/// Brings a feature map to (height, width): identity when the size already
/// matches, adaptive average pooling when neither side grows, bilinear otherwise;
/// then applies `kernel` (identity when absent).
FeatureTensor rescale_feature(const FeatureTensor& f, std::size_t height, std::size_t width,
                              const std::optional<Conv3x3>& kernel = std::nullopt);

/// Elementwise product of same-shape tensors.
FeatureTensor fuse(std::span<const FeatureTensor> tensors);

/// Encoder features, finest scale first; both spatial dims strictly decrease.
struct ScalePyramid {
  std::vector<FeatureTensor> features;

  std::size_t size() const { return features.size(); }
  void validate() const;
};

/// Learned parameters of the fusion, all optional (identity when absent).
struct SdiWeights {
  std::vector<Eigen::MatrixXd> reduce;      // one c x c_i matrix per scale
  std::vector<std::vector<Conv3x3>> conv;   // conv[i][j] rescales scale j to scale i
  CbamHook cbam;
};

/// Multi-scale fusion with the attention map injected at every scale: for each
/// target scale i, every scale j is injected, rescaled to scale i and convolved,
/// and the results are multiplied together.
std::vector<FeatureTensor> topo_sdi(const ScalePyramid& pyramid, const AttentionMap& attn,
                                    const SdiWeights& weights = {});

/// Same dataflow with no attention injection.
std::vector<FeatureTensor> plain_sdi(const ScalePyramid& pyramid, const SdiWeights& weights = {});

}  // namespace topoattn::sdi
