#include "topoattn/sdi.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "topoattn/error.hpp"

namespace topoattn::sdi {

namespace {

std::string shape_str(std::size_t h, std::size_t w, std::size_t c) {
  return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
}

std::string shape_str(const FeatureTensor& f) {
  return shape_str(f.height(), f.width(), f.channels());
}

void check_target(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ValidationError("target dimensions must be positive");
}

// Source coordinate of output index `dst` under half-pixel centres, clamped to the
// valid sample range; returns the lower sample and the interpolation fraction.
struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

Tap bilinear_tap(std::size_t dst, std::size_t in, std::size_t out) {
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  double src = (static_cast<double>(dst) + 0.5) * scale - 0.5;
  src = std::clamp(src, 0.0, static_cast<double>(in - 1));
  const auto lo = static_cast<std::size_t>(std::floor(src));
  const std::size_t hi = std::min(lo + 1, in - 1);
  return {lo, hi, src - static_cast<double>(lo)};
}

// Bilinear resampling of an interleaved (h, w, c) buffer.
std::vector<double> bilinear(std::span<const double> src, std::size_t in_h, std::size_t in_w,
                             std::size_t channels, std::size_t out_h, std::size_t out_w) {
  std::vector<double> out(out_h * out_w * channels);
  std::vector<Tap> xs(out_w);
  for (std::size_t x = 0; x < out_w; ++x) xs[x] = bilinear_tap(x, in_w, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap ty = bilinear_tap(y, in_h, out_h);
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& tx = xs[x];
      for (std::size_t c = 0; c < channels; ++c) {
        auto at = [&](std::size_t r, std::size_t q) { return src[(r * in_w + q) * channels + c]; };
        // std::lerp is exact at the endpoints and for equal ends, so constants survive.
        const double top = std::lerp(at(ty.lo, tx.lo), at(ty.lo, tx.hi), tx.frac);
        const double bottom = std::lerp(at(ty.hi, tx.lo), at(ty.hi, tx.hi), tx.frac);
        out[(y * out_w + x) * channels + c] = std::lerp(top, bottom, ty.frac);
      }
    }
  }
  return out;
}

std::vector<FeatureTensor> run_sdi(const ScalePyramid& pyramid, const AttentionMap* attn,
                                   const SdiWeights& weights) {
  pyramid.validate();
  const std::size_t m = pyramid.size();
  if (!weights.reduce.empty() && weights.reduce.size() != m) {
    throw ValidationError("expected " + std::to_string(m) + " channel-reduction matrices, got " +
                          std::to_string(weights.reduce.size()));
  }
  if (!weights.conv.empty()) {
    if (weights.conv.size() != m) throw ValidationError("conv weights need one row per scale");
    for (const auto& row : weights.conv) {
      if (row.size() != m) throw ValidationError("conv weights need one kernel per scale pair");
    }
  }

  std::vector<FeatureTensor> refined;
  refined.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    FeatureTensor f1 = cbam_stub(pyramid.features[i], weights.cbam, i);
    FeatureTensor f2 = weights.reduce.empty() ? std::move(f1)
                                              : channel_reduce(f1, weights.reduce[i]);
    if (attn != nullptr) {
      const AttentionMap scaled = resize_attention(*attn, f2.height(), f2.width());
      refined.push_back(hadamard_inject(f2, scaled));
    } else {
      refined.push_back(std::move(f2));
    }
  }
  for (std::size_t i = 1; i < m; ++i) {
    if (refined[i].channels() != refined[0].channels()) {
      throw ValidationError("all scales must share one channel count after reduction");
    }
  }

  std::vector<FeatureTensor> fused;
  fused.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<FeatureTensor> aligned;
    aligned.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
      std::optional<Conv3x3> kernel;
      if (!weights.conv.empty()) kernel = weights.conv[i][j];
      aligned.push_back(
          rescale_feature(refined[j], refined[i].height(), refined[i].width(), kernel));
    }
    fused.push_back(fuse(aligned));
  }
  return fused;
}

}  // namespace

Conv3x3 Conv3x3::identity(std::size_t channels) {
  Conv3x3 k{channels, channels, std::vector<double>(channels * channels * 9, 0.0)};
  for (std::size_t c = 0; c < channels; ++c) k.w(c, c, 1, 1) = 1.0;
  return k;
}

FeatureTensor cbam_stub(const FeatureTensor& f0, const CbamHook& hook, std::size_t scale) {
  if (!hook) return f0;
  FeatureTensor out = hook(f0, scale);
  if (!out.same_shape(f0)) {
    throw InvariantError("attention hook changed shape " + shape_str(f0) + " to " +
                         shape_str(out));
  }
  return out;
}

FeatureTensor channel_reduce(const FeatureTensor& f1, const Eigen::MatrixXd& weights) {
  if (weights.rows() < 1 || static_cast<std::size_t>(weights.cols()) != f1.channels()) {
    throw ValidationError("1x1 weights of " + std::to_string(weights.rows()) + "x" +
                          std::to_string(weights.cols()) + " do not fit " +
                          std::to_string(f1.channels()) + " input channels");
  }
  const auto c_out = static_cast<std::size_t>(weights.rows());
  FeatureTensor out(f1.height(), f1.width(), c_out);
  for (std::size_t r = 0; r < f1.height(); ++r) {
    for (std::size_t c = 0; c < f1.width(); ++c) {
      for (std::size_t o = 0; o < c_out; ++o) {
        double acc = 0.0;
        for (std::size_t k = 0; k < f1.channels(); ++k) {
          acc += weights(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(k)) *
                 f1.at(r, c, k);
        }
        out.at(r, c, o) = acc;
      }
    }
  }
  return out;
}

AttentionMap resize_attention(const AttentionMap& attn, std::size_t height, std::size_t width) {
  check_target(height, width);
  if (attn.width == 0 || attn.height == 0 || attn.weights.size() != attn.width * attn.height) {
    throw ValidationError("attention map shape is inconsistent");
  }
  if (height == attn.height && width == attn.width) return attn;
  AttentionMap out{width, height, bilinear(attn.weights, attn.height, attn.width, 1, height, width)};
  for (double& v : out.weights) v = std::clamp(v, 0.0, 1.0);
  return out;
}

FeatureTensor hadamard_inject(const FeatureTensor& f2, const AttentionMap& attn) {
  if (attn.height != f2.height() || attn.width != f2.width()) {
    throw ValidationError("attention " + std::to_string(attn.height) + "x" +
                          std::to_string(attn.width) + " does not match features " +
                          shape_str(f2));
  }
  FeatureTensor out = f2;
  for (std::size_t r = 0; r < f2.height(); ++r) {
    for (std::size_t c = 0; c < f2.width(); ++c) {
      const double t = attn.at(r, c);
      for (std::size_t ch = 0; ch < f2.channels(); ++ch) out.at(r, c, ch) *= t;
    }
  }
  return out;
}

FeatureTensor adaptive_avg_pool(const FeatureTensor& f, std::size_t height, std::size_t width) {
  check_target(height, width);
  const std::size_t in_h = f.height();
  const std::size_t in_w = f.width();
  FeatureTensor out(height, width, f.channels());
  for (std::size_t a = 0; a < height; ++a) {
    const std::size_t r0 = (a * in_h) / height;
    const std::size_t r1 = ((a + 1) * in_h + height - 1) / height;
    for (std::size_t b = 0; b < width; ++b) {
      const std::size_t c0 = (b * in_w) / width;
      const std::size_t c1 = ((b + 1) * in_w + width - 1) / width;
      const auto count = static_cast<double>((r1 - r0) * (c1 - c0));
      for (std::size_t ch = 0; ch < f.channels(); ++ch) {
        double sum = 0.0;
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) sum += f.at(r, c, ch);
        }
        out.at(a, b, ch) = sum / count;
      }
    }
  }
  return out;
}

FeatureTensor bilinear_resize(const FeatureTensor& f, std::size_t height, std::size_t width) {
  check_target(height, width);
  return FeatureTensor(height, width, f.channels(),
                       bilinear(f.values(), f.height(), f.width(), f.channels(), height, width));
}

FeatureTensor conv3x3(const FeatureTensor& f, const Conv3x3& kernel) {
  if (kernel.in_channels != f.channels() || kernel.out_channels == 0 ||
      kernel.weights.size() != kernel.out_channels * kernel.in_channels * 9) {
    throw ValidationError("3x3 kernel shape does not fit " + std::to_string(f.channels()) +
                          " input channels");
  }
  const auto h = static_cast<long>(f.height());
  const auto w = static_cast<long>(f.width());
  FeatureTensor out(f.height(), f.width(), kernel.out_channels);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      for (std::size_t o = 0; o < kernel.out_channels; ++o) {
        double acc = 0.0;
        for (long ky = 0; ky < 3; ++ky) {
          const long sr = r + ky - 1;
          if (sr < 0 || sr >= h) continue;
          for (long kx = 0; kx < 3; ++kx) {
            const long sc = c + kx - 1;
            if (sc < 0 || sc >= w) continue;
            for (std::size_t i = 0; i < kernel.in_channels; ++i) {
              acc += kernel.w(o, i, static_cast<std::size_t>(ky), static_cast<std::size_t>(kx)) *
                     f.at(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc), i);
            }
          }
        }
        out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c), o) = acc;
      }
    }
  }
  return out;
}

FeatureTensor rescale_feature(const FeatureTensor& f, std::size_t height, std::size_t width,
                              const std::optional<Conv3x3>& kernel) {
  check_target(height, width);
  FeatureTensor resized = [&] {
    if (height == f.height() && width == f.width()) return f;
    if (height <= f.height() && width <= f.width()) return adaptive_avg_pool(f, height, width);
    return bilinear_resize(f, height, width);
  }();
  if (!kernel) return resized;
  return conv3x3(resized, *kernel);
}

FeatureTensor fuse(std::span<const FeatureTensor> tensors) {
  if (tensors.empty()) throw ValidationError("fuse needs at least one tensor");
  FeatureTensor out = tensors.front();
  for (std::size_t k = 1; k < tensors.size(); ++k) {
    if (!tensors[k].same_shape(out)) {
      throw ValidationError("fuse input " + std::to_string(k) + " has shape " +
                            shape_str(tensors[k]) + ", expected " + shape_str(out));
    }
    auto dst = out.values();
    const auto src = tensors[k].values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= src[i];
  }
  return out;
}

void ScalePyramid::validate() const {
  if (features.empty()) throw ValidationError("pyramid needs at least one scale");
  for (std::size_t i = 1; i < features.size(); ++i) {
    if (features[i].height() >= features[i - 1].height() ||
        features[i].width() >= features[i - 1].width()) {
      throw ValidationError("pyramid scale " + std::to_string(i + 1) + " (" +
                            shape_str(features[i]) + ") is not smaller than scale " +
                            std::to_string(i) + " (" + shape_str(features[i - 1]) + ")");
    }
  }
}

std::vector<FeatureTensor> topo_sdi(const ScalePyramid& pyramid, const AttentionMap& attn,
                                    const SdiWeights& weights) {
  return run_sdi(pyramid, &attn, weights);
}

std::vector<FeatureTensor> plain_sdi(const ScalePyramid& pyramid, const SdiWeights& weights) {
  return run_sdi(pyramid, nullptr, weights);
}

}  // namespace topoattn::sdi
