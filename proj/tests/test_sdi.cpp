#include <doctest.h>

#include <random>

#include "support/generators.hpp"
#include "topoattn/error.hpp"
#include "topoattn/sdi.hpp"

using namespace topoattn;
using namespace topoattn::sdi;
using testing_support::random_tensor;

namespace {

AttentionMap constant_attention(std::size_t h, std::size_t w, double v) {
  return AttentionMap{w, h, std::vector<double>(w * h, v)};
}

ScalePyramid random_pyramid(std::mt19937_64& rng, std::size_t channels, double lo = -1.0,
                            double hi = 1.0) {
  // Strictly decreasing heights and widths drawn from 1..64.
  std::uniform_int_distribution<std::size_t> pick(1, 64);
  auto decreasing = [&] {
    std::vector<std::size_t> v;
    while (v.size() < 4) {
      const std::size_t x = pick(rng);
      if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
    }
    std::sort(v.rbegin(), v.rend());
    return v;
  };
  const auto hs = decreasing();
  const auto ws = decreasing();
  ScalePyramid p;
  for (std::size_t i = 0; i < 4; ++i) p.features.push_back(random_tensor(rng, hs[i], ws[i], channels, lo, hi));
  return p;
}

// Direct zero-padded 3x3 correlation over an explicitly padded copy.
FeatureTensor conv_oracle(const FeatureTensor& f, const Conv3x3& k) {
  const std::size_t H = f.height(), W = f.width();
  std::vector<double> padded((H + 2) * (W + 2) * f.channels(), 0.0);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      for (std::size_t i = 0; i < f.channels(); ++i)
        padded[((r + 1) * (W + 2) + c + 1) * f.channels() + i] = f.at(r, c, i);
  FeatureTensor out(H, W, k.out_channels);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      for (std::size_t o = 0; o < k.out_channels; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < k.in_channels; ++i)
          for (std::size_t ky = 0; ky < 3; ++ky)
            for (std::size_t kx = 0; kx < 3; ++kx)
              s += k.w(o, i, ky, kx) * padded[((r + ky) * (W + 2) + c + kx) * f.channels() + i];
        out.at(r, c, o) = s;
      }
  return out;
}

bool approx_equal(const FeatureTensor& a, const FeatureTensor& b, double tol) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.values()[i] - b.values()[i]) > tol) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("sdi building blocks") {
  TEST_CASE("cbam stub and hook") {
    std::mt19937_64 rng(1);
    const FeatureTensor f = random_tensor(rng, 3, 4, 2);
    CHECK(cbam_stub(f) == f);
    const CbamHook doubler = [](const FeatureTensor& x, std::size_t) {
      FeatureTensor y = x;
      for (double& v : y.values()) v *= 2.0;
      return y;
    };
    const FeatureTensor doubled = cbam_stub(f, doubler);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(doubled.values()[i] == 2.0 * f.values()[i]);
    const CbamHook shrink = [](const FeatureTensor&, std::size_t) { return FeatureTensor(1, 1, 1); };
    CHECK_THROWS_AS(cbam_stub(f, shrink), InvariantError);
  }

  TEST_CASE("channel reduction") {
    std::mt19937_64 rng(2);
    const FeatureTensor f = random_tensor(rng, 2, 2, 3);
    CHECK(channel_reduce(f, Eigen::MatrixXd::Identity(3, 3)) == f);
    const FeatureTensor sum = channel_reduce(f, Eigen::MatrixXd::Ones(1, 3));
    CHECK(sum.channels() == 1);
    CHECK(sum.at(1, 0, 0) == doctest::Approx(f.at(1, 0, 0) + f.at(1, 0, 1) + f.at(1, 0, 2)));
    const Eigen::MatrixXd w = Eigen::MatrixXd::Random(2, 3);
    const FeatureTensor out = channel_reduce(f, w);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) {
        const Eigen::Vector3d px(f.at(r, c, 0), f.at(r, c, 1), f.at(r, c, 2));
        const Eigen::Vector2d expected = w * px;
        CHECK(out.at(r, c, 0) == doctest::Approx(expected(0)).epsilon(1e-14));
        CHECK(out.at(r, c, 1) == doctest::Approx(expected(1)).epsilon(1e-14));
      }
    CHECK_THROWS_AS(channel_reduce(f, Eigen::MatrixXd::Ones(2, 2)), ValidationError);
  }

  TEST_CASE("attention resize") {
    const AttentionMap c = constant_attention(5, 7, 0.7);
    for (auto [h, w] : {std::pair<std::size_t, std::size_t>{1, 1}, {3, 2}, {9, 13}, {64, 64}}) {
      for (double v : resize_attention(c, h, w).weights) CHECK(v == 0.7);
    }
    const AttentionMap ramp{2, 2, {0.0, 1.0, 0.0, 1.0}};
    CHECK(resize_attention(ramp, 2, 2) == ramp);
    CHECK(resize_attention(ramp, 2, 4).weights ==
          std::vector<double>{0.0, 0.25, 0.75, 1.0, 0.0, 0.25, 0.75, 1.0});
    CHECK_THROWS_AS(resize_attention(ramp, 0, 4), ValidationError);
  }

  TEST_CASE("hadamard injection") {
    std::mt19937_64 rng(3);
    const FeatureTensor f = random_tensor(rng, 3, 2, 4);
    CHECK(hadamard_inject(f, constant_attention(3, 2, 1.0)) == f);
    CHECK(hadamard_inject(f, constant_attention(3, 2, 0.0)) == FeatureTensor(3, 2, 4));
    CHECK(hadamard_inject(FeatureTensor(1, 1, 2, {2.0, 3.0}), constant_attention(1, 1, 0.5)) ==
          FeatureTensor(1, 1, 2, {1.0, 1.5}));
    CHECK_THROWS_AS(hadamard_inject(f, constant_attention(2, 3, 1.0)), ValidationError);
  }

  TEST_CASE("adaptive average pooling windows") {
    std::vector<double> ramp(16);
    for (std::size_t i = 0; i < 16; ++i) ramp[i] = static_cast<double>(i);
    CHECK(adaptive_avg_pool(FeatureTensor(4, 4, 1, ramp), 2, 2) ==
          FeatureTensor(2, 2, 1, {2.5, 4.5, 10.5, 12.5}));
    // 5 -> 3 overlapping windows: [0,2), [1,4), [3,5).
    const FeatureTensor line(1, 5, 1, {1, 2, 3, 4, 5});
    CHECK(adaptive_avg_pool(line, 1, 3) == FeatureTensor(1, 3, 1, {1.5, 3.0, 4.5}));
    const FeatureTensor constant = FeatureTensor::filled(9, 7, 2, 0.75);
    const FeatureTensor pooled = adaptive_avg_pool(constant, 4, 3);
    for (double v : pooled.values()) CHECK(v == 0.75);
  }

  TEST_CASE("rescale picks the resampler by size") {
    std::mt19937_64 rng(4);
    const FeatureTensor f = random_tensor(rng, 6, 5, 3);
    CHECK(rescale_feature(f, 6, 5) == f);
    CHECK(rescale_feature(f, 6, 5, Conv3x3::identity(3)) == f);
    CHECK(rescale_feature(f, 3, 2) == adaptive_avg_pool(f, 3, 2));
    CHECK(rescale_feature(f, 12, 10) == bilinear_resize(f, 12, 10));
    const FeatureTensor c = FeatureTensor::filled(4, 4, 1, 0.5);
    for (std::size_t side : {2u, 9u}) {
      const FeatureTensor r = rescale_feature(c, side, side);
      for (double v : r.values()) CHECK(v == 0.5);
    }
  }

  TEST_CASE("3x3 convolution against a padded oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const FeatureTensor f = random_tensor(rng, 5, 4, 3);
    Conv3x3 k{2, 3, std::vector<double>(2 * 3 * 9)};
    for (double& w : k.weights) w = u(rng);
    CHECK(approx_equal(conv3x3(f, k), conv_oracle(f, k), 1e-13));
    CHECK_THROWS_AS(conv3x3(f, Conv3x3::identity(2)), ValidationError);
  }

  TEST_CASE("fuse multiplies elementwise") {
    std::mt19937_64 rng(6);
    const FeatureTensor x = random_tensor(rng, 3, 3, 2);
    const FeatureTensor ones = FeatureTensor::filled(3, 3, 2, 1.0);
    CHECK(fuse(std::vector<FeatureTensor>{ones, ones, ones, x}) == x);
    std::vector<FeatureTensor> scalars;
    for (double v : {2.0, 3.0, 4.0, 5.0}) scalars.push_back(FeatureTensor::filled(1, 1, 1, v));
    CHECK(fuse(scalars).values()[0] == 120.0);
    FeatureTensor holed = ones;
    holed.at(1, 2, 0) = 0.0;
    CHECK(fuse(std::vector<FeatureTensor>{x, holed, x, x}).at(1, 2, 0) == 0.0);
    CHECK_THROWS_AS(fuse(std::vector<FeatureTensor>{x, FeatureTensor(3, 3, 1)}), ValidationError);
    CHECK_THROWS_AS(fuse(std::vector<FeatureTensor>{}), ValidationError);
  }
}

TEST_SUITE("topo-sdi") {
  TEST_CASE("all-ones attention reproduces plain fusion") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const ScalePyramid p = random_pyramid(rng, 3);
      const auto h0 = p.features[0].height(), w0 = p.features[0].width();
      CHECK(topo_sdi(p, constant_attention(h0 * 2, w0 * 2, 1.0)) == plain_sdi(p));
    }
  }

  TEST_CASE("outputs take each scale's shape") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const ScalePyramid p = random_pyramid(rng, 2);
      const auto out = topo_sdi(p, constant_attention(64, 64, 0.6));
      REQUIRE(out.size() == 4);
      for (std::size_t i = 0; i < 4; ++i) CHECK(out[i].same_shape(p.features[i]));
    }
  }

  TEST_CASE("constant pyramid fuses to the product of constants") {
    ScalePyramid p;
    const double k[] = {1.5, 0.5, 2.0, 3.0};
    const std::size_t sides[] = {16, 8, 4, 2};
    for (int i = 0; i < 4; ++i) p.features.push_back(FeatureTensor::filled(sides[i], sides[i], 2, k[i]));
    for (const auto& f : topo_sdi(p, constant_attention(32, 32, 1.0))) {
      for (double v : f.values()) CHECK(std::abs(v - 4.5) <= 1e-6);
    }
  }

  TEST_CASE("larger attention never shrinks nonnegative outputs") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
      const ScalePyramid p = random_pyramid(rng, 2, 0.0, 2.0);
      AttentionMap low{32, 32, std::vector<double>(32 * 32)};
      AttentionMap high = low;
      for (std::size_t i = 0; i < low.weights.size(); ++i) {
        low.weights[i] = u(rng);
        high.weights[i] = std::min(1.0, low.weights[i] + 0.3 * u(rng));
      }
      const auto a = topo_sdi(p, low);
      const auto b = topo_sdi(p, high);
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < a[i].size(); ++j) CHECK(a[i].values()[j] <= b[i].values()[j]);
      }
    }
  }

  TEST_CASE("weights and hooks are threaded through") {
    std::mt19937_64 rng(10);
    ScalePyramid p;
    p.features.push_back(random_tensor(rng, 8, 8, 3));
    p.features.push_back(random_tensor(rng, 4, 4, 5));
    SdiWeights w;
    w.reduce = {Eigen::MatrixXd::Random(2, 3), Eigen::MatrixXd::Random(2, 5)};
    std::vector<std::size_t> seen;
    w.cbam = [&](const FeatureTensor& f, std::size_t scale) {
      seen.push_back(scale);
      return f;
    };
    const auto out = topo_sdi(p, constant_attention(8, 8, 0.5), w);
    CHECK(seen == std::vector<std::size_t>{0, 1});
    CHECK(out[0].channels() == 2);
    CHECK(out[1].channels() == 2);

    SdiWeights mismatched;
    mismatched.reduce = {Eigen::MatrixXd::Random(2, 3)};
    CHECK_THROWS_AS(topo_sdi(p, constant_attention(8, 8, 0.5), mismatched), ValidationError);
    // Without reduction the two scales disagree on channel count.
    CHECK_THROWS_AS(topo_sdi(p, constant_attention(8, 8, 0.5)), ValidationError);
  }

  TEST_CASE("pyramid must shrink strictly") {
    ScalePyramid p;
    p.features = {FeatureTensor(4, 4, 1), FeatureTensor(4, 2, 1)};
    CHECK_THROWS_AS(p.validate(), ValidationError);
    CHECK_THROWS_AS(ScalePyramid{}.validate(), ValidationError);
  }
}
