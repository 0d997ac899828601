#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace topoattn {

/// Multi-channel feature map, row-major over (row, col, channel).
class FeatureTensor {
 public:
  FeatureTensor(std::size_t height, std::size_t width, std::size_t channels);
  FeatureTensor(std::size_t height, std::size_t width, std::size_t channels,
                std::vector<double> values);

  static FeatureTensor filled(std::size_t height, std::size_t width, std::size_t channels,
                              double value);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return values_.size(); }

  bool same_shape(const FeatureTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  double& at(std::size_t row, std::size_t col, std::size_t ch) {
    return values_[(row * width_ + col) * channels_ + ch];
  }
  double at(std::size_t row, std::size_t col, std::size_t ch) const {
    return values_[(row * width_ + col) * channels_ + ch];
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const FeatureTensor&, const FeatureTensor&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t channels_;
  std::vector<double> values_;
};

}  // namespace topoattn
