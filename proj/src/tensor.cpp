#include "topoattn/tensor.hpp"

#include <cmath>
#include <string>

#include "topoattn/error.hpp"

namespace topoattn {

FeatureTensor::FeatureTensor(std::size_t height, std::size_t width, std::size_t channels)
    : FeatureTensor(height, width, channels, std::vector<double>(height * width * channels, 0.0)) {}

FeatureTensor::FeatureTensor(std::size_t height, std::size_t width, std::size_t channels,
                             std::vector<double> values)
    : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
  if (height_ == 0 || width_ == 0 || channels_ == 0) {
    throw ValidationError("feature tensor dimensions must be positive, got " +
                          std::to_string(height_) + "x" + std::to_string(width_) + "x" +
                          std::to_string(channels_));
  }
  if (values_.size() != height_ * width_ * channels_) {
    throw ValidationError("feature tensor needs " + std::to_string(height_ * width_ * channels_) +
                          " values, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("feature tensor contains a non-finite value");
  }
}

FeatureTensor FeatureTensor::filled(std::size_t height, std::size_t width, std::size_t channels,
                                    double value) {
  return FeatureTensor(height, width, channels,
                       std::vector<double>(height * width * channels, value));
}

}  // namespace topoattn
