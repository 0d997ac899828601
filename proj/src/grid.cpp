#include "topoattn/grid.hpp"

#include <cmath>
#include <string>

#include "topoattn/error.hpp"

namespace topoattn {

namespace {

void check_dims(std::size_t width, std::size_t height, std::size_t count) {
  if (width == 0 || height == 0) {
    throw ValidationError("grid dimensions must be positive, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  if (count != width * height) {
    throw ValidationError("grid of " + std::to_string(width) + "x" + std::to_string(height) +
                          " needs " + std::to_string(width * height) + " values, got " +
                          std::to_string(count));
  }
}

template <typename T>
std::vector<T> transpose(const std::vector<T>& src, std::size_t width, std::size_t height) {
  std::vector<T> out(src.size());
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) out[c * height + r] = src[r * width + c];
  }
  return out;
}

}  // namespace

GridMap::GridMap(std::size_t width, std::size_t height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dims(width_, height_, values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("grid value at index " + std::to_string(i) + " is not finite");
    }
  }
}

GridMap GridMap::transposed() const {
  return GridMap(height_, width_, transpose(values_, width_, height_));
}

LevelMap::LevelMap(std::size_t width, std::size_t height, std::vector<Level> levels,
                   Level max_level)
    : width_(width), height_(height), levels_(std::move(levels)), max_level_(max_level) {
  check_dims(width_, height_, levels_.size());
  if (max_level_ < 1 || max_level_ > kMaxLevelLimit) {
    throw ValidationError("max level must be in [1, 65535], got " + std::to_string(max_level_));
  }
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i] < 0 || levels_[i] > max_level_) {
      throw ValidationError("level " + std::to_string(levels_[i]) + " at index " +
                            std::to_string(i) + " outside [0, " + std::to_string(max_level_) +
                            "]");
    }
  }
}

LevelMap LevelMap::transposed() const {
  return LevelMap(height_, width_, transpose(levels_, width_, height_), max_level_);
}

Level quantize_value(float value, Level max_level) {
  if (!(value >= 0.0f && value <= 1.0f)) {
    throw ValidationError("probability " + std::to_string(value) + " outside [0, 1]");
  }
  // std::round rounds halfway cases away from zero.
  return static_cast<Level>(std::round(static_cast<double>(value) * max_level));
}

LevelMap quantize(const GridMap& map, Level max_level) {
  if (max_level < 1 || max_level > kMaxLevelLimit) {
    throw ValidationError("max level must be in [1, 65535], got " + std::to_string(max_level));
  }
  std::vector<Level> levels;
  levels.reserve(map.size());
  for (float v : map.values()) levels.push_back(quantize_value(v, max_level));
  return LevelMap(map.width(), map.height(), std::move(levels), max_level);
}

}  // namespace topoattn
