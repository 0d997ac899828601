#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace topoattn {

using Level = std::int32_t;

inline constexpr Level kDefaultMaxLevel = 255;
inline constexpr Level kMaxLevelLimit = 65535;

/// 2-D scalar field (probability map), row-major, row 0 at the top.
/// Values are 32-bit floats so that TNSR files round-trip bit-exactly.
class GridMap {
 public:
  /// Throws ValidationError on zero dims, size mismatch or non-finite values.
  GridMap(std::size_t width, std::size_t height, std::vector<float> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  float at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  std::span<const float> values() const noexcept { return values_; }

  GridMap transposed() const;

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<float> values_;
};

/// Integer level field on the scale [0, max_level].
class LevelMap {
 public:
  LevelMap(std::size_t width, std::size_t height, std::vector<Level> levels,
           Level max_level = kDefaultMaxLevel);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return levels_.size(); }
  Level max_level() const noexcept { return max_level_; }

  Level at(std::size_t row, std::size_t col) const { return levels_[row * width_ + col]; }
  std::span<const Level> levels() const noexcept { return levels_; }

  LevelMap transposed() const;

  friend bool operator==(const LevelMap&, const LevelMap&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<Level> levels_;
  Level max_level_;
};

/// level = round(value * max_level), ties away from zero. Values must lie in [0,1].
Level quantize_value(float value, Level max_level);

LevelMap quantize(const GridMap& map, Level max_level = kDefaultMaxLevel);

}  // namespace topoattn
