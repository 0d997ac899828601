#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "topoattn/grid.hpp"

namespace topoattn {

/// Sublevel filtration of the 2-D cubical complex of a LevelMap, T-construction:
/// pixels are the square 2-cells and every lower cell takes the minimum level of
/// the pixels incident to it.
///
/// Cells are stored on the (2H+1) x (2W+1) combinatorial grid: cell (i, j) has
/// dimension (i odd) + (j odd), so pixel (r, c) sits at (2r+1, 2c+1), vertices at
/// even/even positions and edges at mixed positions.
class CubicalFiltration {
 public:
  explicit CubicalFiltration(const LevelMap& levels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  Level max_level() const noexcept { return max_level_; }

  std::size_t cell_rows() const noexcept { return 2 * height_ + 1; }
  std::size_t cell_cols() const noexcept { return 2 * width_ + 1; }
  std::size_t cell_count() const noexcept { return cells_.size(); }

  Level value(std::size_t i, std::size_t j) const { return cells_[i * cell_cols() + j]; }
  static int dimension(std::size_t i, std::size_t j) noexcept {
    return static_cast<int>(i & 1U) + static_cast<int>(j & 1U);
  }
  Level pixel(std::size_t row, std::size_t col) const { return value(2 * row + 1, 2 * col + 1); }

  /// Number of cells of dimension `dim` whose value is <= t.
  std::size_t count_cells(int dim, Level t) const;

 private:
  std::size_t width_;
  std::size_t height_;
  Level max_level_;
  std::vector<Level> cells_;
};

CubicalFiltration build_filtration(const LevelMap& levels);

inline constexpr Level kInfiniteDeath = std::numeric_limits<Level>::max();

struct PersistencePair {
  int dim = 0;
  Level birth = 0;
  Level death = kInfiniteDeath;

  bool essential() const noexcept { return death == kInfiniteDeath; }
  /// death - birth, with an essential death replaced by `cap`.
  Level persistence(Level cap) const noexcept { return (essential() ? cap : death) - birth; }

  friend auto operator<=>(const PersistencePair&, const PersistencePair&) = default;
};

struct PersistenceDiagram {
  std::vector<PersistencePair> pairs;  // sorted by (dim, birth, death)
  Level max_level = kDefaultMaxLevel;

  std::vector<PersistencePair> of_dim(int dim) const;
  friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;
};

/// 0-D and 1-D persistence of the sublevel filtration. Zero-persistence pairs are
/// dropped; the single essential 0-D class has death kInfiniteDeath.
///
/// Dimension 0 is a union-find sweep over pixels in increasing (level, row, col)
/// order with 8-connectivity (two pixels sharing a vertex are joined by it). At a
/// merge the younger component dies; between equal births the component whose
/// minimal pixel comes first in row-major order survives.
///
/// Dimension 1 uses the duality between loops of the foreground and bounded
/// 4-connected components of the background: a decreasing sweep over pixels with
/// an extra node for the region outside the image. A background component that
/// merges into an older one at level w and whose highest pixel has level d is the
/// loop born at w and filled at d.
PersistenceDiagram compute_persistence(const CubicalFiltration& filtration);
PersistenceDiagram compute_persistence(const LevelMap& levels);

/// Betti number of the sublevel complex at threshold t, computed directly:
/// dim 0 by flood fill of {level <= t} under 8-connectivity, dim 1 as
/// beta_0 - (V - E + F) over the cells present at t.
std::size_t betti_oracle(const LevelMap& levels, Level t, int dim);
std::size_t betti_oracle(const CubicalFiltration& filtration, Level t, int dim);

/// #{(b, d) in PD_dim : b <= t < d}.
std::size_t diagram_betti(const PersistenceDiagram& diagram, Level t, int dim);

/// CSV with header `dim,birth,death`, essential deaths written as `inf`.
std::string diagram_to_csv(const PersistenceDiagram& diagram);

}  // namespace topoattn
