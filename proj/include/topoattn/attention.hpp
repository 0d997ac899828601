#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "topoattn/cubical.hpp"
#include "topoattn/grid.hpp"

namespace topoattn {

struct AttnConfig {
  double percentile = 50.0;  // in [0, 100]
  Level birth_tolerance = 0;
  double scale = 1.0;        // scores are divided by this before the sigmoid
  bool normalize = false;    // divide scores by the image maximum first
  bool pool_dimensions = true;  // one threshold over PD_0 and PD_1 together, else one per dim
  Level max_level = kDefaultMaxLevel;

  /// Throws ValidationError on out-of-range fields.
  void validate() const;
};

/// Per-pixel persistence of the features born there; zero elsewhere.
struct PersistenceScoreMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> scores;
};

/// Per-pixel weights in [0, 1], same extent as the source map.
struct AttentionMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> weights;

  double at(std::size_t row, std::size_t col) const { return weights[row * width + col]; }

  /// Float copy, for TNSR output.
  GridMap to_grid() const;
  /// round(weight * 255) on a 0..255 scale, for PGM output.
  LevelMap to_levels() const;

  friend bool operator==(const AttentionMap&, const AttentionMap&) = default;
};

/// Nearest-rank percentile of `values` (1-based index ceil(p/100 * n), at least 1).
/// `values` must be nonempty.
double nearest_rank_percentile(std::vector<double> values, double percentile);

/// Keeps pairs whose persistence (essential deaths capped at the diagram's
/// max level) reaches the nearest-rank percentile of all persistences.
PersistenceDiagram filter_significant(const PersistenceDiagram& diagram, double percentile,
                                      bool pool_dimensions = true);

/// Each retained pair marks the pixels whose level is within `birth_tolerance` of
/// its birth; a pixel keeps the largest persistence marked on it.
PersistenceScoreMap score_map(const LevelMap& levels, const PersistenceDiagram& retained,
                              Level birth_tolerance = 0);

/// Logistic sigmoid, rounded down to the largest double below 1 where it would
/// otherwise round to exactly 1.
double sigmoid(double x);

AttentionMap to_attention(const PersistenceScoreMap& scores, const AttnConfig& config);

/// quantize -> filtration -> persistence -> filter -> score map -> sigmoid.
AttentionMap generate_attention_map(const GridMap& probability, const AttnConfig& config = {});

}  // namespace topoattn
