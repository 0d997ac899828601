#include "topoattn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "topoattn/error.hpp"

namespace topoattn {

void AttnConfig::validate() const {
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw ValidationError("percentile must be in [0, 100], got " + std::to_string(percentile));
  }
  if (birth_tolerance < 0) throw ValidationError("birth tolerance must be nonnegative");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ValidationError("scale must be positive and finite, got " + std::to_string(scale));
  }
  if (max_level < 1 || max_level > kMaxLevelLimit) {
    throw ValidationError("max level must be in [1, 65535]");
  }
}

GridMap AttentionMap::to_grid() const {
  std::vector<float> values(weights.begin(), weights.end());
  return GridMap(width, height, std::move(values));
}

LevelMap AttentionMap::to_levels() const {
  std::vector<Level> levels;
  levels.reserve(weights.size());
  for (double w : weights) levels.push_back(static_cast<Level>(std::round(w * 255.0)));
  return LevelMap(width, height, std::move(levels), 255);
}

double nearest_rank_percentile(std::vector<double> values, double percentile) {
  if (values.empty()) throw ValidationError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

PersistenceDiagram filter_significant(const PersistenceDiagram& diagram, double percentile,
                                      bool pool_dimensions) {
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw ValidationError("percentile must be in [0, 100]");
  }
  PersistenceDiagram out;
  out.max_level = diagram.max_level;
  if (diagram.pairs.empty()) return out;

  auto lifespans = [&](auto&& keep) {
    std::vector<double> v;
    for (const auto& p : diagram.pairs) {
      if (keep(p)) v.push_back(p.persistence(diagram.max_level));
    }
    return v;
  };

  if (pool_dimensions) {
    const double tau = nearest_rank_percentile(lifespans([](const auto&) { return true; }),
                                               percentile);
    for (const auto& p : diagram.pairs) {
      if (p.persistence(diagram.max_level) >= tau) out.pairs.push_back(p);
    }
    return out;
  }
  for (int dim = 0; dim <= 1; ++dim) {
    auto v = lifespans([dim](const auto& p) { return p.dim == dim; });
    if (v.empty()) continue;
    const double tau = nearest_rank_percentile(std::move(v), percentile);
    for (const auto& p : diagram.pairs) {
      if (p.dim == dim && p.persistence(diagram.max_level) >= tau) out.pairs.push_back(p);
    }
  }
  return out;
}

PersistenceScoreMap score_map(const LevelMap& levels, const PersistenceDiagram& retained,
                              Level birth_tolerance) {
  if (birth_tolerance < 0) throw ValidationError("birth tolerance must be nonnegative");
  // Best persistence per level, then one lookup per pixel.
  const Level top = levels.max_level();
  std::vector<double> best(static_cast<std::size_t>(top) + 1, 0.0);
  for (const auto& p : retained.pairs) {
    const double lifespan = p.persistence(retained.max_level);
    const Level lo = std::max<Level>(0, p.birth - birth_tolerance);
    const Level hi = std::min<Level>(top, p.birth + birth_tolerance);
    for (Level l = lo; l <= hi; ++l) best[l] = std::max(best[l], lifespan);
  }
  PersistenceScoreMap out{levels.width(), levels.height(), {}};
  out.scores.reserve(levels.size());
  for (Level l : levels.levels()) out.scores.push_back(best[l]);
  return out;
}

double sigmoid(double x) {
  static const double kBelowOne = std::nextafter(1.0, 0.0);
  return std::min(1.0 / (1.0 + std::exp(-x)), kBelowOne);
}

AttentionMap to_attention(const PersistenceScoreMap& scores, const AttnConfig& config) {
  config.validate();
  double top = 1.0;
  bool all_zero = false;
  if (config.normalize) {
    top = scores.scores.empty() ? 0.0
                                : *std::max_element(scores.scores.begin(), scores.scores.end());
    all_zero = !(top > 0.0);
  }
  AttentionMap out{scores.width, scores.height, {}};
  out.weights.reserve(scores.scores.size());
  for (double s : scores.scores) {
    if (all_zero) {
      out.weights.push_back(sigmoid(0.0));
    } else {
      out.weights.push_back(sigmoid((config.normalize ? s / top : s) / config.scale));
    }
  }
  return out;
}

AttentionMap generate_attention_map(const GridMap& probability, const AttnConfig& config) {
  config.validate();
  const LevelMap levels = quantize(probability, config.max_level);
  const PersistenceDiagram diagram = compute_persistence(build_filtration(levels));
  const PersistenceDiagram retained =
      filter_significant(diagram, config.percentile, config.pool_dimensions);
  return to_attention(score_map(levels, retained, config.birth_tolerance), config);
}

}  // namespace topoattn
