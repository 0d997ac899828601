#include "topoattn/cubical.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "topoattn/error.hpp"

namespace topoattn {

namespace {

constexpr std::array<std::array<int, 2>, 8> kNeighbors8 = {
    {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
constexpr std::array<std::array<int, 2>, 4> kNeighbors4 = {{{-1, 0}, {0, -1}, {0, 1}, {1, 0}}};

void check_dim(int dim) {
  if (dim != 0 && dim != 1) throw ValidationError("homology dimension must be 0 or 1");
}

// Pixel indices stably sorted by level (counting sort), i.e. (level, row, col) order.
std::vector<std::uint32_t> sweep_order(const CubicalFiltration& f) {
  const std::size_t n = f.width() * f.height();
  std::vector<std::uint32_t> count(static_cast<std::size_t>(f.max_level()) + 2, 0);
  for (std::size_t r = 0; r < f.height(); ++r) {
    for (std::size_t c = 0; c < f.width(); ++c) ++count[f.pixel(r, c) + 1];
  }
  for (std::size_t l = 1; l < count.size(); ++l) count[l] += count[l - 1];
  std::vector<std::uint32_t> order(n);
  for (std::size_t r = 0; r < f.height(); ++r) {
    for (std::size_t c = 0; c < f.width(); ++c) {
      order[count[f.pixel(r, c)]++] = static_cast<std::uint32_t>(r * f.width() + c);
    }
  }
  return order;
}

// Union-find whose roots are always the elder member of their set.
class ElderUnionFind {
 public:
  explicit ElderUnionFind(std::size_t n) : parent_(n) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<std::uint32_t>(i);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void attach(std::uint32_t younger_root, std::uint32_t elder_root) {
    parent_[younger_root] = elder_root;
  }

 private:
  std::vector<std::uint32_t> parent_;
};

void sweep_components(const CubicalFiltration& f, const std::vector<std::uint32_t>& order,
                      std::vector<PersistencePair>& out) {
  const std::size_t w = f.width();
  const std::size_t h = f.height();
  const std::size_t n = w * h;
  // rank[p] is the position of p in the sweep; smaller rank = elder.
  std::vector<std::uint32_t> rank(n);
  for (std::size_t k = 0; k < n; ++k) rank[order[k]] = static_cast<std::uint32_t>(k);

  ElderUnionFind uf(n);
  std::vector<bool> added(n, false);
  for (std::uint32_t p : order) {
    added[p] = true;
    const Level now = f.pixel(p / w, p % w);
    const long r = static_cast<long>(p / w);
    const long c = static_cast<long>(p % w);
    for (const auto& [dr, dc] : kNeighbors8) {
      const long nr = r + dr;
      const long nc = c + dc;
      if (nr < 0 || nc < 0 || nr >= static_cast<long>(h) || nc >= static_cast<long>(w)) continue;
      const auto q = static_cast<std::uint32_t>(nr * static_cast<long>(w) + nc);
      if (!added[q]) continue;
      std::uint32_t a = uf.find(p);
      std::uint32_t b = uf.find(q);
      if (a == b) continue;
      if (rank[a] > rank[b]) std::swap(a, b);
      // a is elder; b dies now.
      const Level birth = f.pixel(b / w, b % w);
      if (birth < now) out.push_back({0, birth, now});
      uf.attach(b, a);
    }
  }
  const std::uint32_t root = order.front();
  out.push_back({0, f.pixel(root / w, root % w), kInfiniteDeath});
}

void sweep_holes(const CubicalFiltration& f, const std::vector<std::uint32_t>& order,
                 std::vector<PersistencePair>& out) {
  const std::size_t w = f.width();
  const std::size_t h = f.height();
  const std::size_t n = w * h;
  const auto outside = static_cast<std::uint32_t>(n);
  // Decreasing sweep; the outside node is elder to every pixel.
  std::vector<std::uint32_t> rank(n + 1);
  rank[outside] = 0;
  for (std::size_t k = 0; k < n; ++k) rank[order[n - 1 - k]] = static_cast<std::uint32_t>(k + 1);

  ElderUnionFind uf(n + 1);
  std::vector<bool> added(n, false);
  auto merge = [&](std::uint32_t p, std::uint32_t q, Level now) {
    std::uint32_t a = uf.find(p);
    std::uint32_t b = uf.find(q);
    if (a == b) return;
    if (rank[a] > rank[b]) std::swap(a, b);
    const Level filled = f.pixel(b / w, b % w);
    if (now < filled) out.push_back({1, now, filled});
    uf.attach(b, a);
  };

  for (std::size_t k = n; k-- > 0;) {
    const std::uint32_t p = order[k];
    added[p] = true;
    const long r = static_cast<long>(p / w);
    const long c = static_cast<long>(p % w);
    const Level now = f.pixel(p / w, p % w);
    if (r == 0 || c == 0 || r + 1 == static_cast<long>(h) || c + 1 == static_cast<long>(w)) {
      merge(p, outside, now);
    }
    for (const auto& [dr, dc] : kNeighbors4) {
      const long nr = r + dr;
      const long nc = c + dc;
      if (nr < 0 || nc < 0 || nr >= static_cast<long>(h) || nc >= static_cast<long>(w)) continue;
      const auto q = static_cast<std::uint32_t>(nr * static_cast<long>(w) + nc);
      if (added[q]) merge(p, q, now);
    }
  }
}

}  // namespace

CubicalFiltration::CubicalFiltration(const LevelMap& levels)
    : width_(levels.width()), height_(levels.height()), max_level_(levels.max_level()) {
  const std::size_t rows = cell_rows();
  const std::size_t cols = cell_cols();
  cells_.assign(rows * cols, max_level_);
  for (std::size_t r = 0; r < height_; ++r) {
    for (std::size_t c = 0; c < width_; ++c) {
      const Level l = levels.at(r, c);
      // Closure of pixel (r, c): the 3x3 block of cells centred on it.
      for (std::size_t i = 2 * r; i <= 2 * r + 2; ++i) {
        for (std::size_t j = 2 * c; j <= 2 * c + 2; ++j) {
          Level& v = cells_[i * cols + j];
          v = std::min(v, l);
        }
      }
    }
  }
}

std::size_t CubicalFiltration::count_cells(int dim, Level t) const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < cell_rows(); ++i) {
    for (std::size_t j = 0; j < cell_cols(); ++j) {
      if (dimension(i, j) == dim && value(i, j) <= t) ++count;
    }
  }
  return count;
}

CubicalFiltration build_filtration(const LevelMap& levels) { return CubicalFiltration(levels); }

std::vector<PersistencePair> PersistenceDiagram::of_dim(int dim) const {
  std::vector<PersistencePair> out;
  for (const auto& p : pairs) {
    if (p.dim == dim) out.push_back(p);
  }
  return out;
}

PersistenceDiagram compute_persistence(const CubicalFiltration& filtration) {
  PersistenceDiagram pd;
  pd.max_level = filtration.max_level();
  const auto order = sweep_order(filtration);
  sweep_components(filtration, order, pd.pairs);
  sweep_holes(filtration, order, pd.pairs);
  std::sort(pd.pairs.begin(), pd.pairs.end());
  return pd;
}

PersistenceDiagram compute_persistence(const LevelMap& levels) {
  return compute_persistence(CubicalFiltration(levels));
}

std::size_t betti_oracle(const CubicalFiltration& f, Level t, int dim) {
  check_dim(dim);
  const std::size_t w = f.width();
  const std::size_t h = f.height();
  std::vector<bool> seen(w * h, false);
  std::size_t components = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < w * h; ++start) {
    if (seen[start] || f.pixel(start / w, start % w) > t) continue;
    ++components;
    seen[start] = true;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const long r = static_cast<long>(p / w);
      const long c = static_cast<long>(p % w);
      for (const auto& [dr, dc] : kNeighbors8) {
        const long nr = r + dr;
        const long nc = c + dc;
        if (nr < 0 || nc < 0 || nr >= static_cast<long>(h) || nc >= static_cast<long>(w)) continue;
        const auto q = static_cast<std::size_t>(nr) * w + static_cast<std::size_t>(nc);
        if (!seen[q] && f.pixel(q / w, q % w) <= t) {
          seen[q] = true;
          stack.push_back(q);
        }
      }
    }
  }
  if (dim == 0) return components;

  const auto euler = static_cast<long long>(f.count_cells(0, t)) -
                     static_cast<long long>(f.count_cells(1, t)) +
                     static_cast<long long>(f.count_cells(2, t));
  const long long b1 = static_cast<long long>(components) - euler;
  if (b1 < 0) throw InvariantError("negative first Betti number");
  return static_cast<std::size_t>(b1);
}

std::size_t betti_oracle(const LevelMap& levels, Level t, int dim) {
  return betti_oracle(CubicalFiltration(levels), t, dim);
}

std::size_t diagram_betti(const PersistenceDiagram& diagram, Level t, int dim) {
  check_dim(dim);
  return static_cast<std::size_t>(
      std::count_if(diagram.pairs.begin(), diagram.pairs.end(), [&](const PersistencePair& p) {
        return p.dim == dim && p.birth <= t && (p.essential() || t < p.death);
      }));
}

std::string diagram_to_csv(const PersistenceDiagram& diagram) {
  std::string out = "dim,birth,death\n";
  for (const auto& p : diagram.pairs) {
    out += std::to_string(p.dim) + "," + std::to_string(p.birth) + "," +
           (p.essential() ? std::string("inf") : std::to_string(p.death)) + "\n";
  }
  return out;
}

}  // namespace topoattn
