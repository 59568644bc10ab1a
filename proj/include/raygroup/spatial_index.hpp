#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "raygroup/geometry.hpp"
#include "raygroup/scene.hpp"

namespace raygroup {

using CellKey = std::array<std::int64_t, 3>;

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept;
};

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

/// Uniform hash grid over a copy of the indexed positions. Cell coordinates
/// are floor(position / cell_size); every point lives in exactly one cell and
/// each cell lists its points in ascending index order.
class GridIndex {
 public:
  GridIndex(std::span<const Vec3> points, double cell_size);

  double cell_size() const noexcept { return cell_size_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::size_t cell_count() const noexcept { return cells_.size(); }
  std::span<const Vec3> points() const noexcept { return points_; }
  CellKey cell_of(const Vec3& p) const;
  const std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash>& cells() const {
    return cells_;
  }

  /// Up to `max_k` indices within `radius` (inclusive), by ascending
  /// distance, ties by lowest index.
  std::vector<std::size_t> ball_query(const Vec3& center, double radius,
                                      std::size_t max_k = kUnbounded) const;

  /// True when some point within `radius` satisfies `pred(index)`.
  template <typename Pred>
  bool any_within(const Vec3& center, double radius, Pred&& pred) const {
    bool found = false;
    visit_candidates(center, radius, [&](std::uint32_t idx) {
      if (!found && squared_distance(points_[idx], center) <= radius * radius && pred(idx)) {
        found = true;
      }
      return !found;
    });
    return found;
  }

  /// The k nearest indices by ascending distance, ties by lowest index.
  std::vector<std::size_t> nearest(const Vec3& center, std::size_t k) const;

 private:
  // Calls visit(idx) for every point in cells overlapping the query cube;
  // stops early when visit returns false.
  template <typename Visit>
  void visit_candidates(const Vec3& center, double radius, Visit&& visit) const;

  std::vector<Vec3> points_;
  double cell_size_;
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> cells_;
  CellKey min_cell_{};
  CellKey max_cell_{};
};

template <typename Visit>
void GridIndex::visit_candidates(const Vec3& center, double radius, Visit&& visit) const {
  if (points_.empty()) return;
  // Pad the cube slightly so rounding in (c +- r) / cell never drops a cell.
  const double pad = radius + 1e-9 * (1.0 + radius + std::abs(center.x) + std::abs(center.y) +
                                      std::abs(center.z));
  CellKey lo{};
  CellKey hi{};
  for (int a = 0; a < 3; ++a) {
    const double l = std::floor((center[a] - pad) / cell_size_);
    const double h = std::floor((center[a] + pad) / cell_size_);
    // Clip to occupied range; also keeps huge radii from iterating forever.
    lo[a] = static_cast<std::int64_t>(std::max(l, static_cast<double>(min_cell_[a])));
    hi[a] = static_cast<std::int64_t>(std::min(h, static_cast<double>(max_cell_[a])));
    if (lo[a] > hi[a]) return;
  }
  const auto span = [&](int a) { return static_cast<double>(hi[a] - lo[a] + 1); };
  if (span(0) * span(1) * span(2) > static_cast<double>(cells_.size())) {
    for (const auto& [key, members] : cells_) {
      bool inside = true;
      for (int a = 0; a < 3; ++a) inside = inside && key[a] >= lo[a] && key[a] <= hi[a];
      if (!inside) continue;
      for (std::uint32_t idx : members) {
        if (!visit(idx)) return;
      }
    }
    return;
  }
  for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
      for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
        const auto it = cells_.find({x, y, z});
        if (it == cells_.end()) continue;
        for (std::uint32_t idx : it->second) {
          if (!visit(idx)) return;
        }
      }
    }
  }
}

GridIndex build_grid(const PointCloud& cloud, double cell_size);

/// Inverse-distance weighted average of the k nearest source features,
/// w_j = (1/d_j) / sum(1/d_i). A neighbor closer than 1e-10 m is copied.
/// Returns row-major `dst.size() * src.feature_dim()` values.
std::vector<double> interpolate_features(const PointCloud& src, std::span<const Vec3> dst,
                                         std::size_t k = 3);

}  // namespace raygroup
