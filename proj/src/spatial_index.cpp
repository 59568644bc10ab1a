#include "raygroup/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "raygroup/errors.hpp"

namespace raygroup {

std::size_t CellKeyHash::operator()(const CellKey& k) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::int64_t c : k) {
    h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

GridIndex::GridIndex(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()), cell_size_(cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw InvalidParameter("grid cell size must be finite and > 0");
  }
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidParameter("grid index supports at most 2^32-1 points");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const CellKey key = cell_of(points_[i]);
    cells_[key].push_back(static_cast<std::uint32_t>(i));
    if (i == 0) {
      min_cell_ = max_cell_ = key;
    } else {
      for (int a = 0; a < 3; ++a) {
        min_cell_[a] = std::min(min_cell_[a], key[a]);
        max_cell_[a] = std::max(max_cell_[a], key[a]);
      }
    }
  }
}

CellKey GridIndex::cell_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.y / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.z / cell_size_))};
}

std::vector<std::size_t> GridIndex::ball_query(const Vec3& center, double radius,
                                               std::size_t max_k) const {
  if (!(radius > 0.0)) throw InvalidParameter("ball query radius must be > 0");
  if (max_k < 1) throw InvalidParameter("ball query max_k must be >= 1");
  const double r2 = radius * radius;
  std::vector<std::pair<double, std::uint32_t>> hits;
  visit_candidates(center, radius, [&](std::uint32_t idx) {
    const double d2 = squared_distance(points_[idx], center);
    if (d2 <= r2) hits.emplace_back(d2, idx);
    return true;
  });
  const std::size_t keep = std::min(max_k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end());
  std::vector<std::size_t> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(hits[i].second);
  return out;
}

std::vector<std::size_t> GridIndex::nearest(const Vec3& center, std::size_t k) const {
  if (k < 1 || k > points_.size()) {
    throw InvalidParameter("nearest: k " + std::to_string(k) + " outside [1, " +
                           std::to_string(points_.size()) + "]");
  }
  // Grow a cube of cells around the query until the k-th candidate is
  // provably closer than anything outside the cube.
  std::vector<std::pair<double, std::uint32_t>> hits;
  for (double reach = cell_size_;; reach *= 2.0) {
    hits.clear();
    visit_candidates(center, reach, [&](std::uint32_t idx) {
      hits.emplace_back(squared_distance(points_[idx], center), idx);
      return true;
    });
    bool covers_all = hits.size() == points_.size();
    if (hits.size() >= k) {
      std::nth_element(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k - 1),
                       hits.end());
      if (covers_all || hits[k - 1].first <= reach * reach) break;
    }
    if (covers_all) break;
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(hits[i].second);
  return out;
}

GridIndex build_grid(const PointCloud& cloud, double cell_size) {
  return GridIndex(cloud.positions(), cell_size);
}

namespace {

double default_cell_size(std::span<const Vec3> points) {
  if (points.empty()) return 1.0;
  Vec3 lo = points[0];
  Vec3 hi = points[0];
  for (const Vec3& p : points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const Vec3 ext = hi - lo;
  const double longest = std::max({ext.x, ext.y, ext.z});
  const double cells_per_axis = std::max(1.0, std::cbrt(static_cast<double>(points.size())));
  const double cell = longest / cells_per_axis;
  return cell > 0.0 ? cell : 1.0;
}

}  // namespace

std::vector<double> interpolate_features(const PointCloud& src, std::span<const Vec3> dst,
                                         std::size_t k) {
  if (!src.has_features()) throw InvalidParameter("interpolate_features: source has no features");
  if (k < 1 || k > src.size()) {
    throw InvalidParameter("interpolate_features: k " + std::to_string(k) +
                           " outside [1, " + std::to_string(src.size()) + "]");
  }
  const std::size_t dim = src.feature_dim();
  const GridIndex grid(src.positions(), default_cell_size(src.positions()));
  std::vector<double> out(dst.size() * dim, 0.0);
  std::vector<double> weights(k);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto neighbors = grid.nearest(dst[i], k);
    double* row = out.data() + i * dim;
    bool copied = false;
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = distance(src.position(neighbors[j]), dst[i]);
      if (d < 1e-10) {
        const auto f = src.feature(neighbors[j]);
        std::copy(f.begin(), f.end(), row);
        copied = true;
        break;
      }
      weights[j] = 1.0 / d;
      total += weights[j];
    }
    if (copied) continue;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = weights[j] / total;
      const auto f = src.feature(neighbors[j]);
      for (std::size_t c = 0; c < dim; ++c) row[c] += w * f[c];
    }
  }
  return out;
}

}  // namespace raygroup
