#include "raygroup/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "raygroup/errors.hpp"

namespace raygroup {

namespace {

constexpr std::size_t kMaxPlacementAttempts = 10000;

void check_spec(const SceneSpec& spec) {
  const auto& [lo, hi] = spec.size_range;
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(spec.room_extent[a] > 0.0)) throw InvalidParameter("room extent must be > 0");
    if (!(lo[a] > 0.0) || !(hi[a] >= lo[a])) {
      throw InvalidParameter("size range must satisfy 0 < min <= max");
    }
    if (hi[a] > spec.room_extent[a]) throw InvalidParameter("object sizes exceed the room");
  }
  if (spec.n_classes < 1) throw InvalidParameter("n_classes must be >= 1");
}

bool overlaps(const Box3D& a, const Box3D& b) {
  const Vec3 alo = a.min_corner();
  const Vec3 ahi = a.max_corner();
  const Vec3 blo = b.min_corner();
  const Vec3 bhi = b.max_corner();
  for (std::size_t i = 0; i < 3; ++i) {
    if (ahi[i] <= blo[i] || bhi[i] <= alo[i]) return false;
  }
  return true;
}

// Picks index i with probability weights[i] / sum(weights).
std::size_t pick_weighted(SplitMix64& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

Vec3 sample_box_surface(SplitMix64& rng, const Box3D& box) {
  const Vec3 s = box.size;
  // Faces: -x, +x, -y, +y, -z, +z.
  const std::array<double, 6> areas = {s.y * s.z, s.y * s.z, s.x * s.z,
                                       s.x * s.z, s.x * s.y, s.x * s.y};
  const std::size_t face = pick_weighted(rng, areas);
  const std::size_t axis = face / 2;
  const Vec3 lo = box.min_corner();
  const Vec3 hi = box.max_corner();
  double c[3];
  for (std::size_t a = 0; a < 3; ++a) c[a] = rng.uniform(lo[a], hi[a]);
  c[axis] = (face % 2 == 0) ? lo[axis] : hi[axis];
  return {c[0], c[1], c[2]};
}

bool under_any_box(const Vec3& p, std::span<const Box3D> boxes) {
  return std::any_of(boxes.begin(), boxes.end(), [&](const Box3D& b) {
    const Vec3 lo = b.min_corner();
    const Vec3 hi = b.max_corner();
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  });
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  check_spec(spec);
  SplitMix64 rng(spec.rng_seed);
  const Vec3 room = spec.room_extent;
  const auto& [size_lo, size_hi] = spec.size_range;

  std::vector<Box3D> boxes;
  std::size_t attempts = 0;
  while (boxes.size() < spec.n_objects) {
    if (++attempts > kMaxPlacementAttempts) {
      throw GenerationFailure("could not place " + std::to_string(spec.n_objects) +
                              " non-overlapping boxes in " +
                              std::to_string(kMaxPlacementAttempts) + " attempts");
    }
    const Vec3 size{rng.uniform(size_lo.x, size_hi.x), rng.uniform(size_lo.y, size_hi.y),
                    rng.uniform(size_lo.z, size_hi.z)};
    const Vec3 center{rng.uniform(size.x / 2, room.x - size.x / 2),
                      rng.uniform(size.y / 2, room.y - size.y / 2), size.z / 2};
    const int class_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_classes)));
    const Box3D candidate(center, size, class_id);
    if (std::none_of(boxes.begin(), boxes.end(),
                     [&](const Box3D& b) { return overlaps(b, candidate); })) {
      boxes.push_back(candidate);
    }
  }

  std::vector<Vec3> positions;
  std::vector<int> ids;
  positions.reserve(spec.n_objects * spec.points_per_object + spec.background_points);
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    for (std::size_t i = 0; i < spec.points_per_object; ++i) {
      positions.push_back(sample_box_surface(rng, boxes[b]));
      ids.push_back(static_cast<int>(b));
    }
  }

  // Background: floor (z = 0) plus the four walls, weighted by area.
  const std::array<double, 5> areas = {room.x * room.y, room.y * room.z, room.y * room.z,
                                       room.x * room.z, room.x * room.z};
  for (std::size_t i = 0; i < spec.background_points; ++i) {
    Vec3 p;
    for (std::size_t tries = 0;; ++tries) {
      const std::size_t surface = pick_weighted(rng, areas);
      const double u = rng.uniform();
      const double v = rng.uniform();
      switch (surface) {
        case 0: p = {u * room.x, v * room.y, 0.0}; break;
        case 1: p = {0.0, u * room.y, v * room.z}; break;
        case 2: p = {room.x, u * room.y, v * room.z}; break;
        case 3: p = {u * room.x, 0.0, v * room.z}; break;
        default: p = {u * room.x, room.y, v * room.z}; break;
      }
      if (surface != 0 || !under_any_box(p, boxes)) break;
      if (tries > kMaxPlacementAttempts) {
        throw GenerationFailure("could not place background point outside box footprints");
      }
    }
    positions.push_back(p);
    ids.push_back(-1);
  }

  Scene scene{PointCloud(std::move(positions)), SceneAnnotation{std::move(boxes), std::move(ids)}};
  validate_scene(scene);
  return scene;
}

std::vector<Vec3> oracle_votes(const PointCloud& cloud, const SceneAnnotation& annotation) {
  if (annotation.point_instance_ids.size() != cloud.size()) {
    throw ShapeMismatch("oracle_votes: annotation does not match cloud");
  }
  std::vector<Vec3> votes;
  votes.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int id = annotation.point_instance_ids[i];
    votes.push_back(id >= 0 ? annotation.boxes.at(static_cast<std::size_t>(id)).center
                            : cloud.position(i));
  }
  return votes;
}

std::vector<double> oracle_scores(const SceneAnnotation& annotation) {
  std::vector<double> scores;
  scores.reserve(annotation.point_instance_ids.size());
  for (int id : annotation.point_instance_ids) scores.push_back(id >= 0 ? 1.0 : 0.0);
  return scores;
}

std::vector<std::size_t> oracle_fps(std::span<const Vec3> points, std::size_t m,
                                    std::size_t seed_index) {
  const std::size_t n = points.size();
  if (m < 1 || m > n || seed_index >= n) throw InvalidParameter("oracle_fps: bad arguments");
  std::vector<std::size_t> selected{seed_index};
  std::vector<bool> taken(n, false);
  taken[seed_index] = true;
  while (selected.size() < m) {
    double best = -1.0;
    std::size_t best_index = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t s : selected) nearest = std::min(nearest, squared_distance(points[i], points[s]));
      if (nearest > best) {
        best = nearest;
        best_index = i;
      }
    }
    taken[best_index] = true;
    selected.push_back(best_index);
  }
  return selected;
}

std::vector<std::size_t> oracle_ball_query(std::span<const Vec3> points, const Vec3& center,
                                           double radius) {
  std::vector<std::pair<double, std::size_t>> hits;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = squared_distance(points[i], center);
    if (d2 <= radius * radius) hits.emplace_back(d2, i);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::size_t> out;
  for (const auto& h : hits) out.push_back(h.second);
  return out;
}

MonteCarloEstimate oracle_iou_mc(const Box3D& a, const Box3D& b, std::size_t samples,
                                 std::uint64_t seed) {
  if (samples < 100000) throw InvalidParameter("oracle_iou_mc: needs >= 1e5 samples");
  const Vec3 alo = a.min_corner();
  const Vec3 ahi = a.max_corner();
  const Vec3 blo = b.min_corner();
  const Vec3 bhi = b.max_corner();
  const Vec3 lo{std::min(alo.x, blo.x), std::min(alo.y, blo.y), std::min(alo.z, blo.z)};
  const Vec3 hi{std::max(ahi.x, bhi.x), std::max(ahi.y, bhi.y), std::max(ahi.z, bhi.z)};
  const auto inside = [](const Vec3& p, const Vec3& l, const Vec3& h) {
    return p.x >= l.x && p.x <= h.x && p.y >= l.y && p.y <= h.y && p.z >= l.z && p.z <= h.z;
  };
  SplitMix64 rng(seed);
  std::size_t in_union = 0;
  std::size_t in_both = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec3 p{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y), rng.uniform(lo.z, hi.z)};
    const bool ia = inside(p, alo, ahi);
    const bool ib = inside(p, blo, bhi);
    in_union += (ia || ib) ? 1 : 0;
    in_both += (ia && ib) ? 1 : 0;
  }
  MonteCarloEstimate est;
  if (in_union == 0) return est;
  // IoU is the conditional probability of "in both" given "in union".
  est.value = static_cast<double>(in_both) / static_cast<double>(in_union);
  est.standard_error = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(in_union));
  return est;
}

}  // namespace raygroup
