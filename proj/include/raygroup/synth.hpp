#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "raygroup/geometry.hpp"
#include "raygroup/scene.hpp"

namespace raygroup {

/// SplitMix64. Fixed so fixtures can be regenerated bit-exactly anywhere.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

struct SceneSpec {
  Vec3 room_extent{6.0, 6.0, 3.0};
  std::size_t n_objects = 4;
  std::pair<Vec3, Vec3> size_range{{0.4, 0.4, 0.4}, {1.2, 1.2, 1.2}};
  std::size_t points_per_object = 200;
  std::size_t background_points = 1000;
  int n_classes = 3;
  std::uint64_t rng_seed = 0;
};

/// Boxes rest on the floor (z = 0) inside the room and do not overlap.
/// Object points are uniform over box faces (faces weighted by area);
/// background points cover the floor outside box footprints and the walls.
/// Throws GenerationFailure when boxes cannot be placed in 10^4 attempts.
Scene generate_scene(const SceneSpec& spec);

/// Object points vote for their box center, background points for themselves.
std::vector<Vec3> oracle_votes(const PointCloud& cloud, const SceneAnnotation& annotation);

/// 1 on object points, 0 elsewhere.
std::vector<double> oracle_scores(const SceneAnnotation& annotation);

/// Naive O(n^2 m) farthest point sampling: recompute every candidate's
/// distance to the whole selected set each round.
std::vector<std::size_t> oracle_fps(std::span<const Vec3> points, std::size_t m,
                                    std::size_t seed_index);

/// Linear-scan radius filter, sorted by (distance, index).
std::vector<std::size_t> oracle_ball_query(std::span<const Vec3> points, const Vec3& center,
                                           double radius);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Monte Carlo IoU over the joint bounding box of `a` and `b`.
MonteCarloEstimate oracle_iou_mc(const Box3D& a, const Box3D& b, std::size_t samples,
                                 std::uint64_t seed = 1);

}  // namespace raygroup
