#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "raygroup/geometry.hpp"
#include "raygroup/rays.hpp"

namespace raygroup {

enum class SampleSource : std::uint8_t { kFps, kFbsForeground, kFbsBackground };

/// Ordered selection of point indices. `scores` is either empty (unscored
/// FPS) or holds one foreground score per selected index.
struct ScoredSampleSet {
  std::vector<std::size_t> indices;
  std::vector<double> scores;
  std::vector<SampleSource> sources;

  std::size_t size() const noexcept { return indices.size(); }
  std::size_t count(SampleSource source) const;
};

/// Greedy max-min selection starting at `seed_index`; ties go to the lowest
/// index. O(n * m) with an incremental nearest-selected distance table.
std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> points, std::size_t m,
                                                std::size_t seed_index = 0);

ScoredSampleSet farthest_point_sampling(std::span<const Vec3> points, std::size_t m,
                                        std::size_t seed_index = 0,
                                        std::span<const double> scores = {});

struct ForegroundSplit {
  std::vector<std::size_t> foreground;  // ascending index order
  std::vector<std::size_t> background;  // ascending index order
};

/// Top-`kappa` scores form the foreground set (ties by lowest index).
ForegroundSplit foreground_split(std::span<const double> scores, std::size_t kappa);

/// One down-sampling layer of foreground-biased sampling.
struct FbsLayer {
  std::size_t kappa = 1024;
  std::size_t alpha = 896;
  std::size_t beta = 128;

  friend bool operator==(const FbsLayer&, const FbsLayer&) = default;
};

/// Seeds are positions within the foreground / background subsets.
struct FbsSeeds {
  std::size_t foreground = 0;
  std::size_t background = 0;
};

/// FPS(alpha) over the foreground subset followed by FPS(beta) over the
/// background subset. Indices refer to `points`.
ScoredSampleSet foreground_biased_sampling(std::span<const Vec3> points,
                                           std::span<const double> scores, const FbsLayer& layer,
                                           FbsSeeds seeds = {});

enum class AnchorStage : std::uint8_t { kCoarse, kFine };

struct AnchorPoint {
  Vec3 position;
  double t = 0.0;  // fraction of the far bound along the ray
  std::size_t ray_index = 0;
  AnchorStage stage = AnchorStage::kCoarse;
  std::optional<std::uint8_t> mask;
  std::vector<double> local_feature;
};

/// Anchors of one bundle in canonical (ray, k) order, `per_ray` per ray.
struct AnchorSet {
  AnchorStage stage = AnchorStage::kCoarse;
  std::size_t num_rays = 0;
  std::size_t per_ray = 0;
  std::vector<AnchorPoint> anchors;

  std::size_t size() const noexcept { return anchors.size(); }
  const AnchorPoint& at(std::size_t ray, std::size_t k) const {
    return anchors.at(ray * per_ray + k);
  }
  std::vector<Vec3> positions() const;
};

/// K_c anchors per ray at the stratified bin centers t_k = (k - 0.5) / K_c.
AnchorSet coarse_anchors(const RayBundle& bundle, std::size_t coarse_count);

/// Inverse-transform placement along one ray: binary masks over equal bins
/// define a piecewise-constant PDF, inverted at u_k = k / K_f. An all-zero
/// mask falls back to t_k = k / (K_f + 1).
std::vector<double> fine_sample_fractions(std::span<const std::uint8_t> masks,
                                          std::size_t fine_count);

/// `coarse_masks` holds N * K_c binary labels in canonical order.
AnchorSet fine_anchors(std::span<const std::uint8_t> coarse_masks, std::size_t coarse_count,
                       std::size_t fine_count, const RayBundle& bundle);

/// Hard-thresholds predicted mask probabilities (p >= threshold -> 1).
std::vector<std::uint8_t> binarize_masks(std::span<const double> probabilities,
                                         double threshold = 0.5);

}  // namespace raygroup
