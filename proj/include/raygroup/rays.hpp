#pragma once

#include <cstddef>
#include <vector>

#include "raygroup/geometry.hpp"
#include "raygroup/scene.hpp"

namespace raygroup {

/// Angular layout of a ray bundle: P polar bins, `azimuth_factor` rays per
/// bin step (A_p = factor * p towards the equator, one ray at each pole).
struct RayLayout {
  int polar_bins = 9;
  int azimuth_factor = 4;
};

struct RayAngle {
  double polar = 0.0;    // theta in [0, pi]
  double azimuth = 0.0;  // psi in [0, 2pi)
  int bin_index = 0;     // p
  int azimuth_index = 0; // a
};

struct Ray {
  double polar = 0.0;
  double azimuth = 0.0;
  Vec3 direction;
  Vec3 origin;
  double far_bound = 0.0;
  int bin_index = 0;
  int azimuth_index = 0;

  /// origin + t * far_bound * direction, t in [0, 1].
  Vec3 point_at(double t) const { return origin + direction * (t * far_bound); }
};

/// Rays emitted from one cluster center, in canonical (p, a) ascending order.
struct RayBundle {
  Vec3 origin;
  std::vector<Ray> rays;
  int polar_bins = 0;
  double scale = 0.0;

  std::size_t size() const noexcept { return rays.size(); }
};

/// A_p for a single polar bin.
int rays_in_bin(int p, const RayLayout& layout);

/// N = sum of A_p over all bins. Throws InvalidParameter for P < 2.
int ray_count(const RayLayout& layout);
inline int ray_count(int polar_bins) { return ray_count(RayLayout{polar_bins, 4}); }

std::vector<RayAngle> ray_directions(const RayLayout& layout);
inline std::vector<RayAngle> ray_directions(int polar_bins) {
  return ray_directions(RayLayout{polar_bins, 4});
}

Vec3 direction_from_angles(double polar, double azimuth);

/// Half the diagonal of the box, the far-bound target of its rays.
double scale_target(const Box3D& box);

/// Lower clamp applied to predicted scales before emission.
inline constexpr double kDefaultMinScale = 0.05;
double clamp_scale(double predicted, double min_scale = kDefaultMinScale);

RayBundle emit_rays(const Vec3& origin, double scale, const RayLayout& layout);
inline RayBundle emit_rays(const Vec3& origin, double scale, int polar_bins) {
  return emit_rays(origin, scale, RayLayout{polar_bins, 4});
}

}  // namespace raygroup
