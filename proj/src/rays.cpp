#include "raygroup/rays.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "raygroup/errors.hpp"

namespace raygroup {

namespace {

void check_layout(const RayLayout& layout) {
  if (layout.polar_bins < 2) {
    throw InvalidParameter("polar bin count must be >= 2, got " +
                           std::to_string(layout.polar_bins));
  }
  if (layout.azimuth_factor < 1) {
    throw InvalidParameter("azimuth_factor must be >= 1, got " +
                           std::to_string(layout.azimuth_factor));
  }
}

}  // namespace

int rays_in_bin(int p, const RayLayout& layout) {
  const int last = layout.polar_bins - 1;
  if (p < 0 || p > last) throw InvalidParameter("polar bin index out of range");
  // Poles always carry exactly one ray, independent of the factor.
  if (p == 0 || p == last) return 1;
  // 0 < p <= (P-1)/2, kept in integers: 2p <= P-1.
  if (2 * p <= last) return layout.azimuth_factor * p;
  return layout.azimuth_factor * (last - p);
}

int ray_count(const RayLayout& layout) {
  check_layout(layout);
  int total = 0;
  for (int p = 0; p < layout.polar_bins; ++p) total += rays_in_bin(p, layout);
  return total;
}

std::vector<RayAngle> ray_directions(const RayLayout& layout) {
  check_layout(layout);
  std::vector<RayAngle> out;
  out.reserve(static_cast<std::size_t>(ray_count(layout)));
  const double last = static_cast<double>(layout.polar_bins - 1);
  for (int p = 0; p < layout.polar_bins; ++p) {
    const double polar = std::numbers::pi * p / last;
    const int count = rays_in_bin(p, layout);
    for (int a = 0; a < count; ++a) {
      out.push_back({polar, 2.0 * std::numbers::pi * a / count, p, a});
    }
  }
  return out;
}

Vec3 direction_from_angles(double polar, double azimuth) {
  const double s = std::sin(polar);
  return {s * std::cos(azimuth), s * std::sin(azimuth), std::cos(polar)};
}

double scale_target(const Box3D& box) { return 0.5 * norm(box.size); }

double clamp_scale(double predicted, double min_scale) {
  if (!(min_scale >= 0.0)) throw InvalidParameter("min_scale must be >= 0");
  if (std::isnan(predicted)) return min_scale;
  return std::max(predicted, min_scale);
}

RayBundle emit_rays(const Vec3& origin, double scale, const RayLayout& layout) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw InvalidParameter("ray scale must be finite and >= 0");
  }
  if (!is_finite(origin)) throw InvalidParameter("ray origin must be finite");
  RayBundle bundle;
  bundle.origin = origin;
  bundle.polar_bins = layout.polar_bins;
  bundle.scale = scale;
  const auto angles = ray_directions(layout);
  bundle.rays.reserve(angles.size());
  for (const auto& ang : angles) {
    bundle.rays.push_back({ang.polar, ang.azimuth, direction_from_angles(ang.polar, ang.azimuth),
                           origin, scale, ang.bin_index, ang.azimuth_index});
  }
  return bundle;
}

}  // namespace raygroup
