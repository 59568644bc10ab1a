#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "raygroup/geometry.hpp"

namespace raygroup {

/// Tolerance (m) for point-in-box membership checks.
inline constexpr double kPointInBoxTolerance = 1e-6;

/// Scene positions plus optional per-point feature vectors of a fixed width.
/// Immutable after construction; the constructor enforces the invariants.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> positions);
  /// `features` is row-major, `positions.size() * feature_dim` values.
  PointCloud(std::vector<Vec3> positions, std::vector<double> features,
             std::size_t feature_dim);

  std::size_t size() const noexcept { return positions_.size(); }
  bool empty() const noexcept { return positions_.empty(); }
  bool has_features() const noexcept { return feature_dim_ > 0; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }

  std::span<const Vec3> positions() const noexcept { return positions_; }
  const Vec3& position(std::size_t i) const { return positions_.at(i); }
  std::span<const double> features() const noexcept { return features_; }
  std::span<const double> feature(std::size_t i) const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Vec3> positions_;
  std::vector<double> features_;
  std::size_t feature_dim_ = 0;
};

/// Axis-aligned box. `size` holds full per-axis extents.
struct Box3D {
  Vec3 center;
  Vec3 size{1.0, 1.0, 1.0};
  int class_id = 0;

  Box3D() = default;
  Box3D(Vec3 center_, Vec3 size_, int class_id_ = 0);

  Vec3 min_corner() const { return center - size * 0.5; }
  Vec3 max_corner() const { return center + size * 0.5; }
  double volume() const { return size.x * size.y * size.z; }
  bool contains(const Vec3& p, double tolerance = kPointInBoxTolerance) const;
  /// The 8 corners, x-major then y then z (bit 0 = x max, bit 1 = y, bit 2 = z).
  std::array<Vec3, 8> corners() const;

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

struct SceneAnnotation {
  std::vector<Box3D> boxes;
  /// One id per cloud point, -1 for background.
  std::vector<int> point_instance_ids;

  friend bool operator==(const SceneAnnotation&, const SceneAnnotation&) = default;
};

struct Scene {
  PointCloud cloud;
  SceneAnnotation annotation;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Throws ValidationError naming the first offending record.
void validate_scene(const Scene& scene);

struct Detection {
  Box3D box;
  double score = 0.0;
  int class_id = 0;
  /// Detections and ground truth only match within the same scene.
  int scene_id = 0;

  Detection() = default;
  Detection(Box3D box_, double score_, int class_id_, int scene_id_ = 0);
};

/// Ground-truth record used by evaluation.
struct GroundTruth {
  Box3D box;
  int class_id = 0;
  int scene_id = 0;
};

/// Resolves `<stem>.pts` / `<stem>.ann` from a stem or either file path
/// (`.scene` is accepted as a stem suffix too).
std::filesystem::path scene_stem(const std::filesystem::path& path);

Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// ASCII PLY 1.0 with `x y z red green blue` vertex properties.
void export_ply(std::span<const Vec3> points, std::span<const Rgb> colors,
                const std::filesystem::path& path);

std::vector<Detection> load_detections(const std::filesystem::path& path);
std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace raygroup
