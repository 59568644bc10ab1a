#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "raygroup/sampling.hpp"
#include "raygroup/scene.hpp"

namespace raygroup {

/// Exact axis-aligned intersection over union.
double iou3d(const Box3D& a, const Box3D& b);

inline constexpr double kDefaultNmsThreshold = 0.25;

/// Greedy class-wise suppression. Returns kept indices in visiting order
/// (score descending, ties by lowest index). A detection is kept iff its IoU
/// with every kept detection of the same class (and scene) is <= threshold.
std::vector<std::size_t> nms3d(std::span<const Detection> detections,
                               double iou_threshold = kDefaultNmsThreshold);

enum class ApInterpolation { kAllPoint, kElevenPoint };

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  int class_id = 0;
  std::vector<PrPoint> points;  // one per detection, in score order
  double ap = 0.0;
  std::size_t num_gt = 0;
  std::size_t num_detections = 0;
  std::size_t true_positives = 0;
};

/// Detections of `class_id` are matched highest score first (ties by lowest
/// index) to the same-scene GT of that class with the largest IoU. A match
/// needs IoU strictly above the threshold and an unmatched GT; duplicates of
/// an already matched GT count as false positives.
PRCurve average_precision(std::span<const Detection> detections,
                          std::span<const GroundTruth> gt, double iou_threshold, int class_id,
                          ApInterpolation interpolation = ApInterpolation::kAllPoint);

/// Area under the monotonized precision envelope (or the 11-point mean).
double ap_from_curve(std::span<const PrPoint> points, ApInterpolation interpolation);

/// Unweighted mean AP over classes with at least one GT instance. Throws
/// EmptyEvaluation when no such class exists.
double mean_average_precision(std::span<const PRCurve> curves);

/// Fraction of selected points that belong to some object.
double foreground_recall(std::span<const std::size_t> selected,
                         const SceneAnnotation& annotation);

/// Fraction of the assigned object's points within `radius` of some anchor.
double surface_point_recall(std::span<const Vec3> anchor_positions, double radius,
                            const SceneAnnotation& annotation, const PointCloud& cloud,
                            int assigned_box);

}  // namespace raygroup
