#include "raygroup/eval.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "raygroup/errors.hpp"
#include "raygroup/spatial_index.hpp"

namespace raygroup {

double iou3d(const Box3D& a, const Box3D& b) {
  const Vec3 alo = a.min_corner();
  const Vec3 ahi = a.max_corner();
  const Vec3 blo = b.min_corner();
  const Vec3 bhi = b.max_corner();
  double inter = 1.0;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const double overlap = std::min(ahi[axis], bhi[axis]) - std::max(alo[axis], blo[axis]);
    if (overlap <= 0.0) return 0.0;
    inter *= overlap;
  }
  const double uni = a.volume() + b.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

std::vector<std::size_t> score_order(std::span<const Detection> detections) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  return order;
}

}  // namespace

std::vector<std::size_t> nms3d(std::span<const Detection> detections, double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw InvalidParameter("nms3d: threshold must lie in [0,1]");
  }
  std::vector<std::size_t> kept;
  for (std::size_t i : score_order(detections)) {
    const Detection& d = detections[i];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      const Detection& o = detections[k];
      return o.class_id == d.class_id && o.scene_id == d.scene_id &&
             iou3d(o.box, d.box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

double ap_from_curve(std::span<const PrPoint> points, ApInterpolation interpolation) {
  if (interpolation == ApInterpolation::kElevenPoint) {
    double total = 0.0;
    for (int step = 0; step <= 10; ++step) {
      const double level = step / 10.0;
      double best = 0.0;
      for (const auto& p : points) {
        if (p.recall >= level) best = std::max(best, p.precision);
      }
      total += best / 11.0;
    }
    return total;
  }
  // Sentinels (0, 0) and (1, 0), envelope from the right, then sum
  // precision over every recall increment.
  std::vector<double> rec{0.0};
  std::vector<double> prec{0.0};
  for (const auto& p : points) {
    rec.push_back(p.recall);
    prec.push_back(p.precision);
  }
  rec.push_back(1.0);
  prec.push_back(0.0);
  for (std::size_t i = prec.size() - 1; i > 0; --i) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < rec.size(); ++i) {
    if (rec[i] != rec[i - 1]) ap += (rec[i] - rec[i - 1]) * prec[i];
  }
  return std::clamp(ap, 0.0, 1.0);
}

PRCurve average_precision(std::span<const Detection> detections,
                          std::span<const GroundTruth> gt, double iou_threshold, int class_id,
                          ApInterpolation interpolation) {
  PRCurve curve;
  curve.class_id = class_id;
  std::vector<std::size_t> gt_of_class;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    if (gt[g].class_id == class_id) gt_of_class.push_back(g);
  }
  curve.num_gt = gt_of_class.size();
  std::vector<bool> matched(gt.size(), false);

  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i : score_order(detections)) {
    const Detection& d = detections[i];
    if (d.class_id != class_id) continue;
    ++seen;
    double best = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t g : gt_of_class) {
      if (gt[g].scene_id != d.scene_id) continue;
      const double iou = iou3d(d.box, gt[g].box);
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best > iou_threshold && !matched[best_gt]) {
      matched[best_gt] = true;
      ++tp;
    }
    const double recall =
        curve.num_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(curve.num_gt);
    curve.points.push_back({recall, static_cast<double>(tp) / static_cast<double>(seen)});
  }
  curve.num_detections = seen;
  curve.true_positives = tp;
  curve.ap = curve.num_gt == 0 ? 0.0 : ap_from_curve(curve.points, interpolation);
  return curve;
}

double mean_average_precision(std::span<const PRCurve> curves) {
  double total = 0.0;
  std::size_t classes = 0;
  for (const auto& c : curves) {
    if (c.num_gt == 0) continue;
    total += c.ap;
    ++classes;
  }
  if (classes == 0) throw EmptyEvaluation("mAP needs at least one class with ground truth");
  return total / static_cast<double>(classes);
}

double foreground_recall(std::span<const std::size_t> selected,
                         const SceneAnnotation& annotation) {
  if (selected.empty()) throw InvalidParameter("foreground_recall: empty selection");
  std::size_t on_objects = 0;
  for (std::size_t idx : selected) {
    if (idx >= annotation.point_instance_ids.size()) {
      throw InvalidParameter("foreground_recall: index " + std::to_string(idx) + " out of range");
    }
    if (annotation.point_instance_ids[idx] >= 0) ++on_objects;
  }
  return static_cast<double>(on_objects) / static_cast<double>(selected.size());
}

double surface_point_recall(std::span<const Vec3> anchor_positions, double radius,
                            const SceneAnnotation& annotation, const PointCloud& cloud,
                            int assigned_box) {
  if (!(radius > 0.0)) throw InvalidParameter("surface_point_recall: radius must be > 0");
  if (annotation.point_instance_ids.size() != cloud.size()) {
    throw ShapeMismatch("surface_point_recall: annotation does not match cloud");
  }
  if (assigned_box < 0) return 0.0;
  std::size_t total = 0;
  std::size_t covered = 0;
  const GridIndex anchors(anchor_positions, radius);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (annotation.point_instance_ids[i] != assigned_box) continue;
    ++total;
    if (anchors.any_within(cloud.position(i), radius, [](std::uint32_t) { return true; })) {
      ++covered;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
}

}  // namespace raygroup
