#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "raygroup/errors.hpp"
#include "raygroup/eval.hpp"
#include "raygroup/pipeline.hpp"
#include "raygroup/rays.hpp"
#include "raygroup/sampling.hpp"
#include "raygroup/spatial_index.hpp"

namespace py = pybind11;
using namespace raygroup;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_points(const DoubleArray& a, const char* what) {
  if (a.ndim() != 2 || a.shape(1) != 3) {
    throw ValidationError(std::string(what) + " must have shape (n, 3)");
  }
  std::vector<Vec3> out(static_cast<std::size_t>(a.shape(0)));
  const double* p = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {p[3 * i], p[3 * i + 1], p[3 * i + 2]};
  return out;
}

Vec3 to_vec3(const DoubleArray& a, const char* what) {
  if (a.ndim() != 1 || a.shape(0) != 3) throw ValidationError(std::string(what) + " must have shape (3,)");
  return {a.data()[0], a.data()[1], a.data()[2]};
}

std::vector<double> to_vector(const DoubleArray& a, const char* what) {
  if (a.ndim() != 1) throw ValidationError(std::string(what) + " must be one-dimensional");
  return {a.data(), a.data() + a.shape(0)};
}

std::vector<Box3D> to_boxes(const DoubleArray& a, const char* what,
                            const std::vector<int>* classes = nullptr) {
  if (a.ndim() != 2 || a.shape(1) != 6) {
    throw ValidationError(std::string(what) + " must have shape (n, 6): center then size");
  }
  std::vector<Box3D> out;
  const double* p = a.data();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const double* r = p + 6 * i;
    const int cls = classes ? (*classes)[static_cast<std::size_t>(i)] : 0;
    out.emplace_back(Vec3{r[0], r[1], r[2]}, Vec3{r[3], r[4], r[5]}, cls);
  }
  return out;
}

std::vector<int> to_ints(const IndexArray& a, const char* what, std::size_t expected) {
  if (a.ndim() != 1 || static_cast<std::size_t>(a.shape(0)) != expected) {
    throw ValidationError(std::string(what) + " must have shape (" + std::to_string(expected) + ",)");
  }
  return {a.data(), a.data() + a.shape(0)};
}

py::array_t<double> points_array(const std::vector<Vec3>& pts) {
  py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    v(i, 0) = pts[i].x;
    v(i, 1) = pts[i].y;
    v(i, 2) = pts[i].z;
  }
  return out;
}

template <typename T>
py::array_t<std::int64_t> index_array(const std::vector<T>& idx) {
  py::array_t<std::int64_t> out(static_cast<py::ssize_t>(idx.size()));
  auto v = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < idx.size(); ++i) v(i) = static_cast<std::int64_t>(idx[i]);
  return out;
}

py::array_t<double> double_array(const std::vector<double>& values) {
  return py::array_t<double>(static_cast<py::ssize_t>(values.size()), values.data());
}

std::vector<std::uint8_t> to_masks(const IndexArray& a) {
  if (a.ndim() != 1) throw ValidationError("masks must be one-dimensional");
  std::vector<std::uint8_t> out;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const auto v = a.data()[i];
    if (v != 0 && v != 1) throw ValidationError("masks must be binary");
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

py::dict anchor_dict(const AnchorSet& set) {
  std::vector<double> t;
  for (const auto& a : set.anchors) t.push_back(a.t);
  py::dict d;
  d["positions"] = points_array(set.positions());
  d["t"] = double_array(t);
  d["per_ray"] = set.per_ray;
  d["num_rays"] = set.num_rays;
  return d;
}

std::vector<Detection> to_detections(const DoubleArray& boxes, const DoubleArray& scores,
                                     const IndexArray& classes) {
  const auto s = to_vector(scores, "scores");
  const auto c = to_ints(classes, "classes", s.size());
  const auto b = to_boxes(boxes, "boxes", &c);
  if (b.size() != s.size()) throw ValidationError("boxes and scores differ in length");
  std::vector<Detection> out;
  for (std::size_t i = 0; i < b.size(); ++i) out.emplace_back(b[i], s[i], c[i]);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ray-based grouping geometry engine";

  // Translators run newest first, so the base class goes in before its
  // subclasses.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ShapeMismatch>(m, "ShapeMismatch", base.ptr());
  py::register_exception<MissingTerm>(m, "MissingTerm", base.ptr());
  py::register_exception<NonFiniteTerm>(m, "NonFiniteTerm", base.ptr());
  py::register_exception<EmptyEvaluation>(m, "EmptyEvaluation", base.ptr());
  py::register_exception<GenerationFailure>(m, "GenerationFailure", base.ptr());

  m.def("ray_count", [](int P, int factor) { return ray_count(RayLayout{P, factor}); },
        py::arg("P") = 9, py::arg("azimuth_factor") = 4);

  m.def(
      "ray_directions",
      [](int P, int factor) {
        const auto dirs = ray_directions(RayLayout{P, factor});
        py::array_t<double> out({static_cast<py::ssize_t>(dirs.size()), py::ssize_t{2}});
        auto v = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < dirs.size(); ++i) {
          v(i, 0) = dirs[i].polar;
          v(i, 1) = dirs[i].azimuth;
        }
        return out;
      },
      py::arg("P") = 9, py::arg("azimuth_factor") = 4,
      "(N, 2) array of (polar, azimuth) in canonical order.");

  m.def(
      "emit_rays",
      [](const DoubleArray& origin, double scale, int P, int factor) {
        const RayBundle b = emit_rays(to_vec3(origin, "origin"), scale, RayLayout{P, factor});
        std::vector<Vec3> dirs;
        std::vector<Vec3> ends;
        for (const auto& r : b.rays) {
          dirs.push_back(r.direction);
          ends.push_back(r.point_at(1.0));
        }
        py::dict d;
        d["directions"] = points_array(dirs);
        d["endpoints"] = points_array(ends);
        return d;
      },
      py::arg("origin"), py::arg("scale"), py::arg("P") = 9, py::arg("azimuth_factor") = 4);

  m.def(
      "farthest_point_sampling",
      [](const DoubleArray& points, std::size_t m_count, std::size_t seed) {
        return index_array(farthest_point_indices(to_points(points, "points"), m_count, seed));
      },
      py::arg("points"), py::arg("m"), py::arg("seed_index") = 0);

  m.def(
      "foreground_biased_sampling",
      [](const DoubleArray& points, const DoubleArray& scores, std::size_t kappa,
         std::size_t alpha, std::size_t beta) {
        const auto set = foreground_biased_sampling(to_points(points, "points"),
                                                    to_vector(scores, "scores"),
                                                    FbsLayer{kappa, alpha, beta});
        std::vector<int> fg;
        for (auto s : set.sources) fg.push_back(s == SampleSource::kFbsForeground ? 1 : 0);
        return py::make_tuple(index_array(set.indices), index_array(fg));
      },
      py::arg("points"), py::arg("scores"), py::arg("kappa") = 1024, py::arg("alpha") = 896,
      py::arg("beta") = 128, "Returns (indices, foreground_sourced flags).");

  m.def(
      "coarse_anchors",
      [](const DoubleArray& origin, double scale, std::size_t kc, int P) {
        return anchor_dict(coarse_anchors(emit_rays(to_vec3(origin, "origin"), scale, P), kc));
      },
      py::arg("origin"), py::arg("scale"), py::arg("K_c") = 5, py::arg("P") = 9);

  m.def(
      "fine_sample_fractions",
      [](const IndexArray& masks, std::size_t kf) {
        return double_array(fine_sample_fractions(to_masks(masks), kf));
      },
      py::arg("masks"), py::arg("K_f") = 3);

  m.def(
      "fine_anchors",
      [](const IndexArray& masks, const DoubleArray& origin, double scale, std::size_t kc,
         std::size_t kf, int P) {
        const RayBundle b = emit_rays(to_vec3(origin, "origin"), scale, P);
        return anchor_dict(fine_anchors(to_masks(masks), kc, kf, b));
      },
      py::arg("masks"), py::arg("origin"), py::arg("scale"), py::arg("K_c") = 5,
      py::arg("K_f") = 3, py::arg("P") = 9);

  m.def(
      "ball_query",
      [](const DoubleArray& points, const DoubleArray& center, double radius,
         std::optional<std::size_t> max_k, std::optional<double> cell_size) {
        const GridIndex index(to_points(points, "points"), cell_size.value_or(radius));
        return index_array(index.ball_query(to_vec3(center, "center"), radius,
                                            max_k.value_or(kUnbounded)));
      },
      py::arg("points"), py::arg("center"), py::arg("radius"), py::arg("max_k") = py::none(),
      py::arg("cell_size") = py::none());

  m.def(
      "anchor_mask_labels",
      [](const DoubleArray& anchors, const DoubleArray& points, const IndexArray& instance_ids,
         const DoubleArray& boxes, double radius, int assigned_box) {
        const auto pts = to_points(points, "points");
        SceneAnnotation ann{to_boxes(boxes, "boxes"),
                            to_ints(instance_ids, "instance_ids", pts.size())};
        AnchorSet set;
        const auto positions = to_points(anchors, "anchors");
        set.num_rays = positions.size();
        set.per_ray = 1;
        for (const auto& p : positions) set.anchors.push_back(AnchorPoint{p});
        const GridIndex index(pts, radius);
        return index_array(anchor_mask_labels(set, ann, index, radius, assigned_box));
      },
      py::arg("anchors"), py::arg("points"), py::arg("instance_ids"), py::arg("boxes"),
      py::arg("radius") = 0.2, py::arg("assigned_box") = 0);

  m.def(
      "iou3d",
      [](const DoubleArray& a, const DoubleArray& b) {
        const auto box = [](const DoubleArray& x, const char* what) {
          const auto v = to_vector(x, what);
          if (v.size() != 6) throw ValidationError(std::string(what) + " must have shape (6,)");
          return Box3D(Vec3{v[0], v[1], v[2]}, Vec3{v[3], v[4], v[5]}, 0);
        };
        return iou3d(box(a, "a"), box(b, "b"));
      },
      py::arg("a"), py::arg("b"), "IoU of two (6,) boxes: center then size.");

  m.def(
      "nms3d",
      [](const DoubleArray& boxes, const DoubleArray& scores, const IndexArray& classes,
         double threshold) {
        return index_array(nms3d(to_detections(boxes, scores, classes), threshold));
      },
      py::arg("boxes"), py::arg("scores"), py::arg("classes"),
      py::arg("iou_threshold") = kDefaultNmsThreshold);

  m.def(
      "average_precision",
      [](const DoubleArray& det_boxes, const DoubleArray& det_scores, const IndexArray& det_classes,
         const DoubleArray& gt_boxes, const IndexArray& gt_classes, double threshold,
         int class_id) {
        const auto dets = to_detections(det_boxes, det_scores, det_classes);
        const auto gc = to_ints(gt_classes, "gt_classes",
                                gt_boxes.ndim() == 2 ? static_cast<std::size_t>(gt_boxes.shape(0)) : 0);
        std::vector<GroundTruth> gt;
        for (const auto& b : to_boxes(gt_boxes, "gt_boxes", &gc)) gt.push_back({b, b.class_id, 0});
        const PRCurve curve = average_precision(dets, gt, threshold, class_id);
        std::vector<double> recall;
        std::vector<double> precision;
        for (const auto& p : curve.points) {
          recall.push_back(p.recall);
          precision.push_back(p.precision);
        }
        py::dict d;
        d["ap"] = curve.ap;
        d["recall"] = double_array(recall);
        d["precision"] = double_array(precision);
        d["num_gt"] = curve.num_gt;
        return d;
      },
      py::arg("det_boxes"), py::arg("det_scores"), py::arg("det_classes"), py::arg("gt_boxes"),
      py::arg("gt_classes"), py::arg("iou_threshold") = 0.25, py::arg("class_id") = 0);

  m.def(
      "run_pipeline",
      [](const std::string& config, const std::string& scene, const std::string& out, bool ply) {
        return dump_report(run_pipeline(load_config(config), scene, out, {ply}));
      },
      py::arg("config"), py::arg("scene"), py::arg("out"), py::arg("ply") = false,
      "Runs the pipeline and returns the report.json text.");

  m.def(
      "run_eval",
      [](const std::string& dets, const std::string& gt, std::vector<double> thresholds) {
        EvalOptions options;
        options.iou_thresholds = std::move(thresholds);
        return dump_report(run_eval(dets, gt, options));
      },
      py::arg("dets"), py::arg("gt"), py::arg("iou_thresholds") = std::vector<double>{0.25, 0.5});
}
