#include "raygroup/scene.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>

#include "json.hpp"

#include "raygroup/errors.hpp"

namespace raygroup {

using nlohmann::json;

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kValidation: return "ValidationError";
    case ErrorKind::kInvalidParameter: return "InvalidParameter";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kMissingTerm: return "MissingTerm";
    case ErrorKind::kNonFiniteTerm: return "NonFiniteTerm";
    case ErrorKind::kEmptyEvaluation: return "EmptyEvaluation";
    case ErrorKind::kGenerationFailure: return "GenerationFailure";
  }
  return "Error";
}

void throw_error(ErrorKind kind, const std::string& message) {
  switch (kind) {
    case ErrorKind::kParse: throw ParseError(message);
    case ErrorKind::kValidation: throw ValidationError(message);
    case ErrorKind::kInvalidParameter: throw InvalidParameter(message);
    case ErrorKind::kIo: throw IoError(message);
    case ErrorKind::kShapeMismatch: throw ShapeMismatch(message);
    case ErrorKind::kMissingTerm: throw MissingTerm(message);
    case ErrorKind::kNonFiniteTerm: throw NonFiniteTerm(message);
    case ErrorKind::kEmptyEvaluation: throw EmptyEvaluation(message);
    case ErrorKind::kGenerationFailure: throw GenerationFailure(message);
  }
  throw Error(kind, message);
}

// ---------------------------------------------------------------- PointCloud

PointCloud::PointCloud(std::vector<Vec3> positions)
    : PointCloud(std::move(positions), {}, 0) {}

PointCloud::PointCloud(std::vector<Vec3> positions, std::vector<double> features,
                       std::size_t feature_dim)
    : positions_(std::move(positions)),
      features_(std::move(features)),
      feature_dim_(feature_dim) {
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (!is_finite(positions_[i])) {
      throw ValidationError("point " + std::to_string(i) + ": non-finite coordinate");
    }
  }
  if (feature_dim_ == 0 && !features_.empty()) {
    throw ValidationError("features given with feature_dim 0");
  }
  if (features_.size() != positions_.size() * feature_dim_) {
    throw ValidationError("feature count " + std::to_string(features_.size()) +
                          " does not match " + std::to_string(positions_.size()) +
                          " points x " + std::to_string(feature_dim_) + " channels");
  }
}

std::span<const double> PointCloud::feature(std::size_t i) const {
  if (i >= size() || feature_dim_ == 0) {
    throw InvalidParameter("feature index " + std::to_string(i) + " out of range");
  }
  return std::span<const double>(features_).subspan(i * feature_dim_, feature_dim_);
}

// --------------------------------------------------------------------- Box3D

Box3D::Box3D(Vec3 center_, Vec3 size_, int class_id_)
    : center(center_), size(size_), class_id(class_id_) {
  if (!is_finite(center) || !is_finite(size)) {
    throw ValidationError("box has non-finite center or size");
  }
  if (!(size.x > 0.0 && size.y > 0.0 && size.z > 0.0)) {
    throw ValidationError("box size components must be > 0");
  }
}

bool Box3D::contains(const Vec3& p, double tolerance) const {
  const Vec3 lo = min_corner();
  const Vec3 hi = max_corner();
  for (std::size_t a = 0; a < 3; ++a) {
    if (p[a] < lo[a] - tolerance || p[a] > hi[a] + tolerance) return false;
  }
  return true;
}

std::array<Vec3, 8> Box3D::corners() const {
  const Vec3 lo = min_corner();
  const Vec3 hi = max_corner();
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    out[i] = {(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z};
  }
  return out;
}

Detection::Detection(Box3D box_, double score_, int class_id_, int scene_id_)
    : box(box_), score(score_), class_id(class_id_), scene_id(scene_id_) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw ValidationError("detection score " + format_double(score) + " outside [0,1]");
  }
}

void validate_scene(const Scene& scene) {
  const auto& ids = scene.annotation.point_instance_ids;
  const auto& boxes = scene.annotation.boxes;
  if (ids.size() != scene.cloud.size()) {
    throw ValidationError("instance_ids has " + std::to_string(ids.size()) +
                          " entries for " + std::to_string(scene.cloud.size()) + " points");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < -1) {
      throw ValidationError("point " + std::to_string(i) + ": instance id " +
                            std::to_string(id) + " is negative but not -1");
    }
    if (id < 0) continue;
    if (static_cast<std::size_t>(id) >= boxes.size()) {
      throw ValidationError("point " + std::to_string(i) + ": instance id " +
                            std::to_string(id) + " references missing box (" +
                            std::to_string(boxes.size()) + " boxes)");
    }
    if (!boxes[id].contains(scene.cloud.position(i))) {
      throw ValidationError("point " + std::to_string(i) + ": lies outside its box " +
                            std::to_string(id));
    }
  }
}

// ------------------------------------------------------------------ text I/O

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view token, const std::string& where) {
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError(where + ": cannot parse number '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

Vec3 vec3_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError(where + ": expected an array of 3 numbers");
  }
  Vec3 v;
  double* dst[3] = {&v.x, &v.y, &v.z};
  for (std::size_t a = 0; a < 3; ++a) {
    if (!j[a].is_number()) throw ParseError(where + ": expected a number");
    *dst[a] = j[a].get<double>();
  }
  return v;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

int int_field(const json& rec, const char* key, const std::string& where, bool required,
              int fallback = 0) {
  if (!rec.contains(key)) {
    if (required) throw ParseError(where + ": missing '" + key + "'");
    return fallback;
  }
  if (!rec[key].is_number_integer()) throw ParseError(where + ": '" + key + "' must be an integer");
  return rec[key].get<int>();
}

Box3D box_from_json(const json& rec, const std::string& where) {
  if (!rec.is_object()) throw ParseError(where + ": expected an object");
  if (!rec.contains("center") || !rec.contains("size")) {
    throw ParseError(where + ": missing 'center' or 'size'");
  }
  const Vec3 center = vec3_from_json(rec["center"], where + ".center");
  const Vec3 size = vec3_from_json(rec["size"], where + ".size");
  const int class_id = int_field(rec, "class_id", where, true);
  try {
    return Box3D(center, size, class_id);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

const json& record_list(const json& doc, const char* key, const std::string& where) {
  if (doc.is_array()) return doc;
  if (doc.is_object() && doc.contains(key) && doc[key].is_array()) return doc[key];
  throw ParseError(where + ": expected a JSON array or an object with '" + key + "'");
}

}  // namespace

std::filesystem::path scene_stem(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".pts" || ext == ".ann" || ext == ".scene") {
    auto stem = path;
    stem.replace_extension();
    return stem;
  }
  return path;
}

Scene load_scene(const std::filesystem::path& path) {
  const auto stem = scene_stem(path);
  auto pts_path = stem;
  pts_path += ".pts";
  auto ann_path = stem;
  ann_path += ".ann";

  const std::string ann_name = ann_path.filename().string();
  const json ann = parse_json(read_file(ann_path), ann_name);
  if (!ann.is_object()) throw ParseError(ann_name + ": expected a JSON object");
  for (const auto& [key, _] : ann.items()) {
    if (key != "boxes" && key != "instance_ids" && key != "feature_dim") {
      throw ParseError(ann_name + ": unknown key '" + key + "'");
    }
  }
  const std::size_t feature_dim =
      static_cast<std::size_t>(int_field(ann, "feature_dim", ann_name, false, 0));

  SceneAnnotation annotation;
  if (ann.contains("boxes")) {
    if (!ann["boxes"].is_array()) throw ParseError(ann_name + ": 'boxes' must be an array");
    for (std::size_t i = 0; i < ann["boxes"].size(); ++i) {
      annotation.boxes.push_back(
          box_from_json(ann["boxes"][i], ann_name + ": boxes[" + std::to_string(i) + "]"));
    }
  }
  if (ann.contains("instance_ids")) {
    const auto& ids = ann["instance_ids"];
    if (!ids.is_array()) throw ParseError(ann_name + ": 'instance_ids' must be an array");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!ids[i].is_number_integer()) {
        throw ParseError(ann_name + ": instance_ids[" + std::to_string(i) + "] is not an integer");
      }
      annotation.point_instance_ids.push_back(ids[i].get<int>());
    }
  }

  const std::string pts_name = pts_path.filename().string();
  const std::string text = read_file(pts_path);
  std::vector<Vec3> positions;
  std::vector<double> features;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    const std::string where = pts_name + ":" + std::to_string(line_no);
    if (tokens.size() != 3 + feature_dim) {
      throw ParseError(where + ": expected " + std::to_string(3 + feature_dim) +
                       " values, found " + std::to_string(tokens.size()));
    }
    positions.push_back({parse_double(tokens[0], where), parse_double(tokens[1], where),
                         parse_double(tokens[2], where)});
    for (std::size_t c = 0; c < feature_dim; ++c) {
      features.push_back(parse_double(tokens[3 + c], where));
    }
  }

  Scene scene;
  try {
    scene.cloud = PointCloud(std::move(positions), std::move(features), feature_dim);
  } catch (const ValidationError& e) {
    throw ValidationError(pts_name + ": " + e.what());
  }
  if (!ann.contains("instance_ids")) {
    annotation.point_instance_ids.assign(scene.cloud.size(), -1);
  }
  scene.annotation = std::move(annotation);
  try {
    validate_scene(scene);
  } catch (const ValidationError& e) {
    throw ValidationError(ann_name + ": " + e.what());
  }
  return scene;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  validate_scene(scene);
  const auto stem = scene_stem(path);
  auto pts_path = stem;
  pts_path += ".pts";
  auto ann_path = stem;
  ann_path += ".ann";

  std::string pts;
  const std::size_t dim = scene.cloud.feature_dim();
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    const Vec3& p = scene.cloud.position(i);
    pts += format_double(p.x) + ' ' + format_double(p.y) + ' ' + format_double(p.z);
    if (dim > 0) {
      for (double f : scene.cloud.feature(i)) {
        pts += ' ';
        pts += format_double(f);
      }
    }
    pts += '\n';
  }

  json boxes = json::array();
  for (const auto& b : scene.annotation.boxes) {
    boxes.push_back({{"center", vec3_to_json(b.center)},
                     {"size", vec3_to_json(b.size)},
                     {"class_id", b.class_id}});
  }
  json ann = {{"boxes", boxes},
              {"instance_ids", scene.annotation.point_instance_ids},
              {"feature_dim", dim}};

  write_file(pts_path, pts);
  write_file(ann_path, ann.dump(2) + "\n");
}

void export_ply(std::span<const Vec3> points, std::span<const Rgb> colors,
                const std::filesystem::path& path) {
  if (points.size() != colors.size()) {
    throw ShapeMismatch("export_ply: " + std::to_string(colors.size()) + " colors for " +
                        std::to_string(points.size()) + " points");
  }
  std::string out;
  out += "ply\nformat ascii 1.0\n";
  out += "element vertex " + std::to_string(points.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    out += format_double(p.x) + ' ' + format_double(p.y) + ' ' + format_double(p.z) + ' ' +
           std::to_string(colors[i][0]) + ' ' + std::to_string(colors[i][1]) + ' ' +
           std::to_string(colors[i][2]) + '\n';
  }
  write_file(path, out);
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  const json doc = parse_json(read_file(path), name);
  const json& list = record_list(doc, "detections", name);
  std::vector<Detection> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = name + ": detections[" + std::to_string(i) + "]";
    const Box3D box = box_from_json(list[i], where);
    if (!list[i].contains("score") || !list[i]["score"].is_number()) {
      throw ParseError(where + ": missing numeric 'score'");
    }
    const int scene_id = int_field(list[i], "scene_id", where, false, 0);
    try {
      out.emplace_back(box, list[i]["score"].get<double>(), box.class_id, scene_id);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  const json doc = parse_json(read_file(path), name);
  const json& list = record_list(doc, "boxes", name);
  std::vector<GroundTruth> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = name + ": boxes[" + std::to_string(i) + "]";
    const Box3D box = box_from_json(list[i], where);
    out.push_back({box, box.class_id, int_field(list[i], "scene_id", where, false, 0)});
  }
  return out;
}

}  // namespace raygroup
