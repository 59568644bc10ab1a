#include "raygroup/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "raygroup/errors.hpp"
#include "raygroup/spatial_index.hpp"

namespace raygroup {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.filename().string() + ": " + e.what());
  }
}

// Typed field readers for config-style objects. Ill-typed values are
// validation errors naming the key.
struct FieldReader {
  const json& doc;
  std::string where;

  const json& at(const char* key) const { return doc.at(key); }
  bool has(const char* key) const { return doc.contains(key); }

  double number(const char* key) const {
    if (!at(key).is_number()) throw ValidationError(where + ": '" + key + "' must be a number");
    return at(key).get<double>();
  }
  std::size_t count(const char* key) const {
    if (!at(key).is_number_unsigned() && !(at(key).is_number_integer() && at(key).get<long long>() >= 0)) {
      throw ValidationError(where + ": '" + key + "' must be a non-negative integer");
    }
    return at(key).get<std::size_t>();
  }
  int integer(const char* key) const {
    if (!at(key).is_number_integer()) throw ValidationError(where + ": '" + key + "' must be an integer");
    return at(key).get<int>();
  }
  std::string string(const char* key) const {
    if (!at(key).is_string()) throw ValidationError(where + ": '" + key + "' must be a string");
    return at(key).get<std::string>();
  }
  Vec3 vec3(const json& j, const std::string& name) const {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
        !j[2].is_number()) {
      throw ValidationError(where + ": '" + name + "' must be an array of 3 numbers");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  }
};

void reject_unknown(const json& doc, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!doc.is_object()) throw ValidationError(where + ": expected a JSON object");
  for (const auto& [key, _] : doc.items()) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return key == k; });
    if (!ok) throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

StandInSource parse_source(const std::string& s, const std::string& where) {
  if (s == "oracle") return StandInSource::kOracle;
  if (s == "file") return StandInSource::kFile;
  throw ValidationError(where + ": source must be 'oracle' or 'file', got '" + s + "'");
}

const char* source_name(StandInSource s) { return s == StandInSource::kOracle ? "oracle" : "file"; }

// Runs one pipeline stage, prefixing any library error with the stage name.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw_error(e.kind(), std::string("stage '") + name + "': " + e.what());
  }
}

std::string fnv1a_hex(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, h, 16);
  std::string out(buf, res.ptr);
  return std::string(16 - out.size(), '0') + out;
}

ordered_json vec3_json(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

std::vector<double> load_scores_file(const std::filesystem::path& path, std::size_t expected) {
  const std::string text = read_text(path);
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto first = line.find_first_not_of(" \t");
    const auto last = line.find_last_not_of(" \t\r");
    double v = 0.0;
    const char* b = line.data() + first;
    const char* e = line.data() + last + 1;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) {
      throw ParseError(path.filename().string() + ":" + std::to_string(line_no) +
                       ": cannot parse score");
    }
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError(path.filename().string() + ":" + std::to_string(line_no) +
                            ": score outside [0,1]");
    }
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw ValidationError(path.filename().string() + ": " + std::to_string(out.size()) +
                          " scores for " + std::to_string(expected) + " points");
  }
  return out;
}

std::vector<Vec3> load_votes_file(const std::filesystem::path& path, std::size_t expected) {
  // Same record syntax as a feature-less .pts file.
  const std::string text = read_text(path);
  std::vector<Vec3> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<double> vals;
    std::string tok;
    while (fields >> tok) {
      double v = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw ParseError(path.filename().string() + ":" + std::to_string(line_no) +
                         ": cannot parse vote coordinate");
      }
      vals.push_back(v);
    }
    if (vals.empty()) continue;
    if (vals.size() != 3) {
      throw ParseError(path.filename().string() + ":" + std::to_string(line_no) +
                       ": expected 3 values");
    }
    out.push_back({vals[0], vals[1], vals[2]});
  }
  if (out.size() != expected) {
    throw ValidationError(path.filename().string() + ": " + std::to_string(out.size()) +
                          " votes for " + std::to_string(expected) + " points");
  }
  return out;
}

Rgb instance_color(int id) {
  if (id < 0) return {128, 128, 128};
  static constexpr Rgb palette[] = {{230, 25, 75},  {60, 180, 75},  {0, 130, 200},
                                    {245, 130, 48}, {145, 30, 180}, {70, 240, 240},
                                    {240, 50, 230}, {210, 245, 60}};
  return palette[static_cast<std::size_t>(id) % std::size(palette)];
}

struct PlyDump {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;
  void add(const Vec3& p, Rgb c) {
    points.push_back(p);
    colors.push_back(c);
  }
};

struct PipelineRun {
  ordered_json report;
  PlyDump seeds;
  PlyDump anchors;
};

PipelineRun execute(const PipelineConfig& config, const Scene& scene,
                    const std::string& scene_name) {
  config.validate();
  const PointCloud& cloud = scene.cloud;
  const SceneAnnotation& annotation = scene.annotation;
  const std::size_t n = cloud.size();
  const RayLayout layout = config.ray_layout();
  const int rays_per_bundle = ray_count(layout);

  PipelineRun run;
  ordered_json& report = run.report;
  report["version"] = 1;
  report["scene"] = {{"name", scene_name},
                     {"points", n},
                     {"boxes", annotation.boxes.size()}};
  report["config"] = config_to_json(config);
  report["paper_parity"] = {
      {"N", {{"effective", rays_per_bundle}, {"reference", 66}, {"match", rays_per_bundle == 66}}},
      {"K_c",
       {{"effective", config.coarse_count}, {"reference", 5}, {"match", config.coarse_count == 5}}},
      {"K_f", {{"effective", config.fine_count}, {"reference", 3}, {"match", config.fine_count == 3}}},
      {"M",
       {{"effective", config.num_candidates},
        {"reference", 256},
        {"match", config.num_candidates == 256}}}};

  // Stand-ins for the learned heads.
  const std::vector<double> scores = stage("scores", [&] {
    return config.score_source == StandInSource::kOracle
               ? oracle_scores(annotation)
               : load_scores_file(config.scores_path, n);
  });
  const std::vector<Vec3> votes = stage("votes", [&] {
    return config.vote_source == StandInSource::kOracle ? oracle_votes(cloud, annotation)
                                                        : load_votes_file(config.votes_path, n);
  });
  const PointCloud featurized = stage("featurize", [&] { return toy_featurizer(cloud); });
  const std::size_t dim = featurized.feature_dim();

  // First set-abstraction sample: plain FPS. These positions are also the
  // upsampling targets for anchor features.
  std::vector<std::size_t> sa1;
  if (n > 0) {
    sa1 = stage("sa1_fps", [&] {
      const std::size_t start = static_cast<std::size_t>(SplitMix64(config.rng_seed).below(n));
      return farthest_point_indices(cloud.positions(), std::min(config.sa1_points, n), start);
    });
  }

  ordered_json layers = ordered_json::array();
  std::vector<FbsLayerPrediction> fbs_predictions;
  std::vector<std::size_t> current = sa1;
  for (const FbsLayer& layer : config.fbs_schedule) {
    ordered_json entry = {{"kappa", layer.kappa},
                          {"alpha", layer.alpha},
                          {"beta", layer.beta},
                          {"input", current.size()}};
    const std::size_t m = current.size();
    if (layer.kappa > m || layer.beta > m - std::min(layer.kappa, m) || layer.alpha + layer.beta == 0) {
      entry["skipped"] = true;
      entry["output"] = m;
      layers.push_back(entry);
      continue;
    }
    std::vector<Vec3> pts;
    std::vector<double> sc;
    FbsLayerPrediction pred;
    for (std::size_t idx : current) {
      pts.push_back(cloud.position(idx));
      sc.push_back(scores[idx]);
      pred.foreground_probs.push_back(scores[idx]);
      pred.labels.push_back(annotation.point_instance_ids[idx] >= 0 ? 1 : 0);
    }
    fbs_predictions.push_back(std::move(pred));
    const ScoredSampleSet picked = stage("fbs", [&] { return foreground_biased_sampling(pts, sc, layer); });
    std::vector<std::size_t> next;
    for (std::size_t local : picked.indices) next.push_back(current[local]);
    entry["skipped"] = false;
    entry["output"] = next.size();
    entry["foreground_sourced"] = picked.count(SampleSource::kFbsForeground);
    entry["background_sourced"] = picked.count(SampleSource::kFbsBackground);
    entry["foreground_recall"] = foreground_recall(next, annotation);
    // Plain FPS with the same budget over the same input, for comparison.
    const auto fps_local = farthest_point_indices(pts, next.size(), 0);
    std::vector<std::size_t> fps_global;
    for (std::size_t local : fps_local) fps_global.push_back(current[local]);
    entry["fps_foreground_recall"] = foreground_recall(fps_global, annotation);
    layers.push_back(entry);
    current = std::move(next);
  }
  const std::vector<std::size_t>& seeds = current;

  ordered_json sampling;
  sampling["sa1_indices"] = sa1;
  sampling["layers"] = layers;
  sampling["seed_count"] = seeds.size();
  sampling["seed_indices"] = seeds;
  sampling["seed_foreground_recall"] =
      seeds.empty() ? 0.0 : foreground_recall(seeds, annotation);
  report["sampling"] = sampling;

  std::vector<Vec3> seed_positions;
  std::vector<Vec3> seed_votes;
  std::vector<double> seed_features;
  for (std::size_t idx : seeds) {
    seed_positions.push_back(cloud.position(idx));
    seed_votes.push_back(votes[idx]);
    const auto f = featurized.feature(idx);
    seed_features.insert(seed_features.end(), f.begin(), f.end());
    const bool fg = annotation.point_instance_ids[idx] >= 0;
    run.seeds.add(cloud.position(idx), fg ? Rgb{220, 40, 40} : Rgb{40, 80, 220});
  }

  const std::size_t m = std::min(config.num_candidates, seeds.size());
  const auto candidates = stage("sample_candidates", [&] {
    return sample_candidates(seed_votes, seed_positions, m, config.candidate_mode);
  });
  std::vector<Vec3> centers;
  for (std::size_t c : candidates) centers.push_back(seed_votes[c]);
  std::vector<VoteCluster> clusters = stage("group_votes", [&] {
    return group_votes(centers, seed_votes, config.vote_radius, seed_features, dim);
  });
  stage("assign_positive_clusters", [&] {
    assign_positive_clusters(clusters, annotation.boxes, config.positive_radius);
  });

  // Seed features upsampled onto the SA1 positions; anchors pool from these.
  std::vector<Vec3> sa1_positions;
  for (std::size_t idx : sa1) sa1_positions.push_back(cloud.position(idx));
  std::vector<double> sa1_features;
  if (!seeds.empty()) {
    sa1_features = stage("interpolate_features", [&] {
      const PointCloud seed_cloud(seed_positions, seed_features, dim);
      return interpolate_features(seed_cloud, sa1_positions,
                                  std::min(config.interp_k, seed_positions.size()));
    });
  }
  const GridIndex sa1_index(sa1_positions, config.anchor_radius);
  const GridIndex cloud_index(cloud.positions(), config.anchor_radius);

  // Occupancy of an anchor's ball query stands in for the mask classifier.
  const auto occupancy = [](std::size_t found, std::size_t max_k) {
    return std::clamp(static_cast<double>(found) / static_cast<double>(max_k), 0.05, 0.95);
  };

  ordered_json per_cluster = ordered_json::array();
  std::vector<double> scale_predictions;
  std::vector<double> coarse_probs;
  std::vector<std::uint8_t> coarse_truth;
  std::vector<double> fine_probs;
  std::vector<std::uint8_t> fine_truth;
  double recall_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const VoteCluster& cluster = clusters[ci];
    const bool positive = cluster.positive.value_or(false);
    const double scale = clamp_scale(positive ? *cluster.scale : config.min_scale, config.min_scale);
    scale_predictions.push_back(scale);

    const RayBundle bundle = stage("emit_rays", [&] { return emit_rays(cluster.center, scale, layout); });
    AnchorSet coarse = stage("coarse_anchors", [&] { return coarse_anchors(bundle, config.coarse_count); });
    std::vector<std::size_t> coarse_found;
    const auto coarse_features = stage("coarse_features", [&] {
      return pool_anchor_features(coarse, sa1_index, sa1_features, dim, config.anchor_radius,
                                  config.coarse_max_k, &coarse_found);
    });
    const auto coarse_labels = stage("anchor_mask_labels", [&] {
      return anchor_mask_labels(coarse, annotation, cloud_index, config.anchor_radius,
                                cluster.assigned_box);
    });
    AnchorSet fine = stage("fine_anchors", [&] {
      return fine_anchors(coarse_labels, config.coarse_count, config.fine_count, bundle);
    });
    std::vector<std::size_t> fine_found;
    const auto fine_features = stage("fine_features", [&] {
      return pool_anchor_features(fine, sa1_index, sa1_features, dim, config.anchor_radius,
                                  config.fine_max_k, &fine_found);
    });
    const auto fine_labels = stage("anchor_mask_labels", [&] {
      return anchor_mask_labels(fine, annotation, cloud_index, config.anchor_radius,
                                cluster.assigned_box);
    });
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      coarse.anchors[i].mask = coarse_labels[i];
      coarse_probs.push_back(occupancy(coarse_found[i], config.coarse_max_k));
      coarse_truth.push_back(coarse_labels[i]);
    }
    for (std::size_t i = 0; i < fine.size(); ++i) {
      fine.anchors[i].mask = fine_labels[i];
      fine_probs.push_back(occupancy(fine_found[i], config.fine_max_k));
      fine_truth.push_back(fine_labels[i]);
    }

    const auto [coarse_concat, fine_concat] = stage("ordered_concat", [&] {
      const RayFeatureBlock cb = mask_features(coarse_features, coarse_labels, bundle.size(),
                                               config.coarse_count, dim, AnchorStage::kCoarse);
      const RayFeatureBlock fb = mask_features(fine_features, fine_labels, bundle.size(),
                                               config.fine_count, dim, AnchorStage::kFine);
      return std::pair{ordered_concat(cb), ordered_concat(fb)};
    });

    const auto count_ones = [](const std::vector<std::uint8_t>& v) {
      return static_cast<std::size_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
    };
    ordered_json entry = {{"center", vec3_json(cluster.center)},
                          {"members", cluster.member_seed_indices.size()},
                          {"positive", positive},
                          {"assigned_box", cluster.assigned_box},
                          {"scale", scale},
                          {"rays", bundle.size()},
                          {"coarse_anchors", coarse.size()},
                          {"fine_anchors", fine.size()},
                          {"coarse_positive", count_ones(coarse_labels)},
                          {"fine_positive", count_ones(fine_labels)},
                          {"coarse_concat_length", coarse_concat.size()},
                          {"fine_concat_length", fine_concat.size()},
                          {"coarse_concat_fnv1a", fnv1a_hex(coarse_concat)},
                          {"fine_concat_fnv1a", fnv1a_hex(fine_concat)}};
    if (positive) {
      std::vector<Vec3> all = coarse.positions();
      const auto fp = fine.positions();
      all.insert(all.end(), fp.begin(), fp.end());
      const double recall = surface_point_recall(all, config.anchor_radius, annotation, cloud,
                                                 cluster.assigned_box);
      entry["surface_point_recall"] = recall;
      recall_sum += recall;
      ++positives;
      for (const auto* set : {&coarse, &fine}) {
        for (const auto& a : set->anchors) {
          run.anchors.add(a.position, a.mask.value_or(0) ? Rgb{40, 200, 60} : Rgb{90, 90, 90});
        }
      }
    }
    per_cluster.push_back(entry);
  }

  report["clusters"] = {{"count", clusters.size()},
                        {"positive", positives},
                        {"rays_per_cluster", rays_per_bundle},
                        {"coarse_anchors_per_cluster", static_cast<std::size_t>(rays_per_bundle) * config.coarse_count},
                        {"fine_anchors_per_cluster", static_cast<std::size_t>(rays_per_bundle) * config.fine_count},
                        {"per_cluster", per_cluster}};
  report["recall"] = {
      {"seed_foreground_recall", report["sampling"]["seed_foreground_recall"]},
      {"mean_surface_point_recall", positives == 0 ? 0.0 : recall_sum / static_cast<double>(positives)}};

  // Loss report. Proposal-head terms have no stand-in and are reported as 0.
  double vote_reg = 0.0;
  std::size_t fg_seeds = 0;
  for (std::size_t idx : seeds) {
    const int id = annotation.point_instance_ids[idx];
    if (id < 0) continue;
    vote_reg += distance(votes[idx], annotation.boxes[static_cast<std::size_t>(id)].center);
    ++fg_seeds;
  }
  if (fg_seeds > 0) vote_reg /= static_cast<double>(fg_seeds);

  std::map<std::string, double> terms;
  for (const auto& name : loss_term_names()) terms[name] = 0.0;
  terms["vote_reg"] = vote_reg;
  terms["fbs"] = fbs_loss(fbs_predictions);
  terms["scale_reg"] = scale_loss(clusters, scale_predictions);
  terms["c_cls"] = mean_binary_cross_entropy(coarse_probs, coarse_truth);
  terms["f_cls"] = mean_binary_cross_entropy(fine_probs, fine_truth);
  const CompositeLoss loss = stage("losses", [&] { return composite_loss(terms, config.loss_weights); });
  ordered_json raw;
  for (const auto& [k, v] : terms) raw[k] = v;
  ordered_json weighted;
  for (const auto& [k, v] : loss.breakdown) weighted[k] = v;
  report["losses"] = {{"terms", raw},
                      {"weighted", weighted},
                      {"total", loss.total},
                      {"not_computed", {"obj_cls", "sem_cls", "size_reg", "corner", "angle_cls", "angle_reg"}}};
  return run;
}

}  // namespace

void PipelineConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ValidationError("config: " + msg); };
  if (polar_bins < 2) fail("P must be >= 2");
  if (azimuth_factor < 1) fail("azimuth_factor must be >= 1");
  if (coarse_count < 1) fail("K_c must be >= 1");
  if (fine_count < 1) fail("K_f must be >= 1");
  if (!(anchor_radius > 0.0)) fail("anchor_radius must be > 0");
  if (coarse_max_k < 1 || fine_max_k < 1) fail("max_k values must be >= 1");
  if (!(vote_radius > 0.0)) fail("vote_radius must be > 0");
  if (!(positive_radius >= 0.0)) fail("positive_radius must be >= 0");
  if (!(nms_threshold >= 0.0 && nms_threshold <= 1.0)) fail("nms_threshold must lie in [0,1]");
  for (double t : iou_thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) fail("iou_thresholds must lie in [0,1]");
  }
  for (const auto& l : fbs_schedule) {
    if (l.alpha > l.kappa) fail("fbs layer needs alpha <= kappa");
  }
  if (!(min_scale > 0.0)) fail("min_scale must be > 0");
  if (sa1_points < 1) fail("sa1_points must be >= 1");
  if (interp_k < 1) fail("interp_k must be >= 1");
  if (score_source == StandInSource::kFile && scores_path.empty()) fail("scores_path required");
  if (vote_source == StandInSource::kFile && votes_path.empty()) fail("votes_path required");
  try {
    loss_weights.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
}

PipelineConfig config_from_json(const json& doc) {
  const std::string where = "config";
  reject_unknown(doc,
                 {"P", "azimuth_factor", "K_c", "K_f", "anchor_radius", "coarse_max_k",
                  "fine_max_k", "M", "candidate_mode", "vote_radius", "positive_radius",
                  "fbs_schedule", "nms_threshold", "iou_thresholds", "loss_weights", "rng_seed",
                  "min_scale", "sa1_points", "interp_k", "score_source", "scores_path",
                  "vote_source", "votes_path"},
                 where);
  const FieldReader r{doc, where};
  PipelineConfig c;
  if (r.has("P")) c.polar_bins = r.integer("P");
  if (r.has("azimuth_factor")) c.azimuth_factor = r.integer("azimuth_factor");
  if (r.has("K_c")) c.coarse_count = r.count("K_c");
  if (r.has("K_f")) c.fine_count = r.count("K_f");
  if (r.has("anchor_radius")) c.anchor_radius = r.number("anchor_radius");
  if (r.has("coarse_max_k")) c.coarse_max_k = r.count("coarse_max_k");
  if (r.has("fine_max_k")) c.fine_max_k = r.count("fine_max_k");
  if (r.has("M")) c.num_candidates = r.count("M");
  if (r.has("candidate_mode")) {
    try {
      c.candidate_mode = parse_candidate_mode(r.string("candidate_mode"));
    } catch (const InvalidParameter& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (r.has("vote_radius")) c.vote_radius = r.number("vote_radius");
  if (r.has("positive_radius")) c.positive_radius = r.number("positive_radius");
  if (r.has("fbs_schedule")) {
    const json& s = doc["fbs_schedule"];
    if (!s.is_array()) throw ValidationError(where + ": 'fbs_schedule' must be an array");
    c.fbs_schedule.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string lw = where + ".fbs_schedule[" + std::to_string(i) + "]";
      reject_unknown(s[i], {"kappa", "alpha", "beta"}, lw);
      const FieldReader lr{s[i], lw};
      if (!lr.has("kappa") || !lr.has("alpha") || !lr.has("beta")) {
        throw ValidationError(lw + ": needs kappa, alpha and beta");
      }
      c.fbs_schedule.push_back({lr.count("kappa"), lr.count("alpha"), lr.count("beta")});
    }
  }
  if (r.has("nms_threshold")) c.nms_threshold = r.number("nms_threshold");
  if (r.has("iou_thresholds")) {
    const json& t = doc["iou_thresholds"];
    if (!t.is_array()) throw ValidationError(where + ": 'iou_thresholds' must be an array");
    c.iou_thresholds.clear();
    for (const auto& v : t) {
      if (!v.is_number()) throw ValidationError(where + ": 'iou_thresholds' must hold numbers");
      c.iou_thresholds.push_back(v.get<double>());
    }
  }
  if (r.has("loss_weights")) {
    const json& w = doc["loss_weights"];
    if (!w.is_object()) throw ValidationError(where + ": 'loss_weights' must be an object");
    for (const auto& [key, value] : w.items()) {
      if (!value.is_number()) throw ValidationError(where + ": loss weight '" + key + "' must be a number");
      try {
        c.loss_weights.set(key, value.get<double>());
      } catch (const InvalidParameter& e) {
        throw ValidationError(where + ": " + e.what());
      }
    }
  }
  if (r.has("rng_seed")) c.rng_seed = static_cast<std::uint64_t>(r.count("rng_seed"));
  if (r.has("min_scale")) c.min_scale = r.number("min_scale");
  if (r.has("sa1_points")) c.sa1_points = r.count("sa1_points");
  if (r.has("interp_k")) c.interp_k = r.count("interp_k");
  if (r.has("score_source")) c.score_source = parse_source(r.string("score_source"), where);
  if (r.has("scores_path")) c.scores_path = r.string("scores_path");
  if (r.has("vote_source")) c.vote_source = parse_source(r.string("vote_source"), where);
  if (r.has("votes_path")) c.votes_path = r.string("votes_path");
  c.validate();
  return c;
}

ordered_json config_to_json(const PipelineConfig& c) {
  ordered_json schedule = ordered_json::array();
  for (const auto& l : c.fbs_schedule) {
    schedule.push_back({{"kappa", l.kappa}, {"alpha", l.alpha}, {"beta", l.beta}});
  }
  ordered_json weights;
  for (const auto& name : LossWeights::names()) weights[name] = c.loss_weights.get(name);
  ordered_json out = {{"P", c.polar_bins},
                      {"azimuth_factor", c.azimuth_factor},
                      {"K_c", c.coarse_count},
                      {"K_f", c.fine_count},
                      {"anchor_radius", c.anchor_radius},
                      {"coarse_max_k", c.coarse_max_k},
                      {"fine_max_k", c.fine_max_k},
                      {"M", c.num_candidates},
                      {"candidate_mode", to_string(c.candidate_mode)},
                      {"vote_radius", c.vote_radius},
                      {"positive_radius", c.positive_radius},
                      {"fbs_schedule", schedule},
                      {"nms_threshold", c.nms_threshold},
                      {"iou_thresholds", c.iou_thresholds},
                      {"loss_weights", weights},
                      {"rng_seed", c.rng_seed},
                      {"min_scale", c.min_scale},
                      {"sa1_points", c.sa1_points},
                      {"interp_k", c.interp_k},
                      {"score_source", source_name(c.score_source)},
                      {"vote_source", source_name(c.vote_source)}};
  // Paths are echoed by file name only so reports do not depend on the
  // working directory.
  if (c.score_source == StandInSource::kFile) {
    out["scores_path"] = std::filesystem::path(c.scores_path).filename().string();
  }
  if (c.vote_source == StandInSource::kFile) {
    out["votes_path"] = std::filesystem::path(c.votes_path).filename().string();
  }
  return out;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  PipelineConfig c = config_from_json(parse_json_file(path));
  const auto base = path.parent_path();
  const auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  resolve(c.scores_path);
  resolve(c.votes_path);
  return c;
}

SceneSpec scene_spec_from_json(const json& doc) {
  const std::string where = "scene spec";
  reject_unknown(doc,
                 {"room_extent", "n_objects", "size_range", "points_per_object",
                  "background_points", "n_classes", "rng_seed"},
                 where);
  const FieldReader r{doc, where};
  SceneSpec s;
  if (r.has("room_extent")) s.room_extent = r.vec3(doc["room_extent"], "room_extent");
  if (r.has("n_objects")) s.n_objects = r.count("n_objects");
  if (r.has("size_range")) {
    const json& sr = doc["size_range"];
    reject_unknown(sr, {"min", "max"}, where + ".size_range");
    if (!sr.contains("min") || !sr.contains("max")) {
      throw ValidationError(where + ": size_range needs 'min' and 'max'");
    }
    s.size_range = {r.vec3(sr["min"], "size_range.min"), r.vec3(sr["max"], "size_range.max")};
  }
  if (r.has("points_per_object")) s.points_per_object = r.count("points_per_object");
  if (r.has("background_points")) s.background_points = r.count("background_points");
  if (r.has("n_classes")) s.n_classes = r.integer("n_classes");
  if (r.has("rng_seed")) s.rng_seed = static_cast<std::uint64_t>(r.count("rng_seed"));
  return s;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  return scene_spec_from_json(parse_json_file(path));
}

ordered_json run_pipeline_on(const PipelineConfig& config, const Scene& scene,
                             const std::string& scene_name) {
  return execute(config, scene, scene_name).report;
}

ordered_json run_pipeline(const PipelineConfig& config, const std::filesystem::path& scene_path,
                          const std::filesystem::path& out_dir, const PipelineOptions& options) {
  const Scene scene = stage("load_scene", [&] { return load_scene(scene_path); });
  PipelineRun run = execute(config, scene, scene_stem(scene_path).filename().string());
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  write_text(out_dir / "report.json", dump_report(run.report));
  if (options.write_ply) {
    std::vector<Rgb> colors;
    for (int id : scene.annotation.point_instance_ids) colors.push_back(instance_color(id));
    export_ply(scene.cloud.positions(), colors, out_dir / "scene.ply");
    export_ply(run.seeds.points, run.seeds.colors, out_dir / "seeds.ply");
    export_ply(run.anchors.points, run.anchors.colors, out_dir / "anchors.ply");
  }
  return run.report;
}

ordered_json evaluate_detections(std::vector<Detection> detections,
                                 const std::vector<GroundTruth>& gt, const EvalOptions& options) {
  if (options.nms_threshold) {
    std::vector<Detection> kept;
    for (std::size_t i : nms3d(detections, *options.nms_threshold)) kept.push_back(detections[i]);
    detections = std::move(kept);
  }
  std::set<int> classes;
  for (const auto& g : gt) classes.insert(g.class_id);
  for (const auto& d : detections) classes.insert(d.class_id);

  ordered_json results = ordered_json::array();
  for (double threshold : options.iou_thresholds) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw ValidationError("iou threshold " + format_double(threshold) + " outside [0,1]");
    }
    std::vector<PRCurve> curves;
    ordered_json per_class = ordered_json::array();
    for (int cls : classes) {
      curves.push_back(average_precision(detections, gt, threshold, cls, options.interpolation));
      const PRCurve& c = curves.back();
      per_class.push_back({{"class_id", cls},
                           {"ap", c.ap},
                           {"num_gt", c.num_gt},
                           {"num_detections", c.num_detections},
                           {"true_positives", c.true_positives}});
    }
    results.push_back(
        {{"iou", threshold}, {"mAP", mean_average_precision(curves)}, {"per_class", per_class}});
  }
  return {{"interpolation",
           options.interpolation == ApInterpolation::kAllPoint ? "all_point" : "eleven_point"},
          {"num_detections", detections.size()},
          {"num_gt", gt.size()},
          {"results", results}};
}

ordered_json run_eval(const std::filesystem::path& detections_path,
                      const std::filesystem::path& gt_path, const EvalOptions& options) {
  return evaluate_detections(load_detections(detections_path), load_ground_truth(gt_path),
                             options);
}

std::string dump_report(const ordered_json& report) { return report.dump(2) + "\n"; }

}  // namespace raygroup
