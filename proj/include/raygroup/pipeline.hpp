#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "raygroup/eval.hpp"
#include "raygroup/grouping.hpp"
#include "raygroup/losses.hpp"
#include "raygroup/rays.hpp"
#include "raygroup/sampling.hpp"
#include "raygroup/synth.hpp"

namespace raygroup {

enum class StandInSource { kOracle, kFile };

/// Every knob of the pipeline. Defaults are the published detector settings
/// (66 rays, 5 coarse + 3 fine anchors, 0.2 m anchor radius, 256 clusters).
struct PipelineConfig {
  int polar_bins = 9;
  int azimuth_factor = 4;
  std::size_t coarse_count = 5;
  std::size_t fine_count = 3;
  double anchor_radius = 0.2;
  std::size_t coarse_max_k = 8;
  std::size_t fine_max_k = 4;
  std::size_t num_candidates = 256;
  CandidateMode candidate_mode = CandidateMode::kVoteFps;
  double vote_radius = 0.3;
  double positive_radius = kDefaultPositiveRadius;
  std::vector<FbsLayer> fbs_schedule{FbsLayer{1024, 896, 128}};
  double nms_threshold = kDefaultNmsThreshold;
  std::vector<double> iou_thresholds{0.25, 0.5};
  LossWeights loss_weights;
  std::uint64_t rng_seed = 0;

  double min_scale = kDefaultMinScale;
  std::size_t sa1_points = 2048;
  std::size_t interp_k = 3;
  StandInSource score_source = StandInSource::kOracle;
  std::string scores_path;
  StandInSource vote_source = StandInSource::kOracle;
  std::string votes_path;

  RayLayout ray_layout() const { return {polar_bins, azimuth_factor}; }
  void validate() const;
};

/// Parses a config object; unknown keys and ill-typed values raise
/// ValidationError. Missing keys keep their defaults.
PipelineConfig config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json config_to_json(const PipelineConfig& config);
/// Relative stand-in file paths are resolved against the config's directory.
PipelineConfig load_config(const std::filesystem::path& path);

SceneSpec scene_spec_from_json(const nlohmann::json& doc);
SceneSpec load_scene_spec(const std::filesystem::path& path);

struct PipelineOptions {
  bool write_ply = false;
};

/// Runs the full non-learned data path on one scene and writes
/// `<out_dir>/report.json` (plus PLY dumps when requested). Errors are
/// re-thrown with the failing stage in the message.
nlohmann::ordered_json run_pipeline(const PipelineConfig& config,
                                    const std::filesystem::path& scene_path,
                                    const std::filesystem::path& out_dir,
                                    const PipelineOptions& options = {});

/// Same computation on an in-memory scene; writes nothing.
nlohmann::ordered_json run_pipeline_on(const PipelineConfig& config, const Scene& scene,
                                       const std::string& scene_name);

struct EvalOptions {
  std::vector<double> iou_thresholds{0.25, 0.5};
  std::optional<double> nms_threshold;
  ApInterpolation interpolation = ApInterpolation::kAllPoint;
};

nlohmann::ordered_json evaluate_detections(std::vector<Detection> detections,
                                           const std::vector<GroundTruth>& gt,
                                           const EvalOptions& options = {});

nlohmann::ordered_json run_eval(const std::filesystem::path& detections_path,
                                const std::filesystem::path& gt_path,
                                const EvalOptions& options = {});

/// Canonical text for report files: 2-space JSON plus a trailing newline.
std::string dump_report(const nlohmann::ordered_json& report);

}  // namespace raygroup
