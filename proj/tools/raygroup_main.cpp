#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "raygroup/errors.hpp"
#include "raygroup/pipeline.hpp"
#include "raygroup/scene.hpp"
#include "raygroup/synth.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

int exit_code_for(raygroup::ErrorKind kind) {
  using raygroup::ErrorKind;
  switch (kind) {
    case ErrorKind::kIo:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw raygroup::ValidationError("bad IoU threshold '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw raygroup::ValidationError("no IoU thresholds given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raygroup: ray-based grouping geometry engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scene_path;
  std::string out_dir;
  bool ply = false;
  auto* run = app.add_subcommand("run", "run the grouping pipeline on one scene");
  run->add_option("--config", config_path, "pipeline config (JSON)")->required();
  run->add_option("--scene", scene_path, "scene path (.pts, .ann or stem)")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_flag("--ply", ply, "also write scene/seeds/anchors PLY files");

  std::string dets_path;
  std::string gt_path;
  std::string iou_text = "0.25,0.5";
  std::string eval_out;
  double nms = -1.0;
  bool eleven = false;
  auto* eval = app.add_subcommand("eval", "score detections against ground truth");
  eval->add_option("--dets", dets_path, "detections (JSON)")->required();
  eval->add_option("--gt", gt_path, "ground truth (JSON)")->required();
  eval->add_option("--iou", iou_text, "comma-separated IoU thresholds")->capture_default_str();
  eval->add_option("--nms", nms, "apply 3D NMS at this IoU before scoring");
  eval->add_flag("--eleven-point", eleven, "11-point interpolated AP");
  eval->add_option("--out", eval_out, "write the result JSON here instead of stdout");

  std::string spec_path;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  synth->add_option("--spec", spec_path, "scene spec (JSON)")->required();
  synth->add_option("--out", synth_out, "output path (.pts, .ann or stem)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*run) {
      const auto config = raygroup::load_config(config_path);
      const auto report = raygroup::run_pipeline(config, scene_path, out_dir, {ply});
      std::cout << "wrote " << (std::filesystem::path(out_dir) / "report.json").string() << " ("
                << report["clusters"]["count"].get<std::size_t>() << " clusters, "
                << report["clusters"]["positive"].get<std::size_t>() << " positive)\n";
    } else if (*eval) {
      raygroup::EvalOptions options;
      options.iou_thresholds = parse_thresholds(iou_text);
      if (eval->count("--nms") > 0) options.nms_threshold = nms;
      if (eleven) options.interpolation = raygroup::ApInterpolation::kElevenPoint;
      const std::string text =
          raygroup::dump_report(raygroup::run_eval(dets_path, gt_path, options));
      if (eval_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(eval_out, std::ios::binary | std::ios::trunc);
        if (!out || !(out << text)) throw raygroup::IoError("cannot write " + eval_out);
      }
    } else if (*synth) {
      const auto spec = raygroup::load_scene_spec(spec_path);
      const auto scene = raygroup::generate_scene(spec);
      raygroup::save_scene(scene, synth_out);
      std::cout << "wrote " << scene.cloud.size() << " points, " << scene.annotation.boxes.size()
                << " boxes\n";
    }
  } catch (const raygroup::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
