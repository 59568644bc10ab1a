#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "raygroup/errors.hpp"
#include "raygroup/pipeline.hpp"

using namespace raygroup;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFixtures = RAYGROUP_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir =
      fs::temp_directory_path() / ("raygroup_pipeline_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const PipelineConfig defaults = config_from_json(json::object());
  CHECK(defaults.polar_bins == 9);
  CHECK(defaults.coarse_count == 5);
  CHECK(defaults.fine_count == 3);
  CHECK(defaults.num_candidates == 256);
  CHECK(defaults.fbs_schedule == std::vector<FbsLayer>{FbsLayer{1024, 896, 128}});
  CHECK(defaults.loss_weights.fbs == 3.0);

  const auto c = config_from_json(json::parse(R"({"P": 5, "loss_weights": {"fbs": 2.5}})"));
  CHECK(c.polar_bins == 5);
  CHECK(c.loss_weights.fbs == 2.5);
  CHECK(config_from_json(config_to_json(c)).loss_weights.fbs == 2.5);

  CHECK_THROWS_AS(config_from_json(json::parse(R"({"P2": 5})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"P": "nine"})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"P": 1})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"K_c": -1})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"loss_weights": {"bogus": 1}})")),
                  ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"fbs_schedule": [{"kappa": 4, "alpha": 5, "beta": 0}]})")),
                  ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"score_source": "file"})")), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::parse("[1]")), ValidationError);
}

TEST_CASE("scene spec parsing") {
  const SceneSpec s = load_scene_spec(kFixtures / "pipeline_room.spec.json");
  CHECK(s.n_objects == 8);
  CHECK(s.rng_seed == 3);
  CHECK_THROWS_AS(scene_spec_from_json(json::parse(R"({"objects": 3})")), ValidationError);
}

TEST_CASE("empty scene gives an empty report") {
  const Scene empty{PointCloud(std::vector<Vec3>{}), {}};
  const auto r = run_pipeline_on(PipelineConfig{}, empty, "empty");
  CHECK(r["clusters"]["count"] == 0);
  CHECK(r["losses"]["total"] == 0.0);
}

TEST_CASE("unit_room with defaults") {
  const auto config = load_config(kFixtures / "default_config.json");
  const auto r = run_pipeline(config, kFixtures / "unit_room", scratch("unit_out"));
  CHECK(r["sampling"]["layers"][0]["skipped"] == true);
  bool saw_positive = false;
  for (const auto& c : r["clusters"]["per_cluster"]) {
    CHECK(c["rays"] == 66);
    CHECK(c["coarse_anchors"] == 330);
    CHECK(c["fine_anchors"] == 198);
    if (c["positive"] == true) saw_positive = true;
  }
  CHECK(saw_positive);
  CHECK(fs::exists(scratch("unit_out") / "report.json"));
}

TEST_CASE("reports are byte-identical across runs") {
  const auto config = load_config(kFixtures / "default_config.json");
  run_pipeline(config, kFixtures / "pipeline_room", scratch("a"), {true});
  run_pipeline(config, kFixtures / "pipeline_room", scratch("b"), {true});
  CHECK(read(scratch("a") / "report.json") == read(scratch("b") / "report.json"));
  CHECK(read(scratch("a") / "anchors.ply") == read(scratch("b") / "anchors.ply"));
  const auto r = json::parse(read(scratch("a") / "report.json"));
  CHECK(r["sampling"]["seed_count"] == 1024);
  CHECK(r["clusters"]["positive"].get<int>() > 0);
}

TEST_CASE("file stand-ins match the oracle path") {
  const Scene scene = load_scene(kFixtures / "pipeline_room");
  {
    std::ofstream s(scratch("scores.txt"));
    for (int id : scene.annotation.point_instance_ids) s << (id >= 0 ? "1\n" : "0\n");
    std::ofstream v(scratch("votes.txt"));
    const auto votes = oracle_votes(scene.cloud, scene.annotation);
    for (const auto& p : votes) {
      v << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z) << '\n';
    }
  }
  std::ofstream(scratch("cfg.json"))
      << R"({"score_source": "file", "scores_path": "scores.txt", "vote_source": "file", "votes_path": "votes.txt"})";
  const auto from_files = run_pipeline_on(load_config(scratch("cfg.json")), scene, "x");
  const auto oracle = run_pipeline_on(PipelineConfig{}, scene, "x");
  CHECK(from_files["clusters"] == oracle["clusters"]);
  CHECK(from_files["losses"] == oracle["losses"]);
}

TEST_CASE("stage errors keep their kind") {
  std::ofstream(scratch("short_scores.txt")) << "1\n0\n";
  std::ofstream(scratch("cfg2.json")) << R"({"score_source": "file", "scores_path": "short_scores.txt"})";
  try {
    run_pipeline(load_config(scratch("cfg2.json")), kFixtures / "unit_room", scratch("o"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
    CHECK(std::string(e.what()).find("stage 'scores'") != std::string::npos);
  }
  CHECK_THROWS_AS(run_pipeline(PipelineConfig{}, scratch("nowhere"), scratch("o")), IoError);
}

TEST_CASE("evaluation fixture reproduces the hand-computed table") {
  const auto r = run_eval(kFixtures / "eval_dets.json", kFixtures / "eval_gt.json");
  const auto expected = json::parse(read(kFixtures / "eval_expected.json"));
  REQUIRE(r["results"].size() == 2);
  for (const auto& res : r["results"]) {
    const std::string key = res["iou"].get<double>() == 0.25 ? "0.25" : "0.5";
    CHECK(std::abs(res["mAP"].get<double>() - expected[key]["mAP"].get<double>()) <= 1e-12);
    for (const auto& c : res["per_class"]) {
      const double want = expected[key]["per_class"][std::to_string(c["class_id"].get<int>())];
      CHECK(std::abs(c["ap"].get<double>() - want) <= 1e-12);
    }
  }
}

TEST_CASE("evaluation edge cases") {
  const auto gt = load_ground_truth(kFixtures / "eval_gt.json");
  std::vector<Detection> perfect;
  for (const auto& g : gt) perfect.emplace_back(g.box, 1.0, g.class_id);
  const auto r = evaluate_detections(perfect, gt);
  CHECK(r["results"][0]["mAP"] == 1.0);
  CHECK(r["results"][1]["mAP"] == 1.0);
  CHECK(evaluate_detections({}, gt)["results"][0]["mAP"] == 0.0);
  CHECK_THROWS_AS(evaluate_detections(perfect, {}), EmptyEvaluation);
}
