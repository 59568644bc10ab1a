#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "raygroup/errors.hpp"
#include "raygroup/scene.hpp"
#include "raygroup/synth.hpp"

using namespace raygroup;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("raygroup_scene_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("box validation") {
  CHECK_THROWS_AS(Box3D({0, 0, 0}, {0, 1, 1}), ValidationError);
  CHECK_THROWS_AS(Box3D({0, 0, 0}, {1, -1, 1}), ValidationError);
  const Box3D b({0, 0, 0}, {2, 4, 6});
  CHECK(b.volume() == 48.0);
  CHECK(b.contains({1, 2, 3}));
  CHECK_FALSE(b.contains({1.1, 0, 0}));
  CHECK(b.corners()[0] == Vec3{-1, -2, -3});
  CHECK(b.corners()[1] == Vec3{1, -2, -3});
  CHECK(b.corners()[7] == Vec3{1, 2, 3});
}

TEST_CASE("point cloud shape checks") {
  CHECK_THROWS_AS(PointCloud({{0, 0, 0}}, {1.0, 2.0}, 3), ValidationError);
  CHECK_THROWS_AS(PointCloud({{0, 0, 0}}, {1.0}, 0), ValidationError);
  const PointCloud c({{0, 0, 0}, {1, 1, 1}}, {1, 2, 3, 4}, 2);
  CHECK(c.feature(1)[0] == 3.0);
}

TEST_CASE("minimal scene loads") {
  write(scratch("min.pts"), "0.5 0.25 1\n");
  write(scratch("min.ann"), "{\"boxes\": [], \"instance_ids\": [-1]}\n");
  const Scene s = load_scene(scratch("min.pts"));
  CHECK(s.cloud.size() == 1);
  CHECK(s.cloud.position(0) == Vec3{0.5, 0.25, 1});
  CHECK(s.annotation.boxes.empty());
}

TEST_CASE("dangling instance id is a validation error") {
  write(scratch("bad.pts"), "0 0 0\n");
  write(scratch("bad.ann"),
        "{\"boxes\": [{\"center\": [0,0,0], \"size\": [1,1,1], \"class_id\": 0},"
        " {\"center\": [3,0,0], \"size\": [1,1,1], \"class_id\": 0}], \"instance_ids\": [5]}");
  CHECK_THROWS_AS(load_scene(scratch("bad")), ValidationError);
}

TEST_CASE("malformed inputs") {
  write(scratch("tok.pts"), "0 0 zero\n");
  write(scratch("tok.ann"), "{\"boxes\": [], \"instance_ids\": [-1]}");
  CHECK_THROWS_AS(load_scene(scratch("tok")), ParseError);
  write(scratch("key.pts"), "0 0 0\n");
  write(scratch("key.ann"), "{\"boxes\": [], \"instance_ids\": [-1], \"extra\": 1}");
  CHECK_THROWS_AS(load_scene(scratch("key")), ParseError);
  write(scratch("count.pts"), "0 0 0\n1 1 1\n");
  write(scratch("count.ann"), "{\"boxes\": [], \"instance_ids\": [-1]}");
  CHECK_THROWS_AS(load_scene(scratch("count")), ValidationError);
  CHECK_THROWS_AS(load_scene(scratch("missing")), IoError);
}

TEST_CASE("unit_room fixture round-trips bit-exactly") {
  const Scene s = load_scene(fs::path(RAYGROUP_FIXTURE_DIR) / "unit_room.pts");
  CHECK(s.cloud.size() == 9);
  CHECK(s.annotation.boxes.size() == 1);
  save_scene(s, scratch("unit_copy.scene"));
  CHECK(load_scene(scratch("unit_copy")) == s);
  CHECK(scene_stem("a/b/room.scene") == fs::path("a/b/room"));
  CHECK(scene_stem("a/b/room.ann") == fs::path("a/b/room"));
}

TEST_CASE("save writes records in input order") {
  const Scene empty{PointCloud(std::vector<Vec3>{}), {}};
  save_scene(empty, scratch("empty"));
  CHECK(read(scratch("empty.pts")).empty());
  CHECK(load_scene(scratch("empty")) == empty);

  const Scene three{PointCloud({{3, 0, 0}, {1, 0, 0}, {2, 0.1, -0.5}}), {{}, {-1, -1, -1}}};
  save_scene(three, scratch("three"));
  CHECK(lines(read(scratch("three.pts"))) ==
        std::vector<std::string>{"3 0 0", "1 0 0", "2 0.1 -0.5"});
}

TEST_CASE("random scenes round-trip") {
  SplitMix64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec3> pts;
    std::vector<double> feats;
    std::vector<int> ids;
    std::vector<Box3D> boxes{Box3D({rng.uniform(), rng.uniform(), rng.uniform()},
                                   {rng.uniform(0.1, 1), rng.uniform(0.1, 1), rng.uniform(0.1, 1)}, 2)};
    const Vec3 lo = boxes[0].min_corner();
    const Vec3 hi = boxes[0].max_corner();
    for (int i = 0; i < 100; ++i) {
      if (rng.below(2) == 0) {
        pts.push_back({rng.uniform(-1e3, 1e3), rng.uniform(-1, 1) * 1e-7, rng.uniform()});
        ids.push_back(-1);
      } else {
        pts.push_back({rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y), rng.uniform(lo.z, hi.z)});
        ids.push_back(0);
      }
      feats.push_back(rng.uniform(-5, 5));
      feats.push_back(static_cast<double>(rng.next() >> 20));
    }
    const Scene s{PointCloud(pts, feats, 2), {boxes, ids}};
    save_scene(s, scratch("rand"));
    CHECK(load_scene(scratch("rand")) == s);
  }
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-0.0) == "-0");
  CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("ply export") {
  export_ply(std::vector<Vec3>{}, std::vector<Rgb>{}, scratch("none.ply"));
  const auto empty = read(scratch("none.ply"));
  CHECK(empty.find("element vertex 0\n") != std::string::npos);
  CHECK(empty.rfind("end_header\n") == empty.size() - 11);

  export_ply(std::vector<Vec3>{{0, 0, 0}}, std::vector<Rgb>{{255, 0, 0}}, scratch("red.ply"));
  CHECK(lines(read(scratch("red.ply"))).back() == "0 0 0 255 0 0");

  CHECK_THROWS_AS(export_ply(std::vector<Vec3>{{0, 0, 0}}, std::vector<Rgb>{}, scratch("x.ply")),
                  ShapeMismatch);
}

TEST_CASE("ply round-trip through a minimal reader") {
  const Scene s = load_scene(fs::path(RAYGROUP_FIXTURE_DIR) / "unit_room");
  std::vector<Rgb> colors(s.cloud.size(), Rgb{1, 2, 3});
  export_ply(s.cloud.positions(), colors, scratch("unit.ply"));
  std::istringstream in(read(scratch("unit.ply")));
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line) && line != "end_header") {
    if (line.rfind("element vertex ", 0) == 0) count = std::stoul(line.substr(15));
  }
  REQUIRE(count == s.cloud.size());
  for (std::size_t i = 0; i < count; ++i) {
    Vec3 p;
    int r = 0, g = 0, b = 0;
    in >> p.x >> p.y >> p.z >> r >> g >> b;
    CHECK(p == s.cloud.position(i));
    CHECK(r == 1);
  }
}

TEST_CASE("detections and ground truth parsing") {
  write(scratch("dets.json"),
        "[{\"center\": [0,0,0], \"size\": [1,1,1], \"class_id\": 2, \"score\": 0.5}]");
  const auto dets = load_detections(scratch("dets.json"));
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].class_id == 2);
  CHECK(dets[0].score == 0.5);
  write(scratch("badscore.json"),
        "[{\"center\": [0,0,0], \"size\": [1,1,1], \"class_id\": 2, \"score\": 1.5}]");
  CHECK_THROWS_AS(load_detections(scratch("badscore.json")), ValidationError);
  const auto gt = load_ground_truth(fs::path(RAYGROUP_FIXTURE_DIR) / "eval_gt.json");
  CHECK(gt.size() == 4);
  write(scratch("broken.json"), "{\"detections\": [");
  CHECK_THROWS_AS(load_detections(scratch("broken.json")), ParseError);
}
