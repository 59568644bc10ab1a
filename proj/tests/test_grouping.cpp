#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "raygroup/errors.hpp"
#include "raygroup/grouping.hpp"
#include "raygroup/synth.hpp"

using namespace raygroup;

namespace {

std::vector<Vec3> random_points(SplitMix64& rng, std::size_t n, double extent) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({rng.uniform(0, extent), rng.uniform(0, extent), rng.uniform(0, extent)});
  }
  return pts;
}

}  // namespace

TEST_CASE("candidate modes") {
  SplitMix64 rng(1);
  const auto seeds = random_points(rng, 64, 1.0);
  std::vector<Vec3> votes;
  for (const auto& s : seeds) votes.push_back(s + Vec3{0.01, 0, 0});
  const auto all = sample_candidates(votes, seeds, 64, CandidateMode::kVoteFps);
  auto sorted = all;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(sorted.size() == 64);
  CHECK(sample_candidates(seeds, seeds, 10, CandidateMode::kVoteFps) ==
        sample_candidates(seeds, seeds, 10, CandidateMode::kSeedFps));
  CHECK_THROWS_AS(sample_candidates(votes, seeds, 65, CandidateMode::kSeedFps), InvalidParameter);
  CHECK(parse_candidate_mode("seed_fps") == CandidateMode::kSeedFps);
  CHECK_THROWS_AS(parse_candidate_mode("random"), InvalidParameter);
}

TEST_CASE("default candidate budget yields distinct centers") {
  SplitMix64 rng(2);
  const auto votes = random_points(rng, 1024, 4.0);
  const auto picked = sample_candidates(votes, votes, 256, CandidateMode::kVoteFps);
  CHECK(picked.size() == 256);
  auto sorted = picked;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::unique(sorted.begin(), sorted.end()) == sorted.end());
}

TEST_CASE("group_votes membership") {
  const std::vector<Vec3> votes{{0, 0, 0}, {0.1, 0, 0}, {0, 0.1, 0}, {3, 3, 3}};
  const std::vector<Vec3> centers{{0, 0, 0}, {3, 3, 3}, {9, 9, 9}};
  const auto clusters = group_votes(centers, votes, 0.3);
  CHECK(clusters[0].member_seed_indices == std::vector<std::size_t>{0, 1, 2});
  CHECK(clusters[1].member_seed_indices == std::vector<std::size_t>{3});
  CHECK(clusters[2].member_seed_indices.empty());
}

TEST_CASE("group_votes equals a brute-force radius filter") {
  SplitMix64 rng(4);
  const auto votes = random_points(rng, 500, 2.0);
  const auto centers = random_points(rng, 40, 2.0);
  const auto clusters = group_votes(centers, votes, 0.35);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < votes.size(); ++i) {
      if (squared_distance(votes[i], centers[c]) <= 0.35 * 0.35) expected.push_back(i);
    }
    CHECK(clusters[c].member_seed_indices == expected);
  }
}

TEST_CASE("group_votes averages member features") {
  const std::vector<Vec3> votes{{0, 0, 0}, {0.1, 0, 0}, {5, 5, 5}};
  const std::vector<double> f{1, 2, 3, 4, 100, 100};
  const auto clusters = group_votes(std::vector<Vec3>{{0, 0, 0}}, votes, 0.3, f, 2);
  CHECK(clusters[0].feature == std::vector<double>{2, 3});
  CHECK_THROWS_AS(group_votes(std::vector<Vec3>{{0, 0, 0}}, votes, 0.3, f, 3), ShapeMismatch);
}

TEST_CASE("positive assignment") {
  const std::vector<Box3D> boxes{Box3D({0, 0, 0}, {1, 1, 1}), Box3D({0.4, 0, 0}, {3, 4, 12})};
  std::vector<VoteCluster> clusters(4);
  clusters[0].center = {0, 0, 0};
  clusters[1].center = {0.2, 0, 0};   // equidistant: lower box index wins
  clusters[2].center = {0.35, 0, 0};  // nearer the second box
  clusters[3].center = {0, 0.5, 0.5};
  assign_positive_clusters(clusters, boxes, 0.3);
  CHECK(*clusters[0].positive);
  CHECK(clusters[0].assigned_box == 0);
  CHECK(*clusters[0].scale == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-15));
  CHECK(*clusters[1].positive);
  CHECK(clusters[1].assigned_box == 0);
  CHECK(clusters[2].assigned_box == 1);
  CHECK(*clusters[2].scale == 6.5);
  CHECK_FALSE(*clusters[3].positive);
  CHECK(clusters[3].assigned_box == -1);
  CHECK_FALSE(clusters[3].scale.has_value());
}

TEST_CASE("anchor mask labels") {
  const PointCloud cloud({{1, 0, 0}, {0, 1, 0}, {5, 5, 5}});
  SceneAnnotation ann{{Box3D({1, 0.5, 0}, {1, 1, 1}), Box3D({5, 5, 5}, {1, 1, 1})}, {0, 0, 1}};
  const GridIndex index(cloud.positions(), 0.2);
  AnchorSet anchors;
  anchors.num_rays = 1;
  anchors.per_ray = 3;
  anchors.anchors.resize(3);
  anchors.anchors[0].position = {1, 0, 0};
  anchors.anchors[1].position = {0.5, 0.5, 0};
  anchors.anchors[2].position = {5, 5, 5};
  CHECK(anchor_mask_labels(anchors, ann, index, 0.2, 0) == std::vector<std::uint8_t>{1, 0, 0});
  CHECK(anchor_mask_labels(anchors, ann, index, 0.2, 1) == std::vector<std::uint8_t>{0, 0, 1});
  CHECK(anchor_mask_labels(anchors, ann, index, 0.2, -1) == std::vector<std::uint8_t>{0, 0, 0});
  CHECK_THROWS_AS(anchor_mask_labels(anchors, ann, index, 0.2, 2), InvalidParameter);
}

TEST_CASE("anchor labels equal a brute-force label oracle") {
  SceneSpec spec;
  spec.rng_seed = 8;
  const Scene scene = generate_scene(spec);
  const GridIndex index(scene.cloud.positions(), 0.2);
  SplitMix64 rng(99);
  AnchorSet anchors;
  anchors.num_rays = 100;
  anchors.per_ray = 1;
  for (int i = 0; i < 100; ++i) {
    AnchorPoint a;
    a.position = {rng.uniform(0, 6), rng.uniform(0, 6), rng.uniform(0, 1.5)};
    anchors.anchors.push_back(a);
  }
  for (int box = 0; box < static_cast<int>(scene.annotation.boxes.size()); ++box) {
    const auto labels = anchor_mask_labels(anchors, scene.annotation, index, 0.2, box);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      bool hit = false;
      for (std::size_t p = 0; p < scene.cloud.size(); ++p) {
        if (scene.annotation.point_instance_ids[p] == box &&
            distance(scene.cloud.position(p), anchors.anchors[i].position) <= 0.2) {
          hit = true;
        }
      }
      CHECK(labels[i] == (hit ? 1 : 0));
    }
  }
}

TEST_CASE("pooling takes the channel max over neighbors") {
  const std::vector<Vec3> pts{{0, 0, 0}, {0.1, 0, 0}, {4, 4, 4}};
  const std::vector<double> f{1, 5, 3, 2, 9, 9};
  const GridIndex index(pts, 0.2);
  AnchorSet anchors;
  anchors.num_rays = 2;
  anchors.per_ray = 1;
  anchors.anchors.resize(2);
  anchors.anchors[0].position = {0.05, 0, 0};
  anchors.anchors[1].position = {2, 2, 2};
  std::vector<std::size_t> counts;
  const auto pooled = pool_anchor_features(anchors, index, f, 2, 0.2, 8, &counts);
  CHECK(pooled == std::vector<double>{3, 5, 0, 0});
  CHECK(counts == std::vector<std::size_t>{2, 0});
}

TEST_CASE("mask_features zeroes negatives") {
  std::vector<double> f(2 * 3 * 4);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 1.0 + static_cast<double>(i);
  const std::vector<std::uint8_t> ones(6, 1);
  const std::vector<std::uint8_t> zeros(6, 0);
  const std::vector<std::uint8_t> mixed{1, 0, 1, 1, 0, 0};
  CHECK(ordered_concat(mask_features(f, ones, 2, 3, 4)) == f);
  const auto none = ordered_concat(mask_features(f, zeros, 2, 3, 4));
  CHECK(std::all_of(none.begin(), none.end(), [](double v) { return v == 0.0; }));
  const auto some = ordered_concat(mask_features(f, mixed, 2, 3, 4));
  CHECK(std::count_if(some.begin(), some.end(), [](double v) { return v != 0.0; }) == 3 * 4);
  CHECK_THROWS_AS(mask_features(f, mixed, 2, 3, 5), ShapeMismatch);
  CHECK_THROWS_AS(mask_features(f, std::vector<std::uint8_t>(5, 1), 2, 3, 4), ShapeMismatch);
}

TEST_CASE("ordered_concat layout") {
  const std::size_t n = 3;
  const std::size_t k = 4;
  const std::size_t c = 5;
  std::vector<double> values(n * k * c);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t ch = 0; ch < c; ++ch) values[(r * k + a) * c + ch] = r * 100.0 + a * 10.0 + ch;
    }
  }
  const RayFeatureBlock block(n, k, c, AnchorStage::kFine, values);
  const auto flat = ordered_concat(block);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        CHECK(flat[((r * k) + a) * c + ch] == r * 100.0 + a * 10.0 + ch);
        CHECK(block.at(r, a, ch) == r * 100.0 + a * 10.0 + ch);
      }
    }
  }
  const RayFeatureBlock single(1, 1, 3, AnchorStage::kCoarse, {7, 8, 9});
  CHECK(ordered_concat(single) == std::vector<double>{7, 8, 9});
}

TEST_CASE("toy featurizer matches the golden file") {
  std::ifstream in(RAYGROUP_FIXTURE_DIR "/toy_features_golden.txt");
  REQUIRE(in.good());
  std::vector<Vec3> pts;
  std::vector<std::vector<double>> golden;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<double> row;
    double v = 0.0;
    while (ss >> v) row.push_back(v);
    REQUIRE(row.size() == 3 + kToyFeatureDim);
    pts.push_back({row[0], row[1], row[2]});
    golden.emplace_back(row.begin() + 3, row.end());
  }
  const PointCloud out = toy_featurizer(PointCloud(pts));
  REQUIRE(out.feature_dim() == kToyFeatureDim);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto f = out.feature(i);
    for (std::size_t c = 0; c < kToyFeatureDim; ++c) CHECK(std::abs(f[c] - golden[i][c]) <= 1e-12);
  }
}

TEST_CASE("toy featurizer depends on position only") {
  const PointCloud a = toy_featurizer(PointCloud({{0.3, 0.4, 0.5}, {0.3, 0.4, 0.5}}));
  CHECK(std::ranges::equal(a.feature(0), a.feature(1)));
  const PointCloud b = toy_featurizer(PointCloud({{1.3, 0.4, 0.5}}));
  CHECK_FALSE(std::ranges::equal(a.feature(0), b.feature(0)));
}
