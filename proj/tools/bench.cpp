// Timing harness for the two hot paths: FPS over a large cloud and the
// anchor ball queries of a full grouping pass.
#include <chrono>
#include <cstdio>
#include <vector>

#include "raygroup/rays.hpp"
#include "raygroup/sampling.hpp"
#include "raygroup/spatial_index.hpp"
#include "raygroup/synth.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<raygroup::Vec3> uniform_cloud(std::size_t n, std::uint64_t seed, double extent) {
  raygroup::SplitMix64 rng(seed);
  std::vector<raygroup::Vec3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({rng.uniform(0.0, extent), rng.uniform(0.0, extent), rng.uniform(0.0, extent / 2)});
  }
  return pts;
}

}  // namespace

int main() {
  const auto cloud = uniform_cloud(50000, 7, 6.0);
  auto start = Clock::now();
  const auto picked = raygroup::farthest_point_indices(cloud, 2048, 0);
  const double fps_ms = elapsed_ms(start);

  std::vector<raygroup::Vec3> seeds;
  for (std::size_t i : picked) seeds.push_back(cloud[i]);
  raygroup::SplitMix64 rng(11);
  std::vector<raygroup::Vec3> centers;
  for (int c = 0; c < 256; ++c) centers.push_back(seeds[rng.below(seeds.size())]);
  std::vector<raygroup::Vec3> directions;
  for (const auto& a : raygroup::ray_directions(raygroup::RayLayout{})) {
    directions.push_back(raygroup::direction_from_angles(a.polar, a.azimuth));
  }

  start = Clock::now();
  const raygroup::GridIndex index(seeds, 0.2);
  std::size_t hits = 0;
  for (const auto& c : centers) {
    for (const auto& d : directions) {
      for (int k = 1; k <= 8; ++k) {
        const double t = (k - 0.5) / 8.0;
        hits += index.ball_query(c + d * (0.6 * t), 0.2, 8).size();
      }
    }
  }
  const double query_ms = elapsed_ms(start);

  std::printf("fps 50000->2048: %.1f ms (budget 500)\n", fps_ms);
  std::printf("ball queries 256x%zux8 over 2048 seeds: %.1f ms (budget 200, %zu hits)\n",
              directions.size(), query_ms, hits);
  return 0;
}
