#include "raygroup/sampling.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "raygroup/errors.hpp"

namespace raygroup {

std::size_t ScoredSampleSet::count(SampleSource source) const {
  return static_cast<std::size_t>(std::count(sources.begin(), sources.end(), source));
}

std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> points, std::size_t m,
                                                std::size_t seed_index) {
  const std::size_t n = points.size();
  if (m < 1 || m > n) {
    throw InvalidParameter("fps: sample count " + std::to_string(m) + " outside [1, " +
                           std::to_string(n) + "]");
  }
  if (seed_index >= n) {
    throw InvalidParameter("fps: seed index " + std::to_string(seed_index) + " out of range");
  }

  // Selected points are marked with a negative distance so they never win.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> out;
  out.reserve(m);
  std::size_t last = seed_index;
  nearest[last] = -1.0;
  out.push_back(last);
  while (out.size() < m) {
    const Vec3 anchor = points[last];
    double best = -1.0;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = nearest[i];
      if (d < 0.0) continue;
      const double candidate = squared_distance(points[i], anchor);
      if (candidate < d) {
        d = candidate;
        nearest[i] = d;
      }
      if (d > best) {
        best = d;
        best_index = i;
      }
    }
    last = best_index;
    nearest[last] = -1.0;
    out.push_back(last);
  }
  return out;
}

ScoredSampleSet farthest_point_sampling(std::span<const Vec3> points, std::size_t m,
                                        std::size_t seed_index, std::span<const double> scores) {
  if (!scores.empty() && scores.size() != points.size()) {
    throw InvalidParameter("fps: score count does not match point count");
  }
  ScoredSampleSet out;
  out.indices = farthest_point_indices(points, m, seed_index);
  out.sources.assign(out.indices.size(), SampleSource::kFps);
  if (!scores.empty()) {
    for (std::size_t idx : out.indices) out.scores.push_back(scores[idx]);
  }
  return out;
}

ForegroundSplit foreground_split(std::span<const double> scores, std::size_t kappa) {
  if (kappa > scores.size()) {
    throw InvalidParameter("foreground_split: kappa " + std::to_string(kappa) +
                           " exceeds score count " + std::to_string(scores.size()));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  ForegroundSplit split;
  split.foreground.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kappa));
  split.background.assign(order.begin() + static_cast<std::ptrdiff_t>(kappa), order.end());
  std::sort(split.foreground.begin(), split.foreground.end());
  std::sort(split.background.begin(), split.background.end());
  return split;
}

namespace {

void append_subset_fps(std::span<const Vec3> points, std::span<const double> scores,
                       const std::vector<std::size_t>& subset, std::size_t count,
                       std::size_t seed, SampleSource source, ScoredSampleSet& out) {
  if (count == 0) return;
  std::vector<Vec3> local;
  local.reserve(subset.size());
  for (std::size_t idx : subset) local.push_back(points[idx]);
  for (std::size_t local_idx : farthest_point_indices(local, count, seed)) {
    const std::size_t idx = subset[local_idx];
    out.indices.push_back(idx);
    out.scores.push_back(scores[idx]);
    out.sources.push_back(source);
  }
}

}  // namespace

ScoredSampleSet foreground_biased_sampling(std::span<const Vec3> points,
                                           std::span<const double> scores, const FbsLayer& layer,
                                           FbsSeeds seeds) {
  const std::size_t n = points.size();
  if (scores.size() != n) throw InvalidParameter("fbs: score count does not match point count");
  if (layer.kappa > n) throw InvalidParameter("fbs: kappa exceeds point count");
  if (layer.alpha > layer.kappa) {
    throw InvalidParameter("fbs: alpha " + std::to_string(layer.alpha) + " exceeds kappa " +
                           std::to_string(layer.kappa));
  }
  if (layer.beta > n - layer.kappa) {
    throw InvalidParameter("fbs: beta " + std::to_string(layer.beta) +
                           " exceeds background size " + std::to_string(n - layer.kappa));
  }
  const ForegroundSplit split = foreground_split(scores, layer.kappa);
  ScoredSampleSet out;
  out.indices.reserve(layer.alpha + layer.beta);
  append_subset_fps(points, scores, split.foreground, layer.alpha, seeds.foreground,
                    SampleSource::kFbsForeground, out);
  append_subset_fps(points, scores, split.background, layer.beta, seeds.background,
                    SampleSource::kFbsBackground, out);
  return out;
}

std::vector<Vec3> AnchorSet::positions() const {
  std::vector<Vec3> out;
  out.reserve(anchors.size());
  for (const auto& a : anchors) out.push_back(a.position);
  return out;
}

AnchorSet coarse_anchors(const RayBundle& bundle, std::size_t coarse_count) {
  if (coarse_count < 1) throw InvalidParameter("coarse anchor count must be >= 1");
  AnchorSet set;
  set.stage = AnchorStage::kCoarse;
  set.num_rays = bundle.size();
  set.per_ray = coarse_count;
  set.anchors.reserve(bundle.size() * coarse_count);
  const double k_c = static_cast<double>(coarse_count);
  for (std::size_t r = 0; r < bundle.size(); ++r) {
    for (std::size_t k = 1; k <= coarse_count; ++k) {
      const double t = (static_cast<double>(k) - 0.5) / k_c;
      set.anchors.push_back({bundle.rays[r].point_at(t), t, r, AnchorStage::kCoarse, {}, {}});
    }
  }
  return set;
}

std::vector<double> fine_sample_fractions(std::span<const std::uint8_t> masks,
                                          std::size_t fine_count) {
  if (fine_count < 1) throw InvalidParameter("fine anchor count must be >= 1");
  if (masks.empty()) throw InvalidParameter("fine sampling needs at least one coarse bin");
  std::vector<std::size_t> positive_bins;
  for (std::size_t k = 0; k < masks.size(); ++k) {
    if (masks[k] > 1) throw InvalidParameter("coarse masks must be binary");
    if (masks[k] == 1) positive_bins.push_back(k);
  }

  std::vector<double> out;
  out.reserve(fine_count);
  if (positive_bins.empty()) {
    for (std::size_t k = 1; k <= fine_count; ++k) {
      out.push_back(static_cast<double>(k) / static_cast<double>(fine_count + 1));
    }
    return out;
  }

  // Each positive bin holds 1/S of the mass. The CDF reaches u = k/K_f inside
  // the r-th positive bin, r = ceil(k*S/K_f) - 1, at local fraction
  // (k*S - r*K_f) / K_f. Integer arithmetic keeps bin boundaries exact.
  const std::size_t positives = positive_bins.size();
  const double bins = static_cast<double>(masks.size());
  for (std::size_t k = 1; k <= fine_count; ++k) {
    const std::size_t mass = k * positives;
    const std::size_t rank = (mass + fine_count - 1) / fine_count - 1;
    const double local = static_cast<double>(mass - rank * fine_count) /
                         static_cast<double>(fine_count);
    out.push_back((static_cast<double>(positive_bins[rank]) + local) / bins);
  }
  return out;
}

AnchorSet fine_anchors(std::span<const std::uint8_t> coarse_masks, std::size_t coarse_count,
                       std::size_t fine_count, const RayBundle& bundle) {
  if (coarse_count < 1) throw InvalidParameter("coarse anchor count must be >= 1");
  if (coarse_masks.size() != bundle.size() * coarse_count) {
    throw InvalidParameter("fine_anchors: expected " +
                           std::to_string(bundle.size() * coarse_count) + " coarse masks, got " +
                           std::to_string(coarse_masks.size()));
  }
  AnchorSet set;
  set.stage = AnchorStage::kFine;
  set.num_rays = bundle.size();
  set.per_ray = fine_count;
  set.anchors.reserve(bundle.size() * fine_count);
  for (std::size_t r = 0; r < bundle.size(); ++r) {
    const auto ray_masks = coarse_masks.subspan(r * coarse_count, coarse_count);
    for (double t : fine_sample_fractions(ray_masks, fine_count)) {
      set.anchors.push_back({bundle.rays[r].point_at(t), t, r, AnchorStage::kFine, {}, {}});
    }
  }
  return set;
}

std::vector<std::uint8_t> binarize_masks(std::span<const double> probabilities,
                                         double threshold) {
  std::vector<std::uint8_t> out;
  out.reserve(probabilities.size());
  for (double p : probabilities) out.push_back(p >= threshold ? 1 : 0);
  return out;
}

}  // namespace raygroup
