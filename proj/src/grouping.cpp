#include "raygroup/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "raygroup/errors.hpp"
#include "raygroup/rays.hpp"

namespace raygroup {

CandidateMode parse_candidate_mode(std::string_view name) {
  if (name == "vote_fps") return CandidateMode::kVoteFps;
  if (name == "seed_fps") return CandidateMode::kSeedFps;
  throw InvalidParameter("unknown candidate mode '" + std::string(name) + "'");
}

std::string_view to_string(CandidateMode mode) {
  return mode == CandidateMode::kVoteFps ? "vote_fps" : "seed_fps";
}

std::vector<std::size_t> sample_candidates(std::span<const Vec3> votes,
                                           std::span<const Vec3> seeds, std::size_t count,
                                           CandidateMode mode) {
  if (votes.size() != seeds.size()) {
    throw InvalidParameter("sample_candidates: votes and seeds must be index-aligned");
  }
  if (count > votes.size()) {
    throw InvalidParameter("sample_candidates: requested " + std::to_string(count) +
                           " candidates from " + std::to_string(votes.size()) + " votes");
  }
  if (count == 0) return {};
  return farthest_point_indices(mode == CandidateMode::kVoteFps ? votes : seeds, count, 0);
}

std::vector<VoteCluster> group_votes(std::span<const Vec3> candidates,
                                     std::span<const Vec3> votes, double radius,
                                     std::span<const double> seed_features,
                                     std::size_t feature_dim) {
  if (!(radius > 0.0)) throw InvalidParameter("group_votes: radius must be > 0");
  if (feature_dim > 0 && seed_features.size() != votes.size() * feature_dim) {
    throw ShapeMismatch("group_votes: seed features do not match vote count");
  }
  const GridIndex index(votes, radius);
  std::vector<VoteCluster> clusters;
  clusters.reserve(candidates.size());
  for (const Vec3& center : candidates) {
    VoteCluster cluster;
    cluster.center = center;
    cluster.member_seed_indices = index.ball_query(center, radius);
    std::sort(cluster.member_seed_indices.begin(), cluster.member_seed_indices.end());
    if (feature_dim > 0) {
      cluster.feature.assign(feature_dim, 0.0);
      for (std::size_t m : cluster.member_seed_indices) {
        for (std::size_t c = 0; c < feature_dim; ++c) {
          cluster.feature[c] += seed_features[m * feature_dim + c];
        }
      }
      if (!cluster.member_seed_indices.empty()) {
        const double inv = 1.0 / static_cast<double>(cluster.member_seed_indices.size());
        for (double& v : cluster.feature) v *= inv;
      }
    }
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

void assign_positive_clusters(std::vector<VoteCluster>& clusters, std::span<const Box3D> gt_boxes,
                              double radius) {
  if (!(radius >= 0.0)) throw InvalidParameter("positive radius must be >= 0");
  const double r2 = radius * radius;
  for (auto& cluster : clusters) {
    double best = std::numeric_limits<double>::infinity();
    int best_box = -1;
    for (std::size_t b = 0; b < gt_boxes.size(); ++b) {
      const double d2 = squared_distance(cluster.center, gt_boxes[b].center);
      if (d2 < best) {
        best = d2;
        best_box = static_cast<int>(b);
      }
    }
    if (best_box >= 0 && best <= r2) {
      cluster.positive = true;
      cluster.assigned_box = best_box;
      cluster.scale = scale_target(gt_boxes[static_cast<std::size_t>(best_box)]);
    } else {
      cluster.positive = false;
      cluster.assigned_box = -1;
      cluster.scale.reset();
    }
  }
}

std::vector<std::uint8_t> anchor_mask_labels(const AnchorSet& anchors,
                                             const SceneAnnotation& annotation,
                                             const GridIndex& cloud_index, double radius,
                                             int assigned_box) {
  if (!(radius > 0.0)) throw InvalidParameter("anchor_mask_labels: radius must be > 0");
  if (annotation.point_instance_ids.size() != cloud_index.size()) {
    throw ShapeMismatch("anchor_mask_labels: annotation does not match indexed cloud");
  }
  if (assigned_box >= static_cast<int>(annotation.boxes.size()) || assigned_box < -1) {
    throw InvalidParameter("anchor_mask_labels: assigned box " + std::to_string(assigned_box) +
                           " out of range");
  }
  std::vector<std::uint8_t> labels(anchors.size(), 0);
  if (assigned_box < 0) return labels;
  const auto& ids = annotation.point_instance_ids;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    labels[i] = cloud_index.any_within(anchors.anchors[i].position, radius,
                                       [&](std::uint32_t idx) { return ids[idx] == assigned_box; })
                    ? 1
                    : 0;
  }
  return labels;
}

std::vector<double> pool_anchor_features(const AnchorSet& anchors, const GridIndex& index,
                                         std::span<const double> features,
                                         std::size_t feature_dim, double radius,
                                         std::size_t max_k,
                                         std::vector<std::size_t>* neighbor_counts) {
  if (features.size() != index.size() * feature_dim) {
    throw ShapeMismatch("pool_anchor_features: feature rows do not match indexed points");
  }
  std::vector<double> out(anchors.size() * feature_dim, 0.0);
  if (neighbor_counts) neighbor_counts->assign(anchors.size(), 0);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto neighbors = index.ball_query(anchors.anchors[i].position, radius, max_k);
    if (neighbor_counts) (*neighbor_counts)[i] = neighbors.size();
    if (neighbors.empty()) continue;
    double* row = out.data() + i * feature_dim;
    std::fill(row, row + feature_dim, -std::numeric_limits<double>::infinity());
    for (std::size_t n : neighbors) {
      for (std::size_t c = 0; c < feature_dim; ++c) {
        row[c] = std::max(row[c], features[n * feature_dim + c]);
      }
    }
  }
  return out;
}

RayFeatureBlock::RayFeatureBlock(std::size_t num_rays, std::size_t per_ray, std::size_t channels,
                                 AnchorStage stage, std::vector<double> values)
    : num_rays_(num_rays),
      per_ray_(per_ray),
      channels_(channels),
      stage_(stage),
      values_(std::move(values)) {
  if (values_.size() != num_rays_ * per_ray_ * channels_) {
    throw ShapeMismatch("ray feature block: " + std::to_string(values_.size()) +
                        " values for layout (" + std::to_string(num_rays_) + ", " +
                        std::to_string(per_ray_) + ", " + std::to_string(channels_) + ")");
  }
}

double RayFeatureBlock::at(std::size_t ray, std::size_t anchor, std::size_t channel) const {
  if (ray >= num_rays_ || anchor >= per_ray_ || channel >= channels_) {
    throw InvalidParameter("ray feature block index out of range");
  }
  return values_[(ray * per_ray_ + anchor) * channels_ + channel];
}

std::span<const double> RayFeatureBlock::anchor_feature(std::size_t ray,
                                                        std::size_t anchor) const {
  if (ray >= num_rays_ || anchor >= per_ray_) {
    throw InvalidParameter("ray feature block index out of range");
  }
  return std::span<const double>(values_).subspan((ray * per_ray_ + anchor) * channels_,
                                                  channels_);
}

RayFeatureBlock mask_features(std::span<const double> features, std::span<const std::uint8_t> labels,
                              std::size_t num_rays, std::size_t per_ray, std::size_t channels,
                              AnchorStage stage) {
  const std::size_t anchors = num_rays * per_ray;
  if (labels.size() != anchors || features.size() != anchors * channels) {
    throw ShapeMismatch("mask_features: " + std::to_string(labels.size()) + " labels and " +
                        std::to_string(features.size()) + " feature values for " +
                        std::to_string(anchors) + " anchors x " + std::to_string(channels) +
                        " channels");
  }
  std::vector<double> values(features.begin(), features.end());
  for (std::size_t i = 0; i < anchors; ++i) {
    if (labels[i] != 0) continue;
    std::fill_n(values.begin() + static_cast<std::ptrdiff_t>(i * channels), channels, 0.0);
  }
  return RayFeatureBlock(num_rays, per_ray, channels, stage, std::move(values));
}

std::vector<double> ordered_concat(const RayFeatureBlock& block) {
  std::vector<double> out;
  out.reserve(block.num_rays() * block.per_ray() * block.channels());
  for (std::size_t r = 0; r < block.num_rays(); ++r) {
    for (std::size_t k = 0; k < block.per_ray(); ++k) {
      const auto f = block.anchor_feature(r, k);
      out.insert(out.end(), f.begin(), f.end());
    }
  }
  return out;
}

PointCloud toy_featurizer(const PointCloud& cloud) {
  std::vector<Vec3> positions(cloud.positions().begin(), cloud.positions().end());
  std::vector<double> features;
  features.reserve(positions.size() * kToyFeatureDim);
  for (const Vec3& p : positions) {
    for (std::size_t c = 0; c < kToyFeatureDim; ++c) {
      const std::size_t band = c / 2;
      const double freq = std::ldexp(std::numbers::pi, static_cast<int>(band / 3));
      const double arg = freq * p[band % 3];
      features.push_back(c % 2 == 0 ? std::sin(arg) : std::cos(arg));
    }
  }
  return PointCloud(std::move(positions), std::move(features), kToyFeatureDim);
}

}  // namespace raygroup
