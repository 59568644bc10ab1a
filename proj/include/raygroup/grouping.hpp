#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "raygroup/geometry.hpp"
#include "raygroup/sampling.hpp"
#include "raygroup/scene.hpp"
#include "raygroup/spatial_index.hpp"

namespace raygroup {

enum class CandidateMode { kVoteFps, kSeedFps };

CandidateMode parse_candidate_mode(std::string_view name);
std::string_view to_string(CandidateMode mode);

/// Returns indices into the (index-aligned) vote / seed arrays. Candidate
/// centers are always the votes at those indices.
std::vector<std::size_t> sample_candidates(std::span<const Vec3> votes,
                                           std::span<const Vec3> seeds, std::size_t count,
                                           CandidateMode mode);

struct VoteCluster {
  Vec3 center;
  std::vector<double> feature;
  std::vector<std::size_t> member_seed_indices;  // ascending
  std::optional<bool> positive;
  std::optional<double> scale;
  int assigned_box = -1;
};

/// Members are the votes within `radius` of each candidate (multi-membership
/// allowed). When `seed_features` is given (row-major, one row per vote),
/// the cluster feature is the mean over members.
std::vector<VoteCluster> group_votes(std::span<const Vec3> candidates,
                                     std::span<const Vec3> votes, double radius,
                                     std::span<const double> seed_features = {},
                                     std::size_t feature_dim = 0);

inline constexpr double kDefaultPositiveRadius = 0.3;

/// Positive iff some GT center lies within `radius`; positives are assigned
/// the nearest GT (ties: lower box index) and its half-diagonal scale.
void assign_positive_clusters(std::vector<VoteCluster>& clusters, std::span<const Box3D> gt_boxes,
                              double radius = kDefaultPositiveRadius);

/// label = 1 iff some cloud point with instance id == assigned_box lies
/// within `radius` of the anchor. `cloud_index` indexes the scene cloud.
std::vector<std::uint8_t> anchor_mask_labels(const AnchorSet& anchors,
                                             const SceneAnnotation& annotation,
                                             const GridIndex& cloud_index, double radius,
                                             int assigned_box);

/// Max-pools the features of up to `max_k` neighbors within `radius` of each
/// anchor. Anchors with no neighbor get a zero vector. Row-major output.
/// `neighbor_counts`, when given, receives the per-anchor neighbor count.
std::vector<double> pool_anchor_features(const AnchorSet& anchors, const GridIndex& index,
                                         std::span<const double> features,
                                         std::size_t feature_dim, double radius,
                                         std::size_t max_k,
                                         std::vector<std::size_t>* neighbor_counts = nullptr);

/// Masked anchor features laid out as (ray, anchor, channel).
class RayFeatureBlock {
 public:
  RayFeatureBlock(std::size_t num_rays, std::size_t per_ray, std::size_t channels,
                  AnchorStage stage, std::vector<double> values);

  std::size_t num_rays() const noexcept { return num_rays_; }
  std::size_t per_ray() const noexcept { return per_ray_; }
  std::size_t channels() const noexcept { return channels_; }
  AnchorStage stage() const noexcept { return stage_; }
  double at(std::size_t ray, std::size_t anchor, std::size_t channel) const;
  std::span<const double> anchor_feature(std::size_t ray, std::size_t anchor) const;

 private:
  std::size_t num_rays_;
  std::size_t per_ray_;
  std::size_t channels_;
  AnchorStage stage_;
  std::vector<double> values_;
};

/// Zeroes the features of negatively labelled anchors.
RayFeatureBlock mask_features(std::span<const double> features, std::span<const std::uint8_t> labels,
                              std::size_t num_rays, std::size_t per_ray, std::size_t channels,
                              AnchorStage stage = AnchorStage::kCoarse);

/// Flattens in canonical order: index ((ray * K) + k) * C + c.
std::vector<double> ordered_concat(const RayFeatureBlock& block);

inline constexpr std::size_t kToyFeatureDim = 32;

/// Fixed sinusoidal positional encoding. Channel c uses band b = c / 2,
/// axis b % 3 and frequency 2^(b / 3) * pi; even channels take sin, odd cos.
PointCloud toy_featurizer(const PointCloud& cloud);

}  // namespace raygroup
