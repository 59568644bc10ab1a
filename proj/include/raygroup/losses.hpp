#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "raygroup/grouping.hpp"
#include "raygroup/scene.hpp"

namespace raygroup {

/// Balancing factors of the detector objective. Defaults are the published
/// training configuration.
struct LossWeights {
  double vote_reg = 10.0;
  double fbs = 3.0;
  double rbfg = 10.0;
  double obj_cls = 5.0;
  double box = 10.0;
  double sem_cls = 1.0;
  double size_reg = 0.11;
  double corner = 0.33;
  double angle_cls = 0.1;
  double angle_reg = 0.11;
  double scale_reg = 0.11;
  double c_cls = 0.2;
  double f_cls = 0.2;

  /// Throws InvalidParameter when any weight is negative or non-finite.
  void validate() const;
  /// Assigns a weight by its term name (e.g. "scale_reg").
  void set(const std::string& name, double value);
  double get(const std::string& name) const;
  static const std::vector<std::string>& names();
};

/// Smooth-L1 betas for the regression terms.
inline constexpr double kScaleRegBeta = 0.0625;
inline constexpr double kSizeRegBeta = 0.0625;
inline constexpr double kAngleRegBeta = 0.04;

double smooth_l1(double pred, double target, double beta);

/// -log(max(probs[label], 1e-12)). `probs` must be a distribution.
double cross_entropy(std::span<const double> probs, int label);

/// Mean binary cross entropy of foreground probabilities against 0/1 labels.
double mean_binary_cross_entropy(std::span<const double> positive_probs,
                                 std::span<const std::uint8_t> labels);

/// Mean smooth-L1 over positive clusters only; 0 when there are none.
double scale_loss(std::span<const VoteCluster> clusters, std::span<const double> predictions,
                  double beta = kScaleRegBeta);

/// Mean smooth-L1 of the 8 corresponding corner distances.
double corner_loss(const Box3D& pred, const Box3D& target, double beta = 1.0);

/// Per-layer mean binary cross entropy, then mean across layers.
struct FbsLayerPrediction {
  std::vector<double> foreground_probs;
  std::vector<std::uint8_t> labels;
};
double fbs_loss(std::span<const FbsLayerPrediction> layers);

/// Names of the raw terms composite_loss requires.
const std::vector<std::string>& loss_term_names();

struct CompositeLoss {
  double total = 0.0;
  /// Raw term name -> effective-weighted contribution, plus the composed
  /// group values "box" and "rbfg" (already weighted by their outer factor).
  std::map<std::string, double> breakdown;
};

/// The box terms and the ray-grouping terms are combined with their inner
/// factors first, then scaled by their outer factors in the total.
CompositeLoss composite_loss(const std::map<std::string, double>& terms,
                             const LossWeights& weights = {});

}  // namespace raygroup
