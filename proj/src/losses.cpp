#include "raygroup/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "raygroup/errors.hpp"

namespace raygroup {

namespace {

struct WeightField {
  const char* name;
  double LossWeights::*member;
};

constexpr WeightField kWeightFields[] = {
    {"vote_reg", &LossWeights::vote_reg},   {"fbs", &LossWeights::fbs},
    {"rbfg", &LossWeights::rbfg},           {"obj_cls", &LossWeights::obj_cls},
    {"box", &LossWeights::box},             {"sem_cls", &LossWeights::sem_cls},
    {"size_reg", &LossWeights::size_reg},   {"corner", &LossWeights::corner},
    {"angle_cls", &LossWeights::angle_cls}, {"angle_reg", &LossWeights::angle_reg},
    {"scale_reg", &LossWeights::scale_reg}, {"c_cls", &LossWeights::c_cls},
    {"f_cls", &LossWeights::f_cls},
};

constexpr double kProbabilityFloor = 1e-12;

}  // namespace

void LossWeights::validate() const {
  for (const auto& f : kWeightFields) {
    const double v = this->*f.member;
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidParameter(std::string("loss weight '") + f.name + "' must be finite and >= 0");
    }
  }
}

void LossWeights::set(const std::string& name, double value) {
  for (const auto& f : kWeightFields) {
    if (name == f.name) {
      this->*f.member = value;
      return;
    }
  }
  throw InvalidParameter("unknown loss weight '" + name + "'");
}

double LossWeights::get(const std::string& name) const {
  for (const auto& f : kWeightFields) {
    if (name == f.name) return this->*f.member;
  }
  throw InvalidParameter("unknown loss weight '" + name + "'");
}

const std::vector<std::string>& LossWeights::names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : kWeightFields) out.emplace_back(f.name);
    return out;
  }();
  return names;
}

double smooth_l1(double pred, double target, double beta) {
  if (!(beta > 0.0)) throw InvalidParameter("smooth_l1: beta must be > 0");
  const double d = std::abs(pred - target);
  return d < beta ? d * d / (2.0 * beta) : d - beta / 2.0;
}

double cross_entropy(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw InvalidParameter("cross_entropy: label " + std::to_string(label) + " out of range");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw InvalidParameter("cross_entropy: negative or NaN probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidParameter("cross_entropy: probabilities sum to " + format_double(total));
  }
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], kProbabilityFloor));
}

double mean_binary_cross_entropy(std::span<const double> positive_probs,
                                 std::span<const std::uint8_t> labels) {
  if (positive_probs.size() != labels.size()) {
    throw ShapeMismatch("binary cross entropy: probabilities and labels differ in length");
  }
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = positive_probs[i];
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("binary cross entropy: p outside [0,1]");
    const double probs[2] = {1.0 - p, p};
    total += cross_entropy(probs, labels[i] != 0 ? 1 : 0);
  }
  return total / static_cast<double>(labels.size());
}

double scale_loss(std::span<const VoteCluster> clusters, std::span<const double> predictions,
                  double beta) {
  if (clusters.size() != predictions.size()) {
    throw ShapeMismatch("scale_loss: " + std::to_string(predictions.size()) +
                        " predictions for " + std::to_string(clusters.size()) + " clusters");
  }
  double total = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (!clusters[i].positive.value_or(false)) continue;
    if (!clusters[i].scale) throw InvalidParameter("scale_loss: positive cluster without target");
    total += smooth_l1(predictions[i], *clusters[i].scale, beta);
    ++positives;
  }
  return positives == 0 ? 0.0 : total / static_cast<double>(positives);
}

double corner_loss(const Box3D& pred, const Box3D& target, double beta) {
  const auto a = pred.corners();
  const auto b = target.corners();
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += smooth_l1(distance(a[i], b[i]), 0.0, beta);
  return total / static_cast<double>(a.size());
}

double fbs_loss(std::span<const FbsLayerPrediction> layers) {
  if (layers.empty()) return 0.0;
  double total = 0.0;
  for (const auto& layer : layers) {
    total += mean_binary_cross_entropy(layer.foreground_probs, layer.labels);
  }
  return total / static_cast<double>(layers.size());
}

const std::vector<std::string>& loss_term_names() {
  static const std::vector<std::string> names = {
      "vote_reg", "fbs",       "obj_cls",   "sem_cls", "size_reg", "corner",
      "angle_cls", "angle_reg", "scale_reg", "c_cls",   "f_cls"};
  return names;
}

CompositeLoss composite_loss(const std::map<std::string, double>& terms,
                             const LossWeights& weights) {
  weights.validate();
  for (const auto& [name, value] : terms) {
    const auto& known = loss_term_names();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw InvalidParameter("composite_loss: unknown term '" + name + "'");
    }
    if (!std::isfinite(value)) throw NonFiniteTerm("composite_loss: term '" + name + "' is not finite");
  }
  const auto term = [&](const std::string& name) {
    const auto it = terms.find(name);
    if (it == terms.end()) throw MissingTerm("composite_loss: missing term '" + name + "'");
    return it->second;
  };

  CompositeLoss out;
  auto& bd = out.breakdown;
  const auto add = [&](const std::string& name, double effective_weight) {
    bd[name] = effective_weight * term(name);
  };
  add("vote_reg", weights.vote_reg);
  add("fbs", weights.fbs);
  add("obj_cls", weights.obj_cls);
  add("sem_cls", weights.sem_cls);
  add("size_reg", weights.box * weights.size_reg);
  add("corner", weights.box * weights.corner);
  add("angle_cls", weights.box * weights.angle_cls);
  add("angle_reg", weights.box * weights.angle_reg);
  add("scale_reg", weights.rbfg * weights.scale_reg);
  add("c_cls", weights.rbfg * weights.c_cls);
  add("f_cls", weights.rbfg * weights.f_cls);

  const double box = weights.size_reg * term("size_reg") + weights.corner * term("corner") +
                     weights.angle_cls * term("angle_cls") + weights.angle_reg * term("angle_reg");
  const double rbfg = weights.scale_reg * term("scale_reg") + weights.c_cls * term("c_cls") +
                      weights.f_cls * term("f_cls");
  bd["box"] = weights.box * box;
  bd["rbfg"] = weights.rbfg * rbfg;

  out.total = weights.vote_reg * term("vote_reg") + weights.fbs * term("fbs") +
              weights.rbfg * rbfg + weights.obj_cls * term("obj_cls") + weights.box * box +
              weights.sem_cls * term("sem_cls");
  if (!std::isfinite(out.total)) throw NonFiniteTerm("composite_loss: total is not finite");
  return out;
}

}  // namespace raygroup
