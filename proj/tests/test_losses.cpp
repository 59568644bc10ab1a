#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "raygroup/errors.hpp"
#include "raygroup/losses.hpp"

using namespace raygroup;

namespace {

std::map<std::string, double> zero_terms() {
  std::map<std::string, double> t;
  for (const auto& n : loss_term_names()) t[n] = 0.0;
  return t;
}

}  // namespace

TEST_CASE("smooth_l1 examples") {
  CHECK(smooth_l1(0.3, 0.3, 0.0625) == 0.0);
  CHECK(smooth_l1(1.0, 0.0, 0.0625) == 0.96875);
  CHECK(smooth_l1(0.0625, 0.0, 0.0625) == doctest::Approx(0.03125).epsilon(1e-15));
  CHECK(smooth_l1(0.0, 0.04, 0.04) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(smooth_l1(0.0, 0.01, 0.04) == doctest::Approx(0.5 * 0.01 * 0.01 / 0.04).epsilon(1e-15));
  CHECK_THROWS_AS(smooth_l1(0, 1, 0.0), InvalidParameter);
}

TEST_CASE("smooth_l1 is symmetric and nonnegative") {
  for (double d = -2.0; d <= 2.0; d += 0.0137) {
    CHECK(smooth_l1(d, 0.0, 0.04) == smooth_l1(0.0, d, 0.04));
    CHECK(smooth_l1(d, 0.0, 0.04) >= 0.0);
  }
}

TEST_CASE("cross entropy examples") {
  const std::vector<double> onehot{0.0, 1.0, 0.0};
  CHECK(cross_entropy(onehot, 1) == 0.0);
  const std::vector<double> uniform{0.5, 0.5};
  CHECK(cross_entropy(uniform, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const std::vector<double> p{0.9, 0.1};
  CHECK(cross_entropy(p, 1) == doctest::Approx(2.302585092994046).epsilon(1e-12));
  CHECK(cross_entropy(onehot, 0) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy(p, 2), InvalidParameter);
  const std::vector<double> bad{0.5, 0.6};
  CHECK_THROWS_AS(cross_entropy(bad, 0), InvalidParameter);
}

TEST_CASE("scale_loss examples") {
  std::vector<VoteCluster> clusters(3);
  clusters[0].positive = true;
  clusters[0].scale = 1.0;
  clusters[1].positive = false;
  clusters[2].positive = true;
  clusters[2].scale = 2.0;
  const double beta = 0.0625;
  const std::vector<double> exact{1.0, 7.0, 2.0};
  CHECK(scale_loss(clusters, exact) == 0.0);
  const std::vector<double> off{1.0 + beta, 7.0, 2.0 + 2 * beta};
  CHECK(scale_loss(clusters, off) == doctest::Approx(0.0625).epsilon(1e-12));
  std::vector<VoteCluster> negatives(2);
  negatives[0].positive = false;
  negatives[1].positive = false;
  CHECK(scale_loss(negatives, std::vector<double>{1, 2}) == 0.0);
  CHECK_THROWS_AS(scale_loss(clusters, std::vector<double>{1, 2}), ShapeMismatch);
}

TEST_CASE("corner loss vanishes for equal boxes") {
  const Box3D a({1, 2, 3}, {1, 2, 3});
  CHECK(corner_loss(a, a) == 0.0);
  const Box3D b({1, 2, 3.5}, {1, 2, 3});
  CHECK(corner_loss(a, b) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("fbs loss averages per layer") {
  std::vector<FbsLayerPrediction> layers(2);
  layers[0].foreground_probs = {0.5, 0.5};
  layers[0].labels = {1, 0};
  layers[1].foreground_probs = {1.0};
  layers[1].labels = {1};
  CHECK(fbs_loss(layers) == doctest::Approx(std::log(2.0) / 2).epsilon(1e-15));
  CHECK(fbs_loss({}) == 0.0);
}

TEST_CASE("composite loss examples") {
  auto terms = zero_terms();
  CHECK(composite_loss(terms).total == 0.0);
  terms["fbs"] = 1.0;
  CHECK(composite_loss(terms).total == doctest::Approx(3.0).epsilon(1e-15));
  terms = zero_terms();
  terms["scale_reg"] = 1.0;
  terms["c_cls"] = 1.0;
  terms["f_cls"] = 1.0;
  const auto nested = composite_loss(terms);
  CHECK(nested.total == doctest::Approx(5.1).epsilon(1e-14));
  CHECK(nested.breakdown.at("rbfg") == doctest::Approx(5.1).epsilon(1e-14));
}

TEST_CASE("composite loss is linear with effective weights") {
  const LossWeights w;
  const std::map<std::string, double> effective{
      {"vote_reg", 10.0},      {"fbs", 3.0},          {"obj_cls", 5.0},
      {"sem_cls", 1.0},        {"size_reg", 10 * 0.11}, {"corner", 10 * 0.33},
      {"angle_cls", 10 * 0.1}, {"angle_reg", 10 * 0.11}, {"scale_reg", 10 * 0.11},
      {"c_cls", 10 * 0.2},     {"f_cls", 10 * 0.2}};
  for (const auto& [name, coef] : effective) {
    auto terms = zero_terms();
    terms[name] = 2.0;
    CHECK(composite_loss(terms, w).total == doctest::Approx(2.0 * coef).epsilon(1e-14));
  }
}

TEST_CASE("composite loss errors") {
  auto terms = zero_terms();
  terms.erase("corner");
  CHECK_THROWS_AS(composite_loss(terms), MissingTerm);
  terms = zero_terms();
  terms["fbs"] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(composite_loss(terms), NonFiniteTerm);
  terms = zero_terms();
  terms["bogus"] = 1.0;
  CHECK_THROWS_AS(composite_loss(terms), InvalidParameter);
  LossWeights w;
  w.fbs = -1.0;
  CHECK_THROWS_AS(w.validate(), InvalidParameter);
  CHECK_THROWS_AS(w.set("nope", 1.0), InvalidParameter);
}
