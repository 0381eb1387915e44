#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "chanadapt/geometry.hpp"
#include "chanadapt/learned.hpp"
#include "chanadapt/ssi.hpp"

using namespace chanadapt;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(r, c);
  for (auto& v : m.reshaped()) v = g(rng);
  return m;
}

std::vector<std::string> names(const char* prefix, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

TEST(Init, BoundsAndDeterminism) {
  const auto p = init_projection(64, 19, true, 7);
  EXPECT_EQ(p.weights.rows(), 19);
  EXPECT_EQ(p.weights.cols(), 64);
  EXPECT_LE(p.weights.cwiseAbs().maxCoeff(), 1.0 / 8.0);
  ASSERT_TRUE(p.bias.has_value());
  EXPECT_TRUE(p.bias->isZero(0.0));
  EXPECT_TRUE(init_projection(64, 19, true, 7).weights == p.weights);
  EXPECT_FALSE(init_projection(64, 19, true, 8).weights == p.weights);
  EXPECT_FALSE(init_projection(3, 2, false, 1).bias.has_value());
  EXPECT_THROW(init_projection(0, 2, false, 1), error);
}

TEST(LsqFit, RecoversPlantedMap) {
  const auto w = gaussian(5, 8, 1);
  const Eigen::VectorXd b = gaussian(5, 1, 2);
  const auto xs = gaussian(8, 300, 3);
  const Eigen::MatrixXd xt = (w * xs).colwise() + b;
  const auto p = lsq_fit(xs, xt, 0.0);
  EXPECT_LT((p.weights - w).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((*p.bias - b).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(reconstruction_loss(p, xs, xt), 1e-20);
}

TEST(LsqFit, IdentityTarget) {
  const auto xs = gaussian(6, 100, 4);
  const auto p = lsq_fit(xs, xs, 0.0, false);
  EXPECT_LT((p.weights - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_FALSE(p.bias.has_value());
}

TEST(LsqFit, HeavyRidgeShrinksWeights) {
  const auto xs = gaussian(6, 100, 5);
  const auto xt = gaussian(3, 100, 6);
  const auto p = lsq_fit(xs, xt, 1e12);
  EXPECT_LT(p.weights.cwiseAbs().maxCoeff(), 1e-8);
  // bias is unpenalized, so it tends to the target means
  EXPECT_LT((*p.bias - xt.rowwise().mean()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(LsqFit, ResidualOrthogonalToInputs) {
  const auto xs = gaussian(7, 120, 7);
  const auto xt = gaussian(4, 120, 8);
  const auto p = lsq_fit(xs, xt, 0.0);
  const Eigen::MatrixXd r = p.forward(xs) - xt;
  EXPECT_LT((r * xs.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(r.rowwise().sum().cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LsqFit, Errors) {
  EXPECT_THROW(lsq_fit(gaussian(3, 10, 1), gaussian(2, 9, 2), 0.0), error);
  EXPECT_THROW(lsq_fit(gaussian(3, 10, 1), gaussian(2, 10, 2), -1.0), error);
  // more channels than samples without ridge
  EXPECT_THROW(lsq_fit(gaussian(20, 5, 1), gaussian(2, 5, 2), 0.0), error);
  EXPECT_NO_THROW(lsq_fit(gaussian(20, 5, 1), gaussian(2, 5, 2), 1e-3));
}

TEST(Gradient, MatchesFiniteDifferences) {
  auto p = init_projection(5, 3, true, 9);
  *p.bias = gaussian(3, 1, 10);
  const auto xs = gaussian(5, 40, 11);
  const auto xt = gaussian(3, 40, 12);
  const auto g = reconstruction_gradient(p, xs, xt);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      auto up = p, dn = p;
      up.weights(i, j) += h;
      dn.weights(i, j) -= h;
      const double fd = (reconstruction_loss(up, xs, xt) - reconstruction_loss(dn, xs, xt)) / (2 * h);
      EXPECT_NEAR(g.weights(i, j), fd, 1e-7);
    }
    auto up = p, dn = p;
    (*up.bias)(i) += h;
    (*dn.bias)(i) -= h;
    EXPECT_NEAR(g.bias(i), (reconstruction_loss(up, xs, xt) - reconstruction_loss(dn, xs, xt)) / (2 * h), 1e-7);
  }
}

TEST(Sgd, ConvergesToLeastSquares) {
  const auto xs = gaussian(4, 200, 13);
  const auto xt = (gaussian(4, 4, 14) * xs).eval();
  const auto exact = lsq_fit(xs, xt, 0.0);
  const auto r = sgd_train(init_projection(4, 4, true, 15), xs, xt, 0.2, 500);
  EXPECT_EQ(r.loss_trace.size(), 501u);
  EXPECT_LT((r.projection.weights - exact.weights).cwiseAbs().maxCoeff(), 1e-6);
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i) {
    // once the residual is pure round-off (~1e-30) the trace only jitters
    EXPECT_LE(r.loss_trace[i], r.loss_trace[i - 1] * (1 + 1e-12) + 1e-24);
  }
}

TEST(Sgd, ZeroLearningRateKeepsWeights) {
  const auto xs = gaussian(4, 50, 16);
  const auto xt = gaussian(2, 50, 17);
  const auto init = init_projection(4, 2, true, 18);
  const auto r = sgd_train(init, xs, xt, 0.0, 5);
  EXPECT_TRUE(r.projection.weights == init.weights);
  for (const double l : r.loss_trace) EXPECT_EQ(l, r.loss_trace.front());
}

TEST(Sgd, DivergenceReported) {
  const auto xs = (100.0 * gaussian(4, 50, 19)).eval();
  const auto xt = gaussian(2, 50, 20);
  try {
    sgd_train(init_projection(4, 2, true, 1), xs, xt, 10.0, 200);
    FAIL() << "no divergence";
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::convergence);
  }
  EXPECT_THROW(sgd_train(init_projection(4, 2, true, 1), xs, xt, -1.0, 1), error);
}

TEST(Bridge, AfterFixedMatrix) {
  const auto src = builtin_montage("ten_ten_64");
  const auto fixed = ssi_matrix(src, builtin_montage("ten_twenty_19"));
  const auto bridge = init_projection(19, 20, true, 3);
  const auto m = compose_bridge(fixed, bridge, names("m", 20));
  EXPECT_EQ(m.rows(), 20);
  EXPECT_EQ(m.cols(), 64);
  EXPECT_EQ(m.source_labels, src.labels());
  ASSERT_TRUE(m.bias.has_value());
  EXPECT_LT((m.matrix - bridge.weights * fixed.matrix).cwiseAbs().maxCoeff(), 1e-14);

  const auto x = gaussian(64, 10, 4);
  Signal s{x, 256.0, src.labels()};
  const Eigen::MatrixXd want = bridge.forward(fixed.matrix * x);
  EXPECT_LT((apply(m, s).data - want).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(compose_bridge(fixed, init_projection(18, 20, true, 3), names("m", 20)), error);
}

TEST(Bridge, IdentityBridgeIsExact) {
  const auto fixed = ssi_matrix(builtin_montage("bci2a_22"), builtin_montage("ten_twenty_19"));
  LearnedProjection id;
  id.weights = Eigen::MatrixXd::Identity(19, 19);
  const auto m = compose_bridge(fixed, id, fixed.target_labels);
  EXPECT_TRUE(m.matrix == fixed.matrix);
  EXPECT_FALSE(m.bias.has_value());
}
