#ifndef CHANADAPT_LEARNED_HPP
#define CHANADAPT_LEARNED_HPP

// Trainable 1x1 channel projection y = W x + b and its desk-scale fitting:
// closed-form ridge least squares, the reconstruction gradient for external
// trainers, and plain full-batch gradient descent.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/pipeline.hpp"
#include "chanadapt/text.hpp"
#include "chanadapt/types.hpp"

namespace chanadapt {

struct LearnedProjection {
  Eigen::MatrixXd weights;  ///< C_t x C_s
  std::optional<Eigen::VectorXd> bias;
  std::uint64_t seed = 0;

  Eigen::Index sources() const noexcept { return weights.cols(); }
  Eigen::Index targets() const noexcept { return weights.rows(); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
    if (x.rows() != sources()) fail(errc::shape, "projection expects " + std::to_string(sources()) + " channels");
    Eigen::MatrixXd y = weights * x;
    if (bias) y.colwise() += *bias;
    return y;
  }
};

/// Weights uniform in [-1/sqrt(c_s), 1/sqrt(c_s)] from a seeded generator; zero bias.
inline LearnedProjection init_projection(Eigen::Index c_s, Eigen::Index c_t, bool with_bias, std::uint64_t seed) {
  if (c_s < 1 || c_t < 1) fail(errc::domain, "init_projection: channel counts must be >= 1");
  std::mt19937_64 rng(seed);
  const double k = 1.0 / std::sqrt(static_cast<double>(c_s));
  std::uniform_real_distribution<double> dist(-k, k);
  LearnedProjection p;
  p.seed = seed;
  p.weights.resize(c_t, c_s);
  for (Eigen::Index i = 0; i < c_t; ++i) {
    for (Eigen::Index j = 0; j < c_s; ++j) p.weights(i, j) = dist(rng);
  }
  if (with_bias) p.bias = Eigen::VectorXd::Zero(c_t);
  return p;
}

/// argmin ||W x_s + b 1^T - x_t||_F^2 + ridge ||W||_F^2 (bias unpenalized).
inline LearnedProjection lsq_fit(const Eigen::MatrixXd& x_s, const Eigen::MatrixXd& x_t, double ridge,
                                 bool with_bias = true) {
  if (x_s.cols() != x_t.cols()) fail(errc::shape, "lsq_fit: source and target sample counts differ");
  if (!(ridge >= 0.0)) fail(errc::domain, "lsq_fit: ridge must be >= 0");
  if (!x_s.allFinite() || !x_t.allFinite()) fail(errc::numeric, "lsq_fit: NaN or Inf in input");
  const auto cs = x_s.rows();
  const auto n = cs + (with_bias ? 1 : 0);
  Eigen::MatrixXd design(n, x_s.cols());
  design.topRows(cs) = x_s;
  if (with_bias) design.row(cs).setOnes();

  Eigen::MatrixXd normal = design * design.transpose();
  normal.diagonal().head(cs).array() += ridge;
  const Eigen::MatrixXd rhs = design * x_t.transpose();

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  if (qr.rank() < n) {
    fail(errc::numeric, "lsq_fit: normal equations are rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                            std::to_string(n) + "); add ridge or more samples");
  }
  const Eigen::MatrixXd sol = qr.solve(rhs).transpose();  // C_t x n

  LearnedProjection p;
  p.weights = sol.leftCols(cs);
  if (with_bias) p.bias = sol.col(cs);
  return p;
}

/// (1/T) ||p(x_s) - x_t||_F^2
inline double reconstruction_loss(const LearnedProjection& p, const Eigen::MatrixXd& x_s, const Eigen::MatrixXd& x_t) {
  if (x_t.rows() != p.targets() || x_t.cols() != x_s.cols()) fail(errc::shape, "reconstruction_loss: shape mismatch");
  return (p.forward(x_s) - x_t).squaredNorm() / static_cast<double>(x_s.cols());
}

struct ProjectionGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Gradient of the reconstruction loss: (2/T) R x_s^T and (2/T) R 1.
inline ProjectionGradient reconstruction_gradient(const LearnedProjection& p, const Eigen::MatrixXd& x_s,
                                                  const Eigen::MatrixXd& x_t) {
  if (x_s.rows() != p.sources() || x_t.rows() != p.targets() || x_s.cols() != x_t.cols()) {
    fail(errc::shape, "reconstruction_gradient: shape mismatch");
  }
  const double scale = 2.0 / static_cast<double>(x_s.cols());
  const Eigen::MatrixXd residual = p.forward(x_s) - x_t;
  return {scale * residual * x_s.transpose(), scale * residual.rowwise().sum()};
}

struct TrainResult {
  LearnedProjection projection;
  std::vector<double> loss_trace;  ///< loss before each step, then the final loss
};

/// Full-batch gradient descent on the reconstruction loss.
inline TrainResult sgd_train(LearnedProjection p, const Eigen::MatrixXd& x_s, const Eigen::MatrixXd& x_t, double lr,
                             int epochs) {
  if (!(lr >= 0.0)) fail(errc::domain, "sgd_train: learning rate must be >= 0");
  if (epochs < 0) fail(errc::domain, "sgd_train: epochs must be >= 0");
  TrainResult out;
  out.loss_trace.reserve(static_cast<std::size_t>(epochs) + 1);
  for (int e = 0; e < epochs; ++e) {
    const double loss = reconstruction_loss(p, x_s, x_t);
    if (!std::isfinite(loss) || loss > 1e12) {
      fail(errc::convergence, "sgd_train: diverged at epoch " + std::to_string(e) + " (loss " + text::format_double(loss) + ")");
    }
    out.loss_trace.push_back(loss);
    if (lr == 0.0) continue;
    const auto g = reconstruction_gradient(p, x_s, x_t);
    p.weights -= lr * g.weights;
    if (p.bias) *p.bias -= lr * g.bias;
  }
  const double final_loss = reconstruction_loss(p, x_s, x_t);
  if (!std::isfinite(final_loss) || final_loss > 1e12) fail(errc::convergence, "sgd_train: diverged");
  out.loss_trace.push_back(final_loss);
  out.projection = std::move(p);
  return out;
}

inline AdaptationMatrix to_adaptation_matrix(const LearnedProjection& p, const std::vector<std::string>& source,
                                             const std::vector<std::string>& target) {
  AdaptationMatrix m;
  m.matrix = p.weights;
  m.bias = p.bias;
  m.method = Method::conv1d;
  m.source_labels = source;
  m.target_labels = target;
  m.metadata["conv1d.seed"] = std::to_string(p.seed);
  m.metadata["conv1d.bias"] = p.bias ? "on" : "off";
  m.validate();
  return m;
}

/// bridge . fixed, keeping the bridge bias: the hybrid "fixed preprocessing
/// plus learned 1x1 bridge" construction for models with rigid channel counts.
inline AdaptationMatrix compose_bridge(const AdaptationMatrix& fixed, const LearnedProjection& bridge,
                                       const std::vector<std::string>& bridge_targets) {
  if (bridge.sources() != fixed.rows()) {
    fail(errc::shape, "compose_bridge: bridge takes " + std::to_string(bridge.sources()) + " channels but fixed matrix emits " +
                          std::to_string(fixed.rows()));
  }
  auto out = compose(to_adaptation_matrix(bridge, fixed.target_labels, bridge_targets), fixed);
  out.metadata["composed.construction"] = "preprocessing + learned bridge";
  return out;
}

}  // namespace chanadapt

#endif  // CHANADAPT_LEARNED_HPP
