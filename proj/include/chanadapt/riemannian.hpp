#ifndef CHANADAPT_RIEMANNIAN_HPP
#define CHANADAPT_RIEMANNIAN_HPP

// Per-subject re-centering on the SPD manifold: shrunk epoch covariances, their
// affine-invariant (Karcher) mean, and whitening by its inverse square root.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/pipeline.hpp"
#include "chanadapt/text.hpp"
#include "chanadapt/types.hpp"

namespace chanadapt {

/// Symmetric matrix whose smallest eigenvalue was checked to be positive.
class SpdMatrix {
 public:
  static SpdMatrix certify(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0) fail(errc::shape, "SPD matrix must be square and non-empty");
    if (!m.allFinite()) fail(errc::numeric, "SPD matrix has non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) fail(errc::numeric, "matrix is not symmetric");
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    // Relative floor so that exact-zero variance directions are not certified on rounding noise.
    if (!(lo > 0.0) || lo <= 1e-14 * hi) {
      fail(errc::numeric, "matrix is not positive definite (min eigenvalue " + text::format_double(lo) + ")");
    }
    return SpdMatrix(sym, lo);
  }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }
  double min_eigenvalue() const noexcept { return min_eig_; }

 private:
  SpdMatrix(Eigen::MatrixXd v, double min_eig) : values_(std::move(v)), min_eig_(min_eig) {}

  Eigen::MatrixXd values_;
  double min_eig_;
};

struct Shrinkage {
  bool automatic = true;  ///< Ledoit-Wolf coefficient from the data
  double alpha = 0.0;     ///< used when !automatic

  static Shrinkage ledoit_wolf() { return {true, 0.0}; }
  static Shrinkage fixed(double a) { return {false, a}; }
};

struct RiemannianConfig {
  Shrinkage shrinkage = Shrinkage::ledoit_wolf();
  double mean_tol = 1e-8;
  int mean_max_iter = 50;

  void validate() const {
    if (!shrinkage.automatic && !(shrinkage.alpha >= 0.0 && shrinkage.alpha <= 1.0)) {
      fail(errc::config, "shrinkage alpha must be in [0, 1]");
    }
    if (!(mean_tol > 0.0)) fail(errc::config, "mean_tol must be > 0");
    if (mean_max_iter < 1) fail(errc::config, "mean_max_iter must be >= 1");
  }
};

namespace detail {

template <typename F>
Eigen::MatrixXd spectral_map(const Eigen::MatrixXd& sym, F&& f) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::VectorXd mapped = es.eigenvalues().unaryExpr(f);
  Eigen::MatrixXd out = es.eigenvectors() * mapped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace detail

inline Eigen::MatrixXd spd_sqrt(const SpdMatrix& c) {
  return detail::spectral_map(c.values(), [](double v) { return std::sqrt(v); });
}

inline Eigen::MatrixXd spd_log(const SpdMatrix& c) {
  return detail::spectral_map(c.values(), [](double v) { return std::log(v); });
}

/// Matrix exponential of a symmetric matrix.
inline Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& s) {
  return detail::spectral_map(0.5 * (s + s.transpose()), [](double v) { return std::exp(v); });
}

/// V diag(lambda^{-1/2}) V^T.
inline Eigen::MatrixXd inv_sqrt(const SpdMatrix& c) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.values());
  if (!(es.eigenvalues().minCoeff() >= 1e-12)) {
    fail(errc::numeric, "inv_sqrt: eigenvalue " + text::format_double(es.eigenvalues().minCoeff()) +
                            " below 1e-12, matrix too ill-conditioned to whiten");
  }
  const Eigen::VectorXd d = es.eigenvalues().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd out = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

/// Ledoit-Wolf optimal shrinkage toward (trace/C) I for a row-centered C x T epoch.
inline double ledoit_wolf_alpha(const Eigen::MatrixXd& centered) {
  const double n = static_cast<double>(centered.cols());
  const double p = static_cast<double>(centered.rows());
  const Eigen::MatrixXd s = centered * centered.transpose() / n;
  const double mu = s.trace() / p;
  const Eigen::MatrixXd sq = centered.array().square().matrix();
  const double beta_sum = (sq * sq.transpose()).sum();
  const double delta_sum = s.array().square().sum();
  // ||S - mu I||_F^2 / p  and the estimation-error term, as in Ledoit & Wolf (2004).
  const double delta = (delta_sum - 2.0 * mu * s.trace() + p * mu * mu) / p;
  double beta = (beta_sum / n - delta_sum) / (p * n);
  beta = std::min(beta, delta);
  if (!std::isfinite(beta) || !std::isfinite(delta)) fail(errc::numeric, "non-finite Ledoit-Wolf intermediate");
  if (beta <= 0.0 || delta <= 0.0) return 0.0;
  return std::clamp(beta / delta, 0.0, 1.0);
}

struct ShrunkCovariance {
  SpdMatrix matrix;
  double alpha;
};

/// (1/T) X_c X_c^T of the row-centered epoch, shrunk toward (trace/C) I.
inline ShrunkCovariance epoch_covariance(const Eigen::MatrixXd& epoch, const RiemannianConfig& cfg = {}) {
  cfg.validate();
  if (epoch.cols() < 2) fail(errc::domain, "epoch_covariance: need at least 2 samples");
  if (!epoch.allFinite()) fail(errc::numeric, "epoch_covariance: NaN or Inf in epoch");
  const Eigen::MatrixXd centered = epoch.colwise() - epoch.rowwise().mean();
  const Eigen::MatrixXd s = centered * centered.transpose() / static_cast<double>(epoch.cols());
  const double alpha = cfg.shrinkage.automatic ? ledoit_wolf_alpha(centered) : cfg.shrinkage.alpha;
  const double mu = s.trace() / static_cast<double>(s.rows());
  Eigen::MatrixXd shrunk = (1.0 - alpha) * s;
  shrunk.diagonal().array() += alpha * mu;
  if (!shrunk.allFinite()) fail(errc::numeric, "epoch_covariance: non-finite shrinkage result");
  return {SpdMatrix::certify(shrunk), alpha};
}

struct KarcherResult {
  SpdMatrix mean;
  int iterations;
  double residual;  ///< Frobenius norm of the averaged log at the returned mean
};

/// (1/N) sum log(G^{-1/2} C_i G^{-1/2}); vanishes exactly at the Karcher mean.
inline Eigen::MatrixXd karcher_gradient(std::span<const SpdMatrix> covs, const Eigen::MatrixXd& g) {
  const Eigen::MatrixXd gi = inv_sqrt(SpdMatrix::certify(g));
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g.rows(), g.cols());
  for (const auto& c : covs) acc += spd_log(SpdMatrix::certify(gi * c.values() * gi));
  return acc / static_cast<double>(covs.size());
}

/// Karcher mean by the fixed-point iteration
///   G <- G^{1/2} exp((1/N) sum log(G^{-1/2} C_i G^{-1/2})) G^{1/2},
/// started at the arithmetic mean.
inline KarcherResult geometric_mean(std::span<const SpdMatrix> covs, const RiemannianConfig& cfg = {}) {
  cfg.validate();
  if (covs.empty()) fail(errc::domain, "geometric_mean: no matrices");
  const auto dim = covs.front().dim();
  for (const auto& c : covs) {
    if (c.dim() != dim) fail(errc::shape, "geometric_mean: matrices differ in dimension");
  }
  if (covs.size() == 1) return {covs.front(), 0, 0.0};

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& c : covs) g += c.values();
  g /= static_cast<double>(covs.size());

  double residual = 0.0;
  for (int it = 0; it < cfg.mean_max_iter; ++it) {
    const SpdMatrix current = SpdMatrix::certify(g);
    const Eigen::MatrixXd step = karcher_gradient(covs, g);
    residual = step.norm();
    if (residual < cfg.mean_tol) return {current, it, residual};
    const Eigen::MatrixXd root = spd_sqrt(current);
    g = root * sym_exp(step) * root;
    g = 0.5 * (g + g.transpose());
  }
  residual = karcher_gradient(covs, g).norm();
  if (residual > 10.0 * cfg.mean_tol) {
    fail(errc::convergence, "geometric_mean: no convergence after " + std::to_string(cfg.mean_max_iter) +
                                " iterations (residual " + text::format_double(residual) + ")");
  }
  return {SpdMatrix::certify(g), cfg.mean_max_iter, residual};
}

inline KarcherResult geometric_mean(const std::vector<SpdMatrix>& covs, const RiemannianConfig& cfg = {}) {
  return geometric_mean(std::span<const SpdMatrix>(covs), cfg);
}

struct RecenterFit {
  AdaptationMatrix matrix;
  std::vector<SpdMatrix> covariances;  ///< of the base-mapped epochs
  KarcherResult mean;
};

/// inv_sqrt(C_j) . base, where C_j is the geometric mean of the shrunk
/// covariances of one subject's epochs after mapping them through `base`.
inline RecenterFit fit_recenter(const EpochSet& epochs, const AdaptationMatrix& base, const RiemannianConfig& cfg = {}) {
  cfg.validate();
  if (epochs.size() == 0) fail(errc::domain, "recenter: empty epoch set");
  epochs.validate();
  const auto subjects = epochs.subjects();
  if (subjects.size() != 1) fail(errc::domain, "recenter: epochs from more than one subject");

  std::vector<SpdMatrix> covs;
  covs.reserve(epochs.size());
  double a_min = 1.0, a_max = 0.0, a_sum = 0.0;
  for (const auto& e : epochs.epochs) {
    auto cov = epoch_covariance(apply(base, e).data, cfg);
    a_min = std::min(a_min, cov.alpha);
    a_max = std::max(a_max, cov.alpha);
    a_sum += cov.alpha;
    covs.push_back(std::move(cov.matrix));
  }
  auto mean = geometric_mean(covs, cfg);
  const Eigen::MatrixXd whitening = inv_sqrt(mean.mean);

  AdaptationMatrix out;
  out.matrix = whitening * base.matrix;
  if (base.bias) out.bias = whitening * *base.bias;
  out.method = Method::riemannian;
  out.source_labels = base.source_labels;
  out.target_labels = base.target_labels;
  for (const auto& [k, v] : base.metadata) out.metadata["base." + k] = v;
  out.metadata["riemannian.base_method"] = to_string(base.method);
  out.metadata["riemannian.subject"] = subjects.front();
  out.metadata["riemannian.epochs"] = std::to_string(epochs.size());
  out.metadata["riemannian.shrinkage"] =
      cfg.shrinkage.automatic ? "ledoit_wolf" : "fixed:" + text::format_double(cfg.shrinkage.alpha);
  out.metadata["riemannian.alpha_mean"] = text::format_double(a_sum / static_cast<double>(epochs.size()));
  out.metadata["riemannian.alpha_min"] = text::format_double(a_min);
  out.metadata["riemannian.alpha_max"] = text::format_double(a_max);
  out.metadata["riemannian.mean_iterations"] = std::to_string(mean.iterations);
  out.metadata["riemannian.mean_residual"] = text::format_double(mean.residual);
  out.metadata["riemannian.covariance_input"] = "signals as fed to the adapter";
  out.validate();
  return {std::move(out), std::move(covs), std::move(mean)};
}

inline AdaptationMatrix recenter_matrix(const EpochSet& epochs, const AdaptationMatrix& base,
                                        const RiemannianConfig& cfg = {}) {
  return fit_recenter(epochs, base, cfg).matrix;
}

}  // namespace chanadapt

#endif  // CHANADAPT_RIEMANNIAN_HPP
