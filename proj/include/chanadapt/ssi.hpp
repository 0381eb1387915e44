#ifndef CHANADAPT_SSI_HPP
#define CHANADAPT_SSI_HPP

// Spherical spline interpolation between montages.
//
// For source values v the spline is f(r) = c0 + sum_j c_j g(r . s_j), with
// coefficients from the bordered system
//
//   [ G + lambda I  1 ] [ c  ]   [ v ]
//   [ 1^T           0 ] [ c0 ] = [ 0 ]
//
// Everything is linear in v, so the target rows [g(t . s_j), 1] times the
// inverse of the bordered matrix give the interpolation matrix directly.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "chanadapt/basis.hpp"
#include "chanadapt/error.hpp"
#include "chanadapt/geometry.hpp"
#include "chanadapt/text.hpp"
#include "chanadapt/types.hpp"

namespace chanadapt {

struct SplineConfig {
  int stiffness = 4;
  int n_terms = 50;
  double reg_lambda = 1e-7;

  void validate() const {
    if (stiffness < 2) fail(errc::config, "spline stiffness must be >= 2");
    if (n_terms < 1) fail(errc::config, "spline n_terms must be >= 1");
    if (!(reg_lambda >= 0.0) || !std::isfinite(reg_lambda)) fail(errc::config, "spline lambda must be >= 0");
  }
};

namespace detail {

inline std::vector<double> spline_series_weights(const SplineConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(cfg.n_terms) + 1, 0.0);
  for (int n = 1; n <= cfg.n_terms; ++n) {
    const double nn = static_cast<double>(n) * (n + 1);
    w[static_cast<std::size_t>(n)] = (2.0 * n + 1.0) / std::pow(nn, cfg.stiffness) / (4.0 * std::numbers::pi);
  }
  return w;
}

inline double spline_kernel(double x, const std::vector<double>& weights, int n_terms) {
  const auto p = legendre_all(n_terms, std::clamp(x, -1.0, 1.0));
  double g = 0.0;
  for (int n = 1; n <= n_terms; ++n) g += weights[static_cast<std::size_t>(n)] * p[static_cast<std::size_t>(n)];
  return g;
}

}  // namespace detail

/// g(x) = 1/(4 pi) sum_{n=1}^{N} (2n+1) / (n(n+1))^m P_n(x)
inline double g_kernel(double x, const SplineConfig& cfg) {
  cfg.validate();
  if (!(std::abs(x) <= 1.0 + 1e-12)) fail(errc::domain, "g_kernel: |x| > 1");
  return detail::spline_kernel(x, detail::spline_series_weights(cfg), cfg.n_terms);
}

inline AdaptationMatrix ssi_matrix(const Montage& source, const Montage& target, const SplineConfig& cfg = {}) {
  cfg.validate();
  if (source.size() < 3) fail(errc::domain, "ssi: source montage needs at least 3 electrodes");
  for (std::size_t i = 0; i < source.size(); ++i) {
    for (std::size_t j = i + 1; j < source.size(); ++j) {
      if (cosine_angle(source[i], source[j]) > 1.0 - 1e-12) {
        fail(errc::numeric, "ssi: coincident source electrodes '" + source[i].label + "' and '" +
                                source[j].label + "' make the spline system singular");
      }
    }
  }

  const auto weights = detail::spline_series_weights(cfg);
  const auto ns = static_cast<Eigen::Index>(source.size());
  const auto nt = static_cast<Eigen::Index>(target.size());

  Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(ns + 1, ns + 1);
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = i; j < ns; ++j) {
      const double g = detail::spline_kernel(cosine_angle(source[i], source[j]), weights, cfg.n_terms);
      bordered(i, j) = g;
      bordered(j, i) = g;
    }
    bordered(i, i) += cfg.reg_lambda;
    bordered(i, ns) = 1.0;
    bordered(ns, i) = 1.0;
  }

  Eigen::MatrixXd rhs(ns + 1, nt);
  for (Eigen::Index t = 0; t < nt; ++t) {
    for (Eigen::Index j = 0; j < ns; ++j) {
      rhs(j, t) = detail::spline_kernel(cosine_angle(target[t], source[j]), weights, cfg.n_terms);
    }
    rhs(ns, t) = 1.0;
  }

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(bordered);
  if (!lu.isInvertible()) fail(errc::numeric, "ssi: bordered spline system is singular");
  // The bordered matrix is symmetric, so rows of M are columns of K^{-1} [g_t; 1].
  const Eigen::MatrixXd solved = lu.solve(rhs);

  AdaptationMatrix out;
  out.matrix = solved.topRows(ns).transpose();
  out.method = Method::ssi;
  out.source_labels = source.labels();
  out.target_labels = target.labels();
  out.metadata["ssi.stiffness"] = std::to_string(cfg.stiffness);
  out.metadata["ssi.n_terms"] = std::to_string(cfg.n_terms);
  out.metadata["ssi.reg_lambda"] = text::format_double(cfg.reg_lambda);
  out.metadata["ssi.source_montage"] = source.name();
  out.metadata["ssi.target_montage"] = target.name();
  out.metadata["ssi.reference"] = "none";
  out.validate();
  return out;
}

}  // namespace chanadapt

#endif  // CHANADAPT_SSI_HPP
