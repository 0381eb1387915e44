#ifndef CHANADAPT_HARMONIC_HPP
#define CHANADAPT_HARMONIC_HPP

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "chanadapt/basis.hpp"
#include "chanadapt/error.hpp"
#include "chanadapt/text.hpp"
#include "chanadapt/types.hpp"

namespace chanadapt {

enum class HarmonicMode { evaluate, least_squares };

inline const char* to_string(HarmonicMode m) noexcept {
  return m == HarmonicMode::evaluate ? "evaluate" : "least_squares";
}

inline HarmonicMode harmonic_mode_from_string(std::string_view s) {
  if (s == "evaluate") return HarmonicMode::evaluate;
  if (s == "least_squares") return HarmonicMode::least_squares;
  fail(errc::config, "unknown harmonic mode '" + std::string(s) + "'");
}

struct HarmonicConfig {
  int l_max = 4;
  HarmonicMode mode = HarmonicMode::evaluate;
  double ridge = 1e-8;
  int refine = 1;  ///< iterated-ridge passes that remove the ridge bias; 0 = plain ridge

  int coefficients() const noexcept { return sh_count(l_max); }

  void validate() const {
    if (l_max < 0 || l_max > kMaxShDegree) fail(errc::config, "harmonic l_max out of range");
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) fail(errc::config, "harmonic ridge must be >= 0");
    if (refine < 0) fail(errc::config, "harmonic refine must be >= 0");
  }
};

inline std::vector<std::string> harmonic_labels(int l_max) {
  std::vector<std::string> out;
  for (int k = 0; k < sh_count(l_max); ++k) out.push_back(ShIndex::from_flat(k).label());
  return out;
}

/// Maps C_s channels to (l_max+1)^2 harmonic coefficients.
///
/// evaluate: M = B, the basis evaluated at the source electrodes.
/// least_squares: M = (B B^T + ridge I)^{-1} B, the coefficient estimator,
/// followed by `refine` iterated-ridge passes M <- R B + ridge R M. Each pass
/// multiplies the ridge bias along a Gram eigenvalue s by ridge / (s + ridge),
/// while directions with s ~ 0 stay bounded.
inline AdaptationMatrix harmonic_matrix(const Montage& source, const HarmonicConfig& cfg = {}) {
  cfg.validate();
  const Eigen::MatrixXd basis = sh_basis_matrix(source, cfg.l_max);

  AdaptationMatrix out;
  out.method = Method::harmonic;
  out.source_labels = source.labels();
  out.target_labels = harmonic_labels(cfg.l_max);
  if (cfg.mode == HarmonicMode::evaluate) {
    out.matrix = basis;
  } else {
    const auto k = basis.rows();
    const Eigen::MatrixXd gram = basis * basis.transpose() + cfg.ridge * Eigen::MatrixXd::Identity(k, k);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
      fail(errc::numeric, "harmonic: Gram matrix is not positive definite; increase ridge");
    }
    const Eigen::MatrixXd first = ldlt.solve(basis);
    out.matrix = first;
    for (int pass = 0; pass < cfg.refine; ++pass) out.matrix = first + cfg.ridge * ldlt.solve(out.matrix);
    if (static_cast<int>(source.size()) < cfg.coefficients()) {
      out.metadata["harmonic.warning"] = "underdetermined: fewer channels than coefficients";
    }
    out.metadata["harmonic.ridge"] = text::format_double(cfg.ridge);
    out.metadata["harmonic.refine"] = std::to_string(cfg.refine);
  }
  out.metadata["harmonic.l_max"] = std::to_string(cfg.l_max);
  out.metadata["harmonic.mode"] = to_string(cfg.mode);
  out.metadata["harmonic.phase"] = "no_condon_shortley";
  out.metadata["harmonic.scaling"] = "unscaled";
  out.metadata["harmonic.source_montage"] = source.name();
  out.validate();
  return out;
}

/// Energy per degree: sum over m and time of squared coefficients.
inline std::vector<double> harmonic_band_power(const Eigen::MatrixXd& coeffs) {
  const auto rows = coeffs.rows();
  int l_max = -1;
  while (sh_count(l_max + 1) <= rows) ++l_max;
  if (l_max < 0 || sh_count(l_max) != rows) {
    fail(errc::shape, "harmonic_band_power: row count " + std::to_string(rows) + " is not a perfect square");
  }
  std::vector<double> energy(static_cast<std::size_t>(l_max) + 1, 0.0);
  for (Eigen::Index k = 0; k < rows; ++k) {
    energy[static_cast<std::size_t>(ShIndex::from_flat(static_cast<int>(k)).l)] += coeffs.row(k).squaredNorm();
  }
  return energy;
}

}  // namespace chanadapt

#endif  // CHANADAPT_HARMONIC_HPP
