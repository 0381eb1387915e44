#ifndef CHANADAPT_BASIS_HPP
#define CHANADAPT_BASIS_HPP

// Legendre polynomials and orthonormal real spherical harmonics.
//
// Convention: Y_l0 = N_l0 P_l(cos t), Y_lm = sqrt(2) N_lm P_l^m(cos t) cos(m p) for
// m > 0 and sqrt(2) N_l|m| P_l^|m|(cos t) sin(|m| p) for m < 0, with
// N_lm = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!). No Condon-Shortley phase, so every
// harmonic with m >= 0 is non-negative at small theta and phi = 0.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/geometry.hpp"

namespace chanadapt {

inline constexpr int kMaxShDegree = 64;

struct ShIndex {
  int l = 0;
  int m = 0;

  constexpr int flat() const noexcept { return l * l + l + m; }

  static ShIndex from_flat(int k) {
    if (k < 0) fail(errc::domain, "negative harmonic index");
    int l = static_cast<int>(std::sqrt(static_cast<double>(k)));
    while (l * l > k) --l;
    while ((l + 1) * (l + 1) <= k) ++l;
    return {l, k - l * l - l};
  }

  std::string label() const { return "Y" + std::to_string(l) + ":" + std::to_string(m); }
};

constexpr int sh_count(int l_max) noexcept { return (l_max + 1) * (l_max + 1); }

/// P_0(x) .. P_nmax(x) by the three-term recurrence.
inline std::vector<double> legendre_all(int n_max, double x) {
  if (n_max < 0) fail(errc::domain, "legendre_all: negative degree");
  if (!(std::abs(x) <= 1.0 + 1e-12)) fail(errc::domain, "legendre_all: |x| > 1");
  std::vector<double> p(static_cast<std::size_t>(n_max) + 1);
  p[0] = 1.0;
  if (n_max >= 1) p[1] = x;
  for (int n = 1; n < n_max; ++n) {
    p[n + 1] = ((2.0 * n + 1.0) * x * p[n] - n * p[n - 1]) / (n + 1.0);
  }
  return p;
}

/// All orthonormal real harmonics up to l_max at one direction, in flat-index order.
inline std::vector<double> real_sph_harm_all(int l_max, double theta, double phi) {
  if (l_max < 0 || l_max > kMaxShDegree) fail(errc::domain, "harmonic degree out of supported range");
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  const int n = l_max + 1;
  // q(l, m): N_lm P_l^m(x), normalization folded into the recurrences.
  std::vector<double> q(static_cast<std::size_t>(n * n), 0.0);
  auto at = [&](int l, int m) -> double& { return q[static_cast<std::size_t>(l * n + m)]; };
  at(0, 0) = 0.5 / std::sqrt(std::numbers::pi);
  for (int m = 1; m <= l_max; ++m) at(m, m) = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * at(m - 1, m - 1);
  for (int m = 0; m < l_max; ++m) at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * at(m, m);
  for (int m = 0; m <= l_max; ++m) {
    for (int l = m + 2; l <= l_max; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                 (4.0 * (l - 1) * (l - 1) - 1.0));
      at(l, m) = a * (x * at(l - 1, m) - b * at(l - 2, m));
    }
  }
  std::vector<double> y(static_cast<std::size_t>(sh_count(l_max)));
  for (int l = 0; l <= l_max; ++l) {
    y[static_cast<std::size_t>(ShIndex{l, 0}.flat())] = at(l, 0);
    for (int m = 1; m <= l; ++m) {
      const double base = std::numbers::sqrt2 * at(l, m);
      y[static_cast<std::size_t>(ShIndex{l, m}.flat())] = base * std::cos(m * phi);
      y[static_cast<std::size_t>(ShIndex{l, -m}.flat())] = base * std::sin(m * phi);
    }
  }
  return y;
}

inline double real_sph_harm(int l, int m, double theta, double phi) {
  if (l < 0 || std::abs(m) > l) fail(errc::domain, "real_sph_harm: requires |m| <= l");
  return real_sph_harm_all(l, theta, phi)[static_cast<std::size_t>(ShIndex{l, m}.flat())];
}

/// ((l_max+1)^2 x C) matrix; column i holds every harmonic at electrode i.
inline Eigen::MatrixXd sh_basis_matrix(const Montage& montage, int l_max) {
  Eigen::MatrixXd b(sh_count(l_max), static_cast<Eigen::Index>(montage.size()));
  for (std::size_t i = 0; i < montage.size(); ++i) {
    const auto sc = spherical_coords(montage[i]);
    const auto y = real_sph_harm_all(l_max, sc.theta, sc.phi);
    for (int k = 0; k < b.rows(); ++k) b(k, static_cast<Eigen::Index>(i)) = y[static_cast<std::size_t>(k)];
  }
  return b;
}

}  // namespace chanadapt

#endif  // CHANADAPT_BASIS_HPP
