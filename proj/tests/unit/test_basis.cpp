#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "chanadapt/basis.hpp"
#include "chanadapt/geometry.hpp"

using namespace chanadapt;

namespace {

constexpr double pi = std::numbers::pi;

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// P_l^m without the Condon-Shortley phase, from the explicit coefficient
// sum for P_l differentiated m times.
double assoc_legendre_explicit(int l, int m, double x) {
  std::vector<double> coeff(static_cast<std::size_t>(l) + 1, 0.0);  // power -> coefficient
  for (int k = 0; 2 * k <= l; ++k) {
    coeff[static_cast<std::size_t>(l - 2 * k)] += (k % 2 ? -1.0 : 1.0) * binom(l, k) * binom(2 * l - 2 * k, l) / std::ldexp(1.0, l);
  }
  for (int d = 0; d < m; ++d) {
    for (std::size_t p = 0; p + 1 < coeff.size(); ++p) coeff[p] = coeff[p + 1] * static_cast<double>(p + 1);
    coeff.back() = 0.0;
  }
  double v = 0.0;
  for (std::size_t p = coeff.size(); p-- > 0;) v = v * x + coeff[p];
  return std::pow(1.0 - x * x, 0.5 * m) * v;
}

double ylm_explicit(int l, int m, double theta, double phi) {
  const int am = std::abs(m);
  const double n = std::sqrt((2.0 * l + 1.0) * factorial(l - am) / (4.0 * pi * factorial(l + am)));
  const double p = assoc_legendre_explicit(l, am, std::cos(theta));
  if (m == 0) return n * p;
  if (m > 0) return std::numbers::sqrt2 * n * p * std::cos(am * phi);
  return std::numbers::sqrt2 * n * p * std::sin(am * phi);
}

// Gauss-Legendre nodes and weights on [-1, 1] by the Golub-Welsch eigenproblem.
void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    j(i, i - 1) = j(i - 1, i) = b;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  x = es.eigenvalues();
  w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
}

}  // namespace

TEST(Legendre, BaseCasesAndClosedForms) {
  const auto p = legendre_all(1, 0.7);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.7);
  EXPECT_NEAR(legendre_all(2, 0.5)[2], -0.125, 1e-15);
  EXPECT_NEAR(legendre_all(3, 0.2)[3], -0.28, 1e-15);
  EXPECT_EQ(legendre_all(0, -0.3).size(), 1u);
}

TEST(Legendre, EndpointsExact) {
  const auto hi = legendre_all(50, 1.0);
  const auto lo = legendre_all(50, -1.0);
  for (int n = 0; n <= 50; ++n) {
    EXPECT_NEAR(hi[static_cast<std::size_t>(n)], 1.0, 1e-12);
    EXPECT_NEAR(lo[static_cast<std::size_t>(n)], n % 2 ? -1.0 : 1.0, 1e-12);
  }
}

TEST(Legendre, MatchesExplicitSumUpToDegree12) {
  for (double x : {-0.93, -0.4, 0.0, 0.31, 0.77, 0.999}) {
    const auto p = legendre_all(12, x);
    for (int n = 0; n <= 12; ++n) EXPECT_NEAR(p[static_cast<std::size_t>(n)], assoc_legendre_explicit(n, 0, x), 1e-12);
  }
}

TEST(Legendre, DomainError) {
  EXPECT_THROW(legendre_all(3, 1.01), error);
  EXPECT_NO_THROW(legendre_all(3, 1.0 + 1e-13));
  EXPECT_THROW(legendre_all(-1, 0.0), error);
}

TEST(ShIndex, FlatBijection) {
  int expected = 0;
  for (int l = 0; l <= 4; ++l) {
    for (int m = -l; m <= l; ++m) {
      const ShIndex idx{l, m};
      EXPECT_EQ(idx.flat(), expected);
      const auto back = ShIndex::from_flat(expected);
      EXPECT_EQ(back.l, l);
      EXPECT_EQ(back.m, m);
      ++expected;
    }
  }
  EXPECT_EQ(expected, 25);
  EXPECT_EQ(sh_count(4), 25);
  EXPECT_EQ((ShIndex{2, -1}.label()), "Y2:-1");
}

TEST(RealSph, KnownValues) {
  EXPECT_NEAR(real_sph_harm(0, 0, 0.3, 1.2), 1.0 / (2.0 * std::sqrt(pi)), 1e-15);
  EXPECT_NEAR(real_sph_harm(0, 0, 0.3, 1.2), 0.2820948, 1e-7);
  EXPECT_NEAR(real_sph_harm(1, 0, 0.0, 0.0), std::sqrt(3.0 / (4.0 * pi)), 1e-15);
  EXPECT_NEAR(real_sph_harm(1, 0, 0.0, 0.0), 0.4886025, 1e-7);
  // no Condon-Shortley phase: Y_11 is +x
  EXPECT_GT(real_sph_harm(1, 1, pi / 2, 0.0), 0.0);
  EXPECT_GT(real_sph_harm(1, -1, pi / 2, pi / 2), 0.0);
  EXPECT_THROW(real_sph_harm(2, 3, 0.1, 0.1), error);
}

TEST(RealSph, MatchesExplicitFormula) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(0.0, pi), ph(-pi, pi);
  for (int trial = 0; trial < 50; ++trial) {
    const double t = th(rng), p = ph(rng);
    const auto all = real_sph_harm_all(8, t, p);
    for (int l = 0; l <= 8; ++l) {
      for (int m = -l; m <= l; ++m) {
        EXPECT_NEAR(all[static_cast<std::size_t>(ShIndex{l, m}.flat())], ylm_explicit(l, m, t, p), 1e-12) << l << "," << m;
      }
    }
  }
}

TEST(RealSph, AdditionTheoremDegree2) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> th(0.0, pi), ph(-pi, pi);
  for (int i = 0; i < 10; ++i) {
    const double t = th(rng), p = ph(rng);
    double s = 0.0;
    for (int m = -2; m <= 2; ++m) s += std::pow(real_sph_harm(2, m, t, p), 2);
    EXPECT_NEAR(s, 5.0 / (4.0 * pi), 1e-13);
  }
}

TEST(RealSph, OrthonormalUnderQuadrature) {
  // Gauss-Legendre in cos(theta) x uniform phi grid is exact for these band-limited products.
  const int lmax = 6, nq = 2 * lmax + 2, nphi = 4 * lmax + 4;
  Eigen::VectorXd x, w;
  gauss_legendre(nq, x, w);
  const int n = sh_count(lmax);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < nq; ++i) {
    const double theta = std::acos(x(i));
    for (int k = 0; k < nphi; ++k) {
      const double phi = -pi + 2.0 * pi * (k + 0.5) / nphi;
      const auto y = real_sph_harm_all(lmax, theta, phi);
      const Eigen::Map<const Eigen::VectorXd> v(y.data(), n);
      gram += w(i) * (2.0 * pi / nphi) * v * v.transpose();
    }
  }
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RealSph, ContinuousAcrossSeam) {
  // |dY/dphi| <= l * max|Y|, so a 2*eps step moves each value by at most ~1e-11
  const double eps = 1e-12;
  for (double theta : {0.3, 1.1, 2.0, 2.9}) {
    const auto a = real_sph_harm_all(4, theta, pi - eps);
    const auto b = real_sph_harm_all(4, theta, -pi + eps);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
  }
}

TEST(BasisMatrix, ShapeAndConstantRow) {
  const auto m = builtin_montage("ten_twenty_19");
  const auto b = sh_basis_matrix(m, 4);
  EXPECT_EQ(b.rows(), 25);
  EXPECT_EQ(b.cols(), 19);
  const auto b0 = sh_basis_matrix(builtin_montage("bci2a_22"), 0);
  ASSERT_EQ(b0.rows(), 1);
  for (Eigen::Index i = 0; i < b0.cols(); ++i) EXPECT_NEAR(b0(0, i), 1.0 / (2.0 * std::sqrt(pi)), 1e-15);
}

TEST(BasisMatrix, EntriesAreHarmonicsAtElectrodes) {
  const auto m = builtin_montage("ten_ten_64");
  const auto b = sh_basis_matrix(m, 4);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto s = spherical_coords(m[i]);
    for (int k = 0; k < 25; ++k) {
      const auto idx = ShIndex::from_flat(k);
      EXPECT_EQ(b(k, static_cast<Eigen::Index>(i)), real_sph_harm(idx.l, idx.m, s.theta, s.phi));
    }
  }
}

TEST(BasisMatrix, PermutationEquivariant) {
  const auto m = builtin_montage("ten_twenty_19");
  auto labels = m.labels();
  std::mt19937_64 rng(5);
  std::shuffle(labels.begin(), labels.end(), rng);
  const auto p = m.subset(labels, "perm");
  const auto a = sh_basis_matrix(m, 4);
  const auto b = sh_basis_matrix(p, 4);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    EXPECT_EQ(b.col(static_cast<Eigen::Index>(j)), a.col(static_cast<Eigen::Index>(*m.index_of(labels[j]))));
  }
}
