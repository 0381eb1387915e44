#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "chanadapt/stats.hpp"

using namespace chanadapt;
using namespace chanadapt::stats;

namespace {

// Two-sided exact p by enumerating every sign pattern of the observed ranks.
double brute_force_p(const std::vector<double>& d) {
  std::vector<double> mag;
  for (const double v : d) {
    if (v != 0.0) mag.push_back(std::abs(v));
  }
  const auto n = mag.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      less += mag[j] < mag[i];
      equal += mag[j] == mag[i];
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  double total = 0, wp = 0;
  for (const double r : rank) total += r;
  std::size_t k = 0;
  for (const double v : d) {
    if (v == 0.0) continue;
    if (v > 0.0) wp += rank[k];
    ++k;
  }
  const double w = std::min(wp, total - wp);
  std::size_t hits = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) s += rank[i];
    }
    hits += s <= w + 1e-9;
  }
  return std::min(1.0, 2.0 * static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(n)));
}

errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return errc::io;
}

}  // namespace

TEST(Ranks, AverageTies) {
  EXPECT_EQ(average_ranks({3.0, 1.0, 2.0}), (std::vector<double>{3, 1, 2}));
  EXPECT_EQ(average_ranks({5.0, 5.0, 1.0, 5.0}), (std::vector<double>{3, 3, 1, 3}));
  EXPECT_EQ(average_ranks({2.0, 2.0}), (std::vector<double>{1.5, 1.5}));
}

TEST(Wilcoxon, SmallestAllPositiveCases) {
  const auto six = wilcoxon_signed_rank({1, 2, 3, 4, 5, 6}, {0, 0, 0, 0, 0, 0});
  EXPECT_EQ(six.statistic, 0.0);
  EXPECT_EQ(six.p, 0.03125);
  EXPECT_TRUE(six.exact);
  EXPECT_EQ(six.n, 6);
  EXPECT_EQ(wilcoxon_signed_rank({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}).p, 0.0625);
  // the reversed comparison is the same two-sided test
  EXPECT_EQ(wilcoxon_signed_rank({0, 0, 0, 0, 0, 0}, {1, 2, 3, 4, 5, 6}).p, 0.03125);
}

TEST(Wilcoxon, ExactMatchesEnumeration) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 12), val(-4, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = len(rng);
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n), 0.0), d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] = val(rng) * 0.5;  // small grid forces ties and zeros
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) continue;
    const auto r = wilcoxon_signed_rank(a, b);
    EXPECT_NEAR(r.p, brute_force_p(d), 1e-14) << "trial " << trial;
    EXPECT_GE(r.p, 0.0);
    EXPECT_LE(r.p, 1.0);
  }
}

TEST(Wilcoxon, ZeroDifferencesDropped) {
  const auto r = wilcoxon_signed_rank({1, 2, 3, 4, 5, 6, 7, 7}, {0, 0, 0, 0, 0, 0, 7, 7});
  EXPECT_EQ(r.n, 6);
  EXPECT_EQ(r.p, 0.03125);
}

TEST(Wilcoxon, NormalApproximationMatchesScipy) {
  // scipy.stats.wilcoxon(a, b, zero_method='wilcox', correction=True, method='approx')
  std::vector<double> a, b;
  for (int i = 0; i < 30; ++i) {
    a.push_back(0.1 * ((i * 37) % 29) + 0.013 * i);
    b.push_back(0.1 * ((i * 11) % 23) + 0.007 * i);
  }
  const auto r = wilcoxon_signed_rank(a, b);
  EXPECT_FALSE(r.exact);
  EXPECT_EQ(r.statistic, 151.0);
  EXPECT_NEAR(r.p, 0.15354205863783874, 1e-12);
}

TEST(Wilcoxon, Errors) {
  EXPECT_EQ(code_of([] { wilcoxon_signed_rank({1, 2}, {1, 2}); }), errc::undefined_test);
  EXPECT_EQ(code_of([] { wilcoxon_signed_rank({1, 2}, {1}); }), errc::shape);
  EXPECT_EQ(code_of([] { wilcoxon_signed_rank({}, {}); }), errc::domain);
  EXPECT_EQ(code_of([] { wilcoxon_signed_rank({std::nan("")}, {1}); }), errc::domain);
}

TEST(Bh, WorkedExample) {
  const std::vector<double> p{0.01, 0.04, 0.03, 0.005, 0.5};
  const auto r = bh_correct(p, 0.05);
  // sorted 0.005 0.01 0.03 0.04 0.5 against 0.01 0.02 0.03 0.04 0.05
  EXPECT_EQ(r.reject, (std::vector<bool>{true, true, true, true, false}));
  EXPECT_NEAR(r.adjusted[3], 0.025, 1e-15);
  EXPECT_NEAR(r.adjusted[0], 0.025, 1e-15);
  EXPECT_NEAR(r.adjusted[2], 0.05, 1e-15);
  EXPECT_NEAR(r.adjusted[1], 0.05, 1e-15);
  EXPECT_EQ(r.adjusted[4], 0.5);
}

TEST(Bh, StepUpRejectsBelowLargestPassingRank) {
  // 0.03 > 1*0.05/3 but the third p passes, so everything is rejected
  const auto r = bh_correct({0.03, 0.04, 0.05}, 0.05);
  EXPECT_EQ(r.reject, (std::vector<bool>{true, true, true}));
  const auto none = bh_correct({0.2, 0.5, 0.9}, 0.05);
  EXPECT_EQ(none.reject, (std::vector<bool>{false, false, false}));
  EXPECT_TRUE(bh_correct({}, 0.05).reject.empty());
}

TEST(Bh, BoundaryIsInclusive) {
  // 0.1 * 3 == 3 * 0.1 exactly in the multiplied form
  EXPECT_TRUE(bh_correct({0.1, 0.1, 0.1}, 0.1).reject[0]);
  EXPECT_TRUE(bh_correct({0.05}, 0.05).reject[0]);
}

TEST(Bh, Properties) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 0.2);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> p(12);
    for (auto& v : p) v = u(rng);
    const auto r = bh_correct(p, 0.1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_GE(r.adjusted[i], p[i]);
      EXPECT_EQ(r.reject[i], r.adjusted[i] <= 0.1 + 1e-15);
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[i] < p[j]) EXPECT_LE(r.adjusted[i], r.adjusted[j]);
        if (p[i] <= p[j] && r.reject[j]) EXPECT_TRUE(r.reject[i]);
      }
    }
    auto perm = p;
    std::vector<std::size_t> idx(p.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < p.size(); ++i) perm[i] = p[idx[i]];
    const auto rp = bh_correct(perm, 0.1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_EQ(rp.reject[i], r.reject[idx[i]]);
      EXPECT_EQ(rp.adjusted[i], r.adjusted[idx[i]]);
    }
  }
}

TEST(Bh, Errors) {
  EXPECT_THROW(bh_correct({0.1}, 0.0), error);
  EXPECT_THROW(bh_correct({1.5}, 0.05), error);
  EXPECT_THROW(bh_correct({-0.1}, 0.05), error);
}

TEST(Chi2, ClosedForms) {
  for (double x : {0.01, 0.5, 1.0, 3.7, 10.0, 30.0}) {
    EXPECT_NEAR(chi2_sf(x, 1.0), std::erfc(std::sqrt(x / 2.0)), 1e-13) << x;
    EXPECT_NEAR(chi2_sf(x, 2.0), std::exp(-x / 2.0), 1e-13) << x;
    // dof 4: e^{-x/2} (1 + x/2)
    EXPECT_NEAR(chi2_sf(x, 4.0), std::exp(-x / 2.0) * (1.0 + x / 2.0), 1e-13) << x;
  }
  EXPECT_EQ(chi2_sf(0.0, 3.0), 1.0);
}

TEST(Chi2, ScipyValues) {
  EXPECT_NEAR(chi2_sf(3.7, 5.0), 0.5933639617818078, 1e-12);
  EXPECT_NEAR(chi2_sf(40.0, 10.0) / 1.694474393006737e-05, 1.0, 1e-10);
  EXPECT_NEAR(chi2_sf(0.01, 7.0), 0.999999999243059, 1e-13);
}

TEST(Chi2, GammaComplement) {
  for (double a : {0.5, 1.0, 2.5, 7.0}) {
    for (double x : {0.1, 1.0, a + 0.9, a + 1.1, 20.0}) EXPECT_NEAR(gamma_p(a, x) + gamma_q(a, x), 1.0, 1e-14);
  }
}

TEST(Friedman, PerfectConsistentRanking) {
  Eigen::MatrixXd s(3, 3);
  s << 1, 2, 3, 1, 2, 3, 1, 2, 3;
  const auto r = friedman(s);
  EXPECT_NEAR(r.statistic, 6.0, 1e-12);
  EXPECT_NEAR(r.p, std::exp(-3.0), 1e-13);
  EXPECT_EQ(r.blocks, 3);
  EXPECT_EQ(r.treatments, 3);
}

TEST(Friedman, AllEqualScores) {
  const auto r = friedman(Eigen::MatrixXd::Constant(5, 4, 0.7));
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p, 1.0);
}

TEST(Friedman, MatchesScipyWithoutTies) {
  Eigen::MatrixXd x(8, 4);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = 0.1 * ((i * 7 + j * 3) % 11) + 0.001 * i * j + 0.0001 * j;
  }
  const auto r = friedman(x);
  EXPECT_NEAR(r.statistic, 1.2, 1e-12);
  EXPECT_NEAR(r.p, 0.7530043116564608, 1e-12);
}

TEST(Friedman, InvariantUnderMonotoneMapAndColumnOrder) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(10, 5);
  for (auto& v : x.reshaped()) v = g(rng);
  const auto base = friedman(x);
  const Eigen::MatrixXd mapped = x.array().exp() * 3.0 + 1.0;
  EXPECT_NEAR(friedman(mapped).statistic, base.statistic, 1e-12);
  Eigen::MatrixXd swapped = x;
  swapped.col(0).swap(swapped.col(3));
  EXPECT_NEAR(friedman(swapped).statistic, base.statistic, 1e-12);
  EXPECT_THROW(friedman(Eigen::MatrixXd::Zero(1, 3)), error);
}

TEST(CohensD, Examples) {
  // means 2 and 3, both sample variances 1
  EXPECT_NEAR(cohens_d({1, 2, 3}, {2, 3, 4}), -1.0, 1e-15);
  EXPECT_NEAR(cohens_d({2, 4, 6, 8}, {1, 2, 3, 4}), (5.0 - 2.5) / std::sqrt((20.0 + 5.0) / 6.0), 1e-14);
  EXPECT_EQ(code_of([] { cohens_d({1, 1}, {1, 1}); }), errc::undefined_test);
  EXPECT_EQ(code_of([] { cohens_d({1}, {1, 2}); }), errc::domain);
}

TEST(WithinOnePoint, Examples) {
  Eigen::MatrixXd all_close(3, 4);
  all_close << 80, 70, 60, 50, 79.5, 69.0, 59.2, 49.9, 10, 10, 10, 10;
  EXPECT_EQ(within_1pp_fraction(all_close), 1.0);
  Eigen::MatrixXd spread(2, 3);
  spread << 90, 80, 70, 85, 70, 60;
  EXPECT_EQ(within_1pp_fraction(spread), 0.0);
  Eigen::MatrixXd half(2, 2);
  half << 70, 80, 70.5, 75;
  EXPECT_EQ(within_1pp_fraction(half), 0.5);
  // exactly one point away counts
  Eigen::MatrixXd edge(2, 1);
  edge << 60.3, 59.3;
  EXPECT_EQ(within_1pp_fraction(edge), 1.0);
}
