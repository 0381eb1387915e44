#ifndef CHANADAPT_STATS_HPP
#define CHANADAPT_STATS_HPP

// Seed-level comparison statistics: Wilcoxon signed-rank, Benjamini-Hochberg,
// Friedman, Cohen's d, and the "within 1 point of the best" count.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/text.hpp"

namespace chanadapt::stats {

/// Average (mid) ranks, 1-based.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mid;
    i = j + 1;
  }
  return r;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct WilcoxonResult {
  double statistic = 0.0;  ///< min(W+, W-)
  double p = 1.0;          ///< two-sided
  int n = 0;               ///< pairs left after dropping zero differences
  bool exact = true;
};

inline constexpr int kWilcoxonExactMax = 25;

/// Zero differences are dropped before ranking.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(errc::shape, "wilcoxon: samples have different lengths");
  if (a.empty()) fail(errc::domain, "wilcoxon: need at least one pair");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) fail(errc::domain, "wilcoxon: non-finite score");
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  if (d.empty()) fail(errc::undefined_test, "wilcoxon: all differences are zero");

  std::vector<double> mag(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) mag[i] = std::abs(d[i]);
  const auto ranks = average_ranks(mag);
  double w_plus = 0.0, w_minus = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) (d[i] > 0 ? w_plus : w_minus) += ranks[i];

  WilcoxonResult res;
  res.n = static_cast<int>(d.size());
  res.statistic = std::min(w_plus, w_minus);

  if (res.n <= kWilcoxonExactMax) {
    // Null distribution of W+ over the 2^n sign patterns; doubled ranks are integers even with ties.
    std::vector<int> twice(ranks.size());
    int total = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      twice[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      total += twice[i];
    }
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    int reach = 0;
    for (const int r : twice) {
      for (int s = reach; s >= 0; --s) {
        if (count[static_cast<std::size_t>(s)] != 0.0) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
      }
      reach += r;
    }
    const auto w2 = static_cast<int>(std::lround(2.0 * res.statistic));
    double tail = 0.0;
    for (int s = 0; s <= w2; ++s) tail += count[static_cast<std::size_t>(s)];
    res.p = std::min(1.0, 2.0 * tail / std::ldexp(1.0, res.n));
    return res;
  }

  res.exact = false;
  const double n = res.n;
  double tie_term = 0.0;
  auto sorted = mag;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  const double z = (res.statistic - mean + 0.5) / std::sqrt(var);
  res.p = std::min(1.0, 2.0 * normal_cdf(std::min(z, 0.0)));
  return res;
}

struct BhResult {
  std::vector<bool> reject;
  std::vector<double> adjusted;
};

inline BhResult bh_correct(const std::vector<double>& p, double q) {
  if (!(q > 0.0 && q < 1.0)) fail(errc::domain, "bh: q must lie in (0, 1)");
  for (const double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) fail(errc::domain, "bh: p-value " + text::format_double(v) + " outside [0, 1]");
  }
  const std::size_t m = p.size();
  BhResult res{std::vector<bool>(m, false), std::vector<double>(m, 1.0)};
  if (m == 0) return res;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  const double md = static_cast<double>(m);
  std::size_t k = 0;
  for (std::size_t i = 0; i < m; ++i) {
    // p_(i) <= i q / m, written without the division so boundary cases stay exact
    if (p[order[i]] * md <= static_cast<double>(i + 1) * q) k = i + 1;
  }
  for (std::size_t i = 0; i < k; ++i) res.reject[order[i]] = true;

  double running = 1.0;
  for (std::size_t i = m; i-- > 0;) {
    running = std::min(running, md * p[order[i]] / static_cast<double>(i + 1));
    // m p / m can round one ulp under p
    res.adjusted[order[i]] = std::max(p[order[i]], std::min(1.0, running));
  }
  return res;
}

namespace detail {

// sum_n x^n / (a (a+1) ... (a+n)), so P(a, x) = e^{-x} x^a / Gamma(a) * series
inline double gamma_series(double a, double x) {
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum;
}

// modified Lentz evaluation of the continued fraction for Q(a, x) without its prefix
inline double gamma_fraction(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h;
}

inline double gamma_log_prefix(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) fail(errc::domain, "gamma_p: need a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return std::exp(detail::gamma_log_prefix(a, x)) * detail::gamma_series(a, x);
  return 1.0 - std::exp(detail::gamma_log_prefix(a, x)) * detail::gamma_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) fail(errc::domain, "gamma_q: need a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - std::exp(detail::gamma_log_prefix(a, x)) * detail::gamma_series(a, x);
  return std::exp(detail::gamma_log_prefix(a, x)) * detail::gamma_fraction(a, x);
}

inline double chi2_sf(double x, double dof) {
  if (!(dof > 0.0)) fail(errc::domain, "chi2_sf: dof must be > 0");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * x);
}

struct FriedmanResult {
  double statistic = 0.0;
  double p = 1.0;
  int blocks = 0;
  int treatments = 0;
};

/// scores: blocks x treatments. Ranks within each block, ties averaged.
inline FriedmanResult friedman(const Eigen::MatrixXd& scores) {
  const auto n = scores.rows();
  const auto k = scores.cols();
  if (n < 2 || k < 2) fail(errc::shape, "friedman: need >= 2 blocks and >= 2 treatments");
  if (!scores.allFinite()) fail(errc::domain, "friedman: non-finite score");
  Eigen::VectorXd rank_sum = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> row(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = scores(i, j);
    const auto r = average_ranks(row);
    for (Eigen::Index j = 0; j < k; ++j) rank_sum(j) += r[static_cast<std::size_t>(j)];
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  double ss = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double dev = rank_sum(j) / nd - (kd + 1.0) / 2.0;
    ss += dev * dev;
  }
  FriedmanResult res;
  res.blocks = static_cast<int>(n);
  res.treatments = static_cast<int>(k);
  res.statistic = 12.0 * nd / (kd * (kd + 1.0)) * ss;
  res.p = chi2_sf(res.statistic, kd - 1.0);
  return res;
}

/// (mean a - mean b) / pooled standard deviation with n_a + n_b - 2 denominator.
inline double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) fail(errc::domain, "cohens_d: each group needs >= 2 samples");
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
  auto ss = [](const std::vector<double>& v, double m) {
    double s = 0.0;
    for (const double x : v) s += (x - m) * (x - m);
    return s;
  };
  const double ma = mean(a), mb = mean(b);
  const double pooled = std::sqrt((ss(a, ma) + ss(b, mb)) / static_cast<double>(a.size() + b.size() - 2));
  if (!(pooled > 0.0)) fail(errc::undefined_test, "cohens_d: pooled standard deviation is zero");
  return (ma - mb) / pooled;
}

/// scores: methods x conditions, in percentage points. Fraction of conditions
/// where at least two methods sit within `margin` of that condition's best.
inline double within_1pp_fraction(const Eigen::MatrixXd& scores, double margin = 1.0) {
  if (scores.size() == 0) fail(errc::shape, "within_1pp_fraction: empty table");
  int hits = 0;
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const double best = scores.col(c).maxCoeff();
    int close = 0;
    for (Eigen::Index m = 0; m < scores.rows(); ++m) close += best - scores(m, c) <= margin * (1.0 + 1e-12) ? 1 : 0;
    hits += close >= 2 ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.cols());
}

}  // namespace chanadapt::stats

#endif  // CHANADAPT_STATS_HPP
