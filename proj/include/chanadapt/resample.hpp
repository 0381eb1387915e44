#ifndef CHANADAPT_RESAMPLE_HPP
#define CHANADAPT_RESAMPLE_HPP

// Rational-ratio polyphase resampling with a Kaiser-windowed sinc low-pass.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/text.hpp"
#include "chanadapt/types.hpp"

namespace chanadapt {

struct ResampleConfig {
  double kaiser_beta = 8.6;
  double cutoff = 0.9;        ///< fraction of the lower Nyquist frequency
  int half_width_zeros = 10;  ///< filter half length in units of max(up, down)
  int max_denominator = 1000;
};

struct Ratio {
  long long up = 1;
  long long down = 1;
};

/// up/down == new_rate/old_rate exactly enough (1e-12 relative), down bounded.
inline Ratio rational_ratio(double new_rate, double old_rate, int max_denominator = 1000) {
  if (!(new_rate > 0.0) || !(old_rate > 0.0) || !std::isfinite(new_rate) || !std::isfinite(old_rate)) {
    fail(errc::domain, "resample: sampling rates must be positive");
  }
  const double r = new_rate / old_rate;
  // Continued-fraction convergents h/k of r.
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = r;
  for (int i = 0; i < 64; ++i) {
    const double a_d = std::floor(x);
    if (a_d > 1e15) break;
    const auto a = static_cast<long long>(a_d);
    const long long h2 = a * h1 + h0;
    const long long k2 = a * k1 + k0;
    if (k2 > max_denominator) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - r) <= 1e-12 * r) {
      if (h1 <= 0) break;
      return {h1, k1};
    }
    const double frac = x - a_d;
    if (frac <= 0.0) break;
    x = 1.0 / frac;
  }
  fail(errc::domain, "resample: ratio " + text::format_double(new_rate) + "/" + text::format_double(old_rate) +
                         " has no rational form with denominator <= " + std::to_string(max_denominator));
}

inline double kaiser_window(double n, double length, double beta) {
  const double t = 2.0 * n / length - 1.0;
  if (std::abs(t) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - t * t)) / std::cyl_bessel_i(0.0, beta);
}

/// Prototype low-pass at the upsampled rate, with every polyphase branch
/// scaled to unit DC gain so constant input stays exactly constant.
inline std::vector<double> design_resampling_filter(const Ratio& ratio, const ResampleConfig& cfg, long long& half) {
  const long long l = std::max(ratio.up, ratio.down);
  half = cfg.half_width_zeros * l;
  const long long taps = 2 * half + 1;
  const double fc = cfg.cutoff / static_cast<double>(l);  // relative to the upsampled Nyquist
  std::vector<double> h(static_cast<std::size_t>(taps));
  for (long long n = 0; n < taps; ++n) {
    const double t = static_cast<double>(n - half);
    const double arg = std::numbers::pi * fc * t;
    const double sinc = t == 0.0 ? 1.0 : std::sin(arg) / arg;
    h[static_cast<std::size_t>(n)] = fc * sinc * kaiser_window(static_cast<double>(n), static_cast<double>(taps - 1), cfg.kaiser_beta);
  }
  std::vector<double> branch(static_cast<std::size_t>(ratio.up), 0.0);
  for (long long n = 0; n < taps; ++n) branch[static_cast<std::size_t>(n % ratio.up)] += h[static_cast<std::size_t>(n)];
  for (long long n = 0; n < taps; ++n) h[static_cast<std::size_t>(n)] /= branch[static_cast<std::size_t>(n % ratio.up)];
  return h;
}

inline std::string describe_resampler(const Ratio& ratio, const ResampleConfig& cfg = {}) {
  return "polyphase up=" + std::to_string(ratio.up) + " down=" + std::to_string(ratio.down) +
         " kaiser_beta=" + text::format_double(cfg.kaiser_beta) + " cutoff=" + text::format_double(cfg.cutoff) +
         "xNyquist half_width=" + std::to_string(cfg.half_width_zeros) + "xmax(up,down) edges=replicate";
}

/// Output length round(T * new / old). Samples beyond the edges are taken as
/// the edge value; the filter is centered, so there is no group delay.
inline Signal resample(const Signal& x, double new_sfreq, const ResampleConfig& cfg = {}) {
  x.validate();
  const Ratio ratio = rational_ratio(new_sfreq, x.sfreq, cfg.max_denominator);
  Signal out;
  out.labels = x.labels;
  out.sfreq = new_sfreq;
  if (ratio.up == ratio.down) {
    out.sfreq = x.sfreq;
    out.data = x.data;
    return out;
  }
  const long long t_in = x.samples();
  const long long t_out = std::llround(static_cast<double>(t_in) * static_cast<double>(ratio.up) /
                                       static_cast<double>(ratio.down));
  long long half = 0;
  const auto h = design_resampling_filter(ratio, cfg, half);
  out.data.resize(x.channels(), t_out);

  for (long long j = 0; j < t_out; ++j) {
    const long long u = j * ratio.down;  // position on the upsampled grid
    // taps n = u - k*up + half must lie in [0, 2*half]
    const long long k_lo = static_cast<long long>(std::ceil(static_cast<double>(u - half) / static_cast<double>(ratio.up)));
    const long long k_hi = static_cast<long long>(std::floor(static_cast<double>(u + half) / static_cast<double>(ratio.up)));
    for (Eigen::Index c = 0; c < x.channels(); ++c) {
      double acc = 0.0;
      for (long long k = k_lo; k <= k_hi; ++k) {
        const long long src = std::clamp<long long>(k, 0, t_in - 1);
        acc += h[static_cast<std::size_t>(u - k * ratio.up + half)] * x.data(c, src);
      }
      out.data(c, j) = acc;
    }
  }
  return out;
}

}  // namespace chanadapt

#endif  // CHANADAPT_RESAMPLE_HPP
