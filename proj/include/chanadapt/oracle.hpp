#ifndef CHANADAPT_ORACLE_HPP
#define CHANADAPT_ORACLE_HPP

// Synthetic scalp fields on a spherical head: X = B^T A (+ noise), with B the
// degree-4 real harmonic basis at the montage electrodes and A the coefficient
// timecourses. Because the field is known everywhere on the sphere, any other
// montage can be rendered from the same A and used as ground truth.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chanadapt/basis.hpp"
#include "chanadapt/error.hpp"
#include "chanadapt/geometry.hpp"
#include "chanadapt/types.hpp"

namespace chanadapt {

inline constexpr int kOracleDegree = 4;

enum class SubjectMixing { none, random_spd };

inline SubjectMixing subject_mixing_from_string(std::string_view s) {
  if (s == "none") return SubjectMixing::none;
  if (s == "random_spd") return SubjectMixing::random_spd;
  fail(errc::config, "unknown subject mixing '" + std::string(s) + "'");
}

struct SynthSpec {
  Montage montage = builtin_montage("ten_ten_64");
  /// Fixed 25 x T coefficients. When empty, each epoch draws Gaussian
  /// timecourses with standard deviation degree_amplitudes[l] per degree.
  Eigen::MatrixXd coefficients;
  std::vector<double> degree_amplitudes{1.0, 0.5, 0.3, 0.2, 0.1};
  Eigen::Index n_samples = 256;
  double noise_sigma = 0.0;
  double sfreq = 256.0;
  int n_subjects = 1;
  int n_epochs_per_subject = 1;
  SubjectMixing subject_mixing = SubjectMixing::none;
  double mixing_epsilon = 0.5;
  std::uint64_t seed = 0;
  /// Flat harmonic index whose per-epoch mean sign defines a two-class label.
  std::optional<int> label_coefficient;
  double label_effect = 1.0;

  Eigen::Index samples() const noexcept { return coefficients.size() ? coefficients.cols() : n_samples; }

  void validate() const {
    if (coefficients.size() && coefficients.rows() != sh_count(kOracleDegree)) {
      fail(errc::shape, "synth: coefficient matrix must have 25 rows");
    }
    if (!coefficients.size() && degree_amplitudes.size() != static_cast<std::size_t>(kOracleDegree + 1)) {
      fail(errc::shape, "synth: need 5 per-degree amplitudes");
    }
    if (samples() < 1) fail(errc::config, "synth: need at least one sample");
    if (!(noise_sigma >= 0.0)) fail(errc::config, "synth: noise_sigma must be >= 0");
    if (!(sfreq > 0.0)) fail(errc::config, "synth: sfreq must be > 0");
    if (n_subjects < 1 || n_epochs_per_subject < 1) fail(errc::config, "synth: need >= 1 subject and epoch");
    if (label_coefficient && (*label_coefficient < 0 || *label_coefficient >= sh_count(kOracleDegree))) {
      fail(errc::config, "synth: label coefficient out of range");
    }
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = sigma * dist(rng);
  }
  return m;
}

}  // namespace detail

/// Field of the coefficients at the montage electrodes, B^T A.
inline Eigen::MatrixXd render_field(const Montage& montage, const Eigen::MatrixXd& coefficients) {
  if (coefficients.rows() != sh_count(kOracleDegree)) fail(errc::shape, "render_field: need 25 coefficient rows");
  return sh_basis_matrix(montage, kOracleDegree).transpose() * coefficients;
}

inline Eigen::MatrixXd random_coefficients(const SynthSpec& spec, std::mt19937_64& rng) {
  Eigen::MatrixXd a(sh_count(kOracleDegree), spec.n_samples);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    const double amp = spec.degree_amplitudes[static_cast<std::size_t>(ShIndex::from_flat(static_cast<int>(k)).l)];
    for (Eigen::Index t = 0; t < a.cols(); ++t) a(k, t) = amp * dist(rng);
  }
  return a;
}

/// I + eps L L^T with L ~ N(0, 1/C) entries, so the spectrum stays in [1, 1 + ~4 eps].
inline Eigen::MatrixXd random_spd_mixing(Eigen::Index channels, double eps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd l = detail::gaussian_matrix(channels, channels, 1.0 / std::sqrt(static_cast<double>(channels)), rng);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(channels, channels) + eps * l * l.transpose();
  return 0.5 * (a + a.transpose());
}

struct SynthField {
  Signal signal;
  Eigen::MatrixXd coefficients;
};

/// One signal drawn from spec.seed: B^T A plus i.i.d. Gaussian noise, with A.
inline SynthField synth_field_with_truth(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(detail::derive_seed(spec.seed, 0, 0));
  SynthField out;
  out.coefficients = spec.coefficients.size() ? spec.coefficients : random_coefficients(spec, rng);
  Signal& x = out.signal;
  x.sfreq = spec.sfreq;
  x.labels = spec.montage.labels();
  x.data = render_field(spec.montage, out.coefficients);
  if (spec.noise_sigma > 0.0) x.data += detail::gaussian_matrix(x.data.rows(), x.data.cols(), spec.noise_sigma, rng);
  return out;
}

inline Signal synth_field(const SynthSpec& spec) { return synth_field_with_truth(spec).signal; }

struct SynthEpochs {
  EpochSet set;
  std::vector<Eigen::MatrixXd> coefficients;  ///< per epoch, the 25 x T ground truth
  std::vector<Eigen::MatrixXd> mixings;       ///< per subject
};

/// Subject j's epochs are A_j (B^T A_e + noise). Subjects are "s0", "s1", ...
/// With a label coefficient, classes are balanced over the whole set and the
/// chosen coefficient of each epoch is re-centered to mean +effect or -effect.
inline SynthEpochs synth_epochs_with_truth(const SynthSpec& spec) {
  spec.validate();
  const auto channels = static_cast<Eigen::Index>(spec.montage.size());
  const int total = spec.n_subjects * spec.n_epochs_per_subject;
  const Eigen::MatrixXd basis_t = sh_basis_matrix(spec.montage, kOracleDegree).transpose();

  std::vector<int> classes;
  if (spec.label_coefficient) {
    for (int i = 0; i < total; ++i) classes.push_back(i % 2);
    std::mt19937_64 rng(detail::derive_seed(spec.seed, 1, 0));
    std::shuffle(classes.begin(), classes.end(), rng);
  }

  SynthEpochs out;
  for (int j = 0; j < spec.n_subjects; ++j) {
    out.mixings.push_back(spec.subject_mixing == SubjectMixing::random_spd
                              ? random_spd_mixing(channels, spec.mixing_epsilon, detail::derive_seed(spec.seed, 2, static_cast<std::uint64_t>(j)))
                              : Eigen::MatrixXd::Identity(channels, channels));
  }
  for (int j = 0; j < spec.n_subjects; ++j) {
    for (int e = 0; e < spec.n_epochs_per_subject; ++e) {
      const int idx = j * spec.n_epochs_per_subject + e;
      std::mt19937_64 rng(detail::derive_seed(spec.seed, 3, static_cast<std::uint64_t>(idx)));
      Eigen::MatrixXd coeffs = spec.coefficients.size() ? spec.coefficients : random_coefficients(spec, rng);
      if (spec.label_coefficient) {
        auto row = coeffs.row(*spec.label_coefficient);
        const double sign = classes[static_cast<std::size_t>(idx)] == 1 ? 1.0 : -1.0;
        row.array() += sign * spec.label_effect - row.mean();
      }
      Signal x;
      x.sfreq = spec.sfreq;
      x.labels = spec.montage.labels();
      x.data = basis_t * coeffs;
      if (spec.noise_sigma > 0.0) x.data += detail::gaussian_matrix(x.data.rows(), x.data.cols(), spec.noise_sigma, rng);
      if (spec.subject_mixing != SubjectMixing::none) x.data = out.mixings[static_cast<std::size_t>(j)] * x.data;
      out.set.epochs.push_back(std::move(x));
      out.set.subject_ids.push_back("s" + std::to_string(j));
      out.coefficients.push_back(std::move(coeffs));
    }
  }
  out.set.classes = std::move(classes);
  out.set.validate();
  return out;
}

inline EpochSet synth_epochs(const SynthSpec& spec) { return synth_epochs_with_truth(spec).set; }

}  // namespace chanadapt

#endif  // CHANADAPT_ORACLE_HPP
