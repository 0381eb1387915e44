#ifndef CHANADAPT_TYPES_HPP
#define CHANADAPT_TYPES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/geometry.hpp"

namespace chanadapt {

enum class Method { conv1d, ssi, harmonic, riemannian, composed, identity };

inline const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::conv1d: return "conv1d";
    case Method::ssi: return "ssi";
    case Method::harmonic: return "harmonic";
    case Method::riemannian: return "riemannian";
    case Method::composed: return "composed";
    case Method::identity: return "identity";
  }
  return "?";
}

inline Method method_from_string(std::string_view s) {
  for (auto m : {Method::conv1d, Method::ssi, Method::harmonic, Method::riemannian, Method::composed,
                 Method::identity}) {
    if (s == to_string(m)) return m;
  }
  fail(errc::unknown_name, "unknown method '" + std::string(s) + "'");
}

inline bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

inline void check_unique_labels(const std::vector<std::string>& labels, std::string_view what) {
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(normalize_label(l)).second) {
      fail(errc::domain, std::string(what) + " has duplicate label '" + l + "'");
    }
  }
}

/// The C_t x C_s channel map X_t = M X_s, plus what produced it.
///
/// Fixed constructions never carry a bias; only learned projections (and
/// anything composed with one) do.
struct AdaptationMatrix {
  Eigen::MatrixXd matrix;
  Method method = Method::identity;
  std::vector<std::string> source_labels;
  std::vector<std::string> target_labels;
  std::optional<Eigen::VectorXd> bias;
  std::map<std::string, std::string> metadata;

  Eigen::Index rows() const noexcept { return matrix.rows(); }
  Eigen::Index cols() const noexcept { return matrix.cols(); }

  void validate() const {
    if (static_cast<std::size_t>(matrix.cols()) != source_labels.size()) {
      fail(errc::shape, "adaptation matrix has " + std::to_string(matrix.cols()) + " columns but " +
                            std::to_string(source_labels.size()) + " source labels");
    }
    if (static_cast<std::size_t>(matrix.rows()) != target_labels.size()) {
      fail(errc::shape, "adaptation matrix has " + std::to_string(matrix.rows()) + " rows but " +
                            std::to_string(target_labels.size()) + " target labels");
    }
    if (!matrix.allFinite()) fail(errc::numeric, "adaptation matrix has non-finite entries");
    if (bias) {
      if (bias->size() != matrix.rows()) fail(errc::shape, "bias length does not match row count");
      if (!bias->allFinite()) fail(errc::numeric, "bias has non-finite entries");
    }
    check_unique_labels(source_labels, "source descriptor");
    check_unique_labels(target_labels, "target descriptor");
  }
};

inline AdaptationMatrix identity_matrix(const std::vector<std::string>& labels) {
  AdaptationMatrix m;
  const auto n = static_cast<Eigen::Index>(labels.size());
  m.matrix = Eigen::MatrixXd::Identity(n, n);
  m.method = Method::identity;
  m.source_labels = labels;
  m.target_labels = labels;
  m.validate();
  return m;
}

/// Index-wise identity truncated or zero-padded to the target channel count.
/// Channel i of the source lands in slot i of the target regardless of label,
/// which is what a naive pipeline does when channel counts differ.
inline AdaptationMatrix zero_pad_matrix(const std::vector<std::string>& source,
                                        const std::vector<std::string>& target) {
  AdaptationMatrix m;
  m.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(target.size()),
                                   static_cast<Eigen::Index>(source.size()));
  const auto n = std::min(m.matrix.rows(), m.matrix.cols());
  for (Eigen::Index i = 0; i < n; ++i) m.matrix(i, i) = 1.0;
  m.method = Method::identity;
  m.source_labels = source;
  m.target_labels = target;
  m.metadata["identity.variant"] = "zero_pad";
  m.validate();
  return m;
}

struct Signal {
  Eigen::MatrixXd data;  ///< channels x samples
  double sfreq = 0.0;
  std::vector<std::string> labels;

  Eigen::Index channels() const noexcept { return data.rows(); }
  Eigen::Index samples() const noexcept { return data.cols(); }

  void validate() const {
    if (!(sfreq > 0.0) || !std::isfinite(sfreq)) fail(errc::domain, "signal sampling rate must be positive");
    if (static_cast<std::size_t>(data.rows()) != labels.size()) {
      fail(errc::shape, "signal has " + std::to_string(data.rows()) + " rows but " +
                            std::to_string(labels.size()) + " labels");
    }
    if (!data.allFinite()) fail(errc::numeric, "signal contains NaN or Inf samples");
    check_unique_labels(labels, "signal");
  }
};

struct EpochSet {
  std::vector<Signal> epochs;
  std::vector<std::string> subject_ids;
  std::vector<int> classes;  ///< empty when unlabeled

  std::size_t size() const noexcept { return epochs.size(); }
  bool labeled() const noexcept { return !classes.empty(); }

  void validate() const {
    if (subject_ids.size() != epochs.size()) fail(errc::shape, "subject id count differs from epoch count");
    if (!classes.empty() && classes.size() != epochs.size()) {
      fail(errc::shape, "class label count differs from epoch count");
    }
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      epochs[i].validate();
      if (i == 0) continue;
      const auto& a = epochs[0];
      const auto& b = epochs[i];
      if (a.data.rows() != b.data.rows() || a.data.cols() != b.data.cols() || a.labels != b.labels ||
          a.sfreq != b.sfreq) {
        fail(errc::shape, "epoch " + std::to_string(i) + " differs in shape, labels or rate from epoch 0");
      }
    }
  }

  /// Subject ids in order of first appearance.
  std::vector<std::string> subjects() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& s : subject_ids) {
      if (seen.insert(s).second) out.push_back(s);
    }
    return out;
  }

  EpochSet for_subject(const std::string& subject) const {
    EpochSet out;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      if (subject_ids[i] != subject) continue;
      out.epochs.push_back(epochs[i]);
      out.subject_ids.push_back(subject_ids[i]);
      if (labeled()) out.classes.push_back(classes[i]);
    }
    return out;
  }
};

}  // namespace chanadapt

#endif  // CHANADAPT_TYPES_HPP
