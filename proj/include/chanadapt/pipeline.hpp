#ifndef CHANADAPT_PIPELINE_HPP
#define CHANADAPT_PIPELINE_HPP

// X_t = M X_s: applying and chaining adaptation matrices, plus per-channel
// amplitude normalization.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/geometry.hpp"
#include "chanadapt/text.hpp"
#include "chanadapt/types.hpp"

namespace chanadapt {

/// Row permutation that brings `labels` into `wanted` order. Throws naming
/// every missing and extra channel when the two are not the same set.
inline std::vector<Eigen::Index> match_channels(const std::vector<std::string>& wanted,
                                                const std::vector<std::string>& labels) {
  std::unordered_map<std::string, Eigen::Index> have;
  for (std::size_t i = 0; i < labels.size(); ++i) have.emplace(normalize_label(labels[i]), static_cast<Eigen::Index>(i));

  std::vector<Eigen::Index> order;
  std::vector<std::string> missing;
  order.reserve(wanted.size());
  for (const auto& w : wanted) {
    const auto it = have.find(normalize_label(w));
    if (it == have.end()) {
      missing.push_back(w);
    } else {
      order.push_back(it->second);
      have.erase(it);
    }
  }
  if (!missing.empty() || !have.empty()) {
    std::vector<std::string> extra;
    for (const auto& l : labels) {
      if (have.count(normalize_label(l))) extra.push_back(l);
    }
    std::string msg = "channel set mismatch";
    if (!missing.empty()) msg += "; missing: " + text::join(missing, ",");
    if (!extra.empty()) msg += "; extra: " + text::join(extra, ",");
    fail(errc::label_mismatch, msg);
  }
  return order;
}

struct ApplyInfo {
  bool reordered = false;
};

inline bool is_exact_identity(const Eigen::MatrixXd& m) {
  return m.rows() == m.cols() && m == Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

/// Output labels are the matrix's target descriptor; the input may list the
/// source channels in any order.
inline Signal apply(const AdaptationMatrix& m, const Signal& x, ApplyInfo& info) {
  m.validate();
  x.validate();
  const auto order = match_channels(m.source_labels, x.labels);
  info.reordered = false;
  for (std::size_t i = 0; i < order.size(); ++i) info.reordered |= order[i] != static_cast<Eigen::Index>(i);

  Signal out;
  out.sfreq = x.sfreq;
  out.labels = m.target_labels;
  if (is_exact_identity(m.matrix) && !m.bias) {
    out.data = info.reordered ? Eigen::MatrixXd(x.data(order, Eigen::all)) : x.data;
    return out;
  }
  if (info.reordered) {
    out.data = m.matrix * x.data(order, Eigen::all);
  } else {
    out.data = m.matrix * x.data;
  }
  if (m.bias) out.data.colwise() += *m.bias;
  return out;
}

inline Signal apply(const AdaptationMatrix& m, const Signal& x) {
  ApplyInfo info;
  return apply(m, x, info);
}

/// outer . inner. The outer source descriptor must name the inner targets;
/// order may differ and is resolved by label.
inline AdaptationMatrix compose(const AdaptationMatrix& outer, const AdaptationMatrix& inner) {
  outer.validate();
  inner.validate();
  const auto order = match_channels(outer.source_labels, inner.target_labels);
  const Eigen::MatrixXd inner_rows = inner.matrix(order, Eigen::all);

  AdaptationMatrix out;
  out.matrix = outer.matrix * inner_rows;
  if (inner.bias) {
    const Eigen::VectorXd b = (*inner.bias)(order);
    out.bias = outer.matrix * b;
  }
  if (outer.bias) out.bias = out.bias ? Eigen::VectorXd(*out.bias + *outer.bias) : *outer.bias;
  out.method = Method::composed;
  out.source_labels = inner.source_labels;
  out.target_labels = outer.target_labels;
  for (const auto& [k, v] : inner.metadata) out.metadata["inner." + k] = v;
  for (const auto& [k, v] : outer.metadata) out.metadata["outer." + k] = v;
  out.metadata["composed.chain"] = std::string(to_string(outer.method)) + "<-" + to_string(inner.method);
  if (out.bias) out.metadata["composed.bias"] = "learned";
  out.validate();
  return out;
}

enum class NormalizeMode { minmax, zscore, uv_scale };

inline NormalizeMode normalize_mode_from_string(std::string_view s) {
  if (s == "minmax") return NormalizeMode::minmax;
  if (s == "zscore") return NormalizeMode::zscore;
  if (s == "uv_scale" || s == "uv100") return NormalizeMode::uv_scale;
  fail(errc::config, "unknown normalization '" + std::string(s) + "'");
}

/// Per channel, per epoch. minmax maps onto [-1, 1]; zscore uses the
/// population standard deviation; uv_scale divides everything by 100.
inline Signal normalize(const Signal& x, NormalizeMode mode) {
  x.validate();
  Signal out = x;
  if (mode == NormalizeMode::uv_scale) {
    out.data /= 100.0;
    return out;
  }
  for (Eigen::Index c = 0; c < x.channels(); ++c) {
    auto row = out.data.row(c);
    const auto& label = x.labels[static_cast<std::size_t>(c)];
    if (mode == NormalizeMode::minmax) {
      const double lo = row.minCoeff();
      const double hi = row.maxCoeff();
      if (!(hi > lo)) fail(errc::domain, "minmax: channel '" + label + "' is constant");
      row = (2.0 * (row.array() - lo) / (hi - lo) - 1.0).cwiseMax(-1.0).cwiseMin(1.0).matrix();
    } else {
      const double mean = row.mean();
      row.array() -= mean;
      const double sd = std::sqrt(row.squaredNorm() / static_cast<double>(row.size()));
      if (!(sd > 0.0)) fail(errc::domain, "zscore: channel '" + label + "' is constant");
      row /= sd;
    }
  }
  return out;
}

}  // namespace chanadapt

#endif  // CHANADAPT_PIPELINE_HPP
