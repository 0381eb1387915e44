#ifndef CHANADAPT_BENCH_HPP
#define CHANADAPT_BENCH_HPP

// Seed-replicated montage-transfer benchmark.
//
// Task: train subjects are recorded on one montage, test subjects on another,
// and every adapter maps both into a shared target space. Each epoch's class
// is the sign of the mean of one low-order harmonic coefficient; features are
// per-channel time means of the adapted epoch; the head is a ridge linear
// classifier scored by balanced accuracy on the held-out subjects.
//
// Config (flat key = value, '#' comments):
//   methods              comma list of ssi, zeropad, harmonic, riemannian, conv1d
//   n_seeds, seed        seeds run are seed, seed+1, ..., seed+n_seeds-1
//   train_montage, test_montage, target_montage
//   train_subjects, test_subjects, epochs_per_subject, n_samples
//   noise_sigma, subject_mixing (none|random_spd), mixing_epsilon
//   label_coefficient    "Y<l>:<m>" or a flat index; label_effect
//   classifier           ridge_linear; classifier_ridge
//   calibration_epochs   unlabeled paired epochs per montage for conv1d
//   conv1d_ridge, ssi.stiffness, ssi.n_terms, ssi.lambda,
//   harmonic.l_max, harmonic.mode, harmonic.ridge, riemannian.shrinkage
//   q                    FDR level for the report
//   output, report       CSV paths (report defaults to <output stem>.stats.csv)

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/geometry.hpp"
#include "chanadapt/harmonic.hpp"
#include "chanadapt/learned.hpp"
#include "chanadapt/oracle.hpp"
#include "chanadapt/pipeline.hpp"
#include "chanadapt/riemannian.hpp"
#include "chanadapt/ssi.hpp"
#include "chanadapt/stats.hpp"
#include "chanadapt/text.hpp"
#include "chanadapt/types.hpp"

namespace chanadapt::bench {

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"ssi", "zeropad", "harmonic", "riemannian", "conv1d"};
  return names;
}

struct BenchConfig {
  std::vector<std::string> methods{"ssi", "zeropad"};
  int n_seeds = 10;
  std::uint64_t seed = 0;
  std::string train_montage = "ten_ten_64";
  std::string test_montage = "bci2a_22";
  std::string target_montage = "ten_twenty_19";
  int train_subjects = 4;
  int test_subjects = 2;
  int epochs_per_subject = 40;
  Eigen::Index n_samples = 64;
  double noise_sigma = 0.1;
  SubjectMixing subject_mixing = SubjectMixing::random_spd;
  double mixing_epsilon = 0.5;
  int label_coefficient = ShIndex{1, 1}.flat();
  double label_effect = 0.5;
  std::string classifier = "ridge_linear";
  double classifier_ridge = 1e-3;
  int calibration_epochs = 8;
  double conv1d_ridge = 1e-6;
  SplineConfig ssi;
  HarmonicConfig harmonic{4, HarmonicMode::least_squares};
  RiemannianConfig riemannian;
  double q = 0.05;
  std::string output = "bench.csv";
  std::string report;

  /// Names as they appear in the CSV; a repeated method gets a "#2", "#3" suffix.
  std::vector<std::string> method_labels() const {
    std::vector<std::string> out;
    std::map<std::string, int> seen;
    for (const auto& m : methods) {
      const int k = ++seen[m];
      out.push_back(k == 1 ? m : m + "#" + std::to_string(k));
    }
    return out;
  }

  std::string report_path() const {
    if (!report.empty()) return report;
    const auto dot = output.rfind('.');
    const auto slash = output.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (has_ext ? output.substr(0, dot) : output) + ".stats.csv";
  }

  void validate() const {
    if (methods.empty()) fail(errc::config, "bench: at least one method is required");
    for (const auto& m : methods) {
      if (std::find(method_names().begin(), method_names().end(), m) == method_names().end()) {
        fail(errc::unknown_name, "unknown method '" + m + "'");
      }
    }
    if (n_seeds < 1) fail(errc::config, "bench: n_seeds must be >= 1");
    if (train_subjects < 1 || test_subjects < 1) fail(errc::config, "bench: need >= 1 train and test subject");
    if (epochs_per_subject < 2) fail(errc::config, "bench: epochs_per_subject must be >= 2");
    if (n_samples < 2) fail(errc::config, "bench: n_samples must be >= 2");
    if (classifier != "ridge_linear") fail(errc::config, "bench: unknown classifier '" + classifier + "'");
    if (!(classifier_ridge >= 0.0)) fail(errc::config, "bench: classifier_ridge must be >= 0");
    if (calibration_epochs < 1) fail(errc::config, "bench: calibration_epochs must be >= 1");
    if (!(q > 0.0 && q < 1.0)) fail(errc::config, "bench: q must lie in (0, 1)");
    if (label_coefficient < 0 || label_coefficient >= sh_count(kOracleDegree)) {
      fail(errc::config, "bench: label_coefficient must address a degree <= 4 harmonic");
    }
    ssi.validate();
  }
};

inline int parse_coefficient(std::string_view s) {
  const auto t = text::trim(s);
  if (!t.empty() && (t.front() == 'Y' || t.front() == 'y')) {
    const auto parts = text::split(t.substr(1), ':');
    if (parts.size() != 2) fail(errc::parse, "coefficient '" + std::string(t) + "' is not of the form Y<l>:<m>");
    const ShIndex idx{static_cast<int>(text::parse_int(parts[0], "degree")), static_cast<int>(text::parse_int(parts[1], "order"))};
    if (idx.l < 0 || std::abs(idx.m) > idx.l) fail(errc::domain, "coefficient '" + std::string(t) + "' has |m| > l");
    return idx.flat();
  }
  return static_cast<int>(text::parse_int(t, "coefficient index"));
}

inline BenchConfig parse_config(std::istream& in) {
  BenchConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = line.substr(0, line.find('#'));
    const auto t = text::trim(body);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) fail(errc::parse, "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key(text::trim(t.substr(0, eq)));
    const std::string value(text::trim(t.substr(eq + 1)));
    const auto num = [&] { return text::parse_double(value, key); };
    const auto integer = [&] { return text::parse_int(value, key); };
    if (key == "methods") {
      cfg.methods.clear();
      for (const auto& m : text::split(value, ',')) {
        if (!text::trim(m).empty()) cfg.methods.emplace_back(text::to_lower(text::trim(m)));
      }
    } else if (key == "n_seeds") cfg.n_seeds = static_cast<int>(integer());
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer());
    else if (key == "train_montage") cfg.train_montage = value;
    else if (key == "test_montage") cfg.test_montage = value;
    else if (key == "target_montage") cfg.target_montage = value;
    else if (key == "train_subjects") cfg.train_subjects = static_cast<int>(integer());
    else if (key == "test_subjects") cfg.test_subjects = static_cast<int>(integer());
    else if (key == "epochs_per_subject") cfg.epochs_per_subject = static_cast<int>(integer());
    else if (key == "n_samples") cfg.n_samples = static_cast<Eigen::Index>(integer());
    else if (key == "noise_sigma") cfg.noise_sigma = num();
    else if (key == "subject_mixing") cfg.subject_mixing = subject_mixing_from_string(value);
    else if (key == "mixing_epsilon") cfg.mixing_epsilon = num();
    else if (key == "label_coefficient") cfg.label_coefficient = parse_coefficient(value);
    else if (key == "label_effect") cfg.label_effect = num();
    else if (key == "classifier") cfg.classifier = value;
    else if (key == "classifier_ridge") cfg.classifier_ridge = num();
    else if (key == "calibration_epochs") cfg.calibration_epochs = static_cast<int>(integer());
    else if (key == "conv1d_ridge") cfg.conv1d_ridge = num();
    else if (key == "ssi.stiffness") cfg.ssi.stiffness = static_cast<int>(integer());
    else if (key == "ssi.n_terms") cfg.ssi.n_terms = static_cast<int>(integer());
    else if (key == "ssi.lambda") cfg.ssi.reg_lambda = num();
    else if (key == "harmonic.l_max") cfg.harmonic.l_max = static_cast<int>(integer());
    else if (key == "harmonic.mode") cfg.harmonic.mode = harmonic_mode_from_string(value);
    else if (key == "harmonic.ridge") cfg.harmonic.ridge = num();
    else if (key == "riemannian.shrinkage") {
      cfg.riemannian.shrinkage = value == "ledoit_wolf" ? Shrinkage::ledoit_wolf() : Shrinkage::fixed(num());
    } else if (key == "q") cfg.q = num();
    else if (key == "output") cfg.output = value;
    else if (key == "report") cfg.report = value;
    else fail(errc::config, "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

inline BenchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open config '" + path + "'");
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// Head and metric

struct RidgeClassifier {
  Eigen::VectorXd weights;
  double intercept = 0.0;

  int predict(const Eigen::VectorXd& f) const { return weights.dot(f) + intercept > 0.0 ? 1 : 0; }
};

/// Least squares on +-1 targets with an unpenalized intercept.
inline RidgeClassifier fit_ridge_classifier(const Eigen::MatrixXd& features, const std::vector<int>& classes, double ridge) {
  const auto n = features.rows();
  if (n == 0 || static_cast<std::size_t>(n) != classes.size()) fail(errc::shape, "classifier: feature/label count mismatch");
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = classes[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const Eigen::MatrixXd centered = features.rowwise() - mean;
  Eigen::MatrixXd gram = centered.transpose() * centered;
  gram.diagonal().array() += ridge;
  RidgeClassifier clf;
  clf.weights = gram.ldlt().solve(centered.transpose() * (y.array() - y.mean()).matrix());
  if (!clf.weights.allFinite()) fail(errc::numeric, "classifier: ridge system is singular");
  clf.intercept = y.mean() - mean.dot(clf.weights);
  return clf;
}

/// Mean per-class recall over the classes present in `truth`.
inline double balanced_accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
  if (truth.size() != pred.size() || truth.empty()) fail(errc::shape, "balanced_accuracy: size mismatch");
  std::map<int, std::pair<int, int>> per;  // class -> (hits, total)
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto& [hit, total] = per[truth[i]];
    ++total;
    hit += pred[i] == truth[i] ? 1 : 0;
  }
  double sum = 0.0;
  for (const auto& [cls, ht] : per) sum += static_cast<double>(ht.first) / static_cast<double>(ht.second);
  return sum / static_cast<double>(per.size());
}

inline Eigen::MatrixXd time_mean_features(const std::vector<Signal>& adapted) {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(adapted.size()), adapted.front().channels());
  for (std::size_t i = 0; i < adapted.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = adapted[i].data.rowwise().mean().transpose();
  return f;
}

// ---------------------------------------------------------------------------
// Harness

struct BenchRow {
  std::string method;
  std::uint64_t seed = 0;
  double balanced_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::map<std::string, std::string> failures;  ///< method label -> first error
};

struct SeedData {
  Montage train, test, target;
  SynthEpochs train_set, test_set;
  EpochSet train_calib, test_calib;                ///< unlabeled, for conv1d
  std::vector<Eigen::MatrixXd> train_calib_truth;  ///< the same fields on the target montage
  std::vector<Eigen::MatrixXd> test_calib_truth;
};

inline SynthSpec base_spec(const BenchConfig& cfg, const Montage& m, std::uint64_t seed, int subjects) {
  SynthSpec s;
  s.montage = m;
  s.n_samples = cfg.n_samples;
  s.noise_sigma = cfg.noise_sigma;
  s.n_subjects = subjects;
  s.n_epochs_per_subject = cfg.epochs_per_subject;
  s.subject_mixing = cfg.subject_mixing;
  s.mixing_epsilon = cfg.mixing_epsilon;
  s.seed = seed;
  s.label_coefficient = cfg.label_coefficient;
  s.label_effect = cfg.label_effect;
  return s;
}

inline SeedData make_seed_data(const BenchConfig& cfg, std::uint64_t seed) {
  SeedData d{resolve_montage(cfg.train_montage), resolve_montage(cfg.test_montage), resolve_montage(cfg.target_montage),
             {}, {}, {}, {}, {}, {}};
  d.train_set = synth_epochs_with_truth(base_spec(cfg, d.train, detail::derive_seed(seed, 10, 0), cfg.train_subjects));
  d.test_set = synth_epochs_with_truth(base_spec(cfg, d.test, detail::derive_seed(seed, 11, 0), cfg.test_subjects));

  const auto calib = [&](const Montage& m, std::uint64_t stream, EpochSet& set, std::vector<Eigen::MatrixXd>& truth) {
    auto spec = base_spec(cfg, m, detail::derive_seed(seed, stream, 0), 1);
    spec.n_epochs_per_subject = cfg.calibration_epochs;
    spec.subject_mixing = SubjectMixing::none;
    spec.label_coefficient.reset();
    auto out = synth_epochs_with_truth(spec);
    set = std::move(out.set);
    for (const auto& a : out.coefficients) truth.push_back(render_field(d.target, a));
  };
  calib(d.train, 12, d.train_calib, d.train_calib_truth);
  calib(d.test, 13, d.test_calib, d.test_calib_truth);
  return d;
}

inline AdaptationMatrix conv1d_adapter(const EpochSet& calib, const std::vector<Eigen::MatrixXd>& truth,
                                       const Montage& source, const Montage& target, double ridge) {
  Eigen::MatrixXd xs(source.size(), 0), xt(target.size(), 0);
  for (std::size_t i = 0; i < calib.size(); ++i) {
    const auto& e = calib.epochs[i].data;
    xs.conservativeResize(Eigen::NoChange, xs.cols() + e.cols());
    xs.rightCols(e.cols()) = e;
    xt.conservativeResize(Eigen::NoChange, xt.cols() + e.cols());
    xt.rightCols(e.cols()) = truth[i];
  }
  return to_adaptation_matrix(lsq_fit(xs, xt, ridge), source.labels(), target.labels());
}

/// Adapted epochs of one side (train or test) under one method.
inline std::vector<Signal> adapt_side(const std::string& method, const BenchConfig& cfg, const Montage& source,
                                      const Montage& target, const EpochSet& set, const EpochSet& calib,
                                      const std::vector<Eigen::MatrixXd>& calib_truth) {
  std::vector<Signal> out;
  out.reserve(set.size());
  const auto map_all = [&](const AdaptationMatrix& m) {
    for (const auto& e : set.epochs) out.push_back(apply(m, e));
  };
  if (method == "ssi") {
    map_all(ssi_matrix(source, target, cfg.ssi));
  } else if (method == "zeropad") {
    map_all(zero_pad_matrix(source.labels(), target.labels()));
  } else if (method == "harmonic") {
    map_all(harmonic_matrix(source, cfg.harmonic));
  } else if (method == "conv1d") {
    map_all(conv1d_adapter(calib, calib_truth, source, target, cfg.conv1d_ridge));
  } else if (method == "riemannian") {
    const auto base = ssi_matrix(source, target, cfg.ssi);
    std::map<std::string, AdaptationMatrix> per_subject;
    for (const auto& id : set.subjects()) per_subject.emplace(id, recenter_matrix(set.for_subject(id), base, cfg.riemannian));
    for (std::size_t i = 0; i < set.size(); ++i) out.push_back(apply(per_subject.at(set.subject_ids[i]), set.epochs[i]));
  } else {
    fail(errc::unknown_name, "unknown method '" + method + "'");
  }
  return out;
}

inline double evaluate_method(const std::string& method, const BenchConfig& cfg, const SeedData& d) {
  const auto train = adapt_side(method, cfg, d.train, d.target, d.train_set.set, d.train_calib, d.train_calib_truth);
  const auto test = adapt_side(method, cfg, d.test, d.target, d.test_set.set, d.test_calib, d.test_calib_truth);
  const auto clf = fit_ridge_classifier(time_mean_features(train), d.train_set.set.classes, cfg.classifier_ridge);
  const Eigen::MatrixXd f = time_mean_features(test);
  std::vector<int> pred;
  for (Eigen::Index i = 0; i < f.rows(); ++i) pred.push_back(clf.predict(f.row(i).transpose()));
  return balanced_accuracy(d.test_set.set.classes, pred);
}

/// Failures inside one method are recorded as NaN rows; the run continues.
inline BenchResult run_bench(const BenchConfig& cfg) {
  cfg.validate();
  BenchResult res;
  const auto labels = cfg.method_labels();
  for (int s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
    const auto data = make_seed_data(cfg, seed);
    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
      BenchRow row{labels[k], seed, std::numeric_limits<double>::quiet_NaN()};
      try {
        row.balanced_accuracy = evaluate_method(cfg.methods[k], cfg, data);
      } catch (const error& e) {
        res.failures.emplace(labels[k], std::string(to_string(e.code())) + ": " + e.what());
      }
      res.rows.push_back(std::move(row));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// CSV round trips

inline std::string format_value(double v) { return std::isnan(v) ? "nan" : text::format_double(v); }

inline double parse_value(std::string_view s, std::string_view what) {
  const auto t = text::trim(s);
  if (t == "nan" || t == "NaN" || t.empty()) return std::numeric_limits<double>::quiet_NaN();
  return text::parse_double(t, what);
}

inline std::string encode_bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "method,seed,balanced_accuracy\n";
  for (const auto& r : rows) out += r.method + "," + std::to_string(r.seed) + "," + format_value(r.balanced_accuracy) + "\n";
  return out;
}

inline std::vector<BenchRow> decode_bench_csv(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  std::vector<BenchRow> rows;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cols = text::split(t, ',');
    if (!header) {
      if (cols.size() != 3 || text::trim(cols[0]) != "method" || text::trim(cols[1]) != "seed" ||
          text::trim(cols[2]) != "balanced_accuracy") {
        fail(errc::parse, "bench CSV: expected header 'method,seed,balanced_accuracy'");
      }
      header = true;
      continue;
    }
    if (cols.size() != 3) fail(errc::parse, "bench CSV line " + std::to_string(lineno) + ": expected 3 columns");
    const auto seed = text::parse_int(cols[1], "seed");
    if (seed < 0) fail(errc::parse, "bench CSV line " + std::to_string(lineno) + ": negative seed");
    rows.push_back({std::string(text::trim(cols[0])), static_cast<std::uint64_t>(seed), parse_value(cols[2], "balanced_accuracy")});
  }
  if (!header) fail(errc::parse, "bench CSV: missing header");
  return rows;
}

struct StatsRow {
  std::string kind;  ///< wilcoxon, friedman or within_1pp
  std::string a, b;
  int n = 0;
  double statistic = std::numeric_limits<double>::quiet_NaN();
  double p_raw = std::numeric_limits<double>::quiet_NaN();
  double p_adj = std::numeric_limits<double>::quiet_NaN();
  double d = std::numeric_limits<double>::quiet_NaN();
  bool reject = false;
  std::string note;
};

/// Methods in first-appearance order, with scores keyed by seed.
inline std::vector<std::pair<std::string, std::map<std::uint64_t, double>>> group_scores(const std::vector<BenchRow>& rows) {
  std::vector<std::pair<std::string, std::map<std::uint64_t, double>>> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == r.method; });
    if (it == out.end()) {
      out.push_back({r.method, {}});
      it = out.end() - 1;
    }
    if (!it->second.emplace(r.seed, r.balanced_accuracy).second) {
      fail(errc::parse, "bench CSV: duplicate row for method '" + r.method + "' seed " + std::to_string(r.seed));
    }
  }
  return out;
}

/// Pairwise Wilcoxon + BH + Cohen's d, then Friedman and the within-1-point
/// fraction over seeds where every method produced a score.
inline std::vector<StatsRow> compute_report(const std::vector<BenchRow>& rows, double q) {
  const auto groups = group_scores(rows);
  std::vector<StatsRow> out;
  std::vector<std::size_t> tested;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      StatsRow r;
      r.kind = "wilcoxon";
      r.a = groups[i].first;
      r.b = groups[j].first;
      std::vector<double> a, b;
      for (const auto& [seed, v] : groups[i].second) {
        const auto it = groups[j].second.find(seed);
        if (it != groups[j].second.end() && std::isfinite(v) && std::isfinite(it->second)) {
          a.push_back(v);
          b.push_back(it->second);
        }
      }
      r.n = static_cast<int>(a.size());
      if (a.empty()) {
        r.note = "no paired scores";
      } else {
        try {
          const auto w = stats::wilcoxon_signed_rank(a, b);
          r.statistic = w.statistic;
          r.p_raw = w.p;
          tested.push_back(out.size());
          if (!w.exact) r.note = "normal approximation";
        } catch (const error& e) {
          r.note = std::string(to_string(e.code())) + ": all differences zero";
        }
        try {
          r.d = stats::cohens_d(a, b);
        } catch (const error&) {
        }
      }
      out.push_back(std::move(r));
    }
  }
  std::vector<double> p;
  for (const auto k : tested) p.push_back(out[k].p_raw);
  const auto bh = stats::bh_correct(p, q);
  for (std::size_t i = 0; i < tested.size(); ++i) {
    out[tested[i]].p_adj = bh.adjusted[i];
    out[tested[i]].reject = bh.reject[i];
  }

  if (groups.size() >= 2) {
    std::vector<std::uint64_t> complete;
    for (const auto& [seed, v] : groups.front().second) {
      bool ok = true;
      for (const auto& g : groups) {
        const auto it = g.second.find(seed);
        ok &= it != g.second.end() && std::isfinite(it->second);
      }
      if (ok) complete.push_back(seed);
    }
    Eigen::MatrixXd table(static_cast<Eigen::Index>(complete.size()), static_cast<Eigen::Index>(groups.size()));
    for (std::size_t s = 0; s < complete.size(); ++s) {
      for (std::size_t g = 0; g < groups.size(); ++g) {
        table(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(g)) = groups[g].second.at(complete[s]);
      }
    }
    StatsRow f;
    f.kind = "friedman";
    f.a = "*";
    f.n = static_cast<int>(complete.size());
    if (complete.size() >= 2) {
      const auto fr = stats::friedman(table);
      f.statistic = fr.statistic;
      f.p_raw = fr.p;
      f.reject = fr.p <= q;
    } else {
      f.note = "fewer than 2 complete seeds";
    }
    out.push_back(f);

    StatsRow w;
    w.kind = "within_1pp";
    w.a = "*";
    w.n = static_cast<int>(complete.size());
    if (!complete.empty()) {
      w.statistic = stats::within_1pp_fraction(100.0 * table.transpose());
    } else {
      w.note = "no complete seeds";
    }
    out.push_back(w);
  }
  return out;
}

inline std::string encode_report_csv(const std::vector<StatsRow>& rows) {
  std::string out = "kind,a,b,n,statistic,p_raw,p_adj,d,reject,note\n";
  for (const auto& r : rows) {
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    out += r.kind + "," + r.a + "," + r.b + "," + std::to_string(r.n) + "," + format_value(r.statistic) + "," +
           format_value(r.p_raw) + "," + format_value(r.p_adj) + "," + format_value(r.d) + "," + (r.reject ? "1" : "0") +
           "," + note + "\n";
  }
  return out;
}

inline std::vector<StatsRow> decode_report_csv(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  std::vector<StatsRow> rows;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto cols = text::split(line, ',');
    if (!header) {
      if (text::trim(line) != "kind,a,b,n,statistic,p_raw,p_adj,d,reject,note") fail(errc::parse, "stats report: bad header");
      header = true;
      continue;
    }
    if (cols.size() != 10) fail(errc::parse, "stats report line " + std::to_string(lineno) + ": expected 10 columns");
    StatsRow r;
    r.kind = cols[0];
    r.a = cols[1];
    r.b = cols[2];
    r.n = static_cast<int>(text::parse_int(cols[3], "n"));
    r.statistic = parse_value(cols[4], "statistic");
    r.p_raw = parse_value(cols[5], "p_raw");
    r.p_adj = parse_value(cols[6], "p_adj");
    r.d = parse_value(cols[7], "d");
    if (cols[8] != "0" && cols[8] != "1") fail(errc::parse, "stats report line " + std::to_string(lineno) + ": reject must be 0 or 1");
    r.reject = cols[8] == "1";
    r.note = cols[9];
    rows.push_back(std::move(r));
  }
  if (!header) fail(errc::parse, "stats report: missing header");
  return rows;
}

/// Human-readable aligned table for stdout.
inline std::string format_report_table(const std::vector<StatsRow>& rows) {
  std::vector<std::vector<std::string>> cells{{"kind", "a", "b", "n", "W/chi2", "p_raw", "p_adj", "d", "reject", "note"}};
  const auto fmt = [](double v) {
    if (std::isnan(v)) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    cells.push_back({r.kind, r.a, r.b, std::to_string(r.n), fmt(r.statistic), fmt(r.p_raw), fmt(r.p_adj), fmt(r.d),
                     r.reject ? "yes" : "no", r.note});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += row[i];
      if (i + 1 < row.size()) line += std::string(width[i] - row[i].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace chanadapt::bench

#endif  // CHANADAPT_BENCH_HPP
