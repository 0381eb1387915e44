// adapt: montage inspection, adaptation matrices, signal transforms,
// synthetic data, benchmark runs and statistics.
//
// Exit codes: 0 ok, 1 runtime error, 2 usage error. Errors are one line on
// stderr: "adapt: error: <kind>: <message>".

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chanadapt/bench.hpp"
#include "chanadapt/geometry.hpp"
#include "chanadapt/harmonic.hpp"
#include "chanadapt/io.hpp"
#include "chanadapt/learned.hpp"
#include "chanadapt/oracle.hpp"
#include "chanadapt/pipeline.hpp"
#include "chanadapt/resample.hpp"
#include "chanadapt/riemannian.hpp"
#include "chanadapt/ssi.hpp"
#include "chanadapt/stats.hpp"
#include "chanadapt/text.hpp"

using namespace chanadapt;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool quiet = false;
  std::string format;  // empty: command default
  bool no_timestamp = false;
  std::vector<std::string> argv;
};

Globals g;

FileFormat output_format(FileFormat fallback) { return g.format.empty() ? fallback : file_format_from_string(g.format); }

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Sidecar "<out>.prov": the command line and one line per step applied.
void write_provenance(const std::string& out, const std::vector<std::string>& steps) {
  std::string body = "# chanadapt provenance v1\ncommand=" + text::join(g.argv, " ") + "\n";
  for (const auto& s : steps) body += "step=" + s + "\n";
  if (!g.no_timestamp) body += "timestamp=" + utc_now() + "\n";
  write_file(out + ".prov", body);
}

std::map<std::string, std::string> parse_cfg(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos || eq == 0) fail(errc::config, "--cfg expects key=value, got '" + it + "'");
    out[std::string(text::trim(std::string_view(it).substr(0, eq)))] = std::string(text::trim(std::string_view(it).substr(eq + 1)));
  }
  return out;
}

/// Pops known keys; anything left over is reported.
struct CfgReader {
  std::map<std::string, std::string> items;
  std::string method;

  std::optional<std::string> take(const std::string& key) {
    const auto it = items.find(key);
    if (it == items.end()) return std::nullopt;
    auto v = it->second;
    items.erase(it);
    return v;
  }
  void number(const std::string& key, double& dst) {
    if (auto v = take(key)) dst = text::parse_double(*v, key);
  }
  void integer(const std::string& key, int& dst) {
    if (auto v = take(key)) dst = static_cast<int>(text::parse_int(*v, key));
  }
  void finish() const {
    if (!items.empty()) fail(errc::config, "unknown --cfg key '" + items.begin()->first + "' for method " + method);
  }
};

Signal ordered_like(const Signal& x, const std::vector<std::string>& labels) {
  const auto order = match_channels(labels, x.labels);
  Signal out;
  out.sfreq = x.sfreq;
  out.labels = labels;
  out.data = x.data(order, Eigen::all);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_montage_list() {
  for (const auto& n : builtin_montage_names()) {
    std::cout << n << "," << builtin_montage(n).size() << "\n";
  }
  return 0;
}

int cmd_montage_show(const std::string& name) {
  write_montage(std::cout, resolve_montage(name));
  return 0;
}

struct MatrixArgs {
  std::string method, source, target, fit_signals, fit_targets, base = "ssi", subject, out, fit_on = "train";
  double train_fraction = 0.8;
  std::vector<std::string> cfg;
};

int cmd_matrix(const MatrixArgs& a) {
  if (a.method != "ssi" && a.method != "harmonic" && a.method != "conv1d" && a.method != "riemannian") {
    fail(errc::unknown_name, "unknown method '" + a.method + "'");
  }
  const Montage source = resolve_montage(a.source);
  CfgReader cfg{parse_cfg(a.cfg), a.method};
  const auto need_target = [&]() {
    if (a.target.empty()) fail(errc::config, "method " + a.method + " needs --target");
    return resolve_montage(a.target);
  };
  const auto spline_cfg = [&]() {
    SplineConfig s;
    cfg.integer("stiffness", s.stiffness);
    cfg.integer("n_terms", s.n_terms);
    cfg.number("lambda", s.reg_lambda);
    return s;
  };

  AdaptationMatrix m;
  std::vector<std::string> steps;
  if (a.method == "ssi") {
    const auto s = spline_cfg();
    cfg.finish();
    m = ssi_matrix(source, need_target(), s);
  } else if (a.method == "harmonic") {
    HarmonicConfig h;
    cfg.integer("l_max", h.l_max);
    if (auto v = cfg.take("mode")) h.mode = harmonic_mode_from_string(*v);
    cfg.number("ridge", h.ridge);
    cfg.integer("refine", h.refine);
    cfg.finish();
    m = harmonic_matrix(source, h);
  } else if (a.method == "conv1d") {
    const Montage target = need_target();
    double ridge = 0.0;
    bool bias = true;
    cfg.number("ridge", ridge);
    if (auto v = cfg.take("bias")) {
      if (*v != "on" && *v != "off") fail(errc::config, "bias must be on or off");
      bias = *v == "on";
    }
    cfg.finish();
    if (!a.fit_signals.empty()) {
      if (a.fit_targets.empty()) fail(errc::config, "conv1d with --fit-signals also needs --fit-targets");
      const auto xs = ordered_like(load_signal(a.fit_signals), source.labels());
      const auto xt = ordered_like(load_signal(a.fit_targets), target.labels());
      auto p = lsq_fit(xs.data, xt.data, ridge, bias);
      p.seed = g.seed;
      m = to_adaptation_matrix(p, source.labels(), target.labels());
      m.metadata["conv1d.init"] = "lsq_fit";
      m.metadata["conv1d.ridge"] = text::format_double(ridge);
      steps.push_back("lsq_fit " + a.fit_signals + " -> " + a.fit_targets);
    } else {
      m = to_adaptation_matrix(init_projection(static_cast<Eigen::Index>(source.size()), static_cast<Eigen::Index>(target.size()), bias, g.seed),
                               source.labels(), target.labels());
      m.metadata["conv1d.init"] = "uniform";
    }
  } else {
    if (a.fit_signals.empty()) fail(errc::config, "riemannian needs --fit-signals with an epoch set");
    RiemannianConfig r;
    if (auto v = cfg.take("shrinkage")) r.shrinkage = *v == "ledoit_wolf" ? Shrinkage::ledoit_wolf() : Shrinkage::fixed(text::parse_double(*v, "shrinkage"));
    cfg.number("mean_tol", r.mean_tol);
    cfg.integer("mean_max_iter", r.mean_max_iter);
    const auto s = spline_cfg();
    cfg.finish();
    AdaptationMatrix base;
    if (a.base == "ssi") {
      base = ssi_matrix(source, need_target(), s);
    } else if (a.base == "identity") {
      base = identity_matrix(source.labels());
    } else {
      fail(errc::config, "unknown base '" + a.base + "' (expected ssi or identity)");
    }
    const auto epochs = load_epochs(a.fit_signals);
    const auto subjects = epochs.subjects();
    std::string subject = a.subject;
    if (subject.empty()) {
      if (subjects.size() != 1) fail(errc::config, "epoch set has " + std::to_string(subjects.size()) + " subjects (" + text::join(subjects, ",") + "); pick one with --subject");
      subject = subjects.front();
    }
    auto mine = epochs.for_subject(subject);
    if (mine.size() == 0) fail(errc::domain, "no epochs for subject '" + subject + "'");
    if (a.fit_on == "train") {
      // leading epochs of the subject, in file order
      if (!(a.train_fraction > 0.0 && a.train_fraction <= 1.0)) fail(errc::config, "--train-fraction must lie in (0, 1]");
      const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(a.train_fraction * static_cast<double>(mine.size()))));
      mine.epochs.resize(keep);
      mine.subject_ids.resize(keep);
      if (mine.labeled()) mine.classes.resize(keep);
    }
    m = recenter_matrix(mine, base, r);
    m.metadata["riemannian.fit_on"] = a.fit_on;
    steps.push_back("recenter subject=" + subject + " epochs=" + std::to_string(mine.size()) + " fit_on=" + a.fit_on);
  }
  save_matrix(m, a.out, output_format(FileFormat::csv));
  steps.insert(steps.begin(), std::string("matrix method=") + a.method + " " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  write_provenance(a.out, steps);
  if (!g.quiet) std::cout << a.out << "," << m.rows() << "," << m.cols() << "\n";
  return 0;
}

FileFormat format_of(const std::string& bytes) { return bytes.substr(0, 4) == "EEGB" ? FileFormat::binary : FileFormat::csv; }

int cmd_apply(const std::string& matrix, const std::string& in, const std::string& out) {
  const auto m = load_matrix(matrix);
  const auto bytes = read_file(in);
  const auto x = format_of(bytes) == FileFormat::binary ? decode_eegb(bytes) : decode_signal_csv(bytes);
  ApplyInfo info;
  const auto y = apply(m, x, info);
  save_signal(y, out, output_format(format_of(bytes)));
  write_provenance(out, {"apply " + matrix + " method=" + to_string(m.method) + " hash=" + detail::hex64(matrix_hash(m)) +
                         (info.reordered ? " reordered" : "")});
  return 0;
}

struct Step {
  std::string kind, value;
};

int cmd_preprocess(const std::string& in, const std::string& out, const std::vector<Step>& ops) {
  const auto bytes = read_file(in);
  auto x = format_of(bytes) == FileFormat::binary ? decode_eegb(bytes) : decode_signal_csv(bytes);
  std::vector<std::string> steps;
  for (const auto& op : ops) {
    if (op.kind == "resample") {
      const double rate = text::parse_double(op.value, "resample rate");
      const auto ratio = rational_ratio(rate, x.sfreq);
      x = resample(x, rate);
      steps.push_back("resample " + op.value + " " + describe_resampler(ratio));
    } else if (op.kind == "normalize") {
      x = normalize(x, normalize_mode_from_string(op.value));
      steps.push_back("normalize " + op.value);
    } else {
      const auto m = load_matrix(op.value);
      x = apply(m, x);
      steps.push_back("apply " + op.value + " hash=" + detail::hex64(matrix_hash(m)));
    }
  }
  save_signal(x, out, output_format(format_of(bytes)));
  write_provenance(out, steps);
  return 0;
}

struct SynthArgs {
  std::string montage = "ten_ten_64", out, truth_montage, truth_out;
  Eigen::Index samples = 256;
  double noise = 0.0, sfreq = 256.0, epsilon = 0.5, effect = 1.0;
  int subjects = 1, epochs = 0;
  std::string mixing = "none", label;
};

int cmd_synth(const SynthArgs& a) {
  SynthSpec spec;
  spec.montage = resolve_montage(a.montage);
  spec.n_samples = a.samples;
  spec.noise_sigma = a.noise;
  spec.sfreq = a.sfreq;
  spec.seed = g.seed;
  spec.subject_mixing = subject_mixing_from_string(a.mixing);
  spec.mixing_epsilon = a.epsilon;
  spec.label_effect = a.effect;
  if (!a.label.empty()) spec.label_coefficient = bench::parse_coefficient(a.label);
  std::vector<std::string> steps{"synth montage=" + spec.montage.name() + " seed=" + std::to_string(g.seed)};
  if (a.epochs > 0) {
    spec.n_subjects = a.subjects;
    spec.n_epochs_per_subject = a.epochs;
    const auto set = synth_epochs_with_truth(spec);
    write_file(a.out, encode_epochs(set.set));
    if (!a.truth_out.empty()) fail(errc::config, "--truth-out is only supported for single signals");
    steps.push_back("epochs=" + std::to_string(set.set.size()) + " subjects=" + std::to_string(a.subjects));
  } else {
    if (a.subjects != 1) fail(errc::config, "--subjects needs --epochs");
    if (!a.label.empty()) fail(errc::config, "--label-coefficient needs --epochs");
    const auto field = synth_field_with_truth(spec);
    const auto& x = field.signal;
    save_signal(x, a.out, output_format(FileFormat::binary));
    if (!a.truth_out.empty()) {
      if (a.truth_montage.empty()) fail(errc::config, "--truth-out needs --truth-montage");
      const Montage tm = resolve_montage(a.truth_montage);
      Signal t;
      t.sfreq = spec.sfreq;
      t.labels = tm.labels();
      t.data = render_field(tm, field.coefficients);
      save_signal(t, a.truth_out, output_format(FileFormat::binary));
      write_provenance(a.truth_out, {"truth montage=" + tm.name() + " seed=" + std::to_string(g.seed)});
    }
  }
  write_provenance(a.out, steps);
  return 0;
}

int cmd_bench_run(const std::string& config, const std::string& out_override, const std::string& report_override) {
  auto cfg = bench::load_config(config);
  if (g.seed_given) cfg.seed = g.seed;
  if (!out_override.empty()) cfg.output = out_override;
  if (!report_override.empty()) cfg.report = report_override;
  const auto res = bench::run_bench(cfg);
  write_file(cfg.output, bench::encode_bench_csv(res.rows));
  const auto report = bench::compute_report(res.rows, cfg.q);
  write_file(cfg.report_path(), bench::encode_report_csv(report));
  for (const auto& [method, msg] : res.failures) std::cerr << "adapt: warning: method " << method << " failed: " << msg << "\n";
  if (!g.quiet) {
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& r : res.rows) {
      if (std::isfinite(r.balanced_accuracy)) {
        acc[r.method].first += r.balanced_accuracy;
        ++acc[r.method].second;
      }
    }
    for (const auto& m : cfg.method_labels()) {
      const auto it = acc.find(m);
      std::cout << m << "," << (it == acc.end() ? std::string("nan") : text::format_double(it->second.first / it->second.second)) << "\n";
    }
  }
  return 0;
}

int cmd_stats(const std::string& csv, double q, const std::string& csv_out) {
  const auto rows = bench::decode_bench_csv(read_file(csv));
  const auto report = bench::compute_report(rows, q);
  if (!csv_out.empty()) write_file(csv_out, bench::encode_report_csv(report));
  if (!g.quiet) std::cout << bench::format_report_table(report);
  return 0;
}

int usage_error(const std::string& msg) {
  std::cerr << "adapt: error: usage: " << msg << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  g.argv.assign(argv, argv + argc);
  if (!g.argv.empty()) g.argv.front() = "adapt";

  CLI::App app{"EEG channel adaptation toolkit"};
  app.name("adapt");
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "seed for every random draw")->each([](const std::string&) { g.seed_given = true; });
  app.add_flag("--quiet", g.quiet, "no informational output on stdout");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "binary"}));
  app.add_flag("--no-timestamp", g.no_timestamp, "leave the timestamp out of .prov sidecars");

  auto* montage = app.add_subcommand("montage", "inspect montages");
  montage->require_subcommand(1);
  montage->add_subcommand("list", "builtin montages and channel counts");
  auto* show = montage->add_subcommand("show", "print a montage as CSV");
  std::string show_name;
  show->add_option("name", show_name, "builtin name or CSV path")->required();

  MatrixArgs ma;
  auto* matrix = app.add_subcommand("matrix", "compute an adaptation matrix");
  matrix->add_option("--method", ma.method, "conv1d, ssi, harmonic or riemannian")->required();
  matrix->add_option("--source", ma.source, "source montage (name or CSV)")->required();
  matrix->add_option("--target", ma.target, "target montage (name or CSV)");
  matrix->add_option("--cfg", ma.cfg, "method option key=value")->allow_extra_args(false);
  matrix->add_option("--fit-signals", ma.fit_signals, "conv1d: source signal; riemannian: epoch set");
  matrix->add_option("--fit-targets", ma.fit_targets, "conv1d: target signal paired with --fit-signals");
  matrix->add_option("--base", ma.base, "riemannian base map: ssi or identity");
  matrix->add_option("--subject", ma.subject, "riemannian: subject to fit");
  matrix->add_option("--fit-on", ma.fit_on, "riemannian: leading train fraction or all epochs")->check(CLI::IsMember({"train", "all"}));
  matrix->add_option("--train-fraction", ma.train_fraction, "riemannian: share of each subject's epochs used with --fit-on train");
  matrix->add_option("-o,--output", ma.out, "matrix file")->required();

  std::string ap_matrix, ap_in, ap_out;
  auto* applyc = app.add_subcommand("apply", "apply a matrix to a signal");
  applyc->add_option("--matrix", ap_matrix)->required();
  applyc->add_option("-i,--input", ap_in)->required();
  applyc->add_option("-o,--output", ap_out)->required();

  std::string pp_in, pp_out;
  std::vector<std::string> pp_resample, pp_normalize, pp_matrix;
  auto* pre = app.add_subcommand("preprocess", "resample, normalize or apply, in flag order");
  pre->add_option("-i,--input", pp_in)->required();
  pre->add_option("-o,--output", pp_out)->required();
  auto* o_res = pre->add_option("--resample", pp_resample, "new sampling rate in Hz")->allow_extra_args(false);
  auto* o_norm = pre->add_option("--normalize", pp_normalize, "minmax, zscore or uv100")->allow_extra_args(false);
  auto* o_mat = pre->add_option("--matrix", pp_matrix, "adaptation matrix file")->allow_extra_args(false);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "synthetic spherical-head signals");
  synth->add_option("--montage", sa.montage);
  synth->add_option("--samples", sa.samples);
  synth->add_option("--noise", sa.noise);
  synth->add_option("--sfreq", sa.sfreq);
  synth->add_option("--subjects", sa.subjects);
  synth->add_option("--epochs", sa.epochs, "epochs per subject; writes an epoch set");
  synth->add_option("--mixing", sa.mixing)->check(CLI::IsMember({"none", "random_spd"}));
  synth->add_option("--mixing-epsilon", sa.epsilon);
  synth->add_option("--label-coefficient", sa.label, "e.g. Y1:1");
  synth->add_option("--label-effect", sa.effect);
  synth->add_option("--truth-montage", sa.truth_montage, "render the same field on this montage");
  synth->add_option("--truth-out", sa.truth_out);
  synth->add_option("-o,--output", sa.out)->required();

  auto* benchc = app.add_subcommand("bench", "benchmark harness");
  benchc->require_subcommand(1);
  auto* run = benchc->add_subcommand("run", "run a benchmark config");
  std::string b_cfg, b_out, b_report;
  run->add_option("config", b_cfg)->required();
  run->add_option("-o,--output", b_out, "per-seed CSV (overrides config)");
  run->add_option("--report", b_report, "stats report CSV (overrides config)");

  auto* statsc = app.add_subcommand("stats", "significance table for a benchmark CSV");
  std::string s_csv, s_out;
  double s_q = 0.05;
  statsc->add_option("results", s_csv, "per-seed results CSV")->required();
  statsc->add_option("--q", s_q, "FDR level");
  statsc->add_option("--csv", s_out, "also write the report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  }

  try {
    if (*montage) {
      if (montage->got_subcommand("list")) return cmd_montage_list();
      return cmd_montage_show(show_name);
    }
    if (*matrix) return cmd_matrix(ma);
    if (*applyc) return cmd_apply(ap_matrix, ap_in, ap_out);
    if (*pre) {
      std::vector<Step> ops;
      std::map<const CLI::Option*, std::size_t> used;
      for (const auto* opt : pre->parse_order()) {
        const std::size_t k = used[opt]++;
        if (opt == o_res) ops.push_back({"resample", pp_resample.at(k)});
        if (opt == o_norm) ops.push_back({"normalize", pp_normalize.at(k)});
        if (opt == o_mat) ops.push_back({"matrix", pp_matrix.at(k)});
      }
      if (ops.empty()) return usage_error("preprocess needs at least one of --resample, --normalize, --matrix");
      return cmd_preprocess(pp_in, pp_out, ops);
    }
    if (*synth) return cmd_synth(sa);
    if (*benchc) return cmd_bench_run(b_cfg, b_out, b_report);
    if (*statsc) return cmd_stats(s_csv, s_q, s_out);
  } catch (const error& e) {
    std::cerr << "adapt: error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == errc::unknown_name || e.code() == errc::config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "adapt: error: internal: " << e.what() << "\n";
    return 1;
  }
  return usage_error("no command");
}
