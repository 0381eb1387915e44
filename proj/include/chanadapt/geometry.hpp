#ifndef CHANADAPT_GEOMETRY_HPP
#define CHANADAPT_GEOMETRY_HPP

// Electrode positions live on the unit sphere in a head frame with +x toward
// the right preauricular point, +y toward the nasion and +z toward the vertex.
// Polar angle theta is measured from +z, azimuth phi from +x toward +y.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chanadapt/error.hpp"
#include "chanadapt/text.hpp"

namespace chanadapt {

using Vec3 = Eigen::Vector3d;

/// Canonical spelling of an electrode label: letters upper-cased, except the
/// 'p' of "Fp" and a trailing 'z' after a letter ("FP1" -> "Fp1", "cz" -> "Cz",
/// "fcz" -> "FCz").
inline std::string normalize_label(std::string_view raw) {
  std::string s(text::trim(raw));
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s.size() >= 2 && s[0] == 'F' && s[1] == 'P') s[1] = 'p';
  if (s.size() >= 2 && s.back() == 'Z' && std::isalpha(static_cast<unsigned char>(s[s.size() - 2]))) {
    s.back() = 'z';
  }
  return s;
}

struct Electrode {
  std::string label;
  Vec3 position;

  /// Normalizes the label and projects the position onto the unit sphere.
  static Electrode make(std::string_view label, const Vec3& position) {
    auto canon = normalize_label(label);
    if (canon.empty()) fail(errc::parse, "electrode label is empty");
    const double norm = position.norm();
    if (!std::isfinite(norm) || norm == 0.0) {
      fail(errc::domain, "electrode '" + canon + "' has a zero-length or non-finite position");
    }
    return Electrode{std::move(canon), position / norm};
  }
};

class Montage {
 public:
  Montage(std::string name, std::vector<Electrode> electrodes)
      : name_(std::move(name)), electrodes_(std::move(electrodes)) {
    if (electrodes_.empty()) fail(errc::domain, "montage '" + name_ + "' has no electrodes");
    for (std::size_t i = 0; i < electrodes_.size(); ++i) {
      auto [it, inserted] = index_.emplace(electrodes_[i].label, i);
      if (!inserted) {
        fail(errc::domain, "montage '" + name_ + "' has duplicate label '" + electrodes_[i].label + "'");
      }
    }
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return electrodes_.size(); }
  const std::vector<Electrode>& electrodes() const noexcept { return electrodes_; }
  const Electrode& operator[](std::size_t i) const { return electrodes_.at(i); }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(electrodes_.size());
    for (const auto& e : electrodes_) out.push_back(e.label);
    return out;
  }

  std::optional<std::size_t> index_of(std::string_view label) const {
    const auto it = index_.find(normalize_label(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Sub-montage in the order given; unknown labels are an error.
  Montage subset(const std::vector<std::string>& labels, std::string name) const {
    std::vector<Electrode> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
      const auto idx = index_of(l);
      if (!idx) fail(errc::label_mismatch, "montage '" + name_ + "' has no electrode '" + l + "'");
      out.push_back(electrodes_[*idx]);
    }
    return Montage(std::move(name), std::move(out));
  }

 private:
  std::string name_;
  std::vector<Electrode> electrodes_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Dot product of the two unit positions, clamped to [-1, 1].
inline double cosine_angle(const Electrode& a, const Electrode& b) {
  return std::clamp(a.position.dot(b.position), -1.0, 1.0);
}

struct SphericalCoords {
  double theta;  ///< polar angle in [0, pi]
  double phi;    ///< azimuth in (-pi, pi]; 0 at the poles
};

inline SphericalCoords spherical_coords(const Vec3& p) {
  const double theta = std::acos(std::clamp(p.z(), -1.0, 1.0));
  if (std::sin(theta) < 1e-12) return {theta, 0.0};
  double phi = std::atan2(p.y(), p.x());
  if (phi == -std::numbers::pi) phi = std::numbers::pi;
  return {theta, phi};
}

inline SphericalCoords spherical_coords(const Electrode& e) { return spherical_coords(e.position); }

inline Vec3 from_spherical(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

// ---------------------------------------------------------------------------
// Standard positions

namespace detail {

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

// Places nine electrodes evenly along the circle through a left end, a midline
// point and a right end. This is how the 10-10 system lays out its coronal rows
// on an idealized spherical head.
inline void place_row(std::map<std::string, Vec3>& out, const std::array<const char*, 9>& labels,
                      double left_phi, double mid_theta, double mid_phi, double right_phi) {
  const Vec3 left = from_spherical(deg(90), deg(left_phi));
  const Vec3 mid = from_spherical(deg(mid_theta), deg(mid_phi));
  const Vec3 right = from_spherical(deg(90), deg(right_phi));
  const Vec3 n = (mid - left).cross(right - left).normalized();
  const Vec3 center = n.dot(left) * n;
  const Vec3 u = left - center;
  const double radius = u.norm();
  Vec3 w = n.cross(u).normalized() * radius;
  if ((mid - center).dot(w) < 0) w = -w;
  const Vec3 m = mid - center;
  const double half = std::atan2(m.dot(w) / radius, m.dot(u) / radius);
  for (int k = 0; k < 9; ++k) {
    const double t = half * k / 4.0;
    out[labels[k]] = (center + std::cos(t) * u + std::sin(t) * w).normalized();
  }
}

inline const std::map<std::string, Vec3>& standard_positions() {
  static const std::map<std::string, Vec3> table = [] {
    std::map<std::string, Vec3> t;
    place_row(t, {"AF7", "AF5", "AF3", "AF1", "AFz", "AF2", "AF4", "AF6", "AF8"}, 126, 67.5, 90, 54);
    place_row(t, {"F7", "F5", "F3", "F1", "Fz", "F2", "F4", "F6", "F8"}, 144, 45, 90, 36);
    place_row(t, {"FT7", "FC5", "FC3", "FC1", "FCz", "FC2", "FC4", "FC6", "FT8"}, 162, 22.5, 90, 18);
    place_row(t, {"T7", "C5", "C3", "C1", "Cz", "C2", "C4", "C6", "T8"}, 180, 0, 0, 0);
    place_row(t, {"TP7", "CP5", "CP3", "CP1", "CPz", "CP2", "CP4", "CP6", "TP8"}, -162, 22.5, -90, -18);
    place_row(t, {"P7", "P5", "P3", "P1", "Pz", "P2", "P4", "P6", "P8"}, -144, 45, -90, -36);
    place_row(t, {"PO7", "PO5", "PO3", "PO1", "POz", "PO2", "PO4", "PO6", "PO8"}, -126, 67.5, -90, -54);
    // The C row is a great circle through the vertex; pin Cz exactly.
    t["Cz"] = Vec3(0, 0, 1);
    const std::pair<const char*, double> equator[] = {
        {"Fp1", 108}, {"Fpz", 90}, {"Fp2", 72}, {"O1", -108}, {"Oz", -90}, {"O2", -72}};
    for (const auto& [label, phi] : equator) t[label] = from_spherical(deg(90), deg(phi));
    const std::tuple<const char*, double, double> lower[] = {
        {"Nz", 112.5, 90}, {"Iz", 112.5, -90}, {"T9", 112.5, 180}, {"T10", 112.5, 0},
        {"A1", 120, 180},  {"A2", 120, 0}};
    for (const auto& [label, theta, phi] : lower) t[label] = from_spherical(deg(theta), deg(phi));
    return t;
  }();
  return table;
}

inline const std::map<std::string, std::vector<std::string>>& standard_layouts() {
  static const std::map<std::string, std::vector<std::string>> layouts = {
      {"ten_twenty_19",
       {"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz", "C4", "T8", "P7", "P3", "Pz", "P4",
        "P8", "O1", "O2"}},
      // PhysioNet EEG Motor Movement/Imagery channel order.
      {"ten_ten_64",
       {"FC5", "FC3", "FC1", "FCz", "FC2", "FC4", "FC6", "C5",  "C3",  "C1",  "Cz",  "C2",  "C4",
        "C6",  "CP5", "CP3", "CP1", "CPz", "CP2", "CP4", "CP6", "Fp1", "Fpz", "Fp2", "AF7", "AF3",
        "AFz", "AF4", "AF8", "F7",  "F5",  "F3",  "F1",  "Fz",  "F2",  "F4",  "F6",  "F8",  "FT7",
        "FT8", "T7",  "T8",  "T9",  "T10", "TP7", "TP8", "P7",  "P5",  "P3",  "P1",  "Pz",  "P2",
        "P4",  "P6",  "P8",  "PO7", "PO3", "POz", "PO4", "PO8", "O1",  "Oz",  "O2",  "Iz"}},
      // BCI Competition IV 2a channel order.
      {"bci2a_22",
       {"Fz", "FC3", "FC1", "FCz", "FC2", "FC4", "C5", "C3", "C1", "Cz", "C2", "C4", "C6", "CP3", "CP1",
        "CPz", "CP2", "CP4", "P1", "Pz", "P2", "POz"}},
      // 10-20 referential set with both earlobes.
      {"tuev_21",
       {"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "A1", "T7", "C3", "Cz", "C4", "T8", "A2", "P7", "P3",
        "Pz", "P4", "P8", "O1", "O2"}},
      // Best-effort 26-channel emotion-cap layout.
      {"faced_26",
       {"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FC2", "FC6", "T7", "C3", "Cz", "C4",
        "T8", "CP5", "CP1", "CP2", "CP6", "P7", "P3", "Pz", "P4", "P8", "Oz"}},
  };
  return layouts;
}

}  // namespace detail

inline std::vector<std::string> builtin_montage_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : detail::standard_layouts()) out.push_back(name);
  return out;
}

inline Montage builtin_montage(std::string_view name) {
  const auto& layouts = detail::standard_layouts();
  const auto it = layouts.find(std::string(name));
  if (it == layouts.end()) fail(errc::unknown_name, "unknown montage '" + std::string(name) + "'");
  const auto& table = detail::standard_positions();
  std::vector<Electrode> electrodes;
  electrodes.reserve(it->second.size());
  for (const auto& label : it->second) electrodes.push_back(Electrode::make(label, table.at(label)));
  return Montage(it->first, std::move(electrodes));
}

// ---------------------------------------------------------------------------
// Montage CSV: "label,x,y,z" header, one electrode per row, '#' comments.

inline Montage parse_montage(std::istream& in, std::string name) {
  std::vector<Electrode> electrodes;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      // a comment ahead of the header names the montage
      if (!saw_header && electrodes.empty() && !text::trim(t.substr(1)).empty()) name = std::string(text::trim(t.substr(1)));
      continue;
    }
    auto cols = text::split(t, ',');
    for (auto& c : cols) c = std::string(text::trim(c));
    if (!saw_header) {
      if (cols.size() != 4 || text::to_lower(cols[0]) != "label" || text::to_lower(cols[1]) != "x" ||
          text::to_lower(cols[2]) != "y" || text::to_lower(cols[3]) != "z") {
        fail(errc::parse, "montage line " + std::to_string(lineno) + ": expected header 'label,x,y,z'");
      }
      saw_header = true;
      continue;
    }
    if (cols.size() != 4) {
      fail(errc::parse, "montage line " + std::to_string(lineno) + ": expected 4 columns, got " +
                            std::to_string(cols.size()));
    }
    try {
      const Vec3 p(text::parse_double(cols[1], "x"), text::parse_double(cols[2], "y"),
                   text::parse_double(cols[3], "z"));
      electrodes.push_back(Electrode::make(cols[0], p));
    } catch (const error& e) {
      throw error(e.code(), "montage line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (electrodes.empty()) fail(errc::parse, "montage file has no electrodes");
  return Montage(std::move(name), std::move(electrodes));
}

inline Montage load_montage(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open montage file '" + path + "'");
  auto stem = path.substr(path.find_last_of("/\\") + 1);
  if (const auto dot = stem.rfind('.'); dot != std::string::npos) stem.resize(dot);
  return parse_montage(in, stem);
}

inline void write_montage(std::ostream& out, const Montage& m) {
  out << "# " << m.name() << "\nlabel,x,y,z\n";
  for (const auto& e : m.electrodes()) {
    out << e.label << ',' << text::format_double(e.position.x()) << ','
        << text::format_double(e.position.y()) << ',' << text::format_double(e.position.z()) << '\n';
  }
}

/// A builtin name or a path to a montage CSV.
inline Montage resolve_montage(const std::string& name_or_path) {
  const auto& layouts = detail::standard_layouts();
  if (layouts.count(name_or_path)) return builtin_montage(name_or_path);
  if (name_or_path.find_first_of("/\\.") == std::string::npos) {
    fail(errc::unknown_name, "unknown montage '" + name_or_path + "'");
  }
  return load_montage(name_or_path);
}

}  // namespace chanadapt

#endif  // CHANADAPT_GEOMETRY_HPP
