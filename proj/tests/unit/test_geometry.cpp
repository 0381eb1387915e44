#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "chanadapt/geometry.hpp"
#include "chanadapt/io.hpp"

using namespace chanadapt;

namespace {

Montage parse(const std::string& text) {
  std::istringstream in(text);
  return parse_montage(in, "t");
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

TEST(Labels, CaseNormalization) {
  EXPECT_EQ(normalize_label("CZ"), "Cz");
  EXPECT_EQ(normalize_label("cz"), "Cz");
  EXPECT_EQ(normalize_label("FP1"), "Fp1");
  EXPECT_EQ(normalize_label("fpz"), "Fpz");
  EXPECT_EQ(normalize_label("t7"), "T7");
  EXPECT_EQ(normalize_label("AFZ"), "AFz");
  EXPECT_EQ(normalize_label(" poz "), "POz");
}

TEST(MontageCsv, ParsesAndNormalizesPositions) {
  const auto m = parse("label,x,y,z\nCz,0,0,1\nFpz,0,0.95,0.31\n");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].label, "Cz");
  EXPECT_EQ(m[1].label, "Fpz");
  for (const auto& e : m.electrodes()) EXPECT_NEAR(e.position.norm(), 1.0, 1e-12);
  EXPECT_NEAR(m[1].position.y(), 0.95 / std::hypot(0.95, 0.31), 1e-15);
}

TEST(MontageCsv, CommentsAndNonUnitRowsAccepted) {
  const auto m = parse("# head\nlabel,x,y,z\n# c\nC3,-2,0,2\n\nC4,3,0,3\n");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_NEAR(m[0].position.x(), -std::sqrt(0.5), 1e-15);
}

TEST(MontageCsv, Errors) {
  EXPECT_EQ(code_of([] { parse("label,x,y,z\nCz,0,0,0\n"); }), errc::domain);
  EXPECT_EQ(code_of([] { parse("label,x,y,z\nCz,0,0,1\ncz,1,0,0\n"); }), errc::domain);
  EXPECT_EQ(code_of([] { parse("label,x,y,z\nCz,0,zero,1\n"); }), errc::parse);
  EXPECT_EQ(code_of([] { parse("label,x,y,z\nCz,0,1\n"); }), errc::parse);
  EXPECT_EQ(code_of([] { parse(""); }), errc::parse);
  EXPECT_EQ(code_of([] { parse("label,x,y,z\n"); }), errc::parse);
}

TEST(Builtin, ChannelCounts) {
  EXPECT_EQ(builtin_montage("ten_twenty_19").size(), 19u);
  EXPECT_EQ(builtin_montage("ten_ten_64").size(), 64u);
  EXPECT_EQ(builtin_montage("bci2a_22").size(), 22u);
  EXPECT_EQ(builtin_montage("tuev_21").size(), 21u);
  EXPECT_EQ(builtin_montage("faced_26").size(), 26u);
  EXPECT_EQ(code_of([] { builtin_montage("nope"); }), errc::unknown_name);
}

TEST(Builtin, UnitNormAndUniqueLabels) {
  for (const auto& name : builtin_montage_names()) {
    const auto m = builtin_montage(name);
    for (const auto& e : m.electrodes()) EXPECT_NEAR(e.position.norm(), 1.0, 1e-9) << name << " " << e.label;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = i + 1; j < m.size(); ++j) EXPECT_LT(cosine_angle(m[i], m[j]), 1.0 - 1e-6) << name;
    }
  }
}

TEST(Builtin, FrameConvention) {
  // +x right, +y nasion, +z vertex
  const auto m = builtin_montage("ten_twenty_19");
  const auto at = [&](const char* l) { return m[*m.index_of(l)].position; };
  EXPECT_NEAR(at("Cz").z(), 1.0, 1e-12);
  EXPECT_GT(at("Fp1").y(), 0.9);
  EXPECT_GT(at("T8").x(), 0.99);
  EXPECT_LT(at("T7").x(), -0.99);
  EXPECT_LT(at("O1").y(), -0.9);
  EXPECT_GT(at("C4").x(), 0.0);
  EXPECT_LT(at("C3").x(), 0.0);
}

TEST(Builtin, SymmetricPairsMirror) {
  const auto m = builtin_montage("ten_ten_64");
  const std::vector<std::pair<std::string, std::string>> pairs{{"C3", "C4"}, {"F7", "F8"}, {"P3", "P4"}, {"FC5", "FC6"}, {"PO7", "PO8"}};
  for (const auto& [l, r] : pairs) {
    const auto a = m[*m.index_of(l)].position;
    const auto b = m[*m.index_of(r)].position;
    EXPECT_NEAR(a.x(), -b.x(), 1e-12) << l;
    EXPECT_NEAR(a.y(), b.y(), 1e-12) << l;
    EXPECT_NEAR(a.z(), b.z(), 1e-12) << l;
  }
}

TEST(Builtin, ShippedFilesMatch) {
  for (const auto& name : {"ten_twenty_19", "ten_ten_64", "bci2a_22", "tuev_21", "faced_26"}) {
    const auto path = std::string(CHANADAPT_DATA_DIR) + "/montages/" + name + ".csv";
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    const auto file = load_montage(path);
    const auto ref = builtin_montage(name);
    ASSERT_EQ(file.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_EQ(file[i].label, ref[i].label);
      EXPECT_NEAR((file[i].position - ref[i].position).norm(), 0.0, 1e-15);
    }
  }
  EXPECT_EQ(load_montage(std::string(CHANADAPT_DATA_DIR) + "/montages/ten_twenty_19.csv").size(), 19u);
}

TEST(Builtin, WriteParseRoundTrip) {
  const auto ref = builtin_montage("bci2a_22");
  std::ostringstream out;
  write_montage(out, ref);
  const auto back = parse(out.str());
  ASSERT_EQ(back.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(back[i].position, ref[i].position);
}

TEST(CosineAngle, Cases) {
  const auto cz = Electrode::make("Cz", {0, 0, 1});
  const auto eq = Electrode::make("X", {1, 0, 0});
  const auto anti = Electrode::make("Y", {0, 0, -1});
  EXPECT_EQ(cosine_angle(cz, cz), 1.0);
  EXPECT_EQ(cosine_angle(cz, anti), -1.0);
  EXPECT_EQ(cosine_angle(cz, eq), 0.0);
  // rounding just above 1 is clamped
  const Electrode big{"B", Vec3(0, 0, 1.0 + 1e-15)};
  EXPECT_LE(cosine_angle(big, big), 1.0);
}

TEST(CosineAngle, SymmetricExactly) {
  const auto m = builtin_montage("ten_ten_64");
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) EXPECT_EQ(cosine_angle(m[i], m[j]), cosine_angle(m[j], m[i]));
  }
}

TEST(Spherical, AxisCases) {
  const auto pole = spherical_coords(Vec3(0, 0, 1));
  EXPECT_EQ(pole.theta, 0.0);
  EXPECT_EQ(pole.phi, 0.0);
  const auto x = spherical_coords(Vec3(1, 0, 0));
  EXPECT_NEAR(x.theta, std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(x.phi, 0.0, 1e-15);
  const auto y = spherical_coords(Vec3(0, 1, 0));
  EXPECT_NEAR(y.theta, std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(y.phi, std::numbers::pi / 2, 1e-15);
  const auto south = spherical_coords(Vec3(0, 0, -1));
  EXPECT_NEAR(south.theta, std::numbers::pi, 1e-15);
  EXPECT_EQ(south.phi, 0.0);
  const auto back = spherical_coords(Vec3(-1, -0.0, 0));
  EXPECT_NEAR(back.phi, std::numbers::pi, 1e-15);
}

TEST(Spherical, InverseRoundTripProperty) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int i = 0; i < 2000; ++i) {
    Vec3 p(n(rng), n(rng), n(rng));
    p.normalize();
    if (std::hypot(p.x(), p.y()) < 1e-6) continue;
    const auto s = spherical_coords(p);
    EXPECT_GE(s.theta, 0.0);
    EXPECT_LE(s.theta, std::numbers::pi);
    EXPECT_GT(s.phi, -std::numbers::pi);
    EXPECT_LE(s.phi, std::numbers::pi);
    const Vec3 q(std::sin(s.theta) * std::cos(s.phi), std::sin(s.theta) * std::sin(s.phi), std::cos(s.theta));
    EXPECT_LT((p - q).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Montage, SubsetAndIndex) {
  const auto m = builtin_montage("ten_ten_64");
  const auto s = m.subset({"cz", "C3", "C4"}, "three");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].label, "Cz");
  EXPECT_EQ(s[0].position, m[*m.index_of("Cz")].position);
  EXPECT_FALSE(m.index_of("XX").has_value());
  EXPECT_EQ(code_of([&] { m.subset({"XX"}, "bad"); }), errc::label_mismatch);
  EXPECT_EQ(code_of([] { Montage("empty", {}); }), errc::domain);
}

TEST(Montage, ResolveNameOrPath) {
  EXPECT_EQ(resolve_montage("ten_twenty_19").size(), 19u);
  const auto path = std::filesystem::temp_directory_path() / "chanadapt_geom_resolve.csv";
  {
    std::ofstream f(path);
    f << "label,x,y,z\nCz,0,0,1\nOz,0,-1,0\nT8,1,0,0\n";
  }
  EXPECT_EQ(resolve_montage(path.string()).size(), 3u);
  std::filesystem::remove(path);
}
