#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "se3lab/error.hpp"
#include "se3lab/targets.hpp"

using namespace se3lab;

namespace {

TargetSpec Spec(Space space, const std::string& name, std::size_t n, std::uint64_t seed = 1) {
  TargetSpec s;
  s.space = space;
  s.name = name;
  s.n = n;
  s.seed = seed;
  return s;
}

std::string Temp(const std::string& name) { return ::testing::TempDir() + "/" + name; }

}  // namespace

TEST(Targets, Registry) {
  EXPECT_EQ(TargetNames(Space::kR3), (std::vector<std::string>{"gmm8", "lorenz", "sine3d"}));
  EXPECT_EQ(TargetNames(Space::kSO3), (std::vector<std::string>{"clusters", "spiral"}));
  EXPECT_EQ(TargetParams(Space::kR3, "gmm8").at("sigma"), 0.08);
  try {
    TargetParams(Space::kR3, "nosuch");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnknownTarget);
    EXPECT_NE(std::string(e.what()).find("gmm8, lorenz, sine3d"), std::string::npos);
  }
  TargetSpec s = Spec(Space::kR3, "gmm8", 10);
  s.params["sigmaa"] = 1.0;
  EXPECT_THROW(GenerateR3(s), Error);
}

TEST(Targets, R3AreCenteredAndDeterministic) {
  for (const auto& name : TargetNames(Space::kR3)) {
    const auto a = GenerateR3(Spec(Space::kR3, name, 2000));
    const auto b = GenerateR3(Spec(Space::kR3, name, 2000));
    ASSERT_EQ(a.size(), 2000u);
    Vec3 mean = Vec3::Zero();
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i], b[i]);
      mean += a[i] / 2000.0;
    }
    EXPECT_LT(mean.norm(), 1e-12) << name;
    EXPECT_NE(GenerateR3(Spec(Space::kR3, name, 5, 2))[0], a[0]);
  }
}

TEST(Targets, Gmm8ModeCountsAreMultinomial) {
  const auto xs = GenerateR3(Spec(Space::kR3, "gmm8", 8000, 3));
  std::array<int, 8> counts{};
  for (const auto& x : xs) counts[(x[0] > 0) + 2 * (x[1] > 0) + 4 * (x[2] > 0)]++;
  const double band = 3 * std::sqrt(1000.0 * 7.0 / 8.0);
  for (int c : counts) EXPECT_NEAR(c, 1000, band);
}

TEST(Targets, LorenzHasUnitRmsRadius) {
  const auto xs = GenerateR3(Spec(Space::kR3, "lorenz", 3000));
  double ms = 0.0;
  for (const auto& x : xs) ms += x.squaredNorm() / xs.size();
  EXPECT_NEAR(std::sqrt(ms), 1.0, 1e-9);
  EXPECT_GT(std::sqrt(ms), 0.5);
}

TEST(Targets, Sine3dFollowsCurve) {
  TargetSpec s = Spec(Space::kR3, "sine3d", 500);
  s.params["jitter"] = 0.0;
  const auto xs = GenerateR3(s);
  double rms = 0.0;
  for (const auto& x : xs) rms += x.squaredNorm() / xs.size();
  EXPECT_GT(std::sqrt(rms), 0.5);
  EXPECT_LT(std::sqrt(rms), 1.5);
}

TEST(Targets, So3StayInsideEulerBox) {
  const double half = std::numbers::pi / 2;
  for (const auto& name : TargetNames(Space::kSO3)) {
    const auto rs = GenerateSo3(Spec(Space::kSO3, name, 1000));
    ASSERT_EQ(rs.size(), 1000u);
    for (const auto& r : rs) {
      ASSERT_TRUE(Rotation::IsValid(r.matrix()));
      const auto e = ToEuler(r);
      EXPECT_LE(std::abs(e.alpha), half + 1e-9) << name;
      EXPECT_LE(std::abs(e.beta), half + 1e-9) << name;
      EXPECT_LE(std::abs(e.gamma), half + 1e-9) << name;
    }
    const auto again = GenerateSo3(Spec(Space::kSO3, name, 1000));
    EXPECT_EQ(again[17].matrix(), rs[17].matrix());
  }
}

TEST(Targets, CsvRoundTrip) {
  const auto xs = GenerateR3(Spec(Space::kR3, "lorenz", 50));
  WriteR3Csv(Temp("r3.csv"), xs);
  const auto xb = ReadR3Csv(Temp("r3.csv"));
  ASSERT_EQ(xb.size(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(xb[i], xs[i]);

  const auto rs = GenerateSo3(Spec(Space::kSO3, "spiral", 50));
  WriteSo3Csv(Temp("so3.csv"), rs);
  const auto rb = ReadSo3Csv(Temp("so3.csv"));
  ASSERT_EQ(rb.size(), rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_LT((rb[i].matrix() - rs[i].matrix()).norm(), 1e-12);
}

TEST(Targets, So3CsvRejectsNonRotations) {
  std::ofstream(Temp("bad.csv")) << "r11,r12,r13,r21,r22,r23,r31,r32,r33,euler_a,euler_b,euler_g\n"
                                 << "1,0,0,0,1,0,0,0,1.1,0,0,0\n";
  EXPECT_THROW(ReadSo3Csv(Temp("bad.csv")), Error);
  std::ofstream(Temp("near.csv")) << "r11,r12,r13,r21,r22,r23,r31,r32,r33,euler_a,euler_b,euler_g\n"
                                  << "1,0,0,0,1,0,0,0,1.0000001,0,0,0\n";
  EXPECT_TRUE(Rotation::IsValid(ReadSo3Csv(Temp("near.csv"))[0].matrix()));
}
