#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "se3lab/error.hpp"
#include "se3lab/igso3.hpp"
#include "se3lab/otmetrics.hpp"

using namespace se3lab;

namespace {

std::vector<Vec3> Cloud(std::size_t n, Rng& rng) {
  std::vector<Vec3> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back(rng.Normal3());
  return xs;
}

std::vector<Rotation> Rotations(std::size_t n, Rng& rng) {
  std::vector<Rotation> rs;
  for (std::size_t i = 0; i < n; ++i) rs.push_back(igso3::SampleUniform(rng));
  return rs;
}

}  // namespace

TEST(W1, AgreesWithBruteForce) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 8;
    if (trial % 2 == 0) {
      const auto a = Cloud(n, rng), b = Cloud(n, rng);
      EXPECT_NEAR(W1Exact(a, b), W1BruteForce(a, b), 1e-12) << trial;
    } else {
      const auto a = Rotations(n, rng), b = Rotations(n, rng);
      EXPECT_NEAR(W1Exact(a, b), W1BruteForce(a, b), 1e-12) << trial;
    }
  }
}

TEST(W1, AssignmentIsAPermutation) {
  Rng rng(2);
  const auto a = Cloud(40, rng), b = Cloud(40, rng);
  std::vector<int> match;
  const double total = SolveAssignment(CostMatrix(a, b), &match);
  std::vector<bool> used(40, false);
  double sum = 0.0;
  for (int i = 0; i < 40; ++i) {
    ASSERT_FALSE(used[match[i]]);
    used[match[i]] = true;
    sum += (a[i] - b[match[i]]).norm();
  }
  EXPECT_NEAR(sum, total, 1e-12);
}

TEST(W1, MetricProperties) {
  Rng rng(3);
  const auto a = Cloud(30, rng), b = Cloud(30, rng), c = Cloud(30, rng);
  EXPECT_EQ(W1Exact(a, a), 0.0);
  EXPECT_NEAR(W1Exact(a, b), W1Exact(b, a), 1e-12);
  EXPECT_LE(W1Exact(a, c), W1Exact(a, b) + W1Exact(b, c) + 1e-12);

  const auto ra = Rotations(20, rng), rb = Rotations(20, rng), rc = Rotations(20, rng);
  EXPECT_NEAR(W1Exact(ra, rb), W1Exact(rb, ra), 1e-12);
  EXPECT_LE(W1Exact(ra, rc), W1Exact(ra, rb) + W1Exact(rb, rc) + 1e-12);
}

TEST(W1, Invariances) {
  Rng rng(4);
  const auto a = Cloud(25, rng), b = Cloud(25, rng);
  const Rotation q = ExpMap(Vec3(0.3, -1.1, 0.7));
  const Vec3 shift(5, -2, 1);
  std::vector<Vec3> ta, tb;
  for (const auto& x : a) ta.push_back(q.matrix() * x + shift);
  for (const auto& x : b) tb.push_back(q.matrix() * x + shift);
  EXPECT_NEAR(W1Exact(ta, tb), W1Exact(a, b), 1e-10);

  // Bi-invariance of the geodesic cost.
  const auto ra = Rotations(20, rng), rb = Rotations(20, rng);
  std::vector<Rotation> la, lb;
  for (const auto& r : ra) la.push_back(q * r * q.inverse());
  for (const auto& r : rb) lb.push_back(q * r * q.inverse());
  EXPECT_NEAR(W1Exact(la, lb), W1Exact(ra, rb), 1e-10);
}

TEST(W1, KnownValues) {
  const std::vector<Vec3> a = {Vec3::Zero()}, b = {Vec3(3, 4, 0)};
  EXPECT_DOUBLE_EQ(W1Exact(a, b), 5.0);
  const std::vector<Rotation> r = {Rotation()}, s = {ExpMap(Vec3(0, 0, 1.0))};
  EXPECT_NEAR(W1Exact(r, s), std::sqrt(2.0), 1e-12);
  // Crossing pairs: the optimum swaps them.
  const std::vector<Vec3> p = {Vec3(0, 0, 0), Vec3(10, 0, 0)}, q = {Vec3(10, 1, 0), Vec3(0, 1, 0)};
  EXPECT_DOUBLE_EQ(W1Exact(p, q), 1.0);
}

TEST(W1, Errors) {
  const std::vector<Vec3> one = {Vec3::Zero()}, two = {Vec3::Zero(), Vec3::Ones()}, none;
  auto kind = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIO;
  };
  EXPECT_EQ(kind([&] { W1Exact(one, two); }), ErrorKind::kSizeMismatch);
  EXPECT_EQ(kind([&] { W1Exact(none, none); }), ErrorKind::kSizeMismatch);
  const std::vector<Vec3> big(9, Vec3::Zero());
  EXPECT_EQ(kind([&] { W1BruteForce(big, big); }), ErrorKind::kTooLarge);
  const std::vector<Vec3> inf = {Vec3(std::numeric_limits<double>::infinity(), 0, 0)};
  EXPECT_EQ(kind([&] { W1Exact(inf, one); }), ErrorKind::kCostOverflow);
}
