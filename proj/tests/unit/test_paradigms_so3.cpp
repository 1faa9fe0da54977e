#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "se3lab/error.hpp"
#include "se3lab/igso3.hpp"
#include "se3lab/paradigms.hpp"

using namespace se3lab;

namespace {

constexpr double kPi = std::numbers::pi;

double HaarCdf(double w) { return (w - std::sin(w)) / kPi; }

template <class Cdf>
double KsDistance(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return d;
}

// Angle law of IGSO3(., eps2): cumulative Simpson quadrature of the series
// density on a fine grid, linearly interpolated.
class IgsoCdf {
 public:
  explicit IgsoCdf(double eps2) : cdf_(kCells + 1, 0.0) {
    auto pdf = [&](double x) { return x <= 0 ? 0.0 : igso3::SeriesF(x, eps2) * (1 - std::cos(x)) / kPi; };
    const double h = kPi / kCells;
    for (int i = 0; i < kCells; ++i) {
      cdf_[i + 1] = cdf_[i] + h / 6 * (pdf(i * h) + 4 * pdf((i + 0.5) * h) + pdf((i + 1) * h));
    }
  }
  double operator()(double w) const {
    const double u = std::clamp(w / kPi * kCells, 0.0, static_cast<double>(kCells));
    const int i = std::min(static_cast<int>(u), kCells - 1);
    return cdf_[i] + (u - i) * (cdf_[i + 1] - cdf_[i]);
  }

 private:
  static constexpr int kCells = 20000;
  std::vector<double> cdf_;
};

double MeanDistance(const std::vector<Rotation>& rs, const Rotation& target) {
  double d = 0.0;
  for (const auto& r : rs) d += DistanceSO3(r, target);
  return d / static_cast<double>(rs.size());
}

EngineOptions SmallOptions(std::uint64_t seed = 1) {
  EngineOptions o;
  o.net.hidden = {32, 32};
  o.net.time_dim = 8;
  o.seed = seed;
  return o;
}

const Rotation kTarget = ExpMap(Vec3(0.4, -0.9, 0.3));

}  // namespace

TEST(So3Ddpm, PerturbConcentratesNearScaledMean) {
  const auto s = CosineSchedule();
  Rng rng(1);
  const Rotation mean = ScaleRotation(std::sqrt(s.alpha_bar(10)), kTarget);
  double d = 0.0;
  for (int i = 0; i < 2000; ++i) d += DistanceSO3(so3::DdpmPerturb(kTarget, 10, s, rng), mean) / 2000;
  // Small eps2: the tangent offset is Gaussian with per-axis variance 2 eps2,
  // so the mean angle is sqrt(2 eps2) sqrt(8 / pi) and d = sqrt(2) angle.
  const double eps2 = 1 - s.alpha_bar(10);
  EXPECT_NEAR(d, std::sqrt(2.0) * std::sqrt(2 * eps2) * std::sqrt(8 / kPi), 0.05 * d);
}

TEST(So3Ddpm, TerminalPerturbFollowsSeriesLaw) {
  const auto s = CosineSchedule();
  const int t = s.steps();
  const double eps2 = 1 - s.alpha_bar(t);
  Rng rng(2);
  std::vector<double> angles;
  const Rotation mean = ScaleRotation(std::sqrt(s.alpha_bar(t)), kTarget);
  for (int i = 0; i < 20000; ++i) angles.push_back(RotationAngle(mean.inverse() * so3::DdpmPerturb(kTarget, t, s, rng)));
  EXPECT_LT(KsDistance(angles, IgsoCdf(eps2)), 0.02);
}

TEST(So3Ddpm, TerminalPerturbIsNotHaarUnderTheSeries) {
  // With eps2 close to 1 the l = 1 term still carries weight 3 exp(-2), so the
  // forward endpoint sits a fixed KS distance away from the Haar law. The
  // empirical distance must match the quadrature value of that gap.
  const auto s = CosineSchedule();
  const int t = s.steps();
  const double eps2 = 1 - s.alpha_bar(t);
  const IgsoCdf cdf(eps2);
  double gap = 0.0;
  for (int g = 1; g <= 400; ++g) {
    const double w = kPi * g / 400;
    gap = std::max(gap, std::abs(cdf(w) - HaarCdf(w)));
  }
  Rng rng(3);
  std::vector<double> angles;
  for (int i = 0; i < 20000; ++i) angles.push_back(RotationAngle(so3::DdpmPerturb(Rotation(), t, s, rng)));
  const double ks = KsDistance(angles, HaarCdf);
  EXPECT_NEAR(ks, gap, 0.02);
  EXPECT_GT(gap, 0.1);
}

TEST(So3Ddpm, PosteriorMeanIdentityAndFormula) {
  const auto s = CosineSchedule();
  for (int t : {2, 100, 999}) {
    EXPECT_LT((so3::DdpmPosteriorMean(Rotation(), Rotation(), t, s).matrix() - Mat3::Identity()).norm(), 1e-12);
  }
  // Coaxial rotations commute, so the composition reduces to a scalar
  // combination of angles with the DDPM posterior coefficients.
  const Vec3 axis = Vec3(1, 2, -1).normalized();
  const double a = 0.7, b = -0.4;
  for (int t : {2, 50, 500}) {
    const double abar = s.alpha_bar(t), abar_prev = s.alpha_bar(t - 1);
    const double c0 = std::sqrt(abar_prev) * s.beta(t) / (1 - abar);
    const double ct = std::sqrt(s.alpha(t)) * (1 - abar_prev) / (1 - abar);
    const Rotation got = so3::DdpmPosteriorMean(ExpMap(b * axis), ExpMap(a * axis), t, s);
    EXPECT_LT((LogMap(got) - (c0 * a + ct * b) * axis).norm(), 1e-10) << t;
  }
  // At t = 1 the mean is exactly the prediction.
  const Rotation r0 = ExpMap(Vec3(0.1, 0.2, 0.3));
  EXPECT_LT(DistanceSO3(so3::DdpmPosteriorMean(ExpMap(Vec3(1, 0, 0)), r0, 1, s), r0), 1e-12);
  Rng rng(4);
  EXPECT_LT(DistanceSO3(so3::DdpmReverseStep(ExpMap(Vec3(1, 0, 0)), r0, 1, s, rng), r0), 1e-12);
}

TEST(So3Ddpm, LossIsFrobeniusOfRelativeRotation) {
  EXPECT_LT(so3::DdpmLoss(kTarget, kTarget), 1e-30);
  // ||R - I||_F^2 = 4 (1 - cos w) for a rotation by w.
  const double w = 0.8;
  EXPECT_NEAR(so3::DdpmLoss(ExpMap(Vec3(0, 0, w)) * kTarget, kTarget), 4 * (1 - std::cos(w)), 1e-12);
}

TEST(So3Ddpm, OracleChainLandsOnPointMass) {
  const auto s = CosineSchedule(200);
  auto oracle = [&](const Matrix& x, double) {
    Matrix out(9, x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) kTarget.ToRowMajor({out.col(i).data(), 9});
    return out;
  };
  for (const auto& r : so3::SampleDdpm(oracle, s, 16, 5)) EXPECT_LT(DistanceSO3(r, kTarget), 1e-9);
}

TEST(So3Score, TrueScoreMatchesFiniteDifference) {
  for (double t : {0.01, 0.1, 0.5, 1.0}) {
    const double eps2 = so3::ScoreEps2(t);
    // Offsets at 0.5, 1.5 and 3 standard deviations of the tangent Gaussian;
    // much further out the truncated series is below its own resolution.
    const double sd = std::sqrt(2 * eps2);
    for (const Vec3& dir : {Vec3(0.3, -0.2, 0.5), Vec3(1.2, 0.8, -0.9), Vec3(-0.1, 0.4, 0.05)}) {
      const Vec3 phi = std::min(dir.norm() * sd * 1.5, 3.0) * dir.normalized();
      const Rotation rt = kTarget * ExpMap(phi);
      const Vec3 score = so3::TrueScore(rt, kTarget, t);
      auto logf = [&](const Vec3& e) { return std::log(igso3::SeriesF(RotationAngle(kTarget.inverse() * rt * ExpMap(e)), eps2)); };
      for (int d = 0; d < 3; ++d) {
        const double h = 1e-5;
        Vec3 e = Vec3::Zero();
        e[d] = h;
        const double fd = (logf(e) - logf(-e)) / (2 * h);
        EXPECT_NEAR(score[d], fd, 1e-3 * std::max(1.0, std::abs(fd))) << t << " " << d;
      }
    }
  }
}

TEST(So3Score, TrueScoreIsLeftInvariant) {
  const Rotation g = ExpMap(Vec3(-1.0, 0.3, 2.0));
  const Rotation rt = kTarget * ExpMap(Vec3(0.5, 0.1, -0.3));
  EXPECT_LT((so3::TrueScore(g * rt, g * kTarget, 0.3) - so3::TrueScore(rt, kTarget, 0.3)).norm(), 1e-9);
}

TEST(So3Score, TrueScoreDomainErrors) {
  EXPECT_THROW(so3::TrueScore(kTarget, kTarget, 5e-4), Error);
  try {
    so3::TrueScore(kTarget * ExpMap(Vec3(0, 0, kPi - 1e-6)), kTarget, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAngleOutOfRange);
  }
  // Points toward the mean.
  const Vec3 phi(0.3, 0.0, 0.0);
  EXPECT_LT(so3::TrueScore(kTarget * ExpMap(phi), kTarget, 0.2).dot(phi), 0.0);
}

TEST(So3Score, ReverseStepIsLeftEquivariant) {
  const Rotation g = ExpMap(Vec3(0.2, 0.7, -0.1));
  const Vec3 s(0.1, -0.2, 0.3), z(1.0, 0.5, -0.5);
  const VpCoefficients vp;
  const Rotation a = g * so3::ScoreReverseStep(kTarget, 0.4, 0.01, s, z, vp);
  const Rotation b = so3::ScoreReverseStep(g * kTarget, 0.4, 0.01, s, z, vp);
  EXPECT_LT(DistanceSO3(a, b), 1e-12);
  EXPECT_EQ(so3::ScoreReverseStep(kTarget, 0.4, 0.01, Vec3::Zero(), Vec3::Zero(), vp).matrix(), kTarget.matrix());
}

TEST(So3Score, AnalyticScoreChainConcentrates) {
  // Target IGSO3(mu, e0): its forward marginal at time t is IGSO3(mu, e0 + eps2(t)),
  // so the exact score uses the series at the summed concentration.
  const double e0 = 0.001;
  const VpCoefficients vp;
  auto score = [&](const Matrix& x, double t) {
    Matrix out(3, x.cols());
    const auto rs = UnpackRotations(x);
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const Vec3 phi = LogMap(kTarget.inverse() * rs[i]);
      const double w = phi.norm(), eps2 = e0 + so3::ScoreEps2(t);
      if (w < 1e-3) {
        out.col(i) = phi * (igso3::ScoreFactor(1e-3, eps2) / 1e-3);
      } else {
        // No drift at the cut locus, where the direction is undefined.
        out.col(i) = w < kPi - 1e-3 ? Vec3(phi / w * igso3::ScoreFactor(w, eps2)) : Vec3::Zero();
      }
    }
    return out;
  };
  const auto rs = so3::SampleScore(score, vp, 4096, 6);
  EXPECT_LT(MeanDistance(rs, kTarget), 0.3);
}

TEST(So3Score, QuantizedTimesStayOnGrid) {
  EXPECT_DOUBLE_EQ(so3::QuantizeScoreTime(0.0), kScoreTimeMin);
  EXPECT_DOUBLE_EQ(so3::QuantizeScoreTime(0.9999999), 1.0);
  EXPECT_DOUBLE_EQ(so3::QuantizeScoreTime(1.0), 1.0);
  for (double u : {0.1, 0.37, 0.8}) {
    const double t = so3::QuantizeScoreTime(u);
    const double k = (t - kScoreTimeMin) / (1 - kScoreTimeMin) * (so3::kScoreTimeGrid - 1);
    EXPECT_NEAR(k, std::round(k), 1e-9);
  }
}

TEST(So3Flow, TargetGeometry) {
  const Rotation r1 = ExpMap(Vec3(1.0, -0.5, 0.2));
  const auto end = so3::FlowTarget(kTarget, r1, 1.0);
  EXPECT_LT(DistanceSO3(end.rt, r1), 1e-12);
  for (double t : {0.05, 0.5, 1.0}) {
    const auto p = so3::FlowTarget(kTarget, r1, t);
    EXPECT_NEAR(p.velocity.norm(), RotationAngle(kTarget.inverse() * r1), 1e-10);
    // Following the velocity for time t lands on the data point.
    EXPECT_LT(DistanceSO3(so3::FlowStep(p.rt, t, p.velocity), kTarget), 1e-10);
  }
  EXPECT_THROW(so3::FlowTarget(kTarget, r1, 5e-3), Error);
  EXPECT_THROW(so3::FlowTarget(kTarget, kTarget * ExpMap(Vec3(0, kPi, 0)), 0.5), Error);
}

TEST(So3Flow, OracleFieldTransportsHaarToPointMass) {
  auto velocity = [&](const Matrix& x, double t) {
    Matrix out(3, x.cols());
    const auto rs = UnpackRotations(x);
    for (std::size_t i = 0; i < rs.size(); ++i) out.col(i) = LogMap(rs[i].inverse() * kTarget) / t;
    return out;
  };
  for (const auto& r : so3::SampleFlow(velocity, 200, 7)) EXPECT_LT(DistanceSO3(r, kTarget), 0.05);
}

TEST(So3Engines, LossFloorIsZero) {
  const std::vector<Rotation> data = {kTarget, ExpMap(Vec3(0.1, 0.2, 0.3)), ExpMap(Vec3(-2.0, 0.5, 0.0))};
  for (Paradigm p : {Paradigm::kDdpm, Paradigm::kScore, Paradigm::kFlow}) {
    const auto engine = MakeSo3Engine(p, SmallOptions());
    Rng rng(8);
    const auto batch = engine->MakeBatch(data, rng);
    EXPECT_LT(engine->Loss(batch, engine->PerfectOutput(batch), nullptr), 1e-12) << ParadigmName(p);
  }
}

TEST(So3Engines, LossDecreasesOnPointMass) {
  for (Paradigm p : {Paradigm::kDdpm, Paradigm::kScore, Paradigm::kFlow}) {
    EngineOptions o = SmallOptions(2);
    o.adam.learning_rate = 3e-3;
    const auto engine = MakeSo3Engine(p, o);
    const std::vector<Rotation> data(64, kTarget);
    Rng rng(10);
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 300; ++step) {
      const double loss = engine->TrainStep(data, rng);
      if (step < 30) first += loss / 30;
      if (step >= 270) last += loss / 30;
    }
    EXPECT_LT(last, first) << ParadigmName(p);
  }
}

TEST(So3Engines, GeneratedRotationsStayInGroup) {
  rotation_audit::SetEnabled(true);
  rotation_audit::Reset();
  for (Paradigm p : {Paradigm::kDdpm, Paradigm::kScore, Paradigm::kFlow}) {
    EngineOptions o = SmallOptions(3);
    o.ddpm_steps = 50;
    const auto engine = MakeSo3Engine(p, o);
    const auto a = engine->Generate(9, 12);
    const auto b = engine->Generate(9, 12);
    ASSERT_EQ(a.size(), 9u);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].matrix(), b[i].matrix());
      EXPECT_TRUE(Rotation::IsValid(a[i].matrix()));
    }
  }
  EXPECT_GT(rotation_audit::Checks(), 0u);
  EXPECT_EQ(rotation_audit::Violations(), 0u);
  rotation_audit::SetEnabled(false);
}

TEST(Packing, RowMajorRoundTrip) {
  const std::vector<Rotation> rs = {kTarget, Rotation()};
  const Matrix m = PackRotations(rs);
  ASSERT_EQ(m.rows(), 9);
  EXPECT_DOUBLE_EQ(m(1, 0), kTarget(0, 1));
  const auto back = UnpackRotations(m);
  EXPECT_EQ(back[0].matrix(), kTarget.matrix());
}

TEST(So3Ddpm, LossDependsOnlyOnRelativeRotation) {
  const Rotation hat = ExpMap(Vec3(0.3, 0.2, -0.6));
  const Rotation q = ExpMap(Vec3(-1.2, 0.4, 0.9));
  EXPECT_NEAR(so3::DdpmLoss(hat * q, kTarget * q), so3::DdpmLoss(hat, kTarget), 1e-12);
  EXPECT_NEAR(so3::DdpmLoss(q * hat, q * kTarget), so3::DdpmLoss(hat, kTarget), 1e-12);
}

TEST(So3Ddpm, LearnsSingleMode) {
  EngineOptions o = SmallOptions(5);
  o.net.hidden = {64, 64};
  o.adam.learning_rate = 2e-3;
  o.ema_decay = 0.99;
  const auto engine = MakeSo3Engine(Paradigm::kDdpm, o);
  const std::vector<Rotation> data(128, kTarget);
  Rng rng(11);
  for (int step = 0; step < 1500; ++step) engine->TrainStep(data, rng);
  EXPECT_LT(MeanDistance(engine->Generate(200, 13), kTarget), 0.2);
}
