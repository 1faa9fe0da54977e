#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "se3lab/error.hpp"
#include "se3lab/igso3.hpp"
#include "se3lab/paradigms.hpp"
#include "paradigms_internal.hpp"

namespace se3lab::so3 {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kScoreLinearBelow = 1e-3;
constexpr double kCutLocusMargin = 1e-6;
constexpr int kMaxResample = 64;
}  // namespace

Rotation DdpmPerturb(const Rotation& r0, int t, const DiscreteSchedule& sched, Rng& rng) {
  const double abar = sched.alpha_bar(t);
  return igso3::Sample(ScaleRotation(std::sqrt(abar), r0), 1.0 - abar, rng);
}

Rotation DdpmPosteriorMean(const Rotation& rt, const Rotation& r0_hat, int t, const DiscreteSchedule& sched) {
  const double abar_t = sched.alpha_bar(t);
  const double abar_prev = sched.alpha_bar(t - 1);
  const double c0 = std::sqrt(abar_prev) * sched.beta(t) / (1.0 - abar_t);
  const double ct = std::sqrt(sched.alpha(t)) * (1.0 - abar_prev) / (1.0 - abar_t);
  return ScaleRotation(c0, r0_hat) * ScaleRotation(ct, rt);
}

Rotation DdpmReverseStep(const Rotation& rt, const Rotation& r0_hat, int t, const DiscreteSchedule& sched,
                         Rng& rng) {
  const Rotation mean = DdpmPosteriorMean(rt, r0_hat, t, sched);
  if (t <= 1) return mean;
  return igso3::Sample(mean, sched.posterior_variance(t), rng);
}

double DdpmLoss(const Rotation& r0_hat, const Rotation& r0) {
  return (r0_hat.matrix() * r0.matrix().transpose() - Mat3::Identity()).squaredNorm();
}

Vec3 TrueScore(const Rotation& rt, const Rotation& r0, double t) {
  if (t < kScoreTimeMin) {
    throw Error(ErrorKind::kTimeTooSmall, "score undefined below t = 1e-3, got " + std::to_string(t));
  }
  const Vec3 phi = LogMap(r0.inverse() * rt);
  const double w = phi.norm();
  const double eps2 = ScoreEps2(t);
  if (w >= kPi - 1e-4) {
    throw Error(ErrorKind::kAngleOutOfRange, "r_t is within 1e-4 of the cut locus of r0");
  }
  if (w < kScoreLinearBelow) {
    return phi * (igso3::ScoreFactor(kScoreLinearBelow, eps2) / kScoreLinearBelow);
  }
  return phi / w * igso3::ScoreFactor(w, eps2);
}

Rotation ScoreReverseStep(const Rotation& rt, double t, double dt, const Vec3& score, const Vec3& z,
                          const VpCoefficients& vp) {
  const double h2 = vp.beta(t);
  return rt * ExpMap(0.5 * (kScoreDiffusion2 + h2) * dt * score + std::sqrt(h2 * dt) * z);
}

FlowPoint FlowTarget(const Rotation& r0, const Rotation& r1, double t) {
  if (t < kSo3FlowTimeMin) {
    throw Error(ErrorKind::kAngleOutOfRange, "flow target needs t >= 1e-2, got " + std::to_string(t));
  }
  if (RotationAngle(r0.inverse() * r1) > kPi - kCutLocusMargin) {
    throw Error(ErrorKind::kAngleOutOfRange, "endpoints are on each other's cut locus");
  }
  FlowPoint p;
  p.rt = Geodesic(r0, r1, t);
  p.velocity = LogMap(p.rt.inverse() * r0) / t;
  return p;
}

Rotation FlowStep(const Rotation& rt, double dt, const Vec3& velocity) { return rt * ExpMap(dt * velocity); }

double QuantizeScoreTime(double u) {
  const int k = std::clamp(static_cast<int>(u * kScoreTimeGrid), 0, kScoreTimeGrid - 1);
  return kScoreTimeMin + (1.0 - kScoreTimeMin) * k / (kScoreTimeGrid - 1);
}

namespace {

std::vector<Rotation> HaarPrior(std::vector<Rng>& rngs) {
  std::vector<Rotation> r;
  r.reserve(rngs.size());
  for (auto& rng : rngs) r.push_back(igso3::SampleUniform(rng));
  return r;
}

Rotation ColumnToRotation(const Matrix& m, Eigen::Index col) {
  const double* d = m.col(col).data();
  Mat3 a;
  a << d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7], d[8];
  return Rotation::Nearest(a);
}

}  // namespace

std::vector<Rotation> SampleDdpm(const Predictor& r0_hat, const DiscreteSchedule& sched, std::size_t n,
                                 std::uint64_t seed) {
  auto rngs = detail::ChainStreams(n, seed);
  std::vector<Rotation> r = HaarPrior(rngs);
  for (int t = sched.steps(); t >= 1; --t) {
    const Matrix pred = r0_hat(PackRotations(r), static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = DdpmReverseStep(r[i], ColumnToRotation(pred, i), t, sched, rngs[i]);
    }
  }
  return r;
}

std::vector<Rotation> SampleScore(const Predictor& score, const VpCoefficients& vp, std::size_t n, std::uint64_t seed,
                                  int steps) {
  auto rngs = detail::ChainStreams(n, seed);
  std::vector<Rotation> r = HaarPrior(rngs);
  const double dt = (1.0 - kScoreTimeMin) / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = 1.0 - k * dt;
    const Matrix s = score(PackRotations(r), t);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = ScoreReverseStep(r[i], t, dt, s.col(i), rngs[i].Normal3(), vp);
    }
  }
  return r;
}

std::vector<Rotation> SampleFlow(const Predictor& velocity, std::size_t n, std::uint64_t seed, int steps) {
  auto rngs = detail::ChainStreams(n, seed);
  std::vector<Rotation> r = HaarPrior(rngs);
  const double dt = (1.0 - kSo3FlowTimeMin) / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = 1.0 - k * dt;
    const Matrix u = velocity(PackRotations(r), t);
    for (std::size_t i = 0; i < n; ++i) r[i] = FlowStep(r[i], dt, u.col(i));
  }
  return r;
}

namespace {

class So3Ddpm final : public So3Engine {
 public:
  explicit So3Ddpm(const EngineOptions& o)
      : So3Engine(detail::WithDims(o.net, 9, 9), o), sched_(CosineSchedule(o.ddpm_steps)) {}

  Space space() const override { return Space::kSO3; }
  Paradigm paradigm() const override { return Paradigm::kDdpm; }

  RegressionBatch MakeBatch(std::span<const Rotation> data, Rng& rng) const override {
    const auto n = data.size();
    RegressionBatch b{Matrix(9, n), std::vector<double>(n), PackRotations(data)};
    for (std::size_t i = 0; i < n; ++i) {
      const int t = 1 + static_cast<int>(rng.Index(sched_.steps()));
      DdpmPerturb(data[i], t, sched_, rng).ToRowMajor({b.states.col(i).data(), 9});
      b.times[i] = static_cast<double>(t) / sched_.steps();
    }
    return b;
  }

  // r0_hat = Nearest(r_t + out). The projection is treated as identity in
  // the backward pass, so dL/dout = dL/dr0_hat = 2 (r0_hat - r0).
  double Loss(const RegressionBatch& b, const Matrix& out, Matrix* dout) const override {
    const auto n = out.cols();
    if (out.rows() != 9 || n != b.targets.cols()) {
      throw Error(ErrorKind::kDimensionMismatch, "SO(3) DDPM expects 9 x B outputs");
    }
    const Matrix raw = b.states + out;
    if (dout) dout->resize(9, n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Rotation r0_hat = ColumnToRotation(raw, i);
      const Rotation r0 = ColumnToRotation(b.targets, i);
      total += DdpmLoss(r0_hat, r0);
      if (dout) {
        const Mat3 g = 2.0 * (r0_hat.matrix() - r0.matrix()) / static_cast<double>(n);
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) (*dout)(3 * r + c, i) = g(r, c);
      }
    }
    return total / static_cast<double>(n);
  }

  Matrix PerfectOutput(const RegressionBatch& b) const override { return b.targets - b.states; }

  std::vector<Rotation> Generate(std::size_t n, std::uint64_t seed) const override {
    const double steps = sched_.steps();
    auto predict = [&](const Matrix& x, double t) {
      const std::vector<double> times(x.cols(), t / steps);
      return Matrix(x + sampling_net().Forward(x, times));
    };
    return SampleDdpm(predict, sched_, n, seed);
  }

 private:
  DiscreteSchedule sched_;
};

class So3Score final : public So3Engine {
 public:
  explicit So3Score(const EngineOptions& o)
      : So3Engine(detail::WithDims(o.net, 9, 3), o), vp_(o.beta_min, o.beta_max), steps_(o.sample_steps) {}

  Space space() const override { return Space::kSO3; }
  Paradigm paradigm() const override { return Paradigm::kScore; }

  RegressionBatch MakeBatch(std::span<const Rotation> data, Rng& rng) const override {
    const auto n = data.size();
    RegressionBatch b{Matrix(9, n), std::vector<double>(n), Matrix(3, n)};
    for (std::size_t i = 0; i < n; ++i) {
      for (int attempt = 0;; ++attempt) {
        const double t = QuantizeScoreTime(rng.Uniform());
        const double eps2 = ScoreEps2(t);
        const Rotation rt = igso3::Sample(data[i], eps2, rng);
        try {
          b.targets.col(i) = std::sqrt(eps2) * TrueScore(rt, data[i], t);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kAngleOutOfRange || attempt >= kMaxResample) throw;
          continue;
        }
        rt.ToRowMajor({b.states.col(i).data(), 9});
        b.times[i] = t;
        break;
      }
    }
    return b;
  }

  double Loss(const RegressionBatch& b, const Matrix& out, Matrix* dout) const override {
    return detail::MseLoss(out, b.targets, 1.0, dout);
  }
  Matrix PerfectOutput(const RegressionBatch& b) const override { return b.targets; }

  std::vector<Rotation> Generate(std::size_t n, std::uint64_t seed) const override {
    auto score = [&](const Matrix& x, double t) {
      const std::vector<double> times(x.cols(), t);
      return Matrix(sampling_net().Forward(x, times) / std::sqrt(ScoreEps2(t)));
    };
    return SampleScore(score, vp_, n, seed, steps_);
  }

 private:
  VpCoefficients vp_;
  int steps_;
};

class So3Flow final : public So3Engine {
 public:
  explicit So3Flow(const EngineOptions& o)
      : So3Engine(detail::WithDims(o.net, 9, 3), o), steps_(o.sample_steps) {}

  Space space() const override { return Space::kSO3; }
  Paradigm paradigm() const override { return Paradigm::kFlow; }

  RegressionBatch MakeBatch(std::span<const Rotation> data, Rng& rng) const override {
    const auto n = data.size();
    RegressionBatch b{Matrix(9, n), std::vector<double>(n), Matrix(3, n)};
    for (std::size_t i = 0; i < n; ++i) {
      for (int attempt = 0;; ++attempt) {
        const Rotation r1 = igso3::SampleUniform(rng);
        const double t = rng.Uniform(kSo3FlowTimeMin, 1.0);
        FlowPoint p;
        try {
          p = FlowTarget(data[i], r1, t);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kAngleOutOfRange || attempt >= kMaxResample) throw;
          continue;
        }
        p.rt.ToRowMajor({b.states.col(i).data(), 9});
        b.times[i] = t;
        b.targets.col(i) = p.velocity;
        break;
      }
    }
    return b;
  }

  double Loss(const RegressionBatch& b, const Matrix& out, Matrix* dout) const override {
    return detail::MseLoss(out, b.targets, 2.0, dout);
  }
  Matrix PerfectOutput(const RegressionBatch& b) const override { return b.targets; }

  std::vector<Rotation> Generate(std::size_t n, std::uint64_t seed) const override {
    auto velocity = [&](const Matrix& x, double t) {
      const std::vector<double> times(x.cols(), t);
      return sampling_net().Forward(x, times);
    };
    return SampleFlow(velocity, n, seed, steps_);
  }

 private:
  int steps_;
};

}  // namespace

}  // namespace se3lab::so3

namespace se3lab {

std::unique_ptr<So3Engine> MakeSo3Engine(Paradigm p, const EngineOptions& options) {
  switch (p) {
    case Paradigm::kDdpm: return std::make_unique<so3::So3Ddpm>(options);
    case Paradigm::kScore: return std::make_unique<so3::So3Score>(options);
    case Paradigm::kFlow: return std::make_unique<so3::So3Flow>(options);
  }
  throw Error(ErrorKind::kConfig, "unknown paradigm");
}

}  // namespace se3lab
