#include <cmath>
#include <string>

#include "se3lab/error.hpp"
#include "se3lab/paradigms.hpp"
#include "paradigms_internal.hpp"

namespace se3lab {

std::string_view SpaceName(Space s) { return s == Space::kR3 ? "r3" : "so3"; }

std::string_view ParadigmName(Paradigm p) {
  switch (p) {
    case Paradigm::kDdpm: return "ddpm";
    case Paradigm::kScore: return "score";
    case Paradigm::kFlow: return "flow";
  }
  return "unknown";
}

Space ParseSpace(std::string_view name) {
  if (name == "r3") return Space::kR3;
  if (name == "so3") return Space::kSO3;
  throw Error(ErrorKind::kConfig, "unknown space '" + std::string(name) + "' (expected r3 or so3)");
}

Paradigm ParseParadigm(std::string_view name) {
  if (name == "ddpm") return Paradigm::kDdpm;
  if (name == "score") return Paradigm::kScore;
  if (name == "flow") return Paradigm::kFlow;
  throw Error(ErrorKind::kConfig,
              "unknown paradigm '" + std::string(name) + "' (expected ddpm, score or flow)");
}

Matrix PackPoints(std::span<const Vec3> xs) {
  Matrix m(3, xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) m.col(i) = xs[i];
  return m;
}

std::vector<Vec3> UnpackPoints(const Matrix& states) {
  std::vector<Vec3> out(states.cols());
  for (Eigen::Index i = 0; i < states.cols(); ++i) out[i] = states.col(i);
  return out;
}

Matrix PackRotations(std::span<const Rotation> rs) {
  Matrix m(9, rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) rs[i].ToRowMajor({m.col(i).data(), 9});
  return m;
}

std::vector<Rotation> UnpackRotations(const Matrix& states) {
  std::vector<Rotation> out;
  out.reserve(states.cols());
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    out.push_back(Rotation::FromRowMajor({states.col(i).data(), 9}));
  }
  return out;
}

namespace detail {

std::vector<Rng> ChainStreams(std::size_t n, std::uint64_t seed) {
  std::vector<Rng> rngs;
  rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rngs.emplace_back(DeriveSeed(seed, i));
  return rngs;
}

double MseLoss(const Matrix& out, const Matrix& target, double weight, Matrix* dout) {
  if (out.rows() != target.rows() || out.cols() != target.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "prediction and target shapes differ");
  }
  const double batch = static_cast<double>(out.cols());
  const Matrix diff = out - target;
  if (dout) *dout = (2.0 * weight / batch) * diff;
  return weight * diff.squaredNorm() / batch;
}

}  // namespace detail

template <class Point>
double Engine<Point>::TrainStep(std::span<const Point> data, Rng& rng) {
  const RegressionBatch batch = MakeBatch(data, rng);
  ForwardCache cache;
  const Matrix out = net_.Forward(batch.states, batch.times, &cache);
  Matrix dout;
  const double loss = Loss(batch, out, &dout);
  const Gradients grads = net_.Backward(cache, dout);
  AdamStep(net_, grads, adam_);
  if (ema_decay_ > 0.0) EmaUpdate(ema_, net_, ema_decay_);
  return loss;
}

template class Engine<Vec3>;
template class Engine<Rotation>;

namespace r3 {

Vec3 DdpmPerturb(const Vec3& x0, int t, const Vec3& z, const DiscreteSchedule& sched) {
  const double abar = sched.alpha_bar(t);
  return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * z;
}

Vec3 DdpmReverseStep(const Vec3& xt, int t, const Vec3& eps_hat, const Vec3& z, const DiscreteSchedule& sched) {
  const double beta = sched.beta(t);
  const Vec3 mean = (xt - beta / std::sqrt(1.0 - sched.alpha_bar(t)) * eps_hat) / std::sqrt(sched.alpha(t));
  if (t <= 1) return mean;
  return mean + std::sqrt(beta) * z;
}

Vec3 TrueScore(const Vec3& xt, const Vec3& x0, double t, const VpCoefficients& vp) {
  if (t < kScoreTimeMin) {
    throw Error(ErrorKind::kTimeTooSmall, "score undefined below t = 1e-3, got " + std::to_string(t));
  }
  const double s = vp.sigma(t);
  return -(xt - vp.alpha(t) * x0) / (s * s);
}

Vec3 ScoreReverseStep(const Vec3& xt, double t, double dt, const Vec3& score, const Vec3& z,
                      const VpCoefficients& vp) {
  const double beta = vp.beta(t);
  return xt + dt * (0.5 * beta * xt + beta * score) + std::sqrt(beta * dt) * z;
}

Vec3 FlowInterpolant(const Vec3& x0, const Vec3& x1, double t) { return (1.0 - t) * x0 + t * x1; }

Vec3 FlowVelocity(const Vec3& x0, const Vec3& x1) { return x1 - x0; }

Vec3 FlowStep(const Vec3& xt, double dt, const Vec3& velocity) { return xt + dt * velocity; }

std::vector<Vec3> SampleDdpm(const Predictor& eps, const DiscreteSchedule& sched, std::size_t n,
                             std::uint64_t seed) {
  auto rngs = detail::ChainStreams(n, seed);
  Matrix x(3, n);
  for (std::size_t i = 0; i < n; ++i) x.col(i) = rngs[i].Normal3();
  for (int t = sched.steps(); t >= 1; --t) {
    const Matrix e = eps(x, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 z = t > 1 ? rngs[i].Normal3() : Vec3::Zero();
      x.col(i) = DdpmReverseStep(x.col(i), t, e.col(i), z, sched);
    }
  }
  return UnpackPoints(x);
}

std::vector<Vec3> SampleScore(const Predictor& score, const VpCoefficients& vp, std::size_t n,
                              std::uint64_t seed, int steps) {
  auto rngs = detail::ChainStreams(n, seed);
  Matrix x(3, n);
  for (std::size_t i = 0; i < n; ++i) x.col(i) = rngs[i].Normal3();
  const double dt = (1.0 - kScoreTimeMin) / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = 1.0 - k * dt;
    const Matrix s = score(x, t);
    for (std::size_t i = 0; i < n; ++i) {
      x.col(i) = ScoreReverseStep(x.col(i), t, dt, s.col(i), rngs[i].Normal3(), vp);
    }
  }
  return UnpackPoints(x);
}

std::vector<Vec3> SampleFlow(const Predictor& velocity, std::size_t n, std::uint64_t seed, int steps) {
  auto rngs = detail::ChainStreams(n, seed);
  Matrix x(3, n);
  for (std::size_t i = 0; i < n; ++i) x.col(i) = rngs[i].Normal3();
  const double dt = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const Matrix u = velocity(x, k * dt);
    x += dt * u;
  }
  return UnpackPoints(x);
}

}  // namespace r3

namespace {

class R3Ddpm final : public R3Engine {
 public:
  explicit R3Ddpm(const EngineOptions& o)
      : R3Engine(detail::WithDims(o.net, 3, 3), o), sched_(CosineSchedule(o.ddpm_steps)) {}

  Space space() const override { return Space::kR3; }
  Paradigm paradigm() const override { return Paradigm::kDdpm; }

  RegressionBatch MakeBatch(std::span<const Vec3> data, Rng& rng) const override {
    const auto n = data.size();
    RegressionBatch b{Matrix(3, n), std::vector<double>(n), Matrix(3, n)};
    for (std::size_t i = 0; i < n; ++i) {
      const int t = 1 + static_cast<int>(rng.Index(sched_.steps()));
      const Vec3 z = rng.Normal3();
      b.states.col(i) = r3::DdpmPerturb(data[i], t, z, sched_);
      b.times[i] = static_cast<double>(t) / sched_.steps();
      b.targets.col(i) = z - Skip(t) * b.states.col(i);
    }
    return b;
  }

  double Loss(const RegressionBatch& b, const Matrix& out, Matrix* dout) const override {
    return detail::MseLoss(out, b.targets, 1.0, dout);
  }
  Matrix PerfectOutput(const RegressionBatch& b) const override { return b.targets; }

  std::vector<Vec3> Generate(std::size_t n, std::uint64_t seed) const override {
    const double steps = sched_.steps();
    auto eps = [&](const Matrix& x, double t) {
      const std::vector<double> times(x.cols(), t / steps);
      return Matrix(sampling_net().Forward(x, times) + Skip(static_cast<int>(t)) * x);
    };
    return r3::SampleDdpm(eps, sched_, n, seed);
  }

 private:
  // eps_hat = out + sqrt(1 - abar_t) x_t: the zero network is the exact
  // noise predictor for N(0, I) data, so an untrained model keeps the prior.
  double Skip(int t) const { return std::sqrt(1.0 - sched_.alpha_bar(t)); }

  DiscreteSchedule sched_;
};

class R3Score final : public R3Engine {
 public:
  explicit R3Score(const EngineOptions& o)
      : R3Engine(detail::WithDims(o.net, 3, 3), o),
        vp_(o.beta_min, o.beta_max),
        steps_(o.sample_steps) {}

  Space space() const override { return Space::kR3; }
  Paradigm paradigm() const override { return Paradigm::kScore; }

  RegressionBatch MakeBatch(std::span<const Vec3> data, Rng& rng) const override {
    const auto n = data.size();
    RegressionBatch b{Matrix(3, n), std::vector<double>(n), Matrix(3, n)};
    for (std::size_t i = 0; i < n; ++i) {
      const double t = rng.Uniform(kScoreTimeMin, 1.0);
      const Vec3 z = rng.Normal3();
      b.states.col(i) = vp_.alpha(t) * data[i] + vp_.sigma(t) * z;
      b.times[i] = t;
      b.targets.col(i) = vp_.sigma(t) * b.states.col(i) - z;
    }
    return b;
  }

  double Loss(const RegressionBatch& b, const Matrix& out, Matrix* dout) const override {
    return detail::MseLoss(out, b.targets, 1.0, dout);
  }
  Matrix PerfectOutput(const RegressionBatch& b) const override { return b.targets; }

  std::vector<Vec3> Generate(std::size_t n, std::uint64_t seed) const override {
    auto score = [&](const Matrix& x, double t) {
      const std::vector<double> times(x.cols(), t);
      return Matrix(sampling_net().Forward(x, times) / vp_.sigma(t) - x);
    };
    return r3::SampleScore(score, vp_, n, seed, steps_);
  }

 private:
  VpCoefficients vp_;
  int steps_;
};

class R3Flow final : public R3Engine {
 public:
  explicit R3Flow(const EngineOptions& o)
      : R3Engine(detail::WithDims(o.net, 3, 3), o), steps_(o.sample_steps) {}

  Space space() const override { return Space::kR3; }
  Paradigm paradigm() const override { return Paradigm::kFlow; }

  RegressionBatch MakeBatch(std::span<const Vec3> data, Rng& rng) const override {
    const auto n = data.size();
    RegressionBatch b{Matrix(3, n), std::vector<double>(n), Matrix(3, n)};
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 x0 = rng.Normal3();
      const double t = rng.Uniform();
      b.states.col(i) = r3::FlowInterpolant(x0, data[i], t);
      b.times[i] = t;
      b.targets.col(i) = r3::FlowVelocity(x0, data[i]);
    }
    return b;
  }

  double Loss(const RegressionBatch& b, const Matrix& out, Matrix* dout) const override {
    return detail::MseLoss(out, b.targets, 1.0, dout);
  }
  Matrix PerfectOutput(const RegressionBatch& b) const override { return b.targets; }

  std::vector<Vec3> Generate(std::size_t n, std::uint64_t seed) const override {
    auto velocity = [&](const Matrix& x, double t) {
      const std::vector<double> times(x.cols(), t);
      return sampling_net().Forward(x, times);
    };
    return r3::SampleFlow(velocity, n, seed, steps_);
  }

 private:
  int steps_;
};

}  // namespace

std::unique_ptr<R3Engine> MakeR3Engine(Paradigm p, const EngineOptions& options) {
  switch (p) {
    case Paradigm::kDdpm: return std::make_unique<R3Ddpm>(options);
    case Paradigm::kScore: return std::make_unique<R3Score>(options);
    case Paradigm::kFlow: return std::make_unique<R3Flow>(options);
  }
  throw Error(ErrorKind::kConfig, "unknown paradigm");
}

}  // namespace se3lab
