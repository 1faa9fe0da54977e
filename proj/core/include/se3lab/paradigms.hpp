#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "se3lab/lie.hpp"
#include "se3lab/nnet.hpp"
#include "se3lab/rng.hpp"
#include "se3lab/schedules.hpp"

namespace se3lab {

enum class Space { kR3, kSO3 };
enum class Paradigm { kDdpm, kScore, kFlow };

std::string_view SpaceName(Space s);
std::string_view ParadigmName(Paradigm p);
/// Accepts r3/so3 and ddpm/score/flow; throws kConfig otherwise.
Space ParseSpace(std::string_view name);
Paradigm ParseParadigm(std::string_view name);

/// Batched model evaluation: one output column per state column, all at the
/// same model time. DDPM predictors receive the integer step as a double;
/// continuous paradigms receive t in [0, 1].
using Predictor = std::function<Matrix(const Matrix& states, double time)>;

inline constexpr int kContinuousSteps = 100;
inline constexpr double kScoreTimeMin = 1e-3;
inline constexpr double kSo3FlowTimeMin = 1e-2;

// Row-major packing of rotations into network state columns.
Matrix PackRotations(std::span<const Rotation> rs);
std::vector<Rotation> UnpackRotations(const Matrix& states);
Matrix PackPoints(std::span<const Vec3> xs);
std::vector<Vec3> UnpackPoints(const Matrix& states);

namespace r3 {

/// sqrt(abar_t) x0 + sqrt(1 - abar_t) z.
Vec3 DdpmPerturb(const Vec3& x0, int t, const Vec3& z, const DiscreteSchedule& sched);

/// (x_t - beta_t / sqrt(1 - abar_t) eps_hat) / sqrt(alpha_t) + sqrt(beta_t) z;
/// the noise term is dropped at t = 1.
Vec3 DdpmReverseStep(const Vec3& xt, int t, const Vec3& eps_hat, const Vec3& z, const DiscreteSchedule& sched);

/// -(x_t - alpha(t) x0) / sigma^2(t). kTimeTooSmall below kScoreTimeMin.
Vec3 TrueScore(const Vec3& xt, const Vec3& x0, double t, const VpCoefficients& vp);

/// One Euler-Maruyama step of the reverse VP-SDE from t to t - dt:
/// x + dt (beta x / 2 + beta s) + sqrt(beta dt) z.
Vec3 ScoreReverseStep(const Vec3& xt, double t, double dt, const Vec3& score, const Vec3& z,
                      const VpCoefficients& vp);

/// Linear interpolant (1 - t) x0 + t x1 (noise at t = 0, data at t = 1).
Vec3 FlowInterpolant(const Vec3& x0, const Vec3& x1, double t);
/// x1 - x0.
Vec3 FlowVelocity(const Vec3& x0, const Vec3& x1);
/// x + u dt.
Vec3 FlowStep(const Vec3& xt, double dt, const Vec3& velocity);

/// Reverse chains from N(0, I); chain i draws noise from DeriveSeed(seed, i).
std::vector<Vec3> SampleDdpm(const Predictor& eps, const DiscreteSchedule& sched, std::size_t n,
                             std::uint64_t seed);
std::vector<Vec3> SampleScore(const Predictor& score, const VpCoefficients& vp, std::size_t n,
                              std::uint64_t seed, int steps = kContinuousSteps);
std::vector<Vec3> SampleFlow(const Predictor& velocity, std::size_t n, std::uint64_t seed,
                             int steps = kContinuousSteps);

}  // namespace r3

namespace so3 {

/// IGSO3(lambda(sqrt(abar_t), r0), 1 - abar_t).
Rotation DdpmPerturb(const Rotation& r0, int t, const DiscreteSchedule& sched, Rng& rng);

/// lambda(sqrt(abar_{t-1}) beta_t / (1 - abar_t), r0_hat) *
/// lambda(sqrt(alpha_t) (1 - abar_{t-1}) / (1 - abar_t), r_t).
Rotation DdpmPosteriorMean(const Rotation& rt, const Rotation& r0_hat, int t, const DiscreteSchedule& sched);

/// Draws r_{t-1} ~ IGSO3(mu_tilde, beta_tilde_t); returns mu_tilde at t = 1.
Rotation DdpmReverseStep(const Rotation& rt, const Rotation& r0_hat, int t, const DiscreteSchedule& sched,
                         Rng& rng);

/// ||r0_hat r0ᵀ - I||_F^2.
double DdpmLoss(const Rotation& r0_hat, const Rotation& r0);

/// Brownian variance of the score-matching forward process: 1.5 t.
inline constexpr double kScoreEps2Max = 1.5;
inline double ScoreEps2(double t) { return kScoreEps2Max * t; }
/// Diffusion coefficient squared consistent with ScoreEps2:
/// density exp(-w^2 / (4 eps2)) has per-axis variance 2 eps2, so g^2 = 2 d(eps2)/dt.
inline constexpr double kScoreDiffusion2 = 2.0 * kScoreEps2Max;

/**
 * Conditional score of IGSO3(r0, ScoreEps2(t)) at r_t as a body-frame tangent
 * vector at r_t: axis(r0ᵀ r_t) * d/dw log f(w).
 *
 * Below w = 1e-3 the factor is evaluated at 1e-3 and scaled linearly in w
 * (d log f / dw vanishes linearly at the identity). kAngleOutOfRange within
 * 1e-4 of the cut locus; kTimeTooSmall below kScoreTimeMin.
 */
Vec3 TrueScore(const Rotation& rt, const Rotation& r0, double t);

/**
 * Geodesic random walk step from t to t - dt:
 *   r exp((g^2 + h^2)/2 s dt + h sqrt(dt) z),  h^2 = vp.beta(t).
 *
 * g^2 = kScoreDiffusion2 is the forward diffusion. Any h gives a reverse
 * process with the same marginals; taking the VP-SDE rate for h shrinks the
 * injected noise as t -> 0, so the last steps do not re-blur the samples.
 */
Rotation ScoreReverseStep(const Rotation& rt, double t, double dt, const Vec3& score, const Vec3& z,
                          const VpCoefficients& vp);

struct FlowPoint {
  Rotation rt;
  Vec3 velocity;  // log(r_tᵀ r0) / t, body frame at r_t
};

/// Data r0 at t = 0, noise r1 at t = 1. kAngleOutOfRange when r1 sits on the
/// cut locus of r0 (within 1e-6) or t < kSo3FlowTimeMin.
FlowPoint FlowTarget(const Rotation& r0, const Rotation& r1, double t);

/// r exp(u dt).
Rotation FlowStep(const Rotation& rt, double dt, const Vec3& velocity);

/// Reverse chains from the Haar prior. The DDPM predictor returns 9 rows
/// (row-major r0_hat); rows are projected onto SO(3) before use.
std::vector<Rotation> SampleDdpm(const Predictor& r0_hat, const DiscreteSchedule& sched, std::size_t n,
                                 std::uint64_t seed);
std::vector<Rotation> SampleScore(const Predictor& score, const VpCoefficients& vp, std::size_t n,
                                  std::uint64_t seed, int steps = kContinuousSteps);
std::vector<Rotation> SampleFlow(const Predictor& velocity, std::size_t n, std::uint64_t seed,
                                 int steps = kContinuousSteps);

/// Training times for SO(3) score matching live on this grid so the IGSO3
/// tables stay cacheable.
inline constexpr int kScoreTimeGrid = 1000;
double QuantizeScoreTime(double u);

}  // namespace so3

/// Regression problem for one minibatch: network inputs plus targets.
struct RegressionBatch {
  Matrix states;
  std::vector<double> times;
  Matrix targets;
};

struct EngineOptions {
  MlpConfig net;             // state_dim / out_dim are overwritten per paradigm
  AdamOptions adam;
  int ddpm_steps = kDdpmSteps;
  double beta_min = 0.1;
  double beta_max = 20.0;
  int sample_steps = kContinuousSteps;
  /// Generation uses an exponential moving average of the trained
  /// parameters with this decay; 0 samples from the raw parameters.
  double ema_decay = 0.999;
  std::uint64_t seed = 0;
};

/**
 * One alignment engine: a paradigm on a space with its network and
 * optimizer state.
 *
 * Losses (per sample, averaged over the batch):
 *   R3 DDPM   ||eps_hat - z||^2, eps_hat = out + sqrt(1 - abar_t) x_t
 *   R3 score  sigma^2 ||s_theta - score||^2, s_theta = out / sigma - x_t
 *   R3 flow   ||u - (x1 - x0)||^2
 *   SO3 DDPM  ||r0_hat r0ᵀ - I||_F^2, r0_hat = Nearest(r_t + out)
 *   SO3 score eps2 ||s_theta - score||^2, with s_theta = out / sqrt(eps2)
 *   SO3 flow  ||hat(u - v)||_F^2 = 2 ||u - v||^2
 *
 * The R3 skip terms are the exact predictors for N(0, I) data, so with the
 * zero-initialized output layer every untrained engine leaves its prior
 * (approximately) in place.
 */
template <class Point>
class Engine {
 public:
  virtual ~Engine() = default;

  virtual Space space() const = 0;
  virtual Paradigm paradigm() const = 0;

  /// Draws times/noise for the batch and builds the regression problem.
  virtual RegressionBatch MakeBatch(std::span<const Point> data, Rng& rng) const = 0;
  /// Loss of raw network outputs against a batch; fills dout if given.
  virtual double Loss(const RegressionBatch& batch, const Matrix& out, Matrix* dout) const = 0;
  /// Loss of an exact prediction for this batch (the "loss floor").
  virtual Matrix PerfectOutput(const RegressionBatch& batch) const = 0;

  virtual std::vector<Point> Generate(std::size_t n, std::uint64_t seed) const = 0;

  /// One optimizer step on data; returns the batch loss before the update.
  double TrainStep(std::span<const Point> data, Rng& rng);

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  /// The network Generate evaluates: the EMA copy, or net() without EMA.
  const Mlp& sampling_net() const { return ema_decay_ > 0.0 ? ema_ : net_; }
  Mlp& mutable_sampling_net() { return ema_decay_ > 0.0 ? ema_ : net_; }
  AdamState& optimizer() { return adam_; }

 protected:
  Engine(const MlpConfig& cfg, const EngineOptions& o)
      : net_(cfg, o.seed), ema_(net_), adam_(net_, o.adam), ema_decay_(o.ema_decay) {}

  Mlp net_;
  Mlp ema_;
  AdamState adam_;
  double ema_decay_;
};

using R3Engine = Engine<Vec3>;
using So3Engine = Engine<Rotation>;

std::unique_ptr<R3Engine> MakeR3Engine(Paradigm p, const EngineOptions& options);
std::unique_ptr<So3Engine> MakeSo3Engine(Paradigm p, const EngineOptions& options);

extern template class Engine<Vec3>;
extern template class Engine<Rotation>;

}  // namespace se3lab
