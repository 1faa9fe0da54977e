#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "se3lab/error.hpp"
#include "se3lab/nnet.hpp"
#include "se3lab/rng.hpp"

using namespace se3lab;

namespace {

// Keeps the default hidden-layer initialization and gives the
// zero-initialized output layer random weights so gradients reach every
// layer. Scale is 1/sqrt(fan-in) to keep activations out of saturation.
void Randomize(Mlp& net, std::uint64_t seed) {
  Rng rng(seed);
  const auto& out = net.layers().back();
  const std::string prefix = "layer" + std::to_string(net.layers().size() - 1) + ".";
  const double scale = 1.0 / std::sqrt(static_cast<double>(out.weight.cols()));
  for (std::size_t i = 0; i < net.ParameterCount(); ++i) {
    if (net.ParameterName(i).rfind(prefix, 0) == 0) net.SetParameter(i, scale * rng.Uniform(-1.0, 1.0));
  }
}

Matrix RandomMatrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.Normal();
  return m;
}

// Per-sample scalar re-implementation of the network.
std::vector<double> ReferenceForward(const Mlp& net, const std::vector<double>& state, double t) {
  std::vector<double> x = state;
  const auto& freq = net.embedding().frequencies();
  for (Eigen::Index k = 0; k < freq.size(); ++k) x.push_back(std::sin(freq[k] * t));
  for (Eigen::Index k = 0; k < freq.size(); ++k) x.push_back(std::cos(freq[k] * t));
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<double> y(layers[l].weight.rows());
    for (std::size_t i = 0; i < y.size(); ++i) {
      double z = layers[l].bias[i];
      for (std::size_t j = 0; j < x.size(); ++j) z += layers[l].weight(i, j) * x[j];
      if (l + 1 < layers.size()) {
        z = net.config().activation == Activation::kTanh
                ? std::tanh(z)
                : 0.5 * z * (1 + std::tanh(std::sqrt(2 / M_PI) * (z + 0.044715 * z * z * z)));
      }
      y[i] = z;
    }
    x = y;
  }
  return x;
}

double WeightedOutput(const Mlp& net, const Matrix& x, const std::vector<double>& t, const Matrix& w) {
  return (net.Forward(x, t).array() * w.array()).sum();
}

void GradientCheck(const MlpConfig& cfg, std::uint64_t seed) {
  Mlp net(cfg, seed);
  Randomize(net, seed + 1);
  Rng rng(seed + 2);
  const int batch = 5;
  const Matrix x = RandomMatrix(cfg.state_dim, batch, rng);
  std::vector<double> t(batch);
  for (auto& v : t) v = rng.Uniform();
  const Matrix w = RandomMatrix(cfg.out_dim, batch, rng);

  ForwardCache cache;
  net.Forward(x, t, &cache);
  const Gradients g = net.Backward(cache, w);
  ASSERT_EQ(g.size(), net.ParameterCount());

  const double h = 1e-5;
  int checked = 0;
  double worst = 0.0;
  for (int k = 0; k < 240; ++k) {
    const std::size_t i = rng.Index(net.ParameterCount());
    const double p = net.Parameter(i);
    net.SetParameter(i, p + h);
    const double up = WeightedOutput(net, x, t, w);
    net.SetParameter(i, p - h);
    const double down = WeightedOutput(net, x, t, w);
    net.SetParameter(i, p);
    const double fd = (up - down) / (2 * h);
    const double a = g.Flat(i);
    const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
    worst = std::max(worst, rel);
    EXPECT_LT(rel, 1e-4) << net.ParameterName(i) << " analytic " << a << " fd " << fd;
    ++checked;
  }
  EXPECT_GE(checked, 200);
  ::testing::Test::RecordProperty("worst_relative_error", std::to_string(worst));
}

}  // namespace

TEST(TimeEmbedding, GeometricLadderFromOneToThousand) {
  TimeEmbedding e(32);
  ASSERT_EQ(e.frequencies().size(), 16);
  EXPECT_NEAR(e.frequencies()[0], 1.0, 1e-15);
  EXPECT_NEAR(e.frequencies()[15], 1000.0, 1e-9);
  const Vector v = e.Embed(0.3);
  for (int k = 0; k < 16; ++k) EXPECT_NEAR(v[k] * v[k] + v[16 + k] * v[16 + k], 1.0, 1e-15);
  EXPECT_THROW(TimeEmbedding(7), Error);
}

TEST(Mlp, UntrainedOutputIsZero) {
  Mlp net(MlpConfig{}, 3);
  Rng rng(1);
  const Matrix x = RandomMatrix(3, 7, rng);
  const std::vector<double> t(7, 0.4);
  EXPECT_TRUE(net.Forward(x, t).isZero(0.0));
}

TEST(Mlp, ForwardMatchesScalarReference) {
  for (Activation act : {Activation::kGelu, Activation::kTanh}) {
    MlpConfig cfg{9, 3, {16, 8}, 6, act};
    Mlp net(cfg, 4);
    Randomize(net, 5);
    Rng rng(6);
    const Matrix x = RandomMatrix(9, 4, rng);
    const std::vector<double> t = {0.0, 0.2, 0.7, 1.0};
    const Matrix out = net.Forward(x, t);
    for (int b = 0; b < 4; ++b) {
      const std::vector<double> s(x.col(b).data(), x.col(b).data() + 9);
      const auto ref = ReferenceForward(net, s, t[b]);
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(out(i, b), ref[i], 1e-12);
    }
  }
}

TEST(Mlp, ForwardIsPureAndChecksShapes) {
  Mlp net(MlpConfig{}, 7);
  Randomize(net, 8);
  Rng rng(9);
  const Matrix x = RandomMatrix(3, 3, rng);
  const std::vector<double> t = {0.1, 0.2, 0.3};
  EXPECT_EQ(net.Forward(x, t), net.Forward(x, t));
  try {
    net.Forward(RandomMatrix(4, 3, rng), t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
  EXPECT_THROW(net.Forward(x, std::vector<double>{0.1}), Error);
}

TEST(Mlp, GradientCheckR3Architecture) { GradientCheck(MlpConfig{3, 3, {256, 256, 256}, 32, Activation::kGelu}, 10); }

TEST(Mlp, GradientCheckSo3TangentArchitecture) {
  GradientCheck(MlpConfig{9, 3, {256, 256, 256}, 32, Activation::kGelu}, 20);
}

TEST(Mlp, GradientCheckSo3MatrixArchitecture) {
  GradientCheck(MlpConfig{9, 9, {256, 256, 256}, 32, Activation::kGelu}, 30);
}

TEST(Mlp, GradientCheckTanh) { GradientCheck(MlpConfig{3, 3, {32, 32}, 8, Activation::kTanh}, 40); }

TEST(Mlp, BackwardIsLinearInUpstreamGradient) {
  Mlp net(MlpConfig{3, 3, {32, 32}, 8}, 11);
  Randomize(net, 12);
  Rng rng(13);
  const Matrix x = RandomMatrix(3, 4, rng);
  const std::vector<double> t = {0.1, 0.5, 0.6, 0.9};
  ForwardCache cache;
  net.Forward(x, t, &cache);
  const Matrix w = RandomMatrix(3, 4, rng);
  Gradients g1 = net.Backward(cache, w);
  const Gradients g3 = net.Backward(cache, 3.0 * w);
  g1.Scale(3.0);
  for (std::size_t i = 0; i < g1.size(); i += 7) EXPECT_NEAR(g1.Flat(i), g3.Flat(i), 1e-12 * (1 + std::abs(g3.Flat(i))));
  EXPECT_TRUE(net.Backward(cache, Matrix::Zero(3, 4)).AllZero());
}

TEST(Mlp, StaleCacheRejected) {
  Mlp net(MlpConfig{3, 3, {8}, 4}, 14);
  Rng rng(15);
  const Matrix x = RandomMatrix(3, 2, rng);
  const std::vector<double> t = {0.1, 0.2};
  ForwardCache cache;
  net.Forward(x, t, &cache);
  net.SetParameter(0, 0.5);
  try {
    net.Backward(cache, Matrix::Ones(3, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kStaleCache);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Mlp net(MlpConfig{3, 3, {8}, 4}, 16);
  Randomize(net, 17);
  const Mlp before = net;
  AdamState state(net);
  ForwardCache cache;
  Rng rng(18);
  net.Forward(RandomMatrix(3, 2, rng), std::vector<double>{0.1, 0.2}, &cache);
  const Gradients zero = net.Backward(cache, Matrix::Zero(3, 2));
  for (int k = 0; k < 5; ++k) AdamStep(net, zero, state);
  for (std::size_t i = 0; i < net.ParameterCount(); ++i) EXPECT_EQ(net.Parameter(i), before.Parameter(i));
  EXPECT_EQ(state.step(), 5u);
}

TEST(Adam, MovesAgainstConstantGradient) {
  Mlp net(MlpConfig{3, 2, {4}, 2}, 19);
  AdamState state(net);
  ForwardCache cache;
  Rng rng(20);
  net.Forward(RandomMatrix(3, 3, rng), std::vector<double>{0.1, 0.2, 0.3}, &cache);
  const Gradients g = net.Backward(cache, Matrix::Ones(2, 3));
  const Mlp before = net;
  for (int k = 0; k < 20; ++k) AdamStep(net, g, state);
  for (std::size_t i = 0; i < net.ParameterCount(); ++i) {
    if (g.Flat(i) > 1e-12) EXPECT_LT(net.Parameter(i), before.Parameter(i));
    if (g.Flat(i) < -1e-12) EXPECT_GT(net.Parameter(i), before.Parameter(i));
  }
}

TEST(Adam, ConvergesOnQuadratic) {
  // Loss ||w - w*||^2 over the output bias, whose gradient we form directly.
  Mlp net(MlpConfig{3, 3, {4}, 2}, 21);
  AdamState state(net, AdamOptions{0.01});
  const Vector target = Vector::LinSpaced(3, -0.7, 1.3);
  ForwardCache cache;
  Rng rng(22);
  const Matrix x = RandomMatrix(3, 1, rng);
  int steps = 0;
  for (; steps < 5000; ++steps) {
    net.Forward(x, std::vector<double>{0.5}, &cache);
    Gradients g = net.Backward(cache, Matrix::Zero(3, 1));
    g.bias.back() = 2.0 * (net.layers().back().bias - target);
    AdamStep(net, g, state);
    if ((net.layers().back().bias - target).cwiseAbs().maxCoeff() < 1e-3) break;
  }
  EXPECT_LT(steps, 5000);
}

TEST(Mlp, DeterministicInitialization) {
  Mlp a(MlpConfig{}, 99), b(MlpConfig{}, 99), c(MlpConfig{}, 100);
  for (std::size_t i = 0; i < a.ParameterCount(); i += 101) EXPECT_EQ(a.Parameter(i), b.Parameter(i));
  EXPECT_NE(a.Parameter(0), c.Parameter(0));
}

TEST(Ema, BlendsParameters) {
  Mlp avg(MlpConfig{3, 3, {4}, 2}, 1), net(MlpConfig{3, 3, {4}, 2}, 2);
  const double a0 = avg.Parameter(3), n0 = net.Parameter(3);
  EmaUpdate(avg, net, 0.9);
  EXPECT_NEAR(avg.Parameter(3), 0.9 * a0 + 0.1 * n0, 1e-15);
  Mlp other(MlpConfig{3, 3, {5}, 2}, 3);
  EXPECT_THROW(EmaUpdate(avg, other, 0.9), Error);
}

TEST(Checkpoint, RoundTripIsExact) {
  Mlp net(MlpConfig{9, 3, {16, 8}, 6, Activation::kTanh}, 23);
  Randomize(net, 24);
  const auto path = (std::filesystem::temp_directory_path() / "se3lab_ckpt_test.txt").string();
  SaveCheckpoint(net, path);
  const Mlp back = LoadCheckpoint(path);
  EXPECT_EQ(back.config().state_dim, 9);
  EXPECT_EQ(back.config().hidden, (std::vector<int>{16, 8}));
  EXPECT_EQ(back.config().activation, Activation::kTanh);
  ASSERT_EQ(back.ParameterCount(), net.ParameterCount());
  for (std::size_t i = 0; i < net.ParameterCount(); ++i) ASSERT_EQ(back.Parameter(i), net.Parameter(i));
  std::remove(path.c_str());
  EXPECT_THROW(LoadCheckpoint(path), Error);
}
