// Microbenchmarks for the inner loops: group maps, IGSO3 sampling,
// exact W1 and the network passes used in training.

#include <vector>

#include <benchmark/benchmark.h>

#include "se3lab/igso3.hpp"
#include "se3lab/lie.hpp"
#include "se3lab/nnet.hpp"
#include "se3lab/otmetrics.hpp"

using namespace se3lab;

static void BM_ExpLog(benchmark::State& state) {
  Rng rng(1);
  std::vector<Vec3> vs;
  for (int i = 0; i < 1024; ++i) vs.push_back(rng.Uniform(0.0, 3.0) * rng.Normal3().normalized());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(LogMap(ExpMap(vs[i++ & 1023])));
  }
}
BENCHMARK(BM_ExpLog);

static void BM_Igso3Sample(benchmark::State& state) {
  const double eps2 = state.range(0) / 100.0;
  Rng rng(2);
  igso3::CachedTable(eps2);
  const Rotation mean;
  for (auto _ : state) benchmark::DoNotOptimize(igso3::Sample(mean, eps2, rng));
}
BENCHMARK(BM_Igso3Sample)->Arg(1)->Arg(50)->Arg(1000);

static void BM_Igso3BuildTable(benchmark::State& state) {
  const double eps2 = state.range(0) / 1000.0;
  for (auto _ : state) benchmark::DoNotOptimize(igso3::BuildTable(eps2));
}
BENCHMARK(BM_Igso3BuildTable)->Arg(1)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void BM_W1Exact(benchmark::State& state) {
  Rng rng(3);
  std::vector<Vec3> a, b;
  for (int i = 0; i < state.range(0); ++i) {
    a.push_back(rng.Normal3());
    b.push_back(rng.Normal3());
  }
  for (auto _ : state) benchmark::DoNotOptimize(W1Exact(a, b));
}
BENCHMARK(BM_W1Exact)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_W1ExactSo3(benchmark::State& state) {
  Rng rng(4);
  std::vector<Rotation> a, b;
  for (int i = 0; i < state.range(0); ++i) {
    a.push_back(igso3::SampleUniform(rng));
    b.push_back(igso3::SampleUniform(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(W1Exact(a, b));
}
BENCHMARK(BM_W1ExactSo3)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_MlpForwardBackward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Mlp net(MlpConfig{9, 3}, 5);
  Rng rng(6);
  Matrix x(9, batch), g(3, batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Normal();
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.Normal();
  std::vector<double> t(batch, 0.5);
  ForwardCache cache;
  for (auto _ : state) {
    net.Forward(x, t, &cache);
    benchmark::DoNotOptimize(net.Backward(cache, g));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(128)->Unit(benchmark::kMicrosecond);

static void BM_MlpForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Mlp net(MlpConfig{3, 3}, 7);
  Matrix x = Matrix::Ones(3, batch);
  std::vector<double> t(batch, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(net.Forward(x, t));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForward)->Arg(512)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
