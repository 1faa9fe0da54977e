#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace se3lab {

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  return MixSeed(MixSeed(seed) ^ MixSeed(stream + 0x632BE59BD9B4E019ULL));
}

/// Seeded random stream. Copyable; copies continue the same sequence
/// independently.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(MixSeed(seed)) {}

  /// Independent child stream; does not advance this stream.
  Rng Split(std::uint64_t stream) const { return Rng(DeriveSeed(seed_of_(), stream)); }

  double Uniform() { return uniform_(engine_); }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal() { return normal_(engine_); }
  Eigen::Vector3d Normal3() {
    const double x = Normal();
    const double y = Normal();
    const double z = Normal();
    return {x, y, z};
  }
  /// Uniform index in [0, n).
  std::size_t Index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_of_() const {
    // A copy of the engine state is hashed so Split() is a pure function of
    // the current stream position.
    std::mt19937_64 copy = engine_;
    return copy();
  }

  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace se3lab
