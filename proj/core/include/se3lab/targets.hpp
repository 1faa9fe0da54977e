#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "se3lab/lie.hpp"
#include "se3lab/paradigms.hpp"

namespace se3lab {

/// Synthetic target distribution. Unset params take the per-target
/// defaults listed by TargetParams.
struct TargetSpec {
  Space space = Space::kR3;
  std::string name;
  std::size_t n = 512;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;
};

/// Registered names for a space, in a fixed order.
std::vector<std::string> TargetNames(Space space);

/// Default parameters of a registered target; kUnknownTarget otherwise.
std::map<std::string, double> TargetParams(Space space, const std::string& name);

/**
 * R3 targets, all recentred to zero mean:
 *   sine3d   (s, sin 2 pi s, cos(2 pi s)/2), s ~ U[-1, 1], plus N(0, jitter^2)
 *   lorenz   RK4 trajectory of the Lorenz system after burn-in, every
 *            `stride` steps, scaled to unit RMS radius
 *   gmm8     equal mixture of N(c, sigma^2 I) over cube corners c in {+-corner}^3
 */
std::vector<Vec3> GenerateR3(const TargetSpec& spec);

/**
 * SO(3) targets, given by extrinsic XYZ Euler angles:
 *   spiral   (a s cos 3 pi s, a s sin 3 pi s, a s), s ~ U[-1, 1], a = 0.45 pi
 *   clusters IGSO3(mu_k, eps2) around k means drawn uniformly in
 *            [-range, range]^3; draws whose angles leave [-pi/2, pi/2]^3 are
 *            rejected
 */
std::vector<Rotation> GenerateSo3(const TargetSpec& spec);

/// Header x,y,z.
void WriteR3Csv(const std::string& path, std::span<const Vec3> xs);
std::vector<Vec3> ReadR3Csv(const std::string& path);

/// Header r11..r33,euler_a,euler_b,euler_g. Reading ignores the Euler
/// columns; matrices off SO(3) by more than 1e-6 are a kParse error, smaller
/// deviations are projected.
void WriteSo3Csv(const std::string& path, std::span<const Rotation> rs);
std::vector<Rotation> ReadSo3Csv(const std::string& path);

}  // namespace se3lab
