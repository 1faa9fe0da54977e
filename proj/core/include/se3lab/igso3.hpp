#pragma once

#include <memory>
#include <string>
#include <vector>

#include "se3lab/lie.hpp"
#include "se3lab/rng.hpp"

namespace se3lab::igso3 {

inline constexpr double kMinConcentration = 1e-5;
inline constexpr int kMaxTerms = 5000;
inline constexpr int kDefaultGridSize = 1024;

/// Smallest L with (2L+1) exp(-L(L+1) eps2) < 1e-12, capped at kMaxTerms.
/// Throws kConcentrationTooSmall below kMinConcentration.
int AdaptiveTerms(double eps2);

/**
 * Isotropic Gaussian density on SO(3) relative to the Haar measure, as a
 * function of rotation angle:
 *
 *   f(w) = sum_{l=0}^{terms-1} (2l+1) exp(-l(l+1) eps2) sin((l+1/2) w) / sin(w/2)
 *
 * terms <= 0 selects AdaptiveTerms(eps2). omega must lie in (0, pi].
 */
double SeriesF(double omega, double eps2, int terms = 0);

/// d/dw of SeriesF, summed term by term.
double SeriesDF(double omega, double eps2, int terms = 0);

/// d/dw log f(w). omega in (1e-4, pi - 1e-4), else kAngleOutOfRange.
double ScoreFactor(double omega, double eps2);

/// Angle-marginal tables for one concentration.
struct Table {
  double eps2 = 0.0;
  std::vector<double> omega;  // G points, omega[g] = pi (g+1) / G
  std::vector<double> pdf;    // normalized angle density f(w)(1 - cos w)/pi
  std::vector<double> cdf;    // trapezoidal cumulative, cdf.back() == 1

  /// Inverse CDF by linear interpolation; u in [0, 1].
  double InverseCdf(double u) const;
  /// Writes omega,pdf,cdf.
  void WriteCsv(const std::string& path) const;
};

Table BuildTable(double eps2, int grid_size = kDefaultGridSize);

/// Memoized table keyed by the exact bits of eps2. Safe for concurrent use.
std::shared_ptr<const Table> CachedTable(double eps2);
void ClearCache();

/// Uniform axis on S^2, angle by inverse CDF; returns mean * exp(w n).
Rotation Sample(const Rotation& mean, double eps2, Rng& rng);
Rotation Sample(const Rotation& mean, const Table& table, Rng& rng);

/// Haar-uniform rotation, drawn from the eps2 = 10 table.
Rotation SampleUniform(Rng& rng);

inline constexpr double kUniformConcentration = 10.0;

}  // namespace se3lab::igso3
