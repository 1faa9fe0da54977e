#pragma once

#include <string>
#include <vector>

namespace se3lab {

/**
 * Discrete DDPM variance schedule, indexed 1..T.
 *
 * Arrays are stored 0-based (entry k is step k+1); the accessors take the
 * 1-based step used throughout the DDPM formulas. alpha_bar(0) is 1.
 */
class DiscreteSchedule {
 public:
  DiscreteSchedule(std::vector<double> beta);

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_[t - 1]; }
  double alpha(int t) const { return alpha_[t - 1]; }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bar_[t - 1]; }

  /// beta_t (1 - abar_{t-1}) / (1 - abar_t).
  double posterior_variance(int t) const;

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  /// Writes t,beta,alpha_bar.
  void WriteCsv(const std::string& path) const;

 private:
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

inline constexpr int kDdpmSteps = 1000;
inline constexpr double kCosineOffset = 0.008;
inline constexpr double kBetaClipMin = 1e-6;
inline constexpr double kBetaClipMax = 0.999;

/// Improved-DDPM cosine schedule. alpha_bar is re-derived as the running
/// product of the clipped alphas so all three arrays agree.
DiscreteSchedule CosineSchedule(int steps = kDdpmSteps);

/// Variance-preserving SDE with linear beta(t) on t in [0, 1].
class VpCoefficients {
 public:
  VpCoefficients(double beta_min = 0.1, double beta_max = 20.0);

  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }

  double beta(double t) const { return beta_min_ + t * (beta_max_ - beta_min_); }
  /// int_0^t beta(s) ds
  double integral(double t) const { return beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t; }
  double alpha(double t) const;
  double sigma(double t) const;
  double g(double t) const;

  void WriteCsv(const std::string& path, int points = 101) const;

 private:
  double beta_min_;
  double beta_max_;
};

}  // namespace se3lab
