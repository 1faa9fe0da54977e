#include "se3lab/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "se3lab/csv.hpp"
#include "se3lab/error.hpp"

namespace se3lab {

DiscreteSchedule::DiscreteSchedule(std::vector<double> beta) : beta_(std::move(beta)) {
  if (beta_.size() < 2) throw Error(ErrorKind::kConfig, "schedule needs at least 2 steps");
  alpha_.resize(beta_.size());
  alpha_bar_.resize(beta_.size());
  double acc = 1.0;
  for (std::size_t k = 0; k < beta_.size(); ++k) {
    if (!(beta_[k] > 0.0 && beta_[k] < 1.0)) {
      throw Error(ErrorKind::kConfig, "beta must lie in (0, 1)");
    }
    alpha_[k] = 1.0 - beta_[k];
    acc *= alpha_[k];
    alpha_bar_[k] = acc;
  }
}

double DiscreteSchedule::posterior_variance(int t) const {
  return beta(t) * (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t));
}

void DiscreteSchedule::WriteCsv(const std::string& path) const {
  CsvWriter out(path, {"t", "beta", "alpha_bar"});
  for (int t = 1; t <= steps(); ++t) out.Row({static_cast<double>(t), beta(t), alpha_bar(t)});
}

DiscreteSchedule CosineSchedule(int steps) {
  if (steps < 2) throw Error(ErrorKind::kConfig, "cosine schedule needs T >= 2");
  const double s = kCosineOffset;
  auto f = [&](int t) {
    const double c = std::cos((static_cast<double>(t) / steps + s) / (1.0 + s) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0);
  std::vector<double> beta(steps);
  double prev = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double abar = f(t) / f0;
    beta[t - 1] = std::clamp(1.0 - abar / prev, kBetaClipMin, kBetaClipMax);
    prev = abar;
  }
  return DiscreteSchedule(std::move(beta));
}

VpCoefficients::VpCoefficients(double beta_min, double beta_max)
    : beta_min_(beta_min), beta_max_(beta_max) {
  if (!(beta_min > 0.0 && beta_min < beta_max)) {
    throw Error(ErrorKind::kConfig, "VP-SDE needs 0 < beta_min < beta_max");
  }
}

double VpCoefficients::alpha(double t) const { return std::exp(-0.5 * integral(t)); }

double VpCoefficients::sigma(double t) const {
  // 1 - exp(-x) without cancellation at small t.
  return std::sqrt(-std::expm1(-integral(t)));
}

double VpCoefficients::g(double t) const { return std::sqrt(beta(t)); }

void VpCoefficients::WriteCsv(const std::string& path, int points) const {
  CsvWriter out(path, {"t", "beta", "alpha", "sigma"});
  for (int i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / (points - 1);
    out.Row({t, beta(t), alpha(t), sigma(t)});
  }
}

}  // namespace se3lab
