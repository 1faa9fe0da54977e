#include "se3lab/igso3.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <unordered_map>

#include "se3lab/csv.hpp"
#include "se3lab/error.hpp"

namespace se3lab::igso3 {

namespace {

constexpr double kPi = std::numbers::pi;

void CheckConcentration(double eps2) {
  if (!(eps2 >= kMinConcentration)) {
    throw Error(ErrorKind::kConcentrationTooSmall,
                "eps2 = " + std::to_string(eps2) + " is below " + std::to_string(kMinConcentration));
  }
}

struct SeriesValue {
  double f = 0.0;
  double df = 0.0;
};

std::vector<double> SeriesWeights(double eps2, int terms) {
  std::vector<double> w(terms);
  for (int l = 0; l < terms; ++l) {
    w[l] = (2.0 * l + 1.0) * std::exp(-static_cast<double>(l) * (l + 1.0) * eps2);
  }
  return w;
}

// Sums f and f' together. sin((l+1/2)w) and cos((l+1/2)w) advance by the
// angle-addition recurrence, which keeps table construction O(G * L) without
// per-term trig calls.
SeriesValue SumSeries(double omega, const std::vector<double>& weights, bool with_derivative) {
  const double half_s = std::sin(0.5 * omega);
  const double half_c = std::cos(0.5 * omega);
  const double cw = std::cos(omega);
  const double sw = std::sin(omega);

  double s = half_s;  // sin((l+1/2) w) at l = 0
  double c = half_c;  // cos((l+1/2) w)
  double num = 0.0;
  double dnum = 0.0;
  const int terms = static_cast<int>(weights.size());
  for (int l = 0; l < terms; ++l) {
    const double weight = weights[l];
    num += weight * s;
    if (with_derivative) dnum += weight * (l + 0.5) * c;
    const double s_next = s * cw + c * sw;
    const double c_next = c * cw - s * sw;
    s = s_next;
    c = c_next;
  }
  SeriesValue out;
  out.f = num / half_s;
  if (with_derivative) {
    // d/dw [N(w)/sin(w/2)] = N'/sin(w/2) - N cos(w/2) / (2 sin^2(w/2))
    out.df = dnum / half_s - num * half_c / (2.0 * half_s * half_s);
  }
  return out;
}

}  // namespace

int AdaptiveTerms(double eps2) {
  CheckConcentration(eps2);
  for (int l = 0; l < kMaxTerms; ++l) {
    if ((2.0 * l + 1.0) * std::exp(-static_cast<double>(l) * (l + 1.0) * eps2) < 1e-12) {
      return l + 1;
    }
  }
  return kMaxTerms;
}

double SeriesF(double omega, double eps2, int terms) {
  CheckConcentration(eps2);
  if (terms <= 0) terms = AdaptiveTerms(eps2);
  // Far in the tail the truncated sum can dip below zero by O(1e-14); the
  // density itself is positive, so report the smallest normal double there.
  return std::max(SumSeries(omega, SeriesWeights(eps2, terms), false).f, std::numeric_limits<double>::min());
}

double SeriesDF(double omega, double eps2, int terms) {
  CheckConcentration(eps2);
  if (terms <= 0) terms = AdaptiveTerms(eps2);
  return SumSeries(omega, SeriesWeights(eps2, terms), true).df;
}

double ScoreFactor(double omega, double eps2) {
  CheckConcentration(eps2);
  if (!(omega > 1e-4 && omega < kPi - 1e-4)) {
    throw Error(ErrorKind::kAngleOutOfRange, "score factor needs omega in (1e-4, pi - 1e-4), got " +
                                                 std::to_string(omega));
  }
  const SeriesValue v = SumSeries(omega, SeriesWeights(eps2, AdaptiveTerms(eps2)), true);
  return v.df / v.f;
}

double Table::InverseCdf(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  const auto g = static_cast<std::size_t>(it - cdf.begin());
  if (g >= cdf.size()) return omega.back();
  const double w_hi = omega[g];
  const double c_hi = cdf[g];
  const double w_lo = g == 0 ? 0.0 : omega[g - 1];
  const double c_lo = g == 0 ? 0.0 : cdf[g - 1];
  const double span = c_hi - c_lo;
  if (span <= 0.0) return w_hi;
  return w_lo + (u - c_lo) / span * (w_hi - w_lo);
}

void Table::WriteCsv(const std::string& path) const {
  CsvWriter out(path, {"omega", "pdf", "cdf"});
  for (std::size_t g = 0; g < omega.size(); ++g) out.Row({omega[g], pdf[g], cdf[g]});
}

Table BuildTable(double eps2, int grid_size) {
  CheckConcentration(eps2);
  if (grid_size < 2) throw Error(ErrorKind::kDimensionMismatch, "grid needs at least 2 points");
  const std::vector<double> weights = SeriesWeights(eps2, AdaptiveTerms(eps2));

  Table t;
  t.eps2 = eps2;
  t.omega.resize(grid_size);
  t.pdf.resize(grid_size);
  t.cdf.resize(grid_size);
  for (int g = 0; g < grid_size; ++g) {
    const double w = kPi * (g + 1) / grid_size;
    t.omega[g] = w;
    // Deep in the tail the truncated series cancels to O(1e-12) noise that
    // may be slightly negative.
    const double f = std::max(SumSeries(w, weights, false).f, 0.0);
    t.pdf[g] = f * (1.0 - std::cos(w)) / kPi;
  }

  // The angle density vanishes at w = 0, so the integral starts there.
  double acc = 0.0;
  double prev_w = 0.0;
  double prev_p = 0.0;
  for (int g = 0; g < grid_size; ++g) {
    acc += 0.5 * (t.pdf[g] + prev_p) * (t.omega[g] - prev_w);
    t.cdf[g] = acc;
    prev_w = t.omega[g];
    prev_p = t.pdf[g];
  }
  for (int g = 0; g < grid_size; ++g) {
    t.pdf[g] /= acc;
    t.cdf[g] /= acc;
  }
  t.cdf.back() = 1.0;
  return t;
}

namespace {
std::mutex g_cache_mutex;
std::unordered_map<std::uint64_t, std::shared_ptr<const Table>> g_cache;
}  // namespace

std::shared_ptr<const Table> CachedTable(double eps2) {
  const auto key = std::bit_cast<std::uint64_t>(eps2);
  {
    std::lock_guard lock(g_cache_mutex);
    if (auto it = g_cache.find(key); it != g_cache.end()) return it->second;
  }
  // Built outside the lock; concurrent builders of the same key produce
  // identical tables.
  auto table = std::make_shared<const Table>(BuildTable(eps2));
  std::lock_guard lock(g_cache_mutex);
  auto [it, inserted] = g_cache.emplace(key, std::move(table));
  return it->second;
}

void ClearCache() {
  std::lock_guard lock(g_cache_mutex);
  g_cache.clear();
}

Rotation Sample(const Rotation& mean, const Table& table, Rng& rng) {
  Vec3 axis;
  do {
    axis = rng.Normal3();
  } while (axis.squaredNorm() < 1e-20);
  axis.normalize();
  const double w = table.InverseCdf(rng.Uniform());
  return mean * ExpMap(w * axis);
}

Rotation Sample(const Rotation& mean, double eps2, Rng& rng) {
  return Sample(mean, *CachedTable(eps2), rng);
}

Rotation SampleUniform(Rng& rng) { return Sample(Rotation(), kUniformConcentration, rng); }

}  // namespace se3lab::igso3
