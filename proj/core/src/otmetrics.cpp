#include "se3lab/otmetrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "se3lab/error.hpp"

namespace se3lab {

namespace {

void CheckSizes(std::size_t na, std::size_t nb) {
  if (na != nb || na == 0) {
    throw Error(ErrorKind::kSizeMismatch,
                "W1 needs two nonempty sets of equal size, got " + std::to_string(na) + " and " +
                    std::to_string(nb));
  }
}

void CheckFinite(const Matrix& cost) {
  if (!cost.allFinite()) throw Error(ErrorKind::kCostOverflow, "non-finite pairwise cost");
}

}  // namespace

Matrix CostMatrix(std::span<const Vec3> a, std::span<const Vec3> b) {
  Matrix c(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c(i, j) = (a[i] - b[j]).norm();
  CheckFinite(c);
  return c;
}

Matrix CostMatrix(std::span<const Rotation> a, std::span<const Rotation> b) {
  Matrix c(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c(i, j) = So3Cost(a[i], b[j]);
  CheckFinite(c);
  return c;
}

double SolveAssignment(const Matrix& cost, std::vector<int>* assignment) {
  const auto n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw Error(ErrorKind::kSizeMismatch, "assignment needs a square cost matrix");
  CheckFinite(cost);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = cost;

  // 1-based rows/columns; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = rows(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, row_to_col[i]);
  if (assignment) *assignment = std::move(row_to_col);
  return total;
}

double W1FromCost(const Matrix& cost) {
  CheckSizes(cost.rows(), cost.cols());
  return SolveAssignment(cost) / static_cast<double>(cost.rows());
}

double W1Exact(std::span<const Vec3> a, std::span<const Vec3> b) {
  CheckSizes(a.size(), b.size());
  return W1FromCost(CostMatrix(a, b));
}

double W1Exact(std::span<const Rotation> a, std::span<const Rotation> b) {
  CheckSizes(a.size(), b.size());
  return W1FromCost(CostMatrix(a, b));
}

double W1BruteForceFromCost(const Matrix& cost) {
  CheckSizes(cost.rows(), cost.cols());
  const auto n = static_cast<int>(cost.rows());
  if (n > 8) throw Error(ErrorKind::kTooLarge, "brute force limited to n <= 8, got " + std::to_string(n));
  CheckFinite(cost);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

double W1BruteForce(std::span<const Vec3> a, std::span<const Vec3> b) {
  CheckSizes(a.size(), b.size());
  if (a.size() > 8) throw Error(ErrorKind::kTooLarge, "brute force limited to n <= 8");
  return W1BruteForceFromCost(CostMatrix(a, b));
}

double W1BruteForce(std::span<const Rotation> a, std::span<const Rotation> b) {
  CheckSizes(a.size(), b.size());
  if (a.size() > 8) throw Error(ErrorKind::kTooLarge, "brute force limited to n <= 8");
  return W1BruteForceFromCost(CostMatrix(a, b));
}

}  // namespace se3lab
