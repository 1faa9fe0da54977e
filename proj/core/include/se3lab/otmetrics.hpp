#pragma once

#include <span>
#include <vector>

#include "se3lab/lie.hpp"
#include "se3lab/nnet.hpp"

namespace se3lab {

enum class GroundCost { kEuclidean, kGeodesic };

/// Pairwise costs; kCostOverflow if any entry is non-finite.
Matrix CostMatrix(std::span<const Vec3> a, std::span<const Vec3> b);
Matrix CostMatrix(std::span<const Rotation> a, std::span<const Rotation> b);

/// d_SO3 used as the geodesic ground cost.
inline double So3Cost(const Rotation& r0, const Rotation& r1) { return DistanceSO3(r0, r1); }

/**
 * Minimum-cost perfect matching on a square cost matrix (shortest augmenting
 * paths with dual potentials, O(n^3)). Returns the matched total, summed
 * row by row from the raw costs; assignment[i] is the column of row i.
 */
double SolveAssignment(const Matrix& cost, std::vector<int>* assignment = nullptr);

/// Exact W1 between equal-size empirical measures: mean matched cost.
/// Throws kSizeMismatch for unequal or empty inputs.
double W1Exact(std::span<const Vec3> a, std::span<const Vec3> b);
double W1Exact(std::span<const Rotation> a, std::span<const Rotation> b);
double W1FromCost(const Matrix& cost);

/// Exhaustive minimum over all n! permutations; n <= 8 else kTooLarge.
double W1BruteForce(std::span<const Vec3> a, std::span<const Vec3> b);
double W1BruteForce(std::span<const Rotation> a, std::span<const Rotation> b);
double W1BruteForceFromCost(const Matrix& cost);

}  // namespace se3lab
