#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace se3lab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/**
 * @brief An element of SO(3).
 *
 * Values are immutable 3x3 orthogonal matrices with determinant +1. The only
 * way to build one from an arbitrary matrix is FromMatrix (validated) or
 * Nearest (polar projection); the Lie-group operations below construct
 * rotations directly.
 *
 * When the audit is enabled every constructed rotation is checked against
 * the orthonormality/determinant tolerance and failures are counted. The
 * acceptance suite uses this to prove that no operation ever leaves the
 * group.
 */
class Rotation {
 public:
  static constexpr double kTolerance = 1e-9;

  Rotation() : m_(Mat3::Identity()) {}

  /// Throws Error(kInvalidRotation) if m is not in SO(3) within tol.
  static Rotation FromMatrix(const Mat3& m, double tol = kTolerance);
  /// Closest rotation in Frobenius norm (polar factor, det forced to +1).
  static Rotation Nearest(const Mat3& m);
  /// Row-major 9-vector, matching the network input layout.
  static Rotation FromRowMajor(std::span<const double> v9);

  const Mat3& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  Rotation operator*(const Rotation& other) const;
  Rotation inverse() const;
  void ToRowMajor(std::span<double> out9) const;

  /// Max-entry deviation of mᵀm from I and |det - 1|.
  static bool IsValid(const Mat3& m, double tol = kTolerance);

 private:
  friend Rotation MakeRotationUnchecked(const Mat3& m);
  explicit Rotation(const Mat3& m);

  Mat3 m_;
};

/// Counters for the rotation audit. Thread-safe.
namespace rotation_audit {
void SetEnabled(bool enabled);
bool Enabled();
void Reset();
std::uint64_t Checks();
std::uint64_t Violations();
}  // namespace rotation_audit

struct RigidTransform {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
};

/// Extrinsic X-Y-Z angles: R = Rz(gamma) * Ry(beta) * Rx(alpha).
struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

// so(3) <-> R^3. hat(x,y,z) = [[0,-z,y],[z,0,-x],[-y,x,0]].
Mat3 Hat(const Vec3& phi);
Vec3 Vee(const Mat3& skew);

/// Rodrigues exponential. Second-order Taylor coefficients below 1e-8 rad.
Rotation ExpMap(const Vec3& phi);

/// Principal logarithm, |result| in [0, pi]. At the cut locus the axis sign
/// is chosen from the (tiny) skew part when available, else positive along
/// the dominant axis component.
Vec3 LogMap(const Rotation& r);

/// Rotation angle in [0, pi], computed with atan2 for accuracy at both ends.
double RotationAngle(const Rotation& r);

/// r0 * exp(t * log(r0ᵀ r1)).
Rotation Geodesic(const Rotation& r0, const Rotation& r1, double t);

/// exp(c * log(r)).
Rotation ScaleRotation(double c, const Rotation& r);

/// ||log(r0ᵀ r1)||_F = sqrt(2) * angle(r0ᵀ r1).
double DistanceSO3(const Rotation& r0, const Rotation& r1);

/// tr(r r'ᵀ)/2 + <x, x'>.
double Se3Inner(const RigidTransform& a, const RigidTransform& b);

/// One Frenet-Serret frame with its raw basis vectors.
struct FsFrame {
  Vec3 tangent;
  Vec3 binormal;
  Vec3 normal;
  RigidTransform transform;
};

/**
 * Frenet-Serret frames along a Cα trace.
 *
 * Interior points i (0-based 1..N-2) use
 *   t_i = unit(x_{i+1} - x_i), b_i = unit(t_{i-1} x t_i), n_i = b_i x t_i.
 * The rotation has columns [t, b, t x b]; with n = b x t the column triple
 * [t, b, n] is left-handed, so the third column is -n. Endpoints copy the
 * nearest interior rotation and keep their own translation.
 *
 * Throws kCoincidentPoints / kCollinearTriple.
 */
std::vector<FsFrame> FsFrames(std::span<const Vec3> coords);
std::vector<RigidTransform> FsTransforms(std::span<const Vec3> coords);

/// At gimbal lock (|beta| = pi/2) gamma is 0 and alpha absorbs the rest.
EulerAngles ToEuler(const Rotation& r);
Rotation FromEuler(const EulerAngles& e);

}  // namespace se3lab
