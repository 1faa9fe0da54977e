#include "se3lab/lie.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "se3lab/error.hpp"

namespace se3lab {

namespace {

std::atomic<bool> g_audit_enabled{false};
std::atomic<std::uint64_t> g_audit_checks{0};
std::atomic<std::uint64_t> g_audit_violations{0};

constexpr double kSmallAngle = 1e-8;
constexpr double kCutLocusTrace = 1e-6;

}  // namespace

namespace rotation_audit {
void SetEnabled(bool enabled) { g_audit_enabled.store(enabled); }
bool Enabled() { return g_audit_enabled.load(std::memory_order_relaxed); }
void Reset() {
  g_audit_checks.store(0);
  g_audit_violations.store(0);
}
std::uint64_t Checks() { return g_audit_checks.load(); }
std::uint64_t Violations() { return g_audit_violations.load(); }
}  // namespace rotation_audit

Rotation MakeRotationUnchecked(const Mat3& m) { return Rotation(m); }

Rotation::Rotation(const Mat3& m) : m_(m) {
  if (rotation_audit::Enabled()) {
    g_audit_checks.fetch_add(1, std::memory_order_relaxed);
    if (!IsValid(m_)) g_audit_violations.fetch_add(1, std::memory_order_relaxed);
  }
}

bool Rotation::IsValid(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const double orth = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return orth <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

Rotation Rotation::FromMatrix(const Mat3& m, double tol) {
  if (!IsValid(m, tol)) {
    throw Error(ErrorKind::kInvalidRotation, "matrix is not in SO(3) within tolerance");
  }
  return Rotation(m);
}

Rotation Rotation::Nearest(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return Rotation(u * d * v.transpose());
}

Rotation Rotation::FromRowMajor(std::span<const double> v9) {
  if (v9.size() != 9) throw Error(ErrorKind::kDimensionMismatch, "rotation needs 9 values");
  Mat3 m;
  m << v9[0], v9[1], v9[2], v9[3], v9[4], v9[5], v9[6], v9[7], v9[8];
  return FromMatrix(m);
}

void Rotation::ToRowMajor(std::span<double> out9) const {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out9[3 * r + c] = m_(r, c);
}

Rotation Rotation::operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }

Rotation Rotation::inverse() const { return Rotation(m_.transpose()); }

Mat3 Hat(const Vec3& phi) {
  Mat3 k;
  k << 0.0, -phi.z(), phi.y(),
       phi.z(), 0.0, -phi.x(),
       -phi.y(), phi.x(), 0.0;
  return k;
}

Vec3 Vee(const Mat3& skew) { return {skew(2, 1), skew(0, 2), skew(1, 0)}; }

Rotation ExpMap(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a;  // sin(theta)/theta
  double b;  // (1 - cos(theta))/theta^2
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 k = Hat(phi);
  return MakeRotationUnchecked(Mat3::Identity() + a * k + b * k * k);
}

double RotationAngle(const Rotation& r) {
  const Mat3& m = r.matrix();
  const double sin_w = 0.5 * Vee(m - m.transpose()).norm();
  const double cos_w = 0.5 * (m.trace() - 1.0);
  return std::atan2(sin_w, cos_w);
}

Vec3 LogMap(const Rotation& r) {
  const Mat3& m = r.matrix();
  const Vec3 skew = Vee(m - m.transpose());  // 2 sin(w) n
  const double w = RotationAngle(r);

  if (w < kSmallAngle) {
    // w / (2 sin w) -> 1/2 + w^2/12
    return (0.5 + w * w / 12.0) * skew;
  }
  if (m.trace() + 1.0 < kCutLocusTrace) {
    // (m + mᵀ)/2 = cos(w) I + (1 - cos w) n nᵀ
    const double cos_w = std::cos(w);
    const Mat3 outer = (0.5 * (m + m.transpose()) - cos_w * Mat3::Identity()) / (1.0 - cos_w);
    int k = 0;
    outer.diagonal().maxCoeff(&k);
    Vec3 n = outer.col(k) / std::sqrt(std::max(outer(k, k), 1e-300));
    n.normalize();
    if (n.dot(skew) < 0.0) n = -n;
    return w * n;
  }
  return (w / (2.0 * std::sin(w))) * skew;
}

Rotation Geodesic(const Rotation& r0, const Rotation& r1, double t) {
  return r0 * ExpMap(t * LogMap(r0.inverse() * r1));
}

Rotation ScaleRotation(double c, const Rotation& r) { return ExpMap(c * LogMap(r)); }

double DistanceSO3(const Rotation& r0, const Rotation& r1) {
  const Mat3 rel = r0.matrix().transpose() * r1.matrix();
  const double sin_w = 0.5 * Vee(rel - rel.transpose()).norm();
  const double cos_w = 0.5 * (rel.trace() - 1.0);
  return std::numbers::sqrt2 * std::atan2(sin_w, cos_w);
}

double Se3Inner(const RigidTransform& a, const RigidTransform& b) {
  const double rot = 0.5 * (a.rotation.matrix() * b.rotation.matrix().transpose()).trace();
  return rot + a.translation.dot(b.translation);
}

std::vector<FsFrame> FsFrames(std::span<const Vec3> coords) {
  const std::size_t n = coords.size();
  if (n < 3) throw Error(ErrorKind::kDimensionMismatch, "need at least 3 points, got " + std::to_string(n));

  std::vector<Vec3> tangents(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec3 d = coords[i + 1] - coords[i];
    const double len = d.norm();
    if (!(len > 1e-9)) {
      throw Error(ErrorKind::kCoincidentPoints, "points " + std::to_string(i) + " and " +
                                                    std::to_string(i + 1) + " coincide");
    }
    tangents[i] = d / len;
  }

  std::vector<FsFrame> frames(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec3& t = tangents[i];
    const Vec3 cross = tangents[i - 1].cross(t);
    const double len = cross.norm();
    if (len < 1e-9) {
      throw Error(ErrorKind::kCollinearTriple,
                  "points " + std::to_string(i - 1) + ".." + std::to_string(i + 1) + " are collinear");
    }
    const Vec3 b = cross / len;
    const Vec3 nrm = b.cross(t);
    Mat3 m;
    m.col(0) = t;
    m.col(1) = b;
    m.col(2) = t.cross(b);
    frames[i] = FsFrame{t, b, nrm, RigidTransform{MakeRotationUnchecked(m), coords[i]}};
  }

  frames.front() = frames[1];
  frames.front().transform.translation = coords.front();
  frames.back() = frames[n - 2];
  frames.back().transform.translation = coords.back();
  return frames;
}

std::vector<RigidTransform> FsTransforms(std::span<const Vec3> coords) {
  std::vector<RigidTransform> out;
  for (auto& f : FsFrames(coords)) out.push_back(f.transform);
  return out;
}

EulerAngles ToEuler(const Rotation& r) {
  const Mat3& m = r.matrix();
  constexpr double kLock = 1e-12;
  EulerAngles e;
  const double s = -m(2, 0);
  if (std::abs(s) >= 1.0 - kLock) {
    e.beta = std::copysign(std::numbers::pi / 2.0, s);
    e.gamma = 0.0;
    e.alpha = std::atan2(-m(1, 2), m(1, 1));
    return e;
  }
  e.beta = std::asin(s);
  e.alpha = std::atan2(m(2, 1), m(2, 2));
  e.gamma = std::atan2(m(1, 0), m(0, 0));
  return e;
}

Rotation FromEuler(const EulerAngles& e) {
  const double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
  const double cb = std::cos(e.beta), sb = std::sin(e.beta);
  const double cg = std::cos(e.gamma), sg = std::sin(e.gamma);
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
  ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
  rz << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
  return MakeRotationUnchecked(rz * ry * rx);
}

}  // namespace se3lab
