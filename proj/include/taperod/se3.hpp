#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "taperod/errors.hpp"

namespace taperod {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Hamilton-convention quaternion. Also used for quaternion rates, which are
/// not unit length.
using Quat = Eigen::Quaterniond;

/// Skew-symmetric matrix such that hat(a) * b == a.cross(b).
inline Mat3 hat(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return m;
}

/// Inverse of hat. Throws NotSkewSymmetric when the symmetric part of `m`
/// has any entry larger than `tol`.
inline Vec3 vee(const Mat3& m, double tol = 1e-9) {
  const Mat3 sym = 0.5 * (m + m.transpose());
  if (!(sym.cwiseAbs().maxCoeff() <= tol)) {
    throw Error(ErrorCode::NotSkewSymmetric, "matrix has a symmetric part");
  }
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

inline Quat normalized(const Quat& q) {
  const double n = q.norm();
  if (n == 0.0 || !std::isfinite(n)) return Quat::Identity();
  return Quat(q.coeffs() / n);
}

/// Rotation matrix of a unit quaternion. Normalizes first.
inline Mat3 quat_to_rotation(const Quat& q) {
  const Quat u = normalized(q);
  const double w = u.w(), x = u.x(), y = u.y(), z = u.z();
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
       2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
       2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

/// dq/ds = 1/2 q (x) (0, u), the quaternion form of dR/ds = R hat(u) with u
/// expressed in the body frame.
inline Quat quat_derivative(const Quat& q, const Vec3& u) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  return Quat(0.5 * (-x * u.x() - y * u.y() - z * u.z()),
              0.5 * (w * u.x() + y * u.z() - z * u.y()),
              0.5 * (w * u.y() + z * u.x() - x * u.z()),
              0.5 * (w * u.z() + x * u.y() - y * u.x()));
}

/// Rotation angle (radians) of a rotation matrix.
inline double rotation_angle(const Mat3& r) {
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * w.norm(), 0.5 * (r.trace() - 1.0));
}

}  // namespace taperod
