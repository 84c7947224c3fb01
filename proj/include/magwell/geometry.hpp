#pragma once

#include <Eigen/Dense>
#include <optional>

namespace magwell {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Axis-aligned square domain [lo,hi]^2.
struct Box {
  double lo = -5.0;
  double hi = 5.0;
  bool contains(const Vec2& q, double margin = 0.0) const {
    return q.x() >= lo + margin && q.x() <= hi - margin && q.y() >= lo + margin &&
           q.y() <= hi - margin;
  }
  double length() const { return hi - lo; }
};

/// Confinement data: B >= c_tilde1 outside the ball of radius m0.
struct Confinement {
  double c_tilde1 = 0.0;
  double m0 = 0.0;
};

// Canonical symplectic pairing on T*R^2 = R^4 with layout (q1,q2,p1,p2):
// omega((Q1,P1),(Q2,P2)) = <P1,Q2> - <P2,Q1>.
inline double omega_qp(const Vec4& a, const Vec4& b) {
  return a(2) * b(0) + a(3) * b(1) - b(2) * a(0) - b(3) * a(1);
}

// Same form in normal coordinates (x1,xi1,x2,xi2): omega0 = dxi1^dx1 + dxi2^dx2.
inline double omega_normal(const Vec4& a, const Vec4& b) {
  return a(1) * b(0) - b(1) * a(0) + a(3) * b(2) - b(3) * a(2);
}

/// Matrix of omega0 in coordinates (x1,xi1,x2,xi2): omega0(u,v) = u^T Omega v.
inline Mat4 omega_normal_matrix() {
  Mat4 m = Mat4::Zero();
  m(0, 1) = -1;
  m(1, 0) = 1;
  m(2, 3) = -1;
  m(3, 2) = 1;
  return m;
}

/// Matrix of the canonical form in coordinates (q1,q2,p1,p2).
inline Mat4 omega_qp_matrix() {
  Mat4 m = Mat4::Zero();
  m(0, 2) = -1;
  m(1, 3) = -1;
  m(2, 0) = 1;
  m(3, 1) = 1;
  return m;
}

}  // namespace magwell
