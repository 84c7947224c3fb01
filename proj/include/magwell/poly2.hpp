#pragma once

#include <vector>

#include "magwell/geometry.hpp"

namespace magwell {

/// Dense bivariate polynomial sum c[i][j] x^i y^j, used for the built-in
/// magnetic fields and the exact gauge/chart integrals they admit.
class Poly2 {
 public:
  Poly2() : deg_(0), c_(1, 0.0) {}
  explicit Poly2(int deg) : deg_(deg), c_((deg + 1) * (deg + 1), 0.0) {}

  static Poly2 constant(double v) {
    Poly2 p(0);
    p.set(0, 0, v);
    return p;
  }

  int degree() const { return deg_; }
  double get(int i, int j) const {
    return (i <= deg_ && j <= deg_) ? c_[i * (deg_ + 1) + j] : 0.0;
  }
  void set(int i, int j, double v) { c_[at(i, j)] = v; }
  void add(int i, int j, double v) { c_[at(i, j)] += v; }

  double eval(double x, double y) const;
  double eval(const Vec2& q) const { return eval(q.x(), q.y()); }

  Poly2 dx() const;
  Poly2 dy() const;
  /// Antiderivative in x with value 0 at x = 0.
  Poly2 integrate_x() const;
  /// Antiderivative in y with value 0 at y = 0.
  Poly2 integrate_y() const;
  Poly2 operator*(const Poly2& o) const;
  Poly2 operator+(const Poly2& o) const;
  Poly2 operator-(const Poly2& o) const;
  Poly2 scaled(double s) const;
  /// Taylor recentering: returns p with p(u,v) = this(x0+u, y0+v).
  Poly2 shifted(double x0, double y0) const;
  /// Drops trailing zero rows/columns (degree reduction).
  Poly2 trimmed() const;

  bool is_zero(double tol = 0.0) const;

 private:
  int at(int i, int j) const;
  int deg_;
  std::vector<double> c_;
};

}  // namespace magwell
