#pragma once

#include <array>
#include <vector>

#include "magwell/geometry.hpp"
#include "magwell/poly2.hpp"

namespace magwell {

// Truncated polynomial in four variables (x1, xi1, s1, s2): "fast" pair
// (x1, xi1) capped at total degree fmax, "slow" pair (s1, s2) capped at smax.
// The slow variables are offsets from a Taylor basepoint. Dense storage;
// the caps in use here keep every instance below a few thousand coefficients.
class Jet4 {
 public:
  Jet4() : fmax_(0), smax_(0), c_(1, 0.0) {}
  Jet4(int fmax, int smax);

  static Jet4 constant(double v, int fmax, int smax);
  /// The coordinate jet for variable var in {0:x1, 1:xi1, 2:s1, 3:s2}.
  static Jet4 variable(int var, int fmax, int smax);
  /// Embeds a bivariate polynomial p(s1,s2) of the slow offsets.
  static Jet4 from_slow_poly(const Poly2& p, int fmax, int smax);

  int fmax() const { return fmax_; }
  int smax() const { return smax_; }

  double get(int a, int b, int cs, int ds) const;
  void set(int a, int b, int cs, int ds, double v);
  void add(int a, int b, int cs, int ds, double v);

  Jet4& operator+=(const Jet4& o);
  Jet4& operator-=(const Jet4& o);
  Jet4 operator+(const Jet4& o) const;
  Jet4 operator-(const Jet4& o) const;
  Jet4 operator*(const Jet4& o) const;
  Jet4 operator*(double s) const;
  Jet4& operator*=(double s);

  /// Partial derivative along variable var in {0,1,2,3}.
  Jet4 derivative(int var) const;

  double eval(double x1, double xi1, double s1, double s2) const;
  double eval(const Vec4& z) const { return eval(z(0), z(1), z(2), z(3)); }

  /// Lowest total degree (fast+slow) with a coefficient above tol; returns
  /// fmax+smax+1 for the zero jet.
  int valuation(double tol = 0.0) const;
  double max_abs_coeff() const;
  /// Max |coeff| among terms of fast degree exactly fdeg.
  double max_abs_fast_degree(int fdeg) const;
  /// Zeroes every term of fast degree > fcap.
  Jet4 truncated_fast(int fcap) const;

  /// Composition this(z + V(z)) for displacement jets V[0..3], each with zero
  /// constant term. Exact within the truncation caps.
  Jet4 compose_shifted(const std::array<Jet4, 4>& disp) const;

  /// Composes a univariate Taylor series sum coeffs[k] u^k with u = this,
  /// which must have zero constant term.
  static Jet4 compose_univariate(const std::vector<double>& coeffs, const Jet4& u);

  /// Evaluates p(q1, q2) with jet arguments (2-variable Horner).
  static Jet4 compose_poly2(const Poly2& p, const Jet4& q1, const Jet4& q2);

  int n_coeffs() const { return static_cast<int>(c_.size()); }
  const std::vector<double>& raw() const { return c_; }

 private:
  int fidx(int a, int b) const;  // index of (a,b), a+b<=fmax
  int sidx(int cs, int ds) const;
  int nfast() const;
  int nslow() const;
  int fmax_, smax_;
  std::vector<double> c_;
};

/// 1/sqrt(c0+u) Taylor coefficients up to order n (u the deviation).
std::vector<double> inv_sqrt_series(double c0, int n);
/// 1/(c0+u) Taylor coefficients up to order n.
std::vector<double> reciprocal_series(double c0, int n);

}  // namespace magwell
