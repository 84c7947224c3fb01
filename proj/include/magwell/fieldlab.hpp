#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "magwell/geometry.hpp"
#include "magwell/poly2.hpp"

namespace magwell {

/// Scalar magnetic field B(q1,q2), sign-definite on its domain box. Fields
/// are immutable after construction and safe to share across threads.
/// Construction normalizes the sign to B > 0 and records the flip.
class MagneticField {
 public:
  // When no box is passed, the domain defaults to [-m0-1, m0+1]^2 if the
  // descriptor carries confinement data and to [-5,5]^2 otherwise.
  static MagneticField constant(double b0, std::optional<Box> box = std::nullopt);
  static MagneticField polynomial(const Poly2& p, std::optional<Box> box = std::nullopt);
  /// Polynomial in r^2 = q1^2+q2^2: sum coeffs[k] r^(2k).
  static MagneticField radial(const std::vector<double>& r2_coeffs,
                              std::optional<Box> box = std::nullopt);
  /// B(x,y) = 2 + x^2 + y^2 + x^3/3 + x^4/20, the standard test well.
  static MagneticField fig2(std::optional<Box> box = std::nullopt);
  static MagneticField custom(std::function<double(const Vec2&)> f, Box box,
                              std::optional<Confinement> conf = std::nullopt);

  double eval(const Vec2& q) const;
  Vec2 grad(const Vec2& q) const;
  Mat2 hess(const Vec2& q) const;

  const Box& domain() const;
  const std::optional<Confinement>& confinement() const;
  bool sign_flipped() const;
  bool is_constant() const;
  /// Polynomial representation when the descriptor admits one, else nullptr.
  const Poly2* poly() const;
  std::string descriptor() const;

  double max_on_domain() const;
  double min_on_domain() const;
  /// Location of the (unique, assumed interior) minimum of B: grid scan
  /// refined by Newton on grad B.
  Vec2 argmin_on_domain() const;

  struct Impl;

 private:
  explicit MagneticField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

enum class GaugeTag { landau_x, symmetric, custom };

/// Vector potential A with curl A = B, plus its tangent map.
class VectorPotential {
 public:
  Vec2 eval(const Vec2& q) const;
  /// T_q A, entries (dAi/dqj).
  Mat2 jac(const Vec2& q) const;
  GaugeTag gauge() const;
  /// Exact polynomial components when available (landau_x of polynomial B).
  const Poly2* poly_a1() const;
  const Poly2* poly_a2() const;

 private:
  friend VectorPotential build_potential(const MagneticField&, GaugeTag);
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Canonical coordinates on the zero-energy surface: forward is
/// (q1,q2) -> (x2, xi2) = (q1, int_0^{q2} B(q1,s) ds).
class DarbouxChart {
 public:
  Vec2 forward(const Vec2& q) const;
  Vec2 inverse(const Vec2& z2) const;
  double jac_det(const Vec2& q) const;
  /// Exact xi2 polynomial when B is polynomial, else nullptr.
  const Poly2* poly_xi2() const;
  const Box& domain() const;

 private:
  friend DarbouxChart darboux_chart(const MagneticField&);
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Symplectic basis of the normal bundle at j(q) = (q, A(q)).
struct SymplecticFrame {
  Vec4 u1;
  Vec4 v1;
};

/// Point of T*R^2 split as (q, p).
struct PhaseState {
  Vec2 q;
  Vec2 p;
};

MagneticField make_field(const std::string& descriptor, std::optional<Box> box = std::nullopt);
VectorPotential build_potential(const MagneticField& field, GaugeTag gauge = GaugeTag::landau_x);
DarbouxChart darboux_chart(const MagneticField& field);

/// Embeds q into the zero-energy surface: p = A(q), H = 0 exactly.
PhaseState sigma_embed(const MagneticField& field, const VectorPotential& pot, const Vec2& q);
SymplecticFrame frame_at(const MagneticField& field, const VectorPotential& pot, const Vec2& q);
/// Second derivative of H restricted to span(u1,v1) at j(q), by central
/// finite differences; equals 2|B| Id.
Mat2 transversal_hessian(const MagneticField& field, const VectorPotential& pot, const Vec2& q);

/// Adaptive Simpson quadrature, absolute tolerance; throws on failure.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12);

}  // namespace magwell
