#pragma once

#include <complex>
#include <map>
#include <memory>
#include <vector>

#include "magwell/chartjet.hpp"
#include "magwell/fieldlab.hpp"
#include "magwell/symflow.hpp"

namespace magwell {

using cd = std::complex<double>;

// ---------------------------------------------------------------------------
// Conventions for the whole formal layer, fixed once:
//   Poisson bracket  {f,g} = sum_j (df/dx_j dg/dxi_j - df/dxi_j dg/dx_j)
//   time evolution   gdot = {g,H}   (gives qdot = 2(p-A), angular rate -2B)
//   star product     a*b  = sum_k (1/k!) (hbar/2i)^k P_k(a,b),  P_1 = {a,b}
// so that i hbar^{-1}[a,b] = {a,b} + O(hbar^2) and i hbar^{-1} ad_{|z1|^2}
// equals {|z1|^2, .} with no correction. With these signs x1*xi1 - xi1*x1
// = -i hbar. Slow variables are commutative coefficients of the algebra;
// star contractions act on the fast pair only.
// ---------------------------------------------------------------------------

/// Monomial index x1^a xi1^b hbar^l (s1,s2)^(g1,g2); degree = a + b + 2l.
struct FSKey {
  int a = 0, b = 0, l = 0, g1 = 0, g2 = 0;
  auto operator<=>(const FSKey&) const = default;
  int degree() const { return a + b + 2 * l; }
  int slow() const { return g1 + g2; }
};

/// Graded series with caps: degree <= N1, slow order <= N2. Slow variables
/// are offsets from the basepoint z2_0. Immutable-by-convention value type.
class FormalSeries {
 public:
  FormalSeries() = default;
  FormalSeries(int n1, int n2, Vec2 z2_0 = Vec2::Zero()) : N1(n1), N2(n2), z2_0(z2_0) {}

  int N1 = 0, N2 = 0;
  Vec2 z2_0 = Vec2::Zero();
  std::map<FSKey, cd> c;

  void add_term(const FSKey& k, cd v, double drop_tol = 0.0);
  FormalSeries operator+(const FormalSeries& o) const;
  FormalSeries operator-(const FormalSeries& o) const;
  FormalSeries operator*(cd s) const;

  /// Terms of exact degree d.
  FormalSeries degree_part(int d) const;
  /// Terms of degree >= d.
  FormalSeries tail(int d) const;
  double max_abs() const;
  /// Max |coeff| restricted to degree d.
  double max_abs_degree(int d) const;
  /// True when every term has a == b after rotating to the complex basis
  /// (checked structurally via the conversion).
  bool is_resonant(double tol = 0.0) const;

  /// Value at a real phase point with hbar substituted.
  cd eval(double x1, double xi1, double s1, double s2, double hbar) const;
};

FormalSeries moyal(const FormalSeries& a, const FormalSeries& b);
/// Classical bracket (the hbar -> 0 limit of i hbar^{-1}[a,b]).
FormalSeries poisson(const FormalSeries& a, const FormalSeries& b);
/// i hbar^{-1} (a*b - b*a); exact within caps (internal margin of one hbar).
FormalSeries ad_action(const FormalSeries& a, const FormalSeries& b);
/// |z1|^2 = x1^2 + xi1^2 as a series.
FormalSeries fast_action_series(int n1, int n2, Vec2 z2_0);

/// Real polynomial in the slow offsets, capped at total degree smax.
struct SlowPoly {
  int smax = 0;
  std::vector<double> c;  // triangular layout (g1,g2), g1+g2 <= smax
  SlowPoly() = default;
  explicit SlowPoly(int s) : smax(s), c((s + 1) * (s + 2) / 2, 0.0) {}
  int idx(int g1, int g2) const { return g1 * (smax + 1) - g1 * (g1 - 1) / 2 + g2; }
  double get(int g1, int g2) const { return g1 + g2 <= smax ? c[idx(g1, g2)] : 0.0; }
  void add(int g1, int g2, double v) {
    if (g1 + g2 <= smax) c[idx(g1, g2)] += v;
  }
  double eval(double s1, double s2) const;
  SlowPoly d1() const;
  SlowPoly d2() const;
};

/// Output of the normalization: generator(s), resonant remainder, star-power
/// coefficients and the eigenvalue data read off at the basepoint.
struct NormalFormResult {
  FormalSeries tau;               // sum of the per-degree generators
  FormalSeries kappa;             // resonant remainder, in O_3
  std::vector<FormalSeries> generators;  // tau_3 ... tau_N1 (may be zero)
  SlowPoly b_jet;                 // B(g^{-1}(z2)) around the basepoint
  // kappa in the action basis: (l,m) -> slow jet of the |z1|^(2m) hbar^l term
  std::map<std::pair<int, int>, SlowPoly> kappa_action;
  // same content re-expanded over star powers (|z1|^2)^{*m}
  std::map<std::pair<int, int>, SlowPoly> star_coeffs;
  int N1 = 0, N2 = 0;
  Vec2 z2_0 = Vec2::Zero();
  double b0 = 0.0;
  std::shared_ptr<const SymplecticChartJet> chart;

  /// f(z2, I) truncation (hbar = 0): B + sum_{m>=2} c_{0,m} I^{m-1}.
  double f_value(const Vec2& z2, double I) const;
  double f_dI(const Vec2& z2, double I) const;
  Vec2 f_grad_z2(const Vec2& z2, double I) const;
  /// K_N(z1,z2) truncated at degree <= order, classical part.
  double eval_K(const NormalState& z, int order) const;
};

struct EigCoeffs {
  double b_min = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
};

FormalSeries series_from_hamiltonian(const MagneticField& field,
                                     std::shared_ptr<const SymplecticChartJet> chart, int n1,
                                     int n2);

/// Flow of the integrable normal form: |z1| is conserved exactly, z2 follows
/// the slow Hamiltonian I f(z2,I) by implicit midpoint, and the fast phase
/// accumulates -2 dK/dI by quadrature along the slow motion.
NormalTrajectory integrate_K(const NormalFormResult& nf, const NormalState& z0, double T,
                             double dt);
NormalFormResult birkhoff(const FormalSeries& series,
                          std::shared_ptr<const SymplecticChartJet> chart = nullptr);
/// Fills nf.star_coeffs from nf.kappa_action; returns the max round-trip
/// coefficient error of re-expanding through the star powers.
double reorder_star_powers(NormalFormResult& nf);
EigCoeffs eigenvalue_expansion(const NormalFormResult& nf, const MagneticField& field);

/// Numerically evaluable truncated canonical transformation.
class TruncatedTransform {
 public:
  TruncatedTransform(const MagneticField& field, const NormalFormResult& nf, int order);

  /// Maps normal coordinates to the original phase space.
  Vec4 forward(const NormalState& z) const;
  NormalState inverse(const Vec4& w) const;
  /// Finite-difference Jacobian of forward at z.
  Mat4 jacobian_fd(const NormalState& z, double step = 1e-5) const;
  int order() const { return order_; }
  const SymplecticChartJet& chart() const { return *chart_; }

 private:
  Vec4 flow_generator(const Jet4& gen, Vec4 z, double time) const;
  std::shared_ptr<const SymplecticChartJet> chart_;
  std::vector<Jet4> gens_;  // classical parts of tau_3..tau_order
  int order_;
};

}  // namespace magwell
