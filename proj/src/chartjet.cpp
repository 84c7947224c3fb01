#include "magwell/chartjet.hpp"

#include <cmath>
#include <stdexcept>

namespace magwell {

namespace {

// Matrix of omega0 in normal coordinates (x1,xi1,x2,xi2).
constexpr double kOmega[4][4] = {
    {0, -1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, -1}, {0, 0, 1, 0}};

// Matrix of the canonical form on the target, components ordered (q1,q2,p1,p2).
constexpr double kOmegaQP[4][4] = {
    {0, 0, -1, 0}, {0, 0, 0, -1}, {1, 0, 0, 0}, {0, 1, 0, 0}};

// Primitive of a closed 2-form vanishing on {z1=0}, via the homotopy that
// scales the fast pair: sigma_j = sum_{i in fast} z_i * I_t[tau_ij], with the
// t-integral acting monomial-wise as 1/(fast_deg + 1 + [j fast]).
std::array<Jet4, 4> homotopy_primitive(const std::array<std::array<Jet4, 4>, 4>& tau, int fcap,
                                       int scap) {
  std::array<Jet4, 4> sigma;
  for (int j = 0; j < 4; ++j) sigma[j] = Jet4(fcap, scap);
  for (int j = 0; j < 4; ++j) {
    int jfast = j < 2 ? 1 : 0;
    for (int i = 0; i < 2; ++i) {  // fast rows only
      const Jet4& t = tau[i][j];
      for (int a = 0; a <= fcap; ++a)
        for (int b = 0; a + b <= fcap; ++b)
          for (int cs = 0; cs <= scap; ++cs)
            for (int ds = 0; cs + ds <= scap; ++ds) {
              double v = t.get(a, b, cs, ds);
              if (v == 0.0) continue;
              double w = v / double(a + b + 1 + jfast);
              if (i == 0)
                sigma[j].add(a + 1, b, cs, ds, w);
              else
                sigma[j].add(a, b + 1, cs, ds, w);
            }
    }
  }
  return sigma;
}

}  // namespace

Vec4 SymplecticChartJet::eval(const Vec4& z) const {
  Vec4 w;
  for (int i = 0; i < 4; ++i) w(i) = psi[i].eval(z(0), z(1), z(2) - z2_0.x(), z(3) - z2_0.y());
  return w;
}

Mat4 SymplecticChartJet::jacobian(const Vec4& z) const {
  Mat4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      m(i, j) = dpsi[i][j].eval(z(0), z(1), z(2) - z2_0.x(), z(3) - z2_0.y());
  return m;
}

Vec4 SymplecticChartJet::invert(const Vec4& w) const {
  Vec4 z;
  z << 0.0, 0.0, z2_0.x(), z2_0.y();
  // crude slow seed from the position components: x2 = q1
  z(2) = w(0);
  for (int it = 0; it < 80; ++it) {
    Vec4 f = eval(z) - w;
    if (f.norm() < 1e-13 * (1.0 + w.norm())) return z;
    Mat4 j = jacobian(z);
    Vec4 step = j.fullPivLu().solve(f);
    z -= step;
    if (step.norm() < 1e-15) return z;
  }
  if ((eval(z) - w).norm() > 1e-10 * (1.0 + w.norm()))
    throw std::runtime_error("chart jet inversion did not converge");
  return z;
}

std::shared_ptr<const SymplecticChartJet> build_chart_jet(const MagneticField& field, int fcap,
                                                          int scap,
                                                          std::optional<Vec2> basepoint) {
  const Poly2* bp = field.poly();
  if (!bp)
    throw std::invalid_argument(
        "chart jet extraction needs a polynomial field descriptor");

  auto cj = std::make_shared<SymplecticChartJet>();
  cj->fcap = fcap;
  cj->scap = scap;
  cj->q0 = basepoint ? *basepoint : field.argmin_on_domain();
  cj->b0 = field.eval(cj->q0);

  // chart image of the basepoint: (q1, int_0^{q2} B(q1,s) ds)
  Poly2 xi2_poly = bp->integrate_y();
  cj->z2_0 = Vec2(cj->q0.x(), xi2_poly.eval(cj->q0));

  // --- slow jets of the inverse chart at z2_0 ---------------------------
  // The normal slow pair reflects the second chart coordinate about the
  // basepoint: s2 = -(xi2 - xi2_0). The explicit chart pairs the embedded
  // tangent vectors with the opposite orientation to the fast frame, and the
  // reflection restores one symplectic convention across both pairs.
  // q1 = x2; q2 solves xi2_poly(q1, q2) = xi2_0 - s2, Newton in jet space.
  Jet4 s1 = Jet4::variable(2, fcap, scap);
  Jet4 s2 = Jet4::variable(3, fcap, scap);
  Jet4 q1_jet = Jet4::constant(cj->q0.x(), fcap, scap) + s1;
  Jet4 q2_jet = Jet4::constant(cj->q0.y(), fcap, scap);
  {
    Jet4 xi2_target = Jet4::constant(cj->z2_0.y(), fcap, scap) - s2;
    for (int it = 0; it <= scap + 2; ++it) {
      Jet4 f = Jet4::compose_poly2(xi2_poly, q1_jet, q2_jet) - xi2_target;
      if (f.max_abs_coeff() < 1e-14 * (1.0 + std::abs(cj->z2_0.y()))) break;
      // divide by d xi2 / d q2 = B(q1,q2), inverted as a series around b at q0
      Jet4 bq = Jet4::compose_poly2(*bp, q1_jet, q2_jet);
      double bc = bq.get(0, 0, 0, 0);
      Jet4 dev = bq;
      dev.add(0, 0, 0, 0, -bc);
      Jet4 binv = Jet4::compose_univariate(reciprocal_series(bc, fcap + scap), dev);
      q2_jet -= f * binv;
    }
  }

  // --- frame ingredients as slow jets -----------------------------------
  Jet4 b_jet = Jet4::compose_poly2(*bp, q1_jet, q2_jet);
  cj->b_slow = b_jet;
  Jet4 b_dev = b_jet;
  b_dev.add(0, 0, 0, 0, -cj->b0);
  Jet4 inv_sqrt_b = Jet4::compose_univariate(inv_sqrt_series(cj->b0, fcap + scap), b_dev);

  // landau_x gauge: A = (0, int_0^{q1} B) and its tangent map
  Poly2 a2_poly = bp->integrate_x();
  Poly2 da2_dq2 = a2_poly.dy();
  Jet4 a1_jet = Jet4::constant(0.0, fcap, scap);
  Jet4 a2_jet = Jet4::compose_poly2(a2_poly, q1_jet, q2_jet);
  // transposed tangent map columns: tA e1 = (dA1/dq1, dA1/dq2) = (0, 0),
  // tA e2 = (dA2/dq1, dA2/dq2) = (B, dA2/dq2)
  Jet4 ta_e2_1 = b_jet;
  Jet4 ta_e2_2 = Jet4::compose_poly2(da2_dq2, q1_jet, q2_jet);

  // u1 = (e1, tA e1)/sqrt(B), v1 = (e2, tA e2)/sqrt(B) with B > 0
  std::array<Jet4, 4> u1;
  u1[0] = inv_sqrt_b;
  u1[1] = Jet4::constant(0.0, fcap, scap);
  u1[2] = Jet4::constant(0.0, fcap, scap);
  u1[3] = Jet4::constant(0.0, fcap, scap);
  std::array<Jet4, 4> v1;
  v1[0] = Jet4::constant(0.0, fcap, scap);
  v1[1] = inv_sqrt_b;
  v1[2] = ta_e2_1 * inv_sqrt_b;
  v1[3] = ta_e2_2 * inv_sqrt_b;
  std::array<Jet4, 4> jt = {q1_jet, q2_jet, a1_jet, a2_jet};

  // --- fast-degree correction of the bundle map -------------------------
  Jet4 x1 = Jet4::variable(0, fcap, scap);
  Jet4 xi1 = Jet4::variable(1, fcap, scap);
  std::array<Jet4, 4> V;  // accumulated displacement, composed iteratively
  for (auto& v : V) v = Jet4(fcap, scap);

  auto assemble = [&](const std::array<Jet4, 4>& disp) {
    std::array<Jet4, 4> out;
    std::array<Jet4, 4> slow_disp = {Jet4(fcap, scap), Jet4(fcap, scap), disp[2], disp[3]};
    Jet4 X1 = x1 + disp[0];
    Jet4 Xi1 = xi1 + disp[1];
    for (int i = 0; i < 4; ++i) {
      Jet4 j0 = jt[i].compose_shifted(slow_disp);
      Jet4 uu = u1[i].compose_shifted(slow_disp);
      Jet4 vv = v1[i].compose_shifted(slow_disp);
      out[i] = j0 + X1 * uu + Xi1 * vv;
    }
    return out;
  };

  cj->psi = assemble(V);
  double defect = 0.0;
  for (int iter = 0; iter <= fcap + 1; ++iter) {
    // pullback defect tau = J^T Omega J - Omega
    std::array<std::array<Jet4, 4>, 4> J;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) J[i][j] = cj->psi[i].derivative(j);
    std::array<std::array<Jet4, 4>, 4> tau;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) tau[i][j] = Jet4(fcap, scap);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        Jet4 acc(fcap, scap);
        for (int k = 0; k < 4; ++k)
          for (int l = 0; l < 4; ++l) {
            if (kOmegaQP[k][l] == 0.0) continue;
            acc += (J[k][i] * J[l][j]) * kOmegaQP[k][l];
          }
        Jet4 base = Jet4::constant(kOmega[i][j], fcap, scap);
        tau[i][j] = acc - base;
        tau[j][i] = tau[i][j] * -1.0;
      }
    defect = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        // coefficients near the cap edge are truncation artifacts; the loop
        // drives the reliable degrees to roundoff
        for (int fd = 0; fd <= fcap - 3; ++fd)
          defect = std::max(defect, tau[i][j].max_abs_fast_degree(fd));
    if (defect < 1e-12) break;

    std::array<Jet4, 4> sigma = homotopy_primitive(tau, fcap, scap);
    // delta V = -Omega sigma (Omega^{-1} = -Omega)
    std::array<Jet4, 4> dv;
    for (int i = 0; i < 4; ++i) {
      dv[i] = Jet4(fcap, scap);
      for (int j = 0; j < 4; ++j)
        if (kOmega[i][j] != 0.0) dv[i] += sigma[j] * (-kOmega[i][j]);
    }
    // psi <- psi o (Id + dv); accumulate V the same way so psi stays exactly
    // the assembled composition
    for (int i = 0; i < 4; ++i) {
      Jet4 vi = V[i].compose_shifted(dv);
      V[i] = vi + dv[i];
    }
    cj->psi = assemble(V);
  }
  cj->defect_after = defect;

  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) cj->dpsi[i][j] = cj->psi[i].derivative(j);

  // --- Taylor series of H o psi (A1 = 0 in landau_x) ----------------------
  Jet4 aq2 = Jet4::compose_poly2(a2_poly, cj->psi[0], cj->psi[1]);
  Jet4 d1 = cj->psi[2];
  Jet4 d2 = cj->psi[3] - aq2;
  cj->h_hat = d1 * d1 + d2 * d2;

  return cj;
}

}  // namespace magwell
