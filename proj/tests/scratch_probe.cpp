// temporary diagnostic probe, not part of the suite
#include <cstdio>

#include "magwell/harness.hpp"
#include "magwell/symflow.hpp"

using namespace magwell;

int main() {
  MagneticField field = MagneticField::fig2();
  VectorPotential pot = build_potential(field);
  printf("fig2 B(0,0)=%g B(1,0)=%g argmin=(%g,%g)\n", field.eval(Vec2(0, 0)),
         field.eval(Vec2(1, 0)), field.argmin_on_domain().x(), field.argmin_on_domain().y());

  auto cj = build_chart_jet(field, 10, 8);
  printf("chart z2_0=(%g,%g) b0=%g defect_after=%.3e\n", cj->z2_0.x(), cj->z2_0.y(), cj->b0,
         cj->defect_after);
  printf("h_hat deg0=%.3e deg1=%.3e\n", cj->h_hat.max_abs_fast_degree(0) /* includes slow */,
         cj->h_hat.max_abs_fast_degree(1));
  printf("h_hat x1^2 coeff=%g xi1^2=%g x1 xi1=%.3e (B0=2)\n", cj->h_hat.get(2, 0, 0, 0),
         cj->h_hat.get(0, 2, 0, 0), cj->h_hat.get(1, 1, 0, 0));

  // numeric check: H(psi(z)) vs h_hat(z)
  Vec4 z;
  z << 0.05, -0.04, cj->z2_0.x() + 0.1, cj->z2_0.y() - 0.12;
  Vec4 w = cj->eval(z);
  PhaseState ps{Vec2(w(0), w(1)), Vec2(w(2), w(3))};
  double hnum = hamiltonian(field, pot, ps);
  double hjet = cj->h_hat.eval(z(0), z(1), z(2) - cj->z2_0.x(), z(3) - cj->z2_0.y());
  printf("H(psi(z)) = %.15g, jet = %.15g, diff = %.3e\n", hnum, hjet, hnum - hjet);

  // symplecticity of the corrected chart at a sample point
  Mat4 J = cj->jacobian(z);
  printf("pullback defect at z: %.3e\n",
         (J.transpose() * omega_qp_matrix() * J - omega_normal_matrix()).norm());

  // inversion round trip
  Vec4 zz = cj->invert(w);
  printf("invert roundtrip err %.3e\n", (zz - z).norm());

  // birkhoff
  NfBundle nb = build_nf(field, 8, 6);
  printf("kappa terms=%zu tau terms=%zu star_rt=%.3e\n", nb.nf.kappa.c.size(), nb.nf.tau.c.size(),
         nb.star_roundtrip);
  EigCoeffs eig = eigenvalue_expansion(nb.nf, field);
  printf("B_min=%g c0=%g c1=%g\n", eig.b_min, eig.c0, eig.c1);

  for (int N : {2, 3, 4}) {
    TruncatedTransform tr(field, nb.nf, N);
    double e = residual_decay_exponent(field, pot, tr, nb.nf, N, Vec2(0, 0));
    double e2 = residual_decay_exponent(field, pot, tr, nb.nf, N, Vec2(0.03, 0.02));
    printf("order %d residual exponent %.3f / offset %.3f (want >= %.1f)\n", N, e, e2, N + 0.7);
  }
  return 0;
}
