#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <tuple>

#include "magwell/benchlib.hpp"
#include "magwell/harness.hpp"

using namespace magwell;
using std::complex;

namespace {

// ---------------------------------------------------------------------------
// independent oracle: star product on the complex monomial basis z^m zbar^n
// hbar^l, written directly from the bidifferential expansion. This is a
// deliberately separate code path from the library's real-basis product.
using CKeyT = std::tuple<int, int, int>;
using CPoly = std::map<CKeyT, complex<double>>;

double ofall(int n, int k) {
  double r = 1;
  for (int i = 0; i < k; ++i) r *= n - i;
  return r;
}

CPoly cstar(const CPoly& a, const CPoly& b, int cap) {
  CPoly out;
  for (const auto& [ka, va] : a)
    for (const auto& [kb, vb] : b) {
      auto [m1, n1, l1] = ka;
      auto [m2, n2, l2] = kb;
      for (int r = 0; r <= std::min(n1, m2); ++r)
        for (int s = 0; s <= std::min(m1, n2); ++s) {
          // hbar^r (-hbar)^s / (r! s!) (d_zbar^r d_z^s a)(d_z^r d_zbar^s b)
          double w = ofall(n1, r) * ofall(m1, s) * ofall(m2, r) * ofall(n2, s) /
                     (std::tgamma(r + 1) * std::tgamma(s + 1));
          if (s % 2 == 1) w = -w;
          CKeyT k{m1 - s + m2 - r, n1 - r + n2 - s, l1 + l2 + r + s};
          if (std::get<0>(k) + std::get<1>(k) + 2 * std::get<2>(k) > cap) continue;
          out[k] += va * vb * w;
        }
    }
  return out;
}

CPoly csub(CPoly a, const CPoly& b) {
  for (const auto& [k, v] : b) a[k] -= v;
  return a;
}

// library FormalSeries -> complex oracle basis (slow-independent series only)
CPoly to_cpoly(const FormalSeries& s) {
  CPoly out;
  for (const auto& [k, v] : s.c) {
    REQUIRE(k.g1 == 0);
    REQUIRE(k.g2 == 0);
    // x^a xi^b expanded through z = x + i xi
    for (int p = 0; p <= k.a; ++p)
      for (int q = 0; q <= k.b; ++q) {
        double ca = 1, cb = 1;
        for (int i = 1; i <= p; ++i) ca = ca * (k.a - p + i) / i;
        for (int i = 1; i <= q; ++i) cb = cb * (k.b - q + i) / i;
        complex<double> ii(0, 1);
        complex<double> coef = v * ca * cb * std::pow(0.5, k.a) *
                               std::pow(complex<double>(0, -0.5), k.b) *
                               (((k.b - q) % 2) ? -1.0 : 1.0);
        out[{p + q, k.a - p + k.b - q, k.l}] += coef;
      }
  }
  return out;
}

FormalSeries random_series(int n1, int n2, int maxdeg, Lcg64& rng, bool slow = true) {
  FormalSeries s(n1, n2, Vec2::Zero());
  for (int a = 0; a <= maxdeg; ++a)
    for (int b = 0; a + b <= maxdeg; ++b)
      for (int l = 0; a + b + 2 * l <= maxdeg; ++l)
        for (int g1 = 0; g1 <= (slow ? 2 : 0); ++g1)
          for (int g2 = 0; g1 + g2 <= (slow ? 2 : 0); ++g2)
            s.add_term(FSKey{a, b, l, g1, g2}, rng.uniform(-1, 1));
  return s;
}

}  // namespace

TEST_CASE("moyal: canonical pair commutator sign") {
  FormalSeries x(4, 0, Vec2::Zero()), xi(4, 0, Vec2::Zero());
  x.add_term(FSKey{1, 0, 0, 0, 0}, 1.0);
  xi.add_term(FSKey{0, 1, 0, 0, 0}, 1.0);
  FormalSeries comm = moyal(x, xi) - moyal(xi, x);
  // single term -i hbar under the sign convention anchored to
  // i hbar^-1 ad_{|z1|^2} = {|z1|^2, .}
  REQUIRE(comm.c.size() == 1);
  auto [k, v] = *comm.c.begin();
  CHECK(k.a == 0);
  CHECK(k.b == 0);
  CHECK(k.l == 1);
  CHECK(v.real() == 0.0);
  CHECK(v.imag() == doctest::Approx(-1.0));
}

TEST_CASE("moyal: action square picks up the -hbar^2 correction") {
  FormalSeries I = fast_action_series(8, 0, Vec2::Zero());
  FormalSeries sq = moyal(I, I);
  // oracle: second bidifferential term computed by hand from P2
  // P2(a,b) = a_xx b_xixi - 2 a_xxi b_xxi + a_xixi b_xx = 8 for a = b = I,
  // with weight (1/2!) (hbar/2i)^2 -> -hbar^2
  CHECK(sq.eval(0.3, -0.2, 0, 0, 0.0).real() ==
        doctest::Approx(std::pow(0.3 * 0.3 + 0.2 * 0.2, 2)));
  FSKey hbar2{0, 0, 2, 0, 0};
  REQUIRE(sq.c.count(hbar2) == 1);
  CHECK(sq.c.at(hbar2).real() == doctest::Approx(-1.0));
  CHECK(sq.c.at(hbar2).imag() == 0.0);
}

TEST_CASE("moyal agrees with the independent complex-basis product") {
  Lcg64 rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    FormalSeries a = random_series(8, 0, 4, rng, false);
    FormalSeries b = random_series(8, 0, 3, rng, false);
    FormalSeries lib = moyal(a, b);
    CPoly oracle = cstar(to_cpoly(a), to_cpoly(b), 8);
    CPoly diff = csub(oracle, to_cpoly(lib));
    double worst = 0.0;
    for (const auto& [k, v] : diff) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("hbar -> 0 limit of the commutator is the Poisson bracket") {
  Lcg64 rng(23);
  for (int trial = 0; trial < 4; ++trial) {
    FormalSeries a = random_series(8, 4, 3, rng);
    FormalSeries b = random_series(8, 4, 3, rng);
    FormalSeries ad = ad_action(a, b);
    FormalSeries pb = poisson(a, b);
    // classical parts agree exactly; quantum corrections carry extra hbar^2
    double worst = 0.0;
    for (const auto& [k, v] : (ad - pb).c)
      if (k.l == 0) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-13);
  }
}

TEST_CASE("ad of the fast action: exact bracket, annihilation, Jacobi") {
  FormalSeries I = fast_action_series(8, 2, Vec2::Zero());
  FormalSeries x3(8, 2, Vec2::Zero());
  x3.add_term(FSKey{3, 0, 0, 0, 0}, 1.0);
  FormalSeries lhs = ad_action(I, x3);
  FormalSeries rhs = poisson(I, x3);
  CHECK((lhs - rhs).max_abs() < 1e-14);  // all Moyal corrections cancel

  Lcg64 rng(29);
  FormalSeries a = random_series(8, 2, 3, rng);
  CHECK(ad_action(a, a).max_abs() < 1e-13);

  // Jacobi identity on random cubic triples
  for (int trial = 0; trial < 3; ++trial) {
    FormalSeries f = random_series(8, 2, 3, rng);
    FormalSeries g = random_series(8, 2, 3, rng);
    FormalSeries h = random_series(8, 2, 3, rng);
    FormalSeries jac = ad_action(f, ad_action(g, h)) + ad_action(g, ad_action(h, f)) +
                       ad_action(h, ad_action(f, g));
    CHECK(jac.max_abs() < 1e-11);
  }
}

TEST_CASE("grading closure: products are exactly graded") {
  Lcg64 rng(31);
  for (int dj = 2; dj <= 4; ++dj)
    for (int dk = 2; dk <= 4; ++dk) {
      FormalSeries a(8, 2, Vec2::Zero()), b(8, 2, Vec2::Zero());
      for (int l = 0; 2 * l <= dj; ++l)
        if ((dj - 2 * l) >= 0) a.add_term(FSKey{dj - 2 * l, 0, l, 1, 0}, rng.uniform(-1, 1));
      for (int l = 0; 2 * l <= dk; ++l)
        if ((dk - 2 * l) >= 0) b.add_term(FSKey{0, dk - 2 * l, l, 0, 1}, rng.uniform(-1, 1));
      FormalSeries p = moyal(a, b);
      for (const auto& [k, v] : p.c) {
        if (v == 0.0) continue;
        CHECK(k.degree() == dj + dk);
      }
    }
}

TEST_CASE("series from hamiltonian: constant field is exactly the action") {
  MagneticField c = MagneticField::constant(1.0);
  auto cj = build_chart_jet(c, 10, 8);
  FormalSeries s = series_from_hamiltonian(c, cj, 8, 6);
  FormalSeries I = fast_action_series(8, 6, cj->z2_0);
  CHECK((s - I).max_abs() < 1e-14);
}

TEST_CASE("series from hamiltonian: degree-2 block and fd-jet oracle") {
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  auto cj = build_chart_jet(f, 10, 8);
  FormalSeries s = series_from_hamiltonian(f, cj, 8, 6);
  double b0 = f.eval(cj->q0);
  CHECK(s.c.at(FSKey{2, 0, 0, 0, 0}).real() == doctest::Approx(b0).epsilon(1e-12));
  CHECK(s.c.at(FSKey{0, 2, 0, 0, 0}).real() == doctest::Approx(b0).epsilon(1e-12));
  CHECK(std::abs(s.eval(0, 0, 0, 0, 0)) < 1e-14);

  // independent jet oracle: high-order central differences of the numeric
  // map z -> H(psi(z)) against low-order series coefficients
  auto F = [&](double x1, double xi1, double s1, double s2) {
    Vec4 z;
    z << x1, xi1, cj->z2_0.x() + s1, cj->z2_0.y() + s2;
    Vec4 w = cj->eval(z);
    PhaseState ps{Vec2(w(0), w(1)), Vec2(w(2), w(3))};
    return hamiltonian(f, pot, ps);
  };
  double h = 0.04;
  // d^3/dx1^3 / 6 -> coefficient of x1^3
  double d3 = (F(2 * h, 0, 0, 0) - 2 * F(h, 0, 0, 0) + 2 * F(-h, 0, 0, 0) - F(-2 * h, 0, 0, 0)) /
              (2 * h * h * h);
  auto it = s.c.find(FSKey{3, 0, 0, 0, 0});
  double coef = it == s.c.end() ? 0.0 : it->second.real();
  CHECK(coef == doctest::Approx(d3 / 6.0).epsilon(5e-3));
  // mixed fast-slow: coefficient of x1^2 s1 = d^3/(dx1^2 ds1) / 2
  double dm = (F(h, 0, h, 0) - 2 * F(0, 0, h, 0) + F(-h, 0, h, 0) -
               (F(h, 0, -h, 0) - 2 * F(0, 0, -h, 0) + F(-h, 0, -h, 0))) /
              (2 * h * h * h);
  auto it2 = s.c.find(FSKey{2, 0, 0, 1, 0});
  double coef2 = it2 == s.c.end() ? 0.0 : it2->second.real();
  CHECK(coef2 == doctest::Approx(dm / 2.0).epsilon(5e-3));
}

TEST_CASE("birkhoff: zero perturbation gives zero generator and remainder") {
  MagneticField c = MagneticField::constant(2.0);
  NfBundle nb = build_nf(c, 8, 6);
  CHECK(nb.nf.kappa.max_abs() == 0.0);
  CHECK(nb.nf.tau.max_abs() == 0.0);
  CHECK(nb.star_roundtrip == 0.0);
}

TEST_CASE("birkhoff: cubic perturbation against the averaging oracle") {
  // input: B = 1 with an added r x1^3, no slow dependence
  const double r = 0.37;
  const int n1 = 8, n2 = 2;
  FormalSeries in(n1, n2, Vec2::Zero());
  in.add_term(FSKey{2, 0, 0, 0, 0}, 1.0);
  in.add_term(FSKey{0, 2, 0, 0, 0}, 1.0);
  in.add_term(FSKey{3, 0, 0, 0, 0}, r);
  NormalFormResult nf = birkhoff(in);

  // hand-derived resonant quartic: kappa_4 classical = -(15/32) r^2 I^2
  auto it = nf.kappa_action.find({0, 2});
  REQUIRE(it != nf.kappa_action.end());
  CHECK(it->second.get(0, 0) == doctest::Approx(-15.0 / 32.0 * r * r).epsilon(1e-12));

  // independent oracle: one homological step in the complex basis with the
  // stand-alone star product, reproducing all hbar content of degree 4
  CPoly H0{{{1, 1, 0}, 1.0}};
  CPoly R3;
  R3[{3, 0, 0}] = r / 8.0;
  R3[{2, 1, 0}] = 3.0 * r / 8.0;
  R3[{1, 2, 0}] = 3.0 * r / 8.0;
  R3[{0, 3, 0}] = r / 8.0;
  CPoly tau;
  for (const auto& [k, v] : R3) {
    auto [m, n, l] = k;
    tau[k] = v / (complex<double>(0, 2.0 * (m - n)));
  }
  auto ad = [&](const CPoly& a, const CPoly& b) {
    CPoly comm = csub(cstar(a, b, 10), cstar(b, a, 10));
    CPoly out;
    for (const auto& [k, v] : comm) {
      // the pointwise channel cancels up to summation-order roundoff
      if (std::abs(v) < 1e-13) continue;
      auto [m, n, l] = k;
      REQUIRE(l >= 1);
      out[{m, n, l - 1}] += complex<double>(0, 1) * v;
    }
    return out;
  };
  CPoly W{{{1, 1, 0}, 1.0}};
  for (const auto& [k, v] : R3) W[k] += v;
  CPoly total = W;
  CPoly term = W;
  for (int kk = 1; kk <= 6; ++kk) {
    term = ad(tau, term);
    for (auto& [k, v] : term) v /= double(kk);
    bool any = false;
    for (const auto& [k, v] : term) {
      total[k] += v;
      any = any || std::abs(v) > 1e-15;
    }
    if (!any) break;
  }
  // degree-4 resonant part of the oracle vs the library's kappa table
  for (const auto& [lm, poly] : nf.kappa_action) {
    auto [l, m] = lm;
    if (2 * l + 2 * m != 4) continue;
    auto jt = total.find({m, m, l});
    double oracle_v = jt == total.end() ? 0.0 : jt->second.real();
    CHECK(poly.get(0, 0) == doctest::Approx(oracle_v).epsilon(1e-10));
  }

  // the remainder commutes with H0 in the library algebra
  FormalSeries h0(n1, n2, Vec2::Zero());
  h0.add_term(FSKey{2, 0, 0, 0, 0}, 1.0);
  h0.add_term(FSKey{0, 2, 0, 0, 0}, 1.0);
  CHECK((moyal(nf.kappa, h0) - moyal(h0, nf.kappa)).max_abs() < 1e-13);
  CHECK(nf.kappa.is_resonant(1e-13));
  // kappa sits in O_3
  for (const auto& [k, v] : nf.kappa.c) CHECK(k.degree() >= 3);
}

TEST_CASE("birkhoff on fig2: exactness identities at (8,6)") {
  MagneticField f = MagneticField::fig2();
  NfBundle nb = build_nf(f, 8, 6);
  double scale = std::max(1.0, nb.nf.kappa.max_abs());

  FormalSeries h0(8, 6, nb.nf.z2_0);
  for (int g1 = 0; g1 <= 6; ++g1)
    for (int g2 = 0; g1 + g2 <= 6; ++g2) {
      double v = nb.nf.b_jet.get(g1, g2);
      if (v != 0.0) {
        h0.add_term(FSKey{2, 0, 0, g1, g2}, v);
        h0.add_term(FSKey{0, 2, 0, g1, g2}, v);
      }
    }
  FormalSeries comm = moyal(nb.nf.kappa, h0) - moyal(h0, nb.nf.kappa);
  CHECK(comm.max_abs() / scale < 1e-12);
  CHECK(nb.nf.kappa.is_resonant(1e-12 * scale));
  CHECK(nb.star_roundtrip / scale < 1e-12);

  // f(phi(q), 0) = B(q) on sample points near the well, to the slow
  // truncation order (the jet remainder grows with the offset)
  DarbouxChart chart = darboux_chart(f);
  CHECK(nb.nf.f_value(nb.nf.z2_0, 0.0) == doctest::Approx(2.0).epsilon(1e-13));
  for (double t : {0.12, 0.25}) {
    Vec2 q(t, -0.6 * t);
    Vec2 z2 = nb.chart->normal_slow_from_chart(chart.forward(q));
    CHECK(nb.nf.f_value(z2, 0.0) == doctest::Approx(f.eval(q)).epsilon(1e-5));
  }
}

TEST_CASE("star reordering: quartic action example and round trip") {
  // kappa = |z1|^4 re-expands as (|z1|^2)*2 + hbar^2
  MagneticField c = MagneticField::constant(1.0);
  auto cj = build_chart_jet(c, 10, 8);
  FormalSeries in = series_from_hamiltonian(c, cj, 8, 6);
  NormalFormResult nf = birkhoff(in, cj);
  nf.kappa_action.clear();
  SlowPoly one(6);
  one.add(0, 0, 1.0);
  nf.kappa_action.emplace(std::make_pair(0, 2), one);
  double err = reorder_star_powers(nf);
  CHECK(err < 1e-14);
  REQUIRE(nf.star_coeffs.count({0, 2}) == 1);
  REQUIRE(nf.star_coeffs.count({2, 0}) == 1);
  CHECK(nf.star_coeffs.at({0, 2}).get(0, 0) == doctest::Approx(1.0));
  CHECK(nf.star_coeffs.at({2, 0}).get(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("eigenvalue expansion: closed-form c1 and the degenerate error") {
  MagneticField f = MagneticField::fig2();
  NfBundle nb = build_nf(f, 6, 6);
  EigCoeffs e = eigenvalue_expansion(nb.nf, f);
  CHECK(e.b_min == doctest::Approx(2.0));
  CHECK(e.c1 == doctest::Approx(0.5).epsilon(1e-10));

  MagneticField c = MagneticField::constant(1.5);
  NfBundle nc = build_nf(c, 6, 6);
  CHECK_THROWS_AS(eigenvalue_expansion(nc.nf, c), std::invalid_argument);

  // isotropic well 2 + x^2 + y^2 also has c1 = 1/2
  MagneticField r = MagneticField::radial({2.0, 1.0}, Box{-2, 2});
  NfBundle nr = build_nf(r, 6, 6);
  CHECK(eigenvalue_expansion(nr.nf, r).c1 == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("transform: surface mapping, exact constant case, inversion") {
  MagneticField c = MagneticField::constant(1.0);
  NfBundle nbc = build_nf(c, 8, 6);
  TruncatedTransform trc(c, nbc.nf, 2);
  VectorPotential potc = build_potential(c);
  Lcg64 rng(41);
  for (int i = 0; i < 5; ++i) {
    NormalState z;
    z.z1 = std::polar(0.3 * rng.uniform(), 2 * M_PI * rng.uniform());
    z.z2 = nbc.nf.z2_0 + Vec2(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
    Vec4 w = trc.forward(z);
    PhaseState ps{Vec2(w(0), w(1)), Vec2(w(2), w(3))};
    CHECK(hamiltonian(c, potc, ps) == doctest::Approx(std::norm(z.z1)).epsilon(1e-12));
    NormalState back = trc.inverse(w);
    CHECK(std::abs(back.z1 - z.z1) < 1e-9);
    CHECK((back.z2 - z.z2).norm() < 1e-9);
  }

  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  NfBundle nb = build_nf(f, 8, 6);
  TruncatedTransform tr(f, nb.nf, 4);
  // the plane z1 = 0 lands on the zero-energy surface
  for (double s : {-0.2, 0.0, 0.15}) {
    NormalState z;
    z.z1 = 0.0;
    z.z2 = nb.nf.z2_0 + Vec2(s, -s);
    Vec4 w = tr.forward(z);
    PhaseState ps{Vec2(w(0), w(1)), Vec2(w(2), w(3))};
    CHECK(hamiltonian(f, pot, ps) < 1e-14);
  }
  // forward-inverse round trip within |z1| <= 0.3
  for (int i = 0; i < 5; ++i) {
    NormalState z;
    z.z1 = std::polar(0.3 * rng.uniform(), 2 * M_PI * rng.uniform());
    z.z2 = nb.nf.z2_0 + Vec2(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
    Vec4 w = tr.forward(z);
    NormalState back = tr.inverse(w);
    CHECK(std::abs(back.z1 - z.z1) < 1e-8);
    CHECK((back.z2 - z.z2).norm() < 1e-8);
  }
}

TEST_CASE("transform: residual order improves with N") {
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  NfBundle nb = build_nf(f, 8, 6);
  double prev = 0.0;
  for (int N : {2, 4}) {
    TruncatedTransform tr(f, nb.nf, N);
    double e = residual_decay_exponent(f, pot, tr, nb.nf, N, Vec2(0.0, 0.0));
    CHECK(e >= N + 0.7);
    CHECK(e > prev);
    prev = e;
  }
}
