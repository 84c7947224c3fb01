#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "magwell/benchlib.hpp"
#include "magwell/specwell.hpp"

using namespace magwell;

namespace {
Eigen::VectorXcd random_vec(int n, Lcg64& rng) {
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  v.normalize();
  return v;
}
}  // namespace

TEST_CASE("assembled operator is hermitian and nonnegative") {
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  DiscreteOperator op = assemble_magnetic_laplacian(f, pot, 0.05, Box{-1.5, 1.5}, 64);
  Lcg64 rng(5);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXcd u = random_vec(op.dim(), rng), v = random_vec(op.dim(), rng);
    cplx a = u.dot(op.apply(v)), b = op.apply(u).dot(v);
    CHECK(std::abs(a - b) < 1e-12);
    CHECK(u.dot(op.apply(u)).real() >= 0.0);
  }
  CHECK_THROWS_AS(assemble_magnetic_laplacian(f, pot, 0.05, Box{-1.5, 1.5}, 32),
                  std::invalid_argument);
  // box too small: the well region touches the boundary
  CHECK_THROWS_AS(assemble_magnetic_laplacian(f, pot, 0.05, Box{-0.5, 0.5}, 64),
                  std::invalid_argument);
}

TEST_CASE("free laplacian sub-check: lowest dirichlet eigenvalue") {
  // constant field with phases forced to one: build from a tiny hbar-scaled
  // identity-gauge by using a potential that vanishes (constant zero gauge is
  // not a valid potential for B != 0, so assemble what the stencil gives for
  // A = 0 via a custom operator): here we exercise the scaling on the
  // magnetic operator with B -> 0 limit emulated by hbar-scaled phases
  double hbar = 0.05, L = 1.0;
  int n = 96;
  Grid2 grid{Box{0.0, L}, n, L / (n + 1)};
  std::vector<Eigen::Triplet<cplx>> trip;
  double kin = hbar * hbar / (grid.h * grid.h);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      trip.emplace_back(grid.index(i, j), grid.index(i, j), cplx(4 * kin, 0));
      if (i + 1 < n) {
        trip.emplace_back(grid.index(i, j), grid.index(i + 1, j), cplx(-kin, 0));
        trip.emplace_back(grid.index(i + 1, j), grid.index(i, j), cplx(-kin, 0));
      }
      if (j + 1 < n) {
        trip.emplace_back(grid.index(i, j), grid.index(i, j + 1), cplx(-kin, 0));
        trip.emplace_back(grid.index(i, j + 1), grid.index(i, j), cplx(-kin, 0));
      }
    }
  DiscreteOperator op;
  op.hbar = hbar;
  op.grid = grid;
  op.matrix.resize(n * n, n * n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  SpectralResult sr = lowest_eigenpairs(op, 1);
  double expected = hbar * hbar * 2.0 * M_PI * M_PI / (L * L);
  CHECK(sr.eigenvalues[0] == doctest::Approx(expected).epsilon(2e-3));
}

TEST_CASE("constant field: lowest eigenvalue approaches hbar B") {
  MagneticField c = MagneticField::constant(1.0, Box{-2, 2});
  VectorPotential pot = build_potential(c);
  double hbar = 0.05;
  EigsOptions opts;
  opts.partner_n = 171;
  SpectralResult sr = lowest_eigenpairs(c, pot, hbar, Box{-2, 2}, 256, 1, opts);
  CHECK(sr.eigenvalues[0] == doctest::Approx(hbar).epsilon(0.01));
  // grid convergence: values at n and 1.5 n within the declared estimate
  CHECK(std::abs(sr.eigenvalues[0] - sr.eigenvalues_refined[0]) <=
        sr.discretization_error_estimate + 1e-15);
  // residual invariant
  CHECK(sr.residual_norms[0] < 1e-8);
}

TEST_CASE("landau levels cluster with flux-count degeneracy") {
  // oracle: bulk degeneracy of the first level is about B L^2 / (2 pi hbar);
  // a Dirichlet box also hosts edge states that fill the gap above the
  // cluster, so the count compares the tight cluster against the flux count
  double b0 = 2.0, hbar = 0.02, L = 1.0;
  MagneticField c = MagneticField::constant(b0, Box{-L / 2, L / 2});
  VectorPotential pot = build_potential(c);
  double flux_count = b0 * L * L / (2 * M_PI * hbar);
  int k = static_cast<int>(flux_count) + 4;
  DiscreteOperator op = assemble_magnetic_laplacian(c, pot, hbar, Box{-L / 2, L / 2}, 192);
  SpectralResult sr = lowest_eigenpairs(op, k);
  int tight = 0, band = 0;
  for (double l : sr.eigenvalues) {
    if (std::abs(l - hbar * b0) < 0.005 * hbar * b0) ++tight;
    if (l < 2.0 * hbar * b0) ++band;  // below the midpoint to the next level
  }
  // the bulk cluster is sharp; edge states absorb the rest of the flux count
  CHECK(tight >= 4);
  CHECK(double(band) >= 0.5 * flux_count);
  CHECK(double(band) <= 1.05 * flux_count);
  CHECK(sr.eigenvalues.front() == doctest::Approx(hbar * b0).epsilon(0.01));
}

TEST_CASE("rayleigh quotients dominate the lowest eigenvalue") {
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  DiscreteOperator op = assemble_magnetic_laplacian(f, pot, 0.05, Box{-1.5, 1.5}, 96);
  SpectralResult sr = lowest_eigenpairs(op, 1);
  Lcg64 rng(9);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXcd v = random_vec(op.dim(), rng);
    CHECK(v.dot(op.apply(v)).real() >= sr.eigenvalues[0] - 1e-10);
  }
}

TEST_CASE("gauge invariance of the spectrum for the constant field") {
  MagneticField c = MagneticField::constant(1.0, Box{-1.5, 1.5});
  double hbar = 0.1;
  VectorPotential lx = build_potential(c, GaugeTag::landau_x);
  VectorPotential sym = build_potential(c, GaugeTag::symmetric);
  DiscreteOperator a = assemble_magnetic_laplacian(c, lx, hbar, Box{-1.5, 1.5}, 128);
  DiscreteOperator b = assemble_magnetic_laplacian(c, sym, hbar, Box{-1.5, 1.5}, 128);
  SpectralResult ra = lowest_eigenpairs(a, 5);
  SpectralResult rb = lowest_eigenpairs(b, 5);
  for (int i = 0; i < 5; ++i)
    CHECK(std::abs(ra.eigenvalues[i] - rb.eigenvalues[i]) <
          1e-8 * std::abs(ra.eigenvalues[i]));
}

TEST_CASE("weyl 1d quantizer: oscillator and constant symbols") {
  double hbar = 0.1;
  DiscreteOperator osc = weyl_quantize_1d(
      [](double x, double xi) { return x * x + xi * xi; }, hbar, -4.0, 4.0, 256, 2);
  SpectralResult sr = lowest_eigenpairs(osc, 5);
  for (int j = 0; j < 5; ++j)
    CHECK(sr.eigenvalues[j] == doctest::Approx(hbar * (2 * j + 1)).epsilon(1e-7));

  DiscreteOperator cst =
      weyl_quantize_1d([](double, double) { return 3.25; }, hbar, -2.0, 2.0, 64, 2);
  SpectralResult rc = lowest_eigenpairs(cst, 3);
  for (double l : rc.eigenvalues) CHECK(l == doctest::Approx(3.25).epsilon(1e-10));

  // aliasing: a symbol oscillating beyond the grid Nyquist must be rejected
  CHECK_THROWS_AS(weyl_quantize_1d([](double x, double) { return std::cos(400.0 * x); }, hbar,
                                   -2.0, 2.0, 64, 2),
                  std::runtime_error);
}

TEST_CASE("counting function and inertia counts agree") {
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  double hbar = 0.05;
  DiscreteOperator op = assemble_magnetic_laplacian(f, pot, hbar, Box{-1.5, 1.5}, 128);
  SpectralResult sr = lowest_eigenpairs(op, 8);
  // threshold in a spectral gap of the computed list
  double thr = 0.5 * (sr.eigenvalues[4] + sr.eigenvalues[5]);
  int direct = counting_function(sr, thr);
  CHECK(direct == 5);
  CHECK(count_below(op, thr) == 5);
  CHECK(counting_function(sr, 0.5 * sr.eigenvalues[0]) == 0);
}

TEST_CASE("localization profile: gaussian ground state of the constant field") {
  double b0 = 1.0, hbar = 0.05;
  MagneticField c = MagneticField::constant(b0, Box{-1.5, 1.5});
  VectorPotential pot = build_potential(c, GaugeTag::symmetric);
  DiscreteOperator op = assemble_magnetic_laplacian(c, pot, hbar, Box{-1.5, 1.5}, 192);
  EigsOptions opts;
  opts.want_vectors = true;
  SpectralResult sr = lowest_eigenpairs(op, 1, opts);
  // oracle: |psi|^2 = exp(-B r^2 / (2 hbar)) / (2 pi hbar / B), a gaussian of
  // per-axis deviation width = sqrt(hbar/B); the mass outside radius R is
  // exp(-R^2 / (2 width^2))
  double width = std::sqrt(hbar / b0);
  auto mass_outside = [&](double radius) {
    double m = 0.0;
    for (int i = 0; i < op.grid.n; ++i)
      for (int j = 0; j < op.grid.n; ++j) {
        Vec2 q(op.grid.x(i), op.grid.y(j));
        if (q.norm() > radius) m += std::norm(sr.eigenvectors[0](op.grid.index(i, j)));
      }
    return m;
  };
  double m5 = mass_outside(5.0 * width);
  CHECK(m5 == doctest::Approx(std::exp(-12.5)).epsilon(1.0));
  CHECK(mass_outside(5.0 * std::sqrt(2.0) * width) < 1e-8);

  // region threshold above max B on the box -> zero mass outside
  CHECK(localization_profile(sr.eigenvectors[0], op.grid, c, 10.0) == 0.0);
  Eigen::VectorXcd bad = sr.eigenvectors[0] * 2.0;
  CHECK_THROWS_AS(localization_profile(bad, op.grid, c, 1.5), std::invalid_argument);
}

TEST_CASE("gap statistics basics and window solver") {
  SpectralResult fake;
  fake.eigenvalues = {1.0, 1.25, 1.7, 2.0};
  auto gaps = gap_statistics(fake, 0.9, 2.1);
  REQUIRE(gaps.size() == 3);
  CHECK(gaps[0] == doctest::Approx(0.25));
  CHECK(gap_statistics(fake, 5.0, 6.0).empty());

  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  double hbar = 0.05;
  DiscreteOperator op = assemble_magnetic_laplacian(f, pot, hbar, Box{-1.5, 1.5}, 128);
  SpectralResult sr = eigenpairs_in_window(op, 2.3 * hbar, 2.7 * hbar, {});
  int inertia = count_below(op, 2.7 * hbar) - count_below(op, 2.3 * hbar);
  CHECK(static_cast<int>(sr.eigenvalues.size()) == inertia);
  for (double l : sr.eigenvalues) {
    CHECK(l >= 2.3 * hbar);
    CHECK(l <= 2.7 * hbar);
  }
}
