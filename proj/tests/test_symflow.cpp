#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "magwell/benchlib.hpp"
#include "magwell/harness.hpp"
#include "magwell/symflow.hpp"

using namespace magwell;

TEST_CASE("hamiltonian basics") {
  MagneticField c = MagneticField::constant(1.0);
  VectorPotential sym = build_potential(c, GaugeTag::symmetric);
  // on the zero-energy surface
  CHECK(hamiltonian(c, sym, sigma_embed(c, sym, Vec2(0.7, -0.2))) == 0.0);
  // A(0,0) = 0
  PhaseState s{Vec2(0, 0), Vec2(0.5, 0)};
  CHECK(hamiltonian(c, sym, s) == doctest::Approx(0.25));
  // kinetic identity H = |qdot|^2 / 4
  Vec2 v = velocity(sym, s);
  CHECK(hamiltonian(c, sym, s) == doctest::Approx(v.squaredNorm() / 4));
}

TEST_CASE("constant field: circle of radius |v|/2B, period pi, stationary center") {
  MagneticField c = MagneticField::constant(1.0);
  VectorPotential sym = build_potential(c, GaugeTag::symmetric);
  Vec2 q0(0.5, 0.0), v0(0.0, -1.0);
  PhaseState s0{q0, 0.5 * v0 + sym.eval(q0)};
  Trajectory tr = integrate_H(c, sym, s0, 20.0, 1e-3);
  GuidingRecord g0 = guiding_center(c, sym, tr.states.front());
  CHECK(g0.radius == doctest::Approx(0.5));
  CHECK(g0.center.norm() < 1e-12);
  double cdrift = 0.0, rerr = 0.0;
  for (const PhaseState& s : tr.states) {
    GuidingRecord g = guiding_center(c, sym, s);
    cdrift = std::max(cdrift, (g.center - g0.center).norm());
    rerr = std::max(rerr, std::abs((s.q - g.center).norm() - 0.5));
    CHECK(g.action == doctest::Approx(hamiltonian(c, sym, s) / 1.0));
  }
  CHECK(cdrift < 1e-10);
  CHECK(rerr < 1e-9);

  // angular velocity -2B by phase fit
  double winding = 0.0, prev = 0.0;
  bool first = true;
  for (const PhaseState& s : tr.states) {
    Vec2 rel = s.q - g0.center;
    double th = std::atan2(rel.y(), rel.x());
    if (!first) {
      double d = th - prev;
      while (d > M_PI) d -= 2 * M_PI;
      while (d < -M_PI) d += 2 * M_PI;
      winding += d;
    }
    prev = th;
    first = false;
  }
  double omega = winding / 20.0;
  CHECK(omega == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("stationary point on the zero-energy surface") {
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  PhaseState s0 = sigma_embed(f, pot, Vec2(0.4, 0.1));
  Trajectory tr = integrate_H(f, pot, s0, 1.0, 1e-3);
  CHECK((tr.states.back().q - s0.q).norm() < 1e-12);
  CHECK((tr.states.back().p - s0.p).norm() < 1e-12);
}

TEST_CASE("integrator preconditions and domain guard") {
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  PhaseState s0 = sigma_embed(f, pot, Vec2(0.3, 0.0));
  CHECK_THROWS_AS(integrate_H(f, pot, s0, 1.0, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(integrate_H(f, pot, s0, -1.0, 1e-3), std::invalid_argument);
}

TEST_CASE("energy conservation and reversibility") {
  for (const char* desc : {"fig2", "radial:2,1"}) {
    MagneticField f = make_field(desc);
    VectorPotential pot = build_potential(f);
    Vec2 q0(0.6, 0.0);
    double e = 0.01;
    Vec2 v0(0.0, 2.0 * std::sqrt(e));
    PhaseState s0{q0, 0.5 * v0 + pot.eval(q0)};
    Trajectory tr = integrate_H(f, pot, s0, 50.0, 1e-3);
    EnergyDrift d = energy_drift(tr);
    // midpoint keeps the secular drift at the stage-tolerance floor; the
    // pointwise oscillation for non-quadratic H scales as (w dt)^2
    CHECK(d.secular_relative < 1e-8);
    CHECK(d.max_relative < 1e-5);

    // run the time-reversed flow from the endpoint
    Trajectory back = integrate_H(f, pot, tr.states.back(), 50.0, -1e-3);
    Vec2 qret = back.states.back().q;
    CHECK((qret - q0).norm() < 1e-7);
    CHECK((back.states.back().p - s0.p).norm() < 1e-7);
  }
}

TEST_CASE("boris pusher agrees with midpoint at first order and conserves speed") {
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  Vec2 q0(0.5, 0.2);
  Vec2 v0(0.0, 0.3);
  PhaseState s0{q0, 0.5 * v0 + pot.eval(q0)};
  Trajectory tb = integrate_H(f, pot, s0, 10.0, 5e-4, Integrator::boris);
  Trajectory tm = integrate_H(f, pot, s0, 10.0, 5e-4, Integrator::implicit_midpoint);
  CHECK((tb.states.back().q - tm.states.back().q).norm() < 5e-4);
  EnergyDrift d = energy_drift(tb);
  CHECK(d.max_relative < 1e-4);
}

TEST_CASE("level-set drift scales like E^2") {
  // E is the fast-radius scale: initial speed 2E, kinetic energy E^2
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  std::vector<double> es = {0.05, 0.025, 0.0125}, devs;
  for (double e : es) {
    Vec2 q0(1.0, 0.0);
    Vec2 v0(0.0, 2.0 * e);
    PhaseState s0{q0, 0.5 * v0 + pot.eval(q0)};
    Trajectory tr = integrate_H(f, pot, s0, 120.0, 1e-3);
    GuidingRecord g0 = guiding_center(f, pot, tr.states.front());
    double dev = 0.0;
    for (size_t i = 0; i < tr.states.size(); i += 20) {
      GuidingRecord g = guiding_center(f, pot, tr.states[i]);
      dev = std::max(dev, std::abs(g.field_at_center - g0.field_at_center));
    }
    devs.push_back(dev);
  }
  double slope = loglog_slope(es, devs);
  CHECK(slope > 1.6);
  CHECK(slope < 2.4);
  // halving E divides the deviation by about 4
  CHECK(devs[0] / devs[1] == doctest::Approx(4.0).epsilon(0.35));
}

TEST_CASE("normal-form flow conserves the action exactly") {
  MagneticField f = MagneticField::fig2();
  NfBundle nb = build_nf(f, 6, 6);
  NormalState z0;
  z0.z1 = std::polar(0.12, 0.7);
  z0.z2 = nb.nf.z2_0 + Vec2(0.3, -0.2);
  NormalTrajectory tr = integrate_K(nb.nf, z0, 30.0, 1e-3);
  for (const NormalState& s : tr.states) CHECK(std::abs(s.z1) == doctest::Approx(0.12));
}

TEST_CASE("constant field: K flow freezes z2 and rotates z1 at -2") {
  MagneticField c = MagneticField::constant(1.0);
  NfBundle nb = build_nf(c, 6, 6);
  CHECK(nb.nf.kappa.max_abs() == 0.0);
  NormalState z0;
  z0.z1 = 0.2;
  z0.z2 = nb.nf.z2_0 + Vec2(0.1, 0.1);
  NormalTrajectory tr = integrate_K(nb.nf, z0, 5.0, 1e-3);
  const NormalState& end = tr.states.back();
  CHECK((end.z2 - z0.z2).norm() < 1e-14);
  std::complex<double> expect = z0.z1 * std::exp(std::complex<double>(0, -2.0 * 5.0));
  CHECK(std::abs(end.z1 - expect) < 1e-9);
}

TEST_CASE("order-2 slow drift matches direct integration of I * B(g^-1)") {
  // oracle: integrate the slow Hamiltonian I * B(g^{-1}(z2)) directly with a
  // fine RK4, using only the chart inverse and the field
  MagneticField f = MagneticField::fig2();
  DarbouxChart chart = darboux_chart(f);
  NfBundle nb = build_nf(f, 6, 6);
  double I = 0.01;
  NormalState z0;
  z0.z1 = std::sqrt(I);
  z0.z2 = nb.chart->normal_slow_from_chart(chart.forward(Vec2(0.4, 0.0)));
  NormalFormResult nf2 = truncate_classical(nb.nf, 2);
  NormalTrajectory tr = integrate_K(nf2, z0, 20.0, 1e-3);

  // reference: same Hamiltonian field from the b jet, RK4 with dt/10
  Vec2 z2 = z0.z2;
  double dt = 1e-4;
  auto fld = [&](const Vec2& z) {
    Vec2 g = nf2.f_grad_z2(z, I);
    return Vec2(I * g.y(), -I * g.x());
  };
  for (int i = 0; i < 200000; ++i) {
    Vec2 k1 = fld(z2);
    Vec2 k2 = fld(z2 + 0.5 * dt * k1);
    Vec2 k3 = fld(z2 + 0.5 * dt * k2);
    Vec2 k4 = fld(z2 + dt * k3);
    z2 += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK((tr.states.back().z2 - z2).norm() < 1e-8);
  // and the drift follows a level set of B(g^-1): f is conserved
  double f0 = nf2.f_value(z0.z2, I);
  double f1 = nf2.f_value(tr.states.back().z2, I);
  CHECK(std::abs(f1 - f0) < 1e-9);
}

TEST_CASE("compare_flows validates grids and is small for the constant field") {
  // the transform lives in the landau gauge; the physical flow must use the
  // same potential, and dt is chosen so the integrator phase bias stays
  // below the comparison tolerance
  MagneticField c = MagneticField::constant(1.0);
  VectorPotential pot = build_potential(c);
  NfBundle nb = build_nf(c, 6, 6);
  TruncatedTransform tr(c, nb.nf, 2);
  NormalState z0;
  z0.z1 = 0.25;
  z0.z2 = nb.nf.z2_0;
  Vec4 w0 = tr.forward(z0);
  PhaseState s0{Vec2(w0(0), w0(1)), Vec2(w0(2), w0(3))};
  // the gyro-exact pusher has no phase bias on constant fields, so the
  // comparison floor is set by the position-update error (w dt)^2/12 * r
  Trajectory th = integrate_H(c, pot, s0, 100.0, 2e-4, Integrator::boris);
  NormalTrajectory tk = integrate_K(nb.nf, z0, 100.0, 2e-4);
  Trajectory thd;
  NormalTrajectory tkd;
  for (size_t i = 0; i < th.times.size(); i += 10000) {
    thd.times.push_back(th.times[i]);
    thd.states.push_back(th.states[i]);
    thd.energy.push_back(th.energy[i]);
    tkd.times.push_back(tk.times[i]);
    tkd.states.push_back(tk.states[i]);
  }
  auto d = compare_flows(thd, tkd, [&](const NormalState& z) { return tr.forward(z); });
  for (double v : d) CHECK(v < 1e-8);

  tkd.times.back() += 1.0;
  CHECK_THROWS_AS(compare_flows(thd, tkd, [&](const NormalState& z) { return tr.forward(z); }),
                  std::invalid_argument);
}

TEST_CASE("mirror points: none for constant fields, events on a ridge field") {
  MagneticField c = MagneticField::constant(1.0);
  VectorPotential sym = build_potential(c, GaugeTag::symmetric);
  Vec2 q0(0.5, 0.0), v0(0.0, -0.4);
  PhaseState s0{q0, 0.5 * v0 + sym.eval(q0)};
  Trajectory tr = integrate_H(c, sym, s0, 30.0, 1e-3);
  CHECK(mirror_points(c, sym, tr).empty());

  // non-circular level set: events recur along the drift
  MagneticField f = MagneticField::fig2();
  VectorPotential pot = build_potential(f);
  Vec2 qf(1.0, 0.0);
  double e = 0.05;
  Vec2 vf(0.0, 2.0 * std::sqrt(e));
  PhaseState sf{qf, 0.5 * vf + pot.eval(qf)};
  Trajectory trf = integrate_H(f, pot, sf, 400.0, 1e-3);
  auto events = mirror_points(f, pot, trf);
  CHECK(events.size() >= 1);
}

TEST_CASE("trajectory csv: schema and deterministic bytes") {
  MagneticField c = MagneticField::constant(1.0);
  VectorPotential sym = build_potential(c, GaugeTag::symmetric);
  PhaseState s0{Vec2(0.5, 0), Vec2(0, 0) + sym.eval(Vec2(0.5, 0)) + Vec2(0, -0.5)};
  Trajectory tr = integrate_H(c, sym, s0, 0.5, 1e-3);
  write_trajectory_csv("/tmp/magwell_traj_a.csv", tr, c, sym);
  write_trajectory_csv("/tmp/magwell_traj_b.csv", tr, c, sym);
  std::ifstream fa("/tmp/magwell_traj_a.csv"), fb("/tmp/magwell_traj_b.csv");
  std::string a((std::istreambuf_iterator<char>(fa)), {});
  std::string b((std::istreambuf_iterator<char>(fb)), {});
  CHECK(a == b);
  CHECK(a.substr(0, a.find('\n')) == "t,q1,q2,p1,p2,H,c1,c2,I,B_at_c");
}
