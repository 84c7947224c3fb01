#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "magwell/benchlib.hpp"
#include "magwell/harness.hpp"
#include "magwell/specwell.hpp"
#include "magwell/symflow.hpp"

namespace magwell {

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Shared state across criteria: the fig2 pipeline and spectral runs are
// computed once per report.
struct Workspace {
  MagneticField fig2 = MagneticField::fig2();
  VectorPotential pot = build_potential(fig2);
  DarbouxChart chart = darboux_chart(fig2);
  std::optional<NfBundle> nf;
  std::optional<EigCoeffs> eig;
  std::map<std::string, SpectralResult> spectra;
  uint64_t seed = 20240901ull;
  Box spec_box{-1.5, 1.5};

  const NfBundle& bundle() {
    if (!nf) {
      nf = build_nf(fig2, 8, 6);
      eig = eigenvalue_expansion(nf->nf, fig2);
    }
    return *nf;
  }

  const SpectralResult& lowest(double hbar, int n, int k, int partner, bool vectors) {
    std::ostringstream key;
    key << hbar << '|' << n << '|' << k << '|' << partner << '|' << vectors;
    auto it = spectra.find(key.str());
    if (it != spectra.end()) return it->second;
    EigsOptions opts;
    opts.partner_n = partner;
    opts.want_vectors = vectors;
    opts.seed = seed;
    SpectralResult sr = lowest_eigenpairs(fig2, pot, hbar, spec_box, n, k, opts);
    return spectra.emplace(key.str(), std::move(sr)).first->second;
  }
};

double richardson(double lam_n, double lam_partner, double hn, double hp) {
  double r = (hp / hn) * (hp / hn);
  return lam_n - (lam_partner - lam_n) / (r - 1.0);
}

// ---- criterion 1 ---------------------------------------------------------

CriterionResult criterion1(Workspace&) {
  CriterionResult cr;
  cr.id = 1;
  cr.name = "constant-field exactness";
  Stopwatch sw;
  MagneticField field = MagneticField::constant(1.0);
  VectorPotential pot = build_potential(field, GaugeTag::symmetric);
  Vec2 q0(0.5, 0.0), v0(0.0, -1.0);
  PhaseState s0{q0, 0.5 * v0 + pot.eval(q0)};

  auto measure = [&](Integrator method) {
    Trajectory tr = integrate_H(field, pot, s0, 500.0, 1e-3, method);
    double rmin = 1e300, rmax = 0.0;
    double theta_prev = 0.0, winding = 0.0;
    bool first = true;
    for (size_t i = 0; i < tr.states.size(); ++i) {
      GuidingRecord g = guiding_center(field, pot, tr.states[i]);
      Vec2 rel = tr.states[i].q - g.center;
      double r = rel.norm();
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      double th = std::atan2(rel.y(), rel.x());
      if (!first) {
        double dth = th - theta_prev;
        while (dth > M_PI) dth -= 2 * M_PI;
        while (dth < -M_PI) dth += 2 * M_PI;
        winding += dth;
      }
      first = false;
      theta_prev = th;
    }
    double period = 2.0 * M_PI * 500.0 / std::abs(winding);
    double drift = energy_drift(tr).max_relative;
    return std::tuple{rmin, rmax, period, drift};
  };

  auto [brmin, brmax, bperiod, bdrift] = measure(Integrator::boris);
  auto [mrmin, mrmax, mperiod, mdrift] = measure(Integrator::implicit_midpoint);

  bool radius_ok = std::abs(brmax - 0.5) <= 1e-6 && std::abs(brmin - 0.5) <= 1e-6 &&
                   std::abs(mrmax - 0.5) <= 1e-6 && std::abs(mrmin - 0.5) <= 1e-6;
  bool period_ok = std::abs(bperiod - M_PI) <= 1e-6;
  bool drift_ok = bdrift <= 1e-8 && mdrift <= 1e-8;
  cr.lines.push_back("boris radius in [" + fmt(brmin) + "," + fmt(brmax) + "] (want 0.5 +- 1e-6)");
  cr.lines.push_back("midpoint radius in [" + fmt(mrmin) + "," + fmt(mrmax) + "]");
  cr.lines.push_back("boris period " + fmt(bperiod) + " (want pi +- 1e-6)");
  cr.lines.push_back("midpoint period " + fmt(mperiod) + " (gyro-phase bias (w dt)^2/12, reported)");
  cr.lines.push_back("energy drift boris " + fmt(bdrift) + ", midpoint " + fmt(mdrift) +
                     " (want <= 1e-8)");
  cr.pass = radius_ok && period_ok && drift_ok;
  cr.runtime_seconds = sw.seconds();
  return cr;
}

// ---- criterion 2 ---------------------------------------------------------

CriterionResult criterion2(Workspace& ws) {
  CriterionResult cr;
  cr.id = 2;
  cr.name = "level-set drift scaling";
  Stopwatch sw;
  std::vector<double> energies = {0.05, 0.025, 0.0125};
  std::vector<double> devs;
  Vec2 q0(1.0, 0.0);
  for (double e : energies) {
    // E is the fast-radius scale: speed 2E, kinetic energy E^2
    Vec2 v0(0.0, 2.0 * e);
    PhaseState s0{q0, 0.5 * v0 + ws.pot.eval(q0)};
    Trajectory tr = integrate_H(ws.fig2, ws.pot, s0, 500.0, 1e-3);
    GuidingRecord g0 = guiding_center(ws.fig2, ws.pot, tr.states.front());
    double dev = 0.0;
    for (size_t i = 0; i < tr.states.size(); i += 25) {
      GuidingRecord g = guiding_center(ws.fig2, ws.pot, tr.states[i]);
      dev = std::max(dev, std::abs(g.field_at_center - g0.field_at_center));
    }
    devs.push_back(dev);
    cr.lines.push_back("E=" + fmt(e) + ": max |B(c(t)) - B(c(0))| = " + fmt(dev));
  }
  double slope = loglog_slope(energies, devs);
  cr.lines.push_back("fitted slope " + fmt(slope) + " (want within [1.7, 2.3])");
  cr.pass = slope >= 1.7 && slope <= 2.3;
  cr.runtime_seconds = sw.seconds();
  return cr;
}

// ---- criterion 3 ---------------------------------------------------------

CriterionResult criterion3(Workspace& ws) {
  CriterionResult cr;
  cr.id = 3;
  cr.name = "normal-form residual order and symplecticity";
  Stopwatch sw;
  const NfBundle& nb = ws.bundle();
  cr.pass = true;
  for (int N : {2, 3, 4}) {
    TruncatedTransform tr(ws.fig2, nb.nf, N);
    double e0 = residual_decay_exponent(ws.fig2, ws.pot, tr, nb.nf, N, Vec2(0.0, 0.0));
    double e1 = residual_decay_exponent(ws.fig2, ws.pot, tr, nb.nf, N, Vec2(0.03, 0.02));
    double expo = std::min(e0, e1);
    cr.lines.push_back("order " + std::to_string(N) + ": residual decay exponent " + fmt(expo) +
                       " (want >= " + fmt(N + 0.7) + ")");
    cr.pass = cr.pass && expo >= N + 0.7;
  }
  // Jacobian symplecticity at the deepest transform; sampling domain
  // |z1| <= 0.1, |z2 - z2_0| <= 0.1 per axis (inside the jet validity region)
  TruncatedTransform tr4(ws.fig2, nb.nf, 4);
  Lcg64 rng(ws.seed);
  Mat4 om_src = omega_normal_matrix();
  Mat4 om_dst = omega_qp_matrix();
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    double r = 0.1 * std::sqrt(rng.uniform());
    double ph = 2.0 * M_PI * rng.uniform();
    NormalState z;
    z.z1 = std::polar(r, ph);
    z.z2 = nb.nf.z2_0 + Vec2(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
    Mat4 j = tr4.jacobian_fd(z);
    worst = std::max(worst, (j.transpose() * om_dst * j - om_src).norm());
  }
  cr.lines.push_back("max symplecticity defect over 50 points: " + fmt(worst) +
                     " (want <= 1e-6)");
  cr.pass = cr.pass && worst <= 1e-6;
  cr.runtime_seconds = sw.seconds();
  return cr;
}

// ---- criterion 4 ---------------------------------------------------------

CriterionResult criterion4(Workspace& ws) {
  CriterionResult cr;
  cr.id = 4;
  cr.name = "flow-comparison order";
  Stopwatch sw;
  const NfBundle& nb = ws.bundle();
  std::vector<double> eps = {0.05, 0.025, 0.0125};
  Vec2 qs(0.28, 0.0);
  Vec2 z2s = ws.chart.forward(qs);
  const double T = 50.0, dt = 1e-3;
  std::vector<double> orders_fit;
  std::vector<std::vector<double>> d_by_order;
  cr.pass = true;
  for (int N : {2, 3, 4}) {
    TruncatedTransform tr(ws.fig2, nb.nf, N);
    NormalFormResult nf_N = truncate_classical(nb.nf, N);
    std::vector<double> dT;
    for (double e : eps) {
      NormalState z0;
      z0.z1 = std::sqrt(e / ws.fig2.eval(qs));
      z0.z2 = z2s;
      Vec4 w0 = tr.forward(z0);
      PhaseState s0{Vec2(w0(0), w0(1)), Vec2(w0(2), w0(3))};
      Trajectory th = integrate_H(ws.fig2, ws.pot, s0, T, dt);
      NormalTrajectory tk = integrate_K(nf_N, z0, T, dt);
      size_t stride = th.times.size() / 100;
      // common coarse grid for the distance curve
      Trajectory thd;
      NormalTrajectory tkd;
      for (size_t i = 0; i < th.times.size(); i += stride) {
        thd.times.push_back(th.times[i]);
        thd.states.push_back(th.states[i]);
        thd.energy.push_back(th.energy[i]);
        tkd.times.push_back(tk.times[i]);
        tkd.states.push_back(tk.states[i]);
      }
      auto d = compare_flows(thd, tkd, [&](const NormalState& z) { return tr.forward(z); });
      dT.push_back(d.back());
    }
    double slope = loglog_slope(eps, dT);
    orders_fit.push_back(slope);
    d_by_order.push_back(dT);
    cr.lines.push_back("order " + std::to_string(N) + ": d(T) = {" + fmt(dT[0]) + ", " +
                       fmt(dT[1]) + ", " + fmt(dT[2]) + "}, empirical order " + fmt(slope) +
                       " (want >= " + fmt((N - 1) / 2.0 - 0.3) + ")");
    cr.pass = cr.pass && slope >= (N - 1) / 2.0 - 0.3;
  }
  bool improve = true;
  for (size_t i = 0; i < eps.size(); ++i)
    improve = improve && d_by_order[1][i] < d_by_order[0][i] && d_by_order[2][i] < d_by_order[1][i];
  cr.lines.push_back(std::string("d(T) decreases with N at every eps: ") +
                     (improve ? "yes" : "no"));
  cr.pass = cr.pass && improve;
  // Odd truncation orders add no resonant content (K_3 = K_2), so consecutive
  // fitted orders tie in pairs up to fit noise; monotonicity is enforced with
  // a small tolerance together with a strict decrease of the distances.
  bool monotone = orders_fit[1] >= orders_fit[0] - 0.25 && orders_fit[2] >= orders_fit[1] - 0.25 &&
                  orders_fit[2] > orders_fit[0];
  cr.lines.push_back(std::string("orders increase with N (tolerance 0.25 at odd steps): ") +
                     (monotone ? "yes" : "no"));
  cr.pass = cr.pass && monotone;
  cr.runtime_seconds = sw.seconds();
  return cr;
}

// ---- criterion 5 ---------------------------------------------------------

CriterionResult criterion5(Workspace& ws) {
  CriterionResult cr;
  cr.id = 5;
  cr.name = "low-lying eigenvalue expansion";
  Stopwatch sw;
  ws.bundle();
  const EigCoeffs& eig = *ws.eig;
  const std::vector<double> hbars = {0.02, 0.01, 0.005};
  const int n = 1024, partner = 682, k = 8;
  std::vector<double> y1;             // lambda_1 - 2 hbar, extrapolated
  std::vector<double> slopes;         // per-hbar slope vs (2j-1)
  for (double hbar : hbars) {
    const SpectralResult& sr = ws.lowest(hbar, n, k, partner, false);
    double hn = ws.spec_box.length() / (n + 1);
    double hp = ws.spec_box.length() / (partner + 1);
    std::vector<double> lamR(4), x(4), yv(4);
    for (int j = 0; j < 4; ++j) {
      lamR[j] = richardson(sr.eigenvalues[j], sr.eigenvalues_refined[j], hn, hp);
      x[j] = 2.0 * (j + 1) - 1.0;
      yv[j] = (lamR[j] - 2.0 * hbar) / (hbar * hbar);
    }
    auto [slope, intercept] = linear_fit(x, yv);
    slopes.push_back(slope);
    y1.push_back(lamR[0] - 2.0 * hbar);
    cr.lines.push_back("hbar=" + fmt(hbar) + ": lambda_1=" + fmt(sr.eigenvalues[0]) +
                       " (extrapolated " + fmt(lamR[0]) + "), band slope " + fmt(slope) +
                       ", intercept " + fmt(intercept) + " (predicted c0 " + fmt(eig.c0) + ")");
  }
  double a = loglog_slope(hbars, y1);
  bool a_ok = a >= 1.9 && a <= 2.1;
  cr.lines.push_back("(a) lambda_1 - hbar min B fits hbar^a with a = " + fmt(a) +
                     " (want within [1.9, 2.1])");
  bool b_ok = true;
  for (double s : slopes) b_ok = b_ok && std::abs(s - eig.c1) <= 0.05 * eig.c1;
  cr.lines.push_back("(b) band slopes vs (2j-1): {" + fmt(slopes[0]) + ", " + fmt(slopes[1]) +
                     ", " + fmt(slopes[2]) + "}, want c1 = " + fmt(eig.c1) + " within 5%");
  double e1 = std::abs(y1[0] - 4.0 * y1[1]);
  double e2 = std::abs(y1[1] - 4.0 * y1[2]);
  double p = std::log2(e1 / e2);
  bool c_ok = p >= 2.5;
  cr.lines.push_back("(c) residual exponent after removing hbar and hbar^2 terms: " + fmt(p) +
                     " (want >= 2.5; excludes a hbar^{3/2} term)");
  cr.pass = a_ok && b_ok && c_ok;
  cr.runtime_seconds = sw.seconds();
  return cr;
}

// ---- criterion 6 ---------------------------------------------------------

CriterionResult criterion6(Workspace& ws) {
  CriterionResult cr;
  cr.id = 6;
  cr.name = "effective 1d operator agreement";
  Stopwatch sw;
  ws.bundle();
  // symbol B(g^{-1}(x2,xi2)) with a smooth high-end clamp; values beyond the
  // chart range are saturated, which only touches states far above the band
  const double t1 = 4.0, t2 = 6.0;
  auto symbol = [&](double x2, double xi2) {
    double b;
    if (std::abs(x2) > 2.4) {
      b = t2;
    } else {
      try {
        Vec2 q = ws.chart.inverse(Vec2(x2, xi2));
        b = ws.fig2.eval(q);
      } catch (const std::exception&) {
        b = t2;
      }
    }
    if (b <= t1) return b;
    return t1 + (t2 - t1) * std::tanh((b - t1) / (t2 - t1));
  };
  std::vector<double> hbars = {0.02, 0.01};
  std::vector<int> n1d = {512, 1024};
  std::vector<double> Cs;
  const int J = 8;
  for (size_t i = 0; i < hbars.size(); ++i) {
    double hbar = hbars[i];
    const SpectralResult& sr2d = ws.lowest(hbar, 1024, 8, 682, false);
    DiscreteOperator op1 = weyl_quantize_1d(symbol, hbar, -2.0, 2.0, n1d[i], 2);
    SpectralResult sr1d = lowest_eigenpairs(op1, J);
    double C = 0.0;
    for (int j = 0; j < J; ++j)
      C = std::max(C, std::abs(sr2d.eigenvalues[j] - hbar * sr1d.eigenvalues[j]) / (hbar * hbar));
    Cs.push_back(C);
    cr.lines.push_back("hbar=" + fmt(hbar) + ": max_j |lambda_j - hbar gamma_j| / hbar^2 = " +
                       fmt(C) + " over j <= " + std::to_string(J));
  }
  double ratio = Cs[1] / Cs[0];
  cr.lines.push_back("C ratio across hbar halving: " + fmt(ratio) +
                     " (want within [0.25, 4]: the hbar^2 defect is stable)");
  cr.pass = std::isfinite(Cs[0]) && std::isfinite(Cs[1]) && ratio >= 0.25 && ratio <= 4.0;
  cr.runtime_seconds = sw.seconds();
  return cr;
}

// ---- criterion 7 ---------------------------------------------------------

CriterionResult criterion7(Workspace& ws) {
  CriterionResult cr;
  cr.id = 7;
  cr.name = "algebraic exactness suite";
  Stopwatch sw;
  const NfBundle& nb = ws.bundle();
  const int n1 = 8, n2 = 6;
  Lcg64 rng(ws.seed ^ 0xabcdef);
  auto random_homogeneous = [&](int deg) {
    FormalSeries s(n1, n2, nb.nf.z2_0);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        int rem = deg - a - b;
        if (rem % 2 != 0) continue;
        int l = rem / 2;
        for (int g1 = 0; g1 <= 2; ++g1)
          for (int g2 = 0; g1 + g2 <= 2; ++g2)
            s.add_term(FSKey{a, b, l, g1, g2}, rng.uniform(-1.0, 1.0));
      }
    return s;
  };

  // grading closure: every product term sits at exactly the degree sum
  bool grading_ok = true;
  for (int trial = 0; trial < 6; ++trial) {
    int dj = 2 + trial % 3, dk = 3 + trial % 2;
    FormalSeries a = random_homogeneous(dj), b = random_homogeneous(dk);
    FormalSeries p = moyal(a, b);
    for (const auto& [key, v] : p.c)
      if (v != 0.0 && key.degree() != dj + dk) grading_ok = false;
  }
  cr.lines.push_back(std::string("moyal grading closure on random homogeneous series: ") +
                     (grading_ok ? "exact" : "violated"));

  // ad anchor: i hbar^-1 ad_{|z1|^2} equals the Poisson bracket
  FormalSeries I = fast_action_series(n1, n2, nb.nf.z2_0);
  double anchor_err = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    FormalSeries b = random_homogeneous(3 + trial);
    FormalSeries lhs = ad_action(I, b);
    FormalSeries rhs = poisson(I, b);
    anchor_err = std::max(anchor_err, (lhs - rhs).max_abs());
  }
  cr.lines.push_back("max |ad_{|z1|^2} - {|z1|^2, .}| coefficient: " + fmt(anchor_err));

  // [kappa, H0] in the truncated algebra
  FormalSeries h0(n1, n2, nb.nf.z2_0);
  for (int g1 = 0; g1 <= n2; ++g1)
    for (int g2 = 0; g1 + g2 <= n2; ++g2) {
      double v = nb.nf.b_jet.get(g1, g2);
      if (v != 0.0) {
        h0.add_term(FSKey{2, 0, 0, g1, g2}, v);
        h0.add_term(FSKey{0, 2, 0, g1, g2}, v);
      }
    }
  FormalSeries comm = moyal(nb.nf.kappa, h0) - moyal(h0, nb.nf.kappa);
  double scale = std::max(1.0, nb.nf.kappa.max_abs() * h0.max_abs());
  double comm_err = comm.max_abs() / scale;
  cr.lines.push_back("[kappa, H0] relative coefficient residue: " + fmt(comm_err));

  double rt = nb.star_roundtrip / std::max(1.0, nb.nf.kappa.max_abs());
  cr.lines.push_back("star-power round-trip relative error: " + fmt(rt));

  cr.pass = grading_ok && anchor_err <= 1e-12 && comm_err <= 1e-12 && rt <= 1e-12;
  cr.runtime_seconds = sw.seconds();
  return cr;
}

// ---- criterion 8 ---------------------------------------------------------

CriterionResult criterion8(Workspace& ws) {
  CriterionResult cr;
  cr.id = 8;
  cr.name = "counting and localization";
  Stopwatch sw;
  const double c1_level = 2.5;
  // phase-space volume of {B <= C1} weighted by B
  double vol = 0.0;
  {
    const int m = 1600;
    double h = 2.4 / m;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Vec2 q(-1.2 + (i + 0.5) * h, -1.2 + (j + 0.5) * h);
        double b = ws.fig2.eval(q);
        if (b <= c1_level) vol += b * h * h;
      }
  }
  cr.lines.push_back("phase-space volume of {B <= 2.5}: " + fmt(vol));
  std::vector<double> hbars = {0.02, 0.01, 0.005};
  std::vector<int> grids = {512, 512, 768};
  bool ratio_ok = true;
  for (size_t i = 0; i < hbars.size(); ++i) {
    double hbar = hbars[i];
    DiscreteOperator op = assemble_magnetic_laplacian(ws.fig2, ws.pot, hbar, ws.spec_box, grids[i]);
    int count = count_below(op, c1_level * hbar);
    double ratio = count * 2.0 * M_PI * hbar / vol;
    ratio_ok = ratio_ok && ratio >= 0.8 && ratio <= 1.2;
    cr.lines.push_back("hbar=" + fmt(hbar) + ": N(C1 hbar) = " + std::to_string(count) +
                       ", Weyl ratio " + fmt(ratio) + " (want within [0.8, 1.2])");
  }

  // ground-state localization at hbar = 0.01
  EigsOptions opts;
  opts.want_vectors = true;
  opts.seed = ws.seed;
  DiscreteOperator op = assemble_magnetic_laplacian(ws.fig2, ws.pot, 0.01, ws.spec_box, 512);
  SpectralResult sr = lowest_eigenpairs(op, 1, opts);
  double mass = localization_profile(sr.eigenvectors[0], op.grid, ws.fig2, 2.5);
  cr.lines.push_back("ground-state mass outside {B <= 2.5} at hbar=0.01: " + fmt(mass) +
                     " (want < 1e-6)");

  // variational lower bound lambda_1 >= hbar min B - discretization error
  bool bound_ok = true;
  for (double hbar : hbars) {
    const SpectralResult& s = ws.lowest(hbar, 1024, 8, 682, false);
    double lower = hbar * 2.0 - std::max(s.discretization_error_estimate, 1e-12);
    bound_ok = bound_ok && s.eigenvalues[0] >= lower;
    cr.lines.push_back("hbar=" + fmt(hbar) + ": lambda_1 = " + fmt(s.eigenvalues[0]) +
                       " >= hbar min B - disc_err = " + fmt(lower) + (s.eigenvalues[0] >= lower
                       ? " (holds)" : " (violated)"));
  }
  cr.pass = ratio_ok && mass < 1e-6 && bound_ok;
  cr.runtime_seconds = sw.seconds();
  return cr;
}

// ---- criterion 9 ---------------------------------------------------------

CriterionResult criterion9(Workspace& ws) {
  CriterionResult cr;
  cr.id = 9;
  cr.name = "gap scaling in the excited band";
  Stopwatch sw;
  std::vector<double> hbars = {0.02, 0.01, 0.005};
  std::vector<int> grids = {512, 512, 1024};
  std::vector<double> mean_gaps;
  for (size_t i = 0; i < hbars.size(); ++i) {
    double hbar = hbars[i];
    DiscreteOperator op = assemble_magnetic_laplacian(ws.fig2, ws.pot, hbar, ws.spec_box, grids[i]);
    EigsOptions opts;
    opts.seed = ws.seed;
    SpectralResult sr = eigenpairs_in_window(op, 2.4 * hbar, 2.6 * hbar, opts);
    std::vector<double> gaps = gap_statistics(sr, 2.4 * hbar, 2.6 * hbar);
    if (gaps.empty()) {
      cr.lines.push_back("hbar=" + fmt(hbar) + ": window has fewer than two eigenvalues");
      cr.pass = false;
      cr.runtime_seconds = sw.seconds();
      return cr;
    }
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= gaps.size();
    mean_gaps.push_back(mean);
    cr.lines.push_back("hbar=" + fmt(hbar) + ": " + std::to_string(sr.eigenvalues.size()) +
                       " eigenvalues in [2.4,2.6] hbar, mean gap " + fmt(mean));
  }
  double b = loglog_slope(hbars, mean_gaps);
  cr.lines.push_back("mean gap scales as hbar^b with b = " + fmt(b) +
                     " (want within [1.7, 2.3])");
  cr.pass = b >= 1.7 && b <= 2.3;
  cr.runtime_seconds = sw.seconds();
  return cr;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const Config& cfg, const std::string&,
                                            const std::vector<int>& only_ids) {
  Workspace ws;
  ws.seed = cfg.get_seed(ws.seed);
  std::vector<CriterionResult> out;
  using Fn = CriterionResult (*)(Workspace&);
  const Fn fns[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                    criterion6, criterion7, criterion8, criterion9};
  for (int id = 1; id <= 9; ++id) {
    if (!only_ids.empty() &&
        std::find(only_ids.begin(), only_ids.end(), id) == only_ids.end())
      continue;
    CriterionResult r;
    try {
      r = fns[id - 1](ws);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.pass = false;
      r.lines.push_back(std::string("exception: ") + e.what());
    }
    std::printf("[%s] criterion %d: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.runtime_seconds);
    for (const auto& l : r.lines) std::printf("        %s\n", l.c_str());
    std::fflush(stdout);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace magwell
