#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "magwell/benchlib.hpp"
#include "magwell/harness.hpp"
#include "magwell/specwell.hpp"
#include "magwell/starbirk.hpp"
#include "magwell/symflow.hpp"

namespace magwell {

namespace {

using nlohmann::json;

std::string join_path(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

// marching-squares segments of a level set of B, for the diagnostic plots
std::vector<std::vector<Vec2>> contour_segments(const MagneticField& field, double level,
                                                Box box, int n) {
  std::vector<std::vector<Vec2>> segs;
  double h = box.length() / n;
  auto fval = [&](int i, int j) { return field.eval(Vec2(box.lo + i * h, box.lo + j * h)) - level; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double f00 = fval(i, j), f10 = fval(i + 1, j), f01 = fval(i, j + 1), f11 = fval(i + 1, j + 1);
      auto cross = [](double a, double b) { return (a <= 0) != (b <= 0); };
      std::vector<Vec2> pts;
      double x0 = box.lo + i * h, y0 = box.lo + j * h;
      if (cross(f00, f10)) pts.push_back(Vec2(x0 + h * f00 / (f00 - f10), y0));
      if (cross(f01, f11)) pts.push_back(Vec2(x0 + h * f01 / (f01 - f11), y0 + h));
      if (cross(f00, f01)) pts.push_back(Vec2(x0, y0 + h * f00 / (f00 - f01)));
      if (cross(f10, f11)) pts.push_back(Vec2(x0 + h, y0 + h * f10 / (f10 - f11)));
      if (pts.size() >= 2) segs.push_back({pts[0], pts[1]});
    }
  return segs;
}

Trajectory downsample(const Trajectory& tr, size_t stride) {
  Trajectory out;
  out.integrator_tag = tr.integrator_tag;
  out.step = tr.step * stride;
  for (size_t i = 0; i < tr.times.size(); i += stride) {
    out.times.push_back(tr.times[i]);
    out.states.push_back(tr.states[i]);
    out.energy.push_back(tr.energy[i]);
  }
  return out;
}

NormalTrajectory downsample(const NormalTrajectory& tr, size_t stride) {
  NormalTrajectory out;
  out.step = tr.step * stride;
  for (size_t i = 0; i < tr.times.size(); i += stride) {
    out.times.push_back(tr.times[i]);
    out.states.push_back(tr.states[i]);
  }
  return out;
}

}  // namespace

MagneticField field_from_config(const Config& cfg) {
  std::string desc = cfg.get_or("field", "fig2");
  if (cfg.has("box")) return make_field(desc, box_from_config(cfg, Box{}));
  return make_field(desc);
}

ExperimentOutput run_trajectory(const Config& cfg, const std::string& out_dir) {
  ExperimentOutput out;
  MagneticField field = field_from_config(cfg);
  VectorPotential pot = build_potential(field);
  double T = cfg.get_double_or("T", 500.0);
  double dt = cfg.get_double_or("dt", 1e-3);
  std::vector<double> energies = cfg.get_list_or("E", {0.05});
  Vec2 q0(cfg.get_double_or("start1", 1.0), cfg.get_double_or("start2", 0.0));
  Integrator method =
      cfg.get_or("method", "implicit_midpoint") == "boris" ? Integrator::boris
                                                           : Integrator::implicit_midpoint;

  json j;
  j["experiment"] = "trajectory";
  j["field"] = field.descriptor();
  std::vector<double> deviations;
  for (size_t iE = 0; iE < energies.size(); ++iE) {
    // E sets the fast-radius scale: initial speed 2E, kinetic energy E^2,
    // Larmor radius E/B
    double E = energies[iE];
    Vec2 v0(0.0, 2.0 * E);
    PhaseState s0{q0, 0.5 * v0 + pot.eval(q0)};
    Trajectory tr = integrate_H(field, pot, s0, T, dt, method);

    std::ostringstream tag;
    tag << "trajectory_E" << E;
    std::string csv = join_path(out_dir, tag.str() + ".csv");
    write_trajectory_csv(csv, downsample(tr, std::max<size_t>(1, tr.times.size() / 20000)), field,
                         pot);
    out.files_written.push_back(csv);

    // level-set deviation of the guiding center
    GuidingRecord g0 = guiding_center(field, pot, tr.states.front());
    double dev = 0.0;
    std::vector<Vec2> orbit, centers;
    for (size_t i = 0; i < tr.states.size(); i += std::max<size_t>(1, tr.states.size() / 4000)) {
      GuidingRecord g = guiding_center(field, pot, tr.states[i]);
      dev = std::max(dev, std::abs(g.field_at_center - g0.field_at_center));
      orbit.push_back(tr.states[i].q);
      centers.push_back(g.center);
    }
    deviations.push_back(dev);

    SvgPlot plot;
    double m = 0.0;
    for (const Vec2& p : orbit) m = std::max({m, std::abs(p.x()), std::abs(p.y())});
    plot.xmin = -1.3 * m;
    plot.xmax = 1.3 * m;
    plot.ymin = -1.3 * m;
    plot.ymax = 1.3 * m;
    for (double lev : {g0.field_at_center * 0.98, g0.field_at_center, g0.field_at_center * 1.02})
      for (auto& seg : contour_segments(field, lev, field.domain(), 160))
        plot.polyline(seg, "#cc3333", 0.6);
    plot.polyline(orbit, "#1f4f9f", 0.8);
    plot.polyline(centers, "#11aa44", 1.2);
    std::string svg = join_path(out_dir, tag.str() + ".svg");
    write_file_atomic(svg, plot.render("flow with B level sets, E=" + format_g17(E)));
    out.files_written.push_back(svg);

    json je;
    je["E"] = E;
    je["level_set_deviation"] = dev;
    je["energy_drift_max"] = energy_drift(tr).max_relative;
    j["runs"].push_back(je);
  }
  if (energies.size() >= 2) {
    double slope = loglog_slope(energies, deviations);
    j["deviation_slope"] = slope;
    out.summary = "deviation slope vs E: " + format_g17(slope);
  }
  std::string jpath = join_path(out_dir, "trajectory.json");
  write_file_atomic(jpath, j.dump(2) + "\n");
  out.files_written.push_back(jpath);
  return out;
}

NfBundle build_nf(const MagneticField& field, int n1, int n2) {
  NfBundle b{field, build_potential(field), nullptr, FormalSeries(), NormalFormResult(), 0.0};
  b.chart = build_chart_jet(field, std::max(n1 + 2, 10), std::max(n2 + 2, 8));
  b.series = series_from_hamiltonian(field, b.chart, n1, n2);
  b.nf = birkhoff(b.series, b.chart);
  b.star_roundtrip = reorder_star_powers(b.nf);
  return b;
}

NormalFormResult truncate_classical(const NormalFormResult& nf, int order) {
  NormalFormResult out = nf;
  for (auto it = out.kappa_action.begin(); it != out.kappa_action.end();) {
    auto [l, m] = it->first;
    if (l != 0 || 2 * m > order)
      it = out.kappa_action.erase(it);
    else
      ++it;
  }
  return out;
}

ExperimentOutput run_compare_flows(const Config& cfg, const std::string& out_dir) {
  ExperimentOutput out;
  MagneticField field = field_from_config(cfg);
  VectorPotential pot = build_potential(field);
  int n1 = cfg.get_int_or("N1", 8), n2 = cfg.get_int_or("N2", 6);
  NfBundle nb = build_nf(field, n1, n2);
  double T = cfg.get_double_or("T", 50.0);
  double dt = cfg.get_double_or("dt", 1e-3);
  // eps is the energy scale of the comparison: H(start) = eps
  std::vector<double> eps = cfg.get_list_or("eps", {0.05, 0.025, 0.0125});
  std::vector<int> orders = cfg.get_int_list_or("orders", {2, 3, 4});
  Vec2 qs(cfg.get_double_or("start1", 0.28), cfg.get_double_or("start2", 0.0));
  DarbouxChart chart = darboux_chart(field);
  Vec2 z2s = chart.forward(qs);

  json j;
  j["experiment"] = "compare-flows";
  j["field"] = field.descriptor();
  std::ostringstream csv;
  csv << "order,eps,d_T\n";
  std::vector<double> fitted_orders;
  for (int N : orders) {
    TruncatedTransform transform(field, nb.nf, N);
    NormalFormResult nf_N = truncate_classical(nb.nf, N);
    std::vector<double> dT;
    for (double e : eps) {
      NormalState z0;
      z0.z1 = std::sqrt(e / field.eval(qs));
      z0.z2 = z2s;
      Vec4 w0 = transform.forward(z0);
      PhaseState s0{Vec2(w0(0), w0(1)), Vec2(w0(2), w0(3))};
      Trajectory th = integrate_H(field, pot, s0, T, dt);
      NormalTrajectory tk = integrate_K(nf_N, z0, T, dt);
      size_t stride = std::max<size_t>(1, th.times.size() / 100);
      Trajectory thd = downsample(th, stride);
      NormalTrajectory tkd = downsample(tk, stride);
      std::vector<double> d = compare_flows(
          thd, tkd, [&](const NormalState& z) { return transform.forward(z); });
      dT.push_back(d.back());
      csv << N << ',' << format_g17(e) << ',' << format_g17(d.back()) << '\n';
    }
    double slope = loglog_slope(eps, dT);
    fitted_orders.push_back(slope);
    json jo;
    jo["order"] = N;
    jo["d_T"] = dT;
    jo["empirical_order"] = slope;
    j["orders"].push_back(jo);
  }
  std::string cpath = join_path(out_dir, "compare_flows.csv");
  write_file_atomic(cpath, csv.str());
  out.files_written.push_back(cpath);
  std::string jpath = join_path(out_dir, "compare_flows.json");
  write_file_atomic(jpath, j.dump(2) + "\n");
  out.files_written.push_back(jpath);
  std::ostringstream sum;
  sum << "empirical orders:";
  for (double s : fitted_orders) sum << ' ' << format_g17(s);
  out.summary = sum.str();
  return out;
}

namespace {

json slow_poly_json(const SlowPoly& p) {
  json j = json::object();
  for (int g1 = 0; g1 <= p.smax; ++g1)
    for (int g2 = 0; g1 + g2 <= p.smax; ++g2)
      if (p.get(g1, g2) != 0.0)
        j[std::to_string(g1) + "," + std::to_string(g2)] = p.get(g1, g2);
  return j;
}

json series_json(const FormalSeries& s) {
  json j = json::object();
  for (const auto& [k, v] : s.c) {
    std::ostringstream key;
    key << k.a << ',' << k.b << ',' << k.l << ',' << k.g1 << ',' << k.g2;
    if (std::abs(v.imag()) < 1e-14 * (1.0 + std::abs(v.real())))
      j[key.str()] = v.real();
    else
      j[key.str()] = json::array({v.real(), v.imag()});
  }
  return j;
}

}  // namespace

double residual_decay_exponent(const MagneticField& field, const VectorPotential& pot,
                               const TruncatedTransform& tr, const NormalFormResult& nf, int order,
                               const Vec2& slow_offset) {
  std::vector<double> ss = {0.12, 0.0849, 0.06, 0.0424, 0.03};
  std::vector<double> rr;
  Vec2 z2 = nf.z2_0 + slow_offset;
  for (double s : ss) {
    double worst = 0.0;
    for (double phase : {0.0, 1.0472}) {
      NormalState z;
      z.z1 = std::polar(s, phase);
      z.z2 = z2;
      Vec4 w = tr.forward(z);
      PhaseState ps{Vec2(w(0), w(1)), Vec2(w(2), w(3))};
      double h = hamiltonian(field, pot, ps);
      double k = nf.eval_K(z, order);
      worst = std::max(worst, std::abs(h - k));
    }
    rr.push_back(worst);
  }
  return loglog_slope(ss, rr);
}

ExperimentOutput run_birkhoff(const Config& cfg, const std::string& out_dir) {
  ExperimentOutput out;
  MagneticField field = field_from_config(cfg);
  int n1 = cfg.get_int_or("N1", 8), n2 = cfg.get_int_or("N2", 6);
  NfBundle nb = build_nf(field, n1, n2);
  EigCoeffs eig{};
  bool have_eig = true;
  try {
    eig = eigenvalue_expansion(nb.nf, field);
  } catch (const std::invalid_argument&) {
    have_eig = false;  // degenerate minimum (constant field)
  }

  json j;
  j["experiment"] = "birkhoff";
  j["field"] = field.descriptor();
  j["orders"] = {n1, n2};
  j["basepoint"] = {nb.nf.z2_0.x(), nb.nf.z2_0.y()};
  j["tau"] = series_json(nb.nf.tau);
  j["kappa"] = series_json(nb.nf.kappa);
  j["b_jet"] = slow_poly_json(nb.nf.b_jet);
  json sc = json::object();
  for (const auto& [lm, p] : nb.nf.star_coeffs)
    sc[std::to_string(lm.first) + "," + std::to_string(lm.second)] = slow_poly_json(p);
  j["star_coeffs"] = sc;
  j["star_roundtrip_error"] = nb.star_roundtrip;
  if (have_eig) {
    j["eig_coeffs"]["B_min"] = eig.b_min;
    j["eig_coeffs"]["c0"] = eig.c0;
    j["eig_coeffs"]["c1"] = eig.c1;
  }

  std::ostringstream rep;
  rep << "normal form report\n";
  rep << "field: " << field.descriptor() << "\n";
  rep << "orders: N1=" << n1 << " N2=" << n2 << "\n";
  rep << "kappa terms: " << nb.nf.kappa.c.size()
      << ", tau terms: " << nb.nf.tau.c.size() << "\n";
  rep << "star round-trip error: " << format_g17(nb.star_roundtrip) << "\n";
  if (have_eig)
    rep << "B_min=" << format_g17(eig.b_min) << " c0=" << format_g17(eig.c0)
        << " c1=" << format_g17(eig.c1) << "\n";
  else
    rep << "eigenvalue expansion: degenerate minimum, coefficients not defined\n";

  if (cfg.get_or("residual_fit", "on") == "on" && !field.is_constant()) {
    VectorPotential pot = build_potential(field);
    std::vector<int> orders = cfg.get_int_list_or("orders", {2, 3, 4});
    for (int N : orders) {
      TruncatedTransform tr(field, nb.nf, N);
      double expo = residual_decay_exponent(field, pot, tr, nb.nf, N, Vec2(0.0, 0.0));
      rep << "residual decay exponent at order " << N << ": " << format_g17(expo) << "\n";
      json jr;
      jr["order"] = N;
      jr["residual_exponent"] = expo;
      j["residual_fits"].push_back(jr);
    }
  }
  if (field.is_constant()) rep << "constant field: kappa = 0, transform exact\n";

  std::string jpath = join_path(out_dir, "normal_form.json");
  write_file_atomic(jpath, j.dump(2) + "\n");
  out.files_written.push_back(jpath);
  std::string rpath = join_path(out_dir, "normal_form_report.txt");
  write_file_atomic(rpath, rep.str());
  out.files_written.push_back(rpath);
  out.summary = have_eig ? ("c1=" + format_g17(eig.c1)) : "constant field";
  return out;
}

ExperimentOutput run_spectrum(const Config& cfg, const std::string& out_dir) {
  ExperimentOutput out;
  MagneticField field = field_from_config(cfg);
  VectorPotential pot = build_potential(field);
  std::vector<double> hbars = cfg.get_list_or("hbar", {0.02, 0.01, 0.005});
  int n = cfg.get_int_or("grid_n", 512);
  int k = cfg.get_int_or("k", 6);
  Box box{cfg.get_double_or("spec_box_lo", -1.5), cfg.get_double_or("spec_box_hi", 1.5)};

  EigCoeffs eig{};
  bool have_eig = !field.is_constant();
  if (have_eig) {
    NfBundle nb = build_nf(field, 6, 6);
    eig = eigenvalue_expansion(nb.nf, field);
  }
  double bmin = field.min_on_domain();

  json j;
  j["experiment"] = "spectrum";
  j["field"] = field.descriptor();
  std::ostringstream csv;
  csv << "hbar,j,lambda,prediction,residual_vs_prediction,solver_residual\n";
  std::vector<double> lam1_minus;
  for (double hbar : hbars) {
    EigsOptions opts;
    opts.partner_n = cfg.get_int_or("partner_n", static_cast<int>(std::lround(n / 1.5)));
    SpectralResult sr = lowest_eigenpairs(field, pot, hbar, box, n, k, opts);
    json jr;
    jr["hbar"] = hbar;
    jr["grid_n"] = n;
    jr["eigenvalues"] = sr.eigenvalues;
    jr["residual_norms"] = sr.residual_norms;
    jr["discretization_error_estimate"] = sr.discretization_error_estimate;
    for (int i = 0; i < k; ++i) {
      double pred = have_eig
                        ? hbar * bmin + hbar * hbar * (eig.c1 * (2 * (i + 1) - 1) + eig.c0)
                        : hbar * bmin * (2 * (i + 1) - 1);
      csv << format_g17(hbar) << ',' << (i + 1) << ',' << format_g17(sr.eigenvalues[i]) << ','
          << format_g17(pred) << ',' << format_g17(sr.eigenvalues[i] - pred) << ','
          << format_g17(sr.residual_norms[i]) << '\n';
    }
    lam1_minus.push_back(sr.eigenvalues[0] - hbar * bmin);
    j["runs"].push_back(jr);
  }
  if (hbars.size() >= 2) {
    double a = loglog_slope(hbars, lam1_minus);
    j["lambda1_excess_exponent"] = a;
    out.summary = "lambda1 excess exponent: " + format_g17(a);
  }
  std::string cpath = join_path(out_dir, "spectrum.csv");
  write_file_atomic(cpath, csv.str());
  out.files_written.push_back(cpath);
  std::string jpath = join_path(out_dir, "spectrum.json");
  write_file_atomic(jpath, j.dump(2) + "\n");
  out.files_written.push_back(jpath);
  return out;
}

ExperimentOutput run_counting(const Config& cfg, const std::string& out_dir) {
  ExperimentOutput out;
  MagneticField field = field_from_config(cfg);
  VectorPotential pot = build_potential(field);
  std::vector<double> hbars = cfg.get_list_or("hbar", {0.02, 0.01, 0.005});
  double c1_level = cfg.get_double_or("C1", 1.25 * field.min_on_domain());
  int n = cfg.get_int_or("grid_n", 512);
  Box box{cfg.get_double_or("spec_box_lo", -1.5), cfg.get_double_or("spec_box_hi", 1.5)};

  // phase-space volume: integral of B over {B <= C1}
  double vol = 0.0;
  {
    const int m = 1200;
    double h = box.length() / m;
    for (int i = 0; i < m; ++i)
      for (int jj = 0; jj < m; ++jj) {
        Vec2 q(box.lo + (i + 0.5) * h, box.lo + (jj + 0.5) * h);
        double b = field.eval(q);
        if (b <= c1_level) vol += b * h * h;
      }
  }

  json j;
  j["experiment"] = "counting";
  j["field"] = field.descriptor();
  j["C1"] = c1_level;
  j["phase_space_volume"] = vol;
  for (double hbar : hbars) {
    DiscreteOperator op = assemble_magnetic_laplacian(field, pot, hbar, box, n);
    int count = count_below(op, c1_level * hbar);
    double ratio = count * 2.0 * M_PI * hbar / vol;
    json jr;
    jr["hbar"] = hbar;
    jr["count"] = count;
    jr["weyl_ratio"] = ratio;
    j["runs"].push_back(jr);
  }
  std::string jpath = join_path(out_dir, "counting.json");
  write_file_atomic(jpath, j.dump(2) + "\n");
  out.files_written.push_back(jpath);
  out.summary = "counting done";
  return out;
}

ExperimentOutput run_report(const Config& cfg, const std::string& out_dir) {
  ExperimentOutput out;
  std::vector<CriterionResult> results = run_acceptance(cfg, out_dir);
  json j;
  j["experiment"] = "report";
  bool all = true;
  std::ostringstream md;
  md << "# acceptance report\n\n";
  for (const auto& r : results) {
    json jr;
    jr["id"] = r.id;
    jr["name"] = r.name;
    jr["pass"] = r.pass;
    jr["runtime_seconds"] = r.runtime_seconds;
    jr["lines"] = r.lines;
    j["criteria"].push_back(jr);
    all = all && r.pass;
    md << "## criterion " << r.id << ": " << r.name << "\n\n";
    md << "result: " << (r.pass ? "PASS" : "FAIL") << " (" << format_g17(r.runtime_seconds)
       << " s)\n\n";
    for (const auto& l : r.lines) md << "- " << l << "\n";
    md << "\n";
  }
  j["all_pass"] = all;
  std::string jpath = join_path(out_dir, "report.json");
  write_file_atomic(jpath, j.dump(2) + "\n");
  out.files_written.push_back(jpath);
  std::string mpath = join_path(out_dir, "report.md");
  write_file_atomic(mpath, md.str());
  out.files_written.push_back(mpath);
  out.exit_code = all ? 0 : 1;
  out.summary = all ? "all criteria passed" : "some criteria failed";
  return out;
}

}  // namespace magwell
