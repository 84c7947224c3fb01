#include "magwell/symflow.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace magwell {

double hamiltonian(const MagneticField&, const VectorPotential& pot, const PhaseState& s) {
  return (s.p - pot.eval(s.q)).squaredNorm();
}

Vec2 velocity(const VectorPotential& pot, const PhaseState& s) {
  return 2.0 * (s.p - pot.eval(s.q));
}

namespace {

// Canonical vector field of H = |p - A(q)|^2:
//   qdot = 2 (p - A),  pdot = 2 (T_q A)^T (p - A).
Vec4 ham_field(const VectorPotential& pot, const Vec4& w) {
  Vec2 q(w(0), w(1)), p(w(2), w(3));
  Vec2 v = p - pot.eval(q);
  Vec2 pdot = pot.jac(q).transpose() * (2.0 * v);
  Vec4 r;
  r << 2.0 * v.x(), 2.0 * v.y(), pdot.x(), pdot.y();
  return r;
}

Vec4 midpoint_step(const VectorPotential& pot, const Vec4& w, double dt) {
  // solve z* = w + (dt/2) X(z*) by fixed point, then w' = 2z* - w
  Vec4 zs = w + 0.5 * dt * ham_field(pot, w);
  for (int it = 0; it < 50; ++it) {
    Vec4 next = w + 0.5 * dt * ham_field(pot, zs);
    double delta = (next - zs).norm();
    zs = next;
    if (delta < 1e-14 * (1.0 + zs.norm())) return 2.0 * zs - w;
  }
  throw std::runtime_error("implicit midpoint stage did not converge");
}

// Velocity pusher for qddot = 2 qdot ^ B: rotation of qdot by -2 B dt about
// e3, sampled at the drift midpoint, with the exact rotation angle.
void boris_step(const MagneticField& field, Vec2& q, Vec2& v, double dt) {
  Vec2 qm = q + 0.5 * dt * v;
  double b = field.eval(qm);
  double theta = -2.0 * b * dt;
  double c = std::cos(theta), s = std::sin(theta);
  Vec2 vn(c * v.x() - s * v.y(), s * v.x() + c * v.y());
  q = qm + 0.5 * dt * vn;
  v = vn;
}

}  // namespace

Trajectory integrate_H(const MagneticField& field, const VectorPotential& pot,
                       const PhaseState& s0, double T, double dt, Integrator method) {
  // dt < 0 runs the time-reversed flow (used by the reversibility checks)
  if (dt == 0.0 || T <= 0.0) throw std::invalid_argument("integrate_H needs dt != 0, T > 0");
  double bmax = field.max_on_domain();
  if (std::abs(dt) > 0.1 / bmax)
    throw std::invalid_argument("dt too large for the fast rotation: need dt <= 0.1/max|B|");
  size_t n = static_cast<size_t>(std::llround(T / std::abs(dt)));
  Trajectory tr;
  tr.step = dt;
  tr.integrator_tag = method == Integrator::implicit_midpoint ? "implicit_midpoint" : "boris";
  tr.times.reserve(n + 1);
  tr.states.reserve(n + 1);
  tr.energy.reserve(n + 1);

  auto push = [&](double t, const PhaseState& s) {
    tr.times.push_back(t);
    tr.states.push_back(s);
    tr.energy.push_back(hamiltonian(field, pot, s));
  };
  push(0.0, s0);

  if (method == Integrator::implicit_midpoint) {
    Vec4 w;
    w << s0.q.x(), s0.q.y(), s0.p.x(), s0.p.y();
    for (size_t i = 1; i <= n; ++i) {
      w = midpoint_step(pot, w, dt);
      PhaseState s{Vec2(w(0), w(1)), Vec2(w(2), w(3))};
      if (!field.domain().contains(s.q)) throw std::runtime_error("trajectory left domain box");
      push(i * std::abs(dt), s);
    }
  } else {
    Vec2 q = s0.q;
    Vec2 v = velocity(pot, s0);
    for (size_t i = 1; i <= n; ++i) {
      boris_step(field, q, v, dt);
      if (!field.domain().contains(q)) throw std::runtime_error("trajectory left domain box");
      PhaseState s{q, 0.5 * v + pot.eval(q)};
      push(i * std::abs(dt), s);
    }
  }
  return tr;
}

GuidingRecord guiding_center(const MagneticField& field, const VectorPotential& pot,
                             const PhaseState& s) {
  double b = field.eval(s.q);
  if (b == 0.0) throw std::invalid_argument("guiding_center needs B != 0");
  Vec2 v = velocity(pot, s);
  // J chosen so a B>0 orbit encircles the center: c = q + J v / (2B) with
  // J(a,b) = (b,-a); checked exact against the constant-field circle.
  Vec2 jv(v.y(), -v.x());
  GuidingRecord g;
  g.center = s.q + jv / (2.0 * b);
  g.radius = v.norm() / (2.0 * std::abs(b));
  g.field_at_center = field.eval(g.center);
  g.action = hamiltonian(field, pot, s) / g.field_at_center;
  return g;
}

std::vector<double> compare_flows(const Trajectory& traj_h, const NormalTrajectory& traj_k,
                                  const std::function<Vec4(const NormalState&)>& transform) {
  if (traj_h.times.size() != traj_k.times.size())
    throw std::invalid_argument("compare_flows: mismatched grids");
  for (size_t i = 0; i < traj_h.times.size(); ++i)
    if (std::abs(traj_h.times[i] - traj_k.times[i]) > 1e-12 * (1.0 + std::abs(traj_h.times[i])))
      throw std::invalid_argument("compare_flows: mismatched grids");
  std::vector<double> d(traj_h.times.size());
  for (size_t i = 0; i < d.size(); ++i) {
    Vec4 wk = transform(traj_k.states[i]);
    const PhaseState& sh = traj_h.states[i];
    Vec4 wh;
    wh << sh.q.x(), sh.q.y(), sh.p.x(), sh.p.y();
    d[i] = (wh - wk).norm();
  }
  return d;
}

std::vector<double> mirror_points(const MagneticField& field, const VectorPotential& pot,
                                  const Trajectory& traj) {
  std::vector<double> events;
  if (traj.states.size() < 3) return events;
  std::vector<double> proj(traj.states.size());
  for (size_t i = 0; i < traj.states.size(); ++i) {
    GuidingRecord g = guiding_center(field, pot, traj.states[i]);
    Vec2 gradb = field.grad(g.center);
    double gn = gradb.norm();
    if (gn < 1e-12) return {};  // no drift direction (constant field)
    Vec2 drift(gradb.y() / gn, -gradb.x() / gn);
    proj[i] = std::abs(velocity(pot, traj.states[i]).dot(drift));
  }
  // smooth over one fast period to suppress the Larmor oscillation
  double bmax = field.max_on_domain();
  size_t w = std::max<size_t>(2, static_cast<size_t>(M_PI / bmax / traj.step));
  std::vector<double> sm(proj.size());
  for (size_t i = 0; i < proj.size(); ++i) {
    size_t a = i > w ? i - w : 0, b = std::min(proj.size() - 1, i + w);
    double acc = 0.0;
    for (size_t j = a; j <= b; ++j) acc += proj[j];
    sm[i] = acc / double(b - a + 1);
  }
  for (size_t i = 2 * w; i + 2 * w < sm.size(); ++i) {
    if (sm[i] < sm[i - w] && sm[i] < sm[i + w] && sm[i - w] < sm[i - 2 * w] &&
        sm[i + w] < sm[i + 2 * w]) {
      if (events.empty() || traj.times[i] - events.back() > 2.0 * w * traj.step)
        events.push_back(traj.times[i]);
    }
  }
  return events;
}

EnergyDrift energy_drift(const Trajectory& traj) {
  EnergyDrift d;
  if (traj.energy.size() < 2) return d;
  double h0 = traj.energy.front();
  double scale = std::abs(h0) > 0 ? std::abs(h0) : 1.0;
  for (double h : traj.energy) d.max_relative = std::max(d.max_relative, std::abs(h - h0) / scale);
  // secular part: linear trend over the run; a regression averages the fast
  // oscillation out instead of aliasing it into window means
  size_t n = traj.energy.size();
  double tm = 0.0, hm = 0.0;
  for (size_t i = 0; i < n; ++i) {
    tm += traj.times[i];
    hm += traj.energy[i];
  }
  tm /= n;
  hm /= n;
  double stt = 0.0, sth = 0.0;
  for (size_t i = 0; i < n; ++i) {
    stt += (traj.times[i] - tm) * (traj.times[i] - tm);
    sth += (traj.times[i] - tm) * (traj.energy[i] - hm);
  }
  double slope = stt > 0 ? sth / stt : 0.0;
  d.secular_relative = std::abs(slope) * (traj.times.back() - traj.times.front()) / scale;
  return d;
}

namespace {
std::string fmt17(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}
}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const MagneticField& field, const VectorPotential& pot) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << "t,q1,q2,p1,p2,H,c1,c2,I,B_at_c\n";
    for (size_t i = 0; i < traj.times.size(); ++i) {
      const PhaseState& s = traj.states[i];
      GuidingRecord g = guiding_center(field, pot, s);
      out << fmt17(traj.times[i]) << ',' << fmt17(s.q.x()) << ',' << fmt17(s.q.y()) << ','
          << fmt17(s.p.x()) << ',' << fmt17(s.p.y()) << ',' << fmt17(traj.energy[i]) << ','
          << fmt17(g.center.x()) << ',' << fmt17(g.center.y()) << ',' << fmt17(g.action) << ','
          << fmt17(g.field_at_center) << '\n';
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("atomic rename failed for " + path);
}

}  // namespace magwell
