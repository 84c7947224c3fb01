#include "magwell/starbirk.hpp"

#include <cmath>
#include <stdexcept>

namespace magwell {

namespace {

double fall(int n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= (n - i);
  return r;
}

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

cd ipow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

// Star product with output caps (n1cap, n2cap), optionally skipping the
// pointwise (r,s)=(0,0) term (used by the commutator so that the classical
// products cancel exactly instead of to roundoff).
FormalSeries star(const FormalSeries& a, const FormalSeries& b, int n1cap, int n2cap,
                  bool skip_pointwise) {
  FormalSeries r(n1cap, n2cap, a.z2_0);
  for (const auto& [ka, ca] : a.c) {
    if (ca == 0.0) continue;
    for (const auto& [kb, cb] : b.c) {
      if (cb == 0.0) continue;
      int g1 = ka.g1 + kb.g1, g2 = ka.g2 + kb.g2;
      if (g1 + g2 > n2cap) continue;
      for (int rr = 0; rr <= std::min(ka.a, kb.b); ++rr)
        for (int ss = 0; ss <= std::min(ka.b, kb.a); ++ss) {
          if (skip_pointwise && rr == 0 && ss == 0) continue;
          FSKey k{ka.a - rr + kb.a - ss, ka.b - ss + kb.b - rr, ka.l + kb.l + rr + ss, g1, g2};
          if (k.degree() > n1cap) continue;
          // (hbar/2i)^{r+s} (-1)^s / (r! s!) with the derivative falls
          double mag = std::pow(0.5, rr + ss) / (std::tgamma(rr + 1) * std::tgamma(ss + 1));
          mag *= fall(ka.a, rr) * fall(ka.b, ss) * fall(kb.b, rr) * fall(kb.a, ss);
          if (ss % 2 == 1) mag = -mag;
          cd factor = mag * ipow(-(rr + ss));  // (1/i)^{r+s} = i^{-(r+s)}
          r.add_term(k, ca * cb * factor);
        }
    }
  }
  return r;
}

}  // namespace

void FormalSeries::add_term(const FSKey& k, cd v, double drop_tol) {
  if (k.degree() > N1 || k.slow() > N2 || k.a < 0 || k.b < 0 || k.l < 0) return;
  auto it = c.find(k);
  if (it == c.end()) {
    if (std::abs(v) > drop_tol) c.emplace(k, v);
  } else {
    it->second += v;
    if (it->second == 0.0) c.erase(it);
  }
}

FormalSeries FormalSeries::operator+(const FormalSeries& o) const {
  FormalSeries r = *this;
  for (const auto& [k, v] : o.c) r.add_term(k, v);
  return r;
}

FormalSeries FormalSeries::operator-(const FormalSeries& o) const {
  FormalSeries r = *this;
  for (const auto& [k, v] : o.c) r.add_term(k, -v);
  return r;
}

FormalSeries FormalSeries::operator*(cd s) const {
  FormalSeries r(N1, N2, z2_0);
  for (const auto& [k, v] : c) r.add_term(k, v * s);
  return r;
}

FormalSeries FormalSeries::degree_part(int d) const {
  FormalSeries r(N1, N2, z2_0);
  for (const auto& [k, v] : c)
    if (k.degree() == d) r.add_term(k, v);
  return r;
}

FormalSeries FormalSeries::tail(int d) const {
  FormalSeries r(N1, N2, z2_0);
  for (const auto& [k, v] : c)
    if (k.degree() >= d) r.add_term(k, v);
  return r;
}

double FormalSeries::max_abs() const {
  double m = 0.0;
  for (const auto& [k, v] : c) m = std::max(m, std::abs(v));
  return m;
}

double FormalSeries::max_abs_degree(int d) const {
  double m = 0.0;
  for (const auto& [k, v] : c)
    if (k.degree() == d) m = std::max(m, std::abs(v));
  return m;
}

cd FormalSeries::eval(double x1, double xi1, double s1, double s2, double hbar) const {
  cd r = 0.0;
  for (const auto& [k, v] : c)
    r += v * std::pow(x1, k.a) * std::pow(xi1, k.b) * std::pow(hbar, k.l) * std::pow(s1, k.g1) *
         std::pow(s2, k.g2);
  return r;
}

namespace {

// complex fast basis: key (m,n) for z^m zbar^n with the same (l,g1,g2) tail
struct CKey {
  int m = 0, n = 0, l = 0, g1 = 0, g2 = 0;
  auto operator<=>(const CKey&) const = default;
};
using CSeries = std::map<CKey, cd>;

CSeries to_complex(const FormalSeries& s) {
  CSeries out;
  for (const auto& [k, v] : s.c) {
    // x^a xi^b = 2^-a (2i)^-b sum_{p,q} C(a,p) C(b,q) (-1)^{b-q} z^{p+q} zbar^{a-p+b-q}
    cd base = v * std::pow(0.5, k.a + k.b) * ipow(-k.b);
    for (int p = 0; p <= k.a; ++p)
      for (int q = 0; q <= k.b; ++q) {
        cd coef = base * binom(k.a, p) * binom(k.b, q) * ((k.b - q) % 2 == 1 ? -1.0 : 1.0);
        CKey ck{p + q, k.a - p + k.b - q, k.l, k.g1, k.g2};
        auto it = out.find(ck);
        if (it == out.end())
          out.emplace(ck, coef);
        else
          it->second += coef;
      }
  }
  return out;
}

void add_from_complex(FormalSeries& dst, const CKey& ck, cd v) {
  // z^m zbar^n = sum_{p,q} C(m,p) C(n,q) i^{m-p} (-i)^{n-q} x^{p+q} xi^{m-p+n-q}
  for (int p = 0; p <= ck.m; ++p)
    for (int q = 0; q <= ck.n; ++q) {
      cd coef = v * binom(ck.m, p) * binom(ck.n, q) * ipow(ck.m - p) * ipow(-(ck.n - q));
      dst.add_term(FSKey{p + q, ck.m - p + ck.n - q, ck.l, ck.g1, ck.g2}, coef);
    }
}

FormalSeries from_complex(const CSeries& cs, int n1, int n2, Vec2 z2_0) {
  FormalSeries r(n1, n2, z2_0);
  for (const auto& [ck, v] : cs) add_from_complex(r, ck, v);
  // scrub exact-cancellation residues
  for (auto it = r.c.begin(); it != r.c.end();) {
    if (std::abs(it->second) == 0.0)
      it = r.c.erase(it);
    else
      ++it;
  }
  return r;
}

// slow-jet (triangular) convolution of complex coefficient tables
using SlowTable = std::map<std::pair<int, int>, cd>;

SlowTable slow_mul(const SlowTable& a, const SlowTable& b, int n2) {
  SlowTable r;
  for (const auto& [ka, va] : a)
    for (const auto& [kb, vb] : b) {
      int g1 = ka.first + kb.first, g2 = ka.second + kb.second;
      if (g1 + g2 > n2) continue;
      r[{g1, g2}] += va * vb;
    }
  return r;
}

}  // namespace

FormalSeries moyal(const FormalSeries& a, const FormalSeries& b) {
  int n1 = std::min(a.N1, b.N1), n2 = std::min(a.N2, b.N2);
  return star(a, b, n1, n2, false);
}

FormalSeries poisson(const FormalSeries& a, const FormalSeries& b) {
  int n1 = std::min(a.N1, b.N1), n2 = std::min(a.N2, b.N2);
  FormalSeries r(n1, n2, a.z2_0);
  for (const auto& [ka, va] : a.c)
    for (const auto& [kb, vb] : b.c) {
      int g1 = ka.g1 + kb.g1, g2 = ka.g2 + kb.g2;
      if (g1 + g2 > n2) continue;
      if (ka.a > 0 && kb.b > 0) {
        FSKey k{ka.a - 1 + kb.a, ka.b + kb.b - 1, ka.l + kb.l, g1, g2};
        if (k.degree() <= n1) r.add_term(k, va * vb * double(ka.a) * double(kb.b));
      }
      if (ka.b > 0 && kb.a > 0) {
        FSKey k{ka.a + kb.a - 1, ka.b - 1 + kb.b, ka.l + kb.l, g1, g2};
        if (k.degree() <= n1) r.add_term(k, -va * vb * double(ka.b) * double(kb.a));
      }
    }
  return r;
}

FormalSeries ad_action(const FormalSeries& a, const FormalSeries& b) {
  int n1 = std::min(a.N1, b.N1), n2 = std::min(a.N2, b.N2);
  // commutator with one extra hbar order of headroom, then divide by hbar
  FormalSeries ab = star(a, b, n1 + 2, n2, true);
  FormalSeries ba = star(b, a, n1 + 2, n2, true);
  FormalSeries r(n1, n2, a.z2_0);
  for (const auto& [k, v] : ab.c) {
    auto it = ba.c.find(k);
    cd comm = v - (it != ba.c.end() ? it->second : cd(0.0));
    if (comm == 0.0) continue;
    if (k.l == 0) throw std::logic_error("ad_action: commutator term without hbar factor");
    r.add_term(FSKey{k.a, k.b, k.l - 1, k.g1, k.g2}, cd(0, 1) * comm);
  }
  for (const auto& [k, v] : ba.c) {
    if (ab.c.count(k)) continue;
    if (k.l == 0) throw std::logic_error("ad_action: commutator term without hbar factor");
    r.add_term(FSKey{k.a, k.b, k.l - 1, k.g1, k.g2}, cd(0, -1) * v);
  }
  return r;
}

FormalSeries fast_action_series(int n1, int n2, Vec2 z2_0) {
  FormalSeries s(n1, n2, z2_0);
  s.add_term(FSKey{2, 0, 0, 0, 0}, 1.0);
  s.add_term(FSKey{0, 2, 0, 0, 0}, 1.0);
  return s;
}

bool FormalSeries::is_resonant(double tol) const {
  CSeries cs = to_complex(*this);
  for (const auto& [k, v] : cs)
    if (k.m != k.n && std::abs(v) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------

double SlowPoly::eval(double s1, double s2) const {
  double r = 0.0;
  for (int g1 = 0; g1 <= smax; ++g1)
    for (int g2 = 0; g1 + g2 <= smax; ++g2) {
      double v = c[idx(g1, g2)];
      if (v != 0.0) r += v * std::pow(s1, g1) * std::pow(s2, g2);
    }
  return r;
}

SlowPoly SlowPoly::d1() const {
  SlowPoly r(smax);
  for (int g1 = 1; g1 <= smax; ++g1)
    for (int g2 = 0; g1 + g2 <= smax; ++g2) r.add(g1 - 1, g2, g1 * get(g1, g2));
  return r;
}

SlowPoly SlowPoly::d2() const {
  SlowPoly r(smax);
  for (int g1 = 0; g1 <= smax; ++g1)
    for (int g2 = 1; g1 + g2 <= smax; ++g2) r.add(g1, g2 - 1, g2 * get(g1, g2));
  return r;
}

// ---------------------------------------------------------------------------

FormalSeries series_from_hamiltonian(const MagneticField& field,
                                     std::shared_ptr<const SymplecticChartJet> chart, int n1,
                                     int n2) {
  if (!chart) throw std::invalid_argument("series_from_hamiltonian needs a chart jet");
  if (chart->fcap < n1 || chart->scap < n2)
    throw std::runtime_error("chart jet caps too small for requested series orders");
  const Jet4& h = chart->h_hat;
  FormalSeries s(n1, n2, chart->z2_0);
  for (int a = 0; a <= n1; ++a)
    for (int b = 0; a + b <= n1; ++b)
      for (int g1 = 0; g1 <= n2; ++g1)
        for (int g2 = 0; g1 + g2 <= n2; ++g2) {
          double v = h.get(a, b, g1, g2);
          if (v != 0.0) s.add_term(FSKey{a, b, 0, g1, g2}, v);
        }
  double scale = std::max(1.0, s.max_abs());
  if (s.max_abs_degree(0) > 1e-10 * scale || s.max_abs_degree(1) > 1e-10 * scale)
    throw std::runtime_error("jet extraction failure: nonvanishing low-degree terms");
  (void)field;
  return s;
}

namespace {

// Splits a homogeneous degree block into its resonant part and the generator
// solving the homological equation; both returned in the real basis.
void homological_split(const FormalSeries& rj, const SlowTable& b_inv, int n1, int n2, Vec2 z2_0,
                       FormalSeries& resonant, FormalSeries& generator) {
  CSeries cs = to_complex(rj);
  // group by (m,n,l): slow tables
  std::map<std::tuple<int, int, int>, SlowTable> groups;
  for (const auto& [k, v] : cs) {
    if (std::abs(v) == 0.0) continue;
    groups[{k.m, k.n, k.l}][{k.g1, k.g2}] += v;
  }
  CSeries res_c, gen_c;
  for (auto& [mnl, table] : groups) {
    auto [m, n, l] = mnl;
    if (m == n) {
      for (auto& [g, v] : table) res_c[CKey{m, n, l, g.first, g.second}] += v;
    } else {
      SlowTable divided = slow_mul(table, b_inv, n2);
      cd eig = cd(0, 2.0 * (m - n));
      for (auto& [g, v] : divided) gen_c[CKey{m, n, l, g.first, g.second}] += v / eig;
    }
  }
  resonant = from_complex(res_c, n1, n2, z2_0);
  generator = from_complex(gen_c, n1, n2, z2_0);
}

}  // namespace

NormalFormResult birkhoff(const FormalSeries& series,
                          std::shared_ptr<const SymplecticChartJet> chart) {
  const int n1 = series.N1, n2 = series.N2;
  NormalFormResult nf;
  nf.N1 = n1;
  nf.N2 = n2;
  nf.z2_0 = series.z2_0;
  nf.chart = chart;

  double scale = std::max(1.0, series.max_abs());
  if (series.max_abs_degree(0) > 1e-9 * scale || series.max_abs_degree(1) > 1e-9 * scale)
    throw std::invalid_argument("birkhoff input must vanish to second order");

  // Degree-2 block: expect b(z2) (x1^2 + xi1^2) up to roundoff. The b jet is
  // symmetrized so the resonance structure downstream is exact by index.
  SlowPoly bj(n2);
  double offdiag = 0.0;
  for (const auto& [k, v] : series.c) {
    if (k.degree() != 2) continue;
    if (k.a == 2 && k.b == 0)
      bj.add(k.g1, k.g2, 0.5 * v.real());
    else if (k.a == 0 && k.b == 2)
      bj.add(k.g1, k.g2, 0.5 * v.real());
    else
      offdiag = std::max(offdiag, std::abs(v));
  }
  if (offdiag > 1e-9 * scale)
    throw std::invalid_argument("birkhoff input degree-2 block is not b(z2)|z1|^2");
  nf.b_jet = bj;
  nf.b0 = bj.get(0, 0);
  if (nf.b0 == 0.0) throw std::invalid_argument("field vanishes at the chart basepoint");

  FormalSeries h0(n1, n2, series.z2_0);
  for (int g1 = 0; g1 <= n2; ++g1)
    for (int g2 = 0; g1 + g2 <= n2; ++g2) {
      double v = bj.get(g1, g2);
      if (v != 0.0) {
        h0.add_term(FSKey{2, 0, 0, g1, g2}, v);
        h0.add_term(FSKey{0, 2, 0, g1, g2}, v);
      }
    }

  // reciprocal of the b jet as a slow table
  SlowTable b_inv;
  {
    SlowTable u;  // deviation / b0
    for (int g1 = 0; g1 <= n2; ++g1)
      for (int g2 = 0; g1 + g2 <= n2; ++g2)
        if ((g1 || g2) && bj.get(g1, g2) != 0.0) u[{g1, g2}] = bj.get(g1, g2) / nf.b0;
    SlowTable pw;
    pw[{0, 0}] = 1.0;
    b_inv[{0, 0}] = 1.0 / nf.b0;
    for (int k = 1; k <= n2; ++k) {
      pw = slow_mul(pw, u, n2);
      if (pw.empty()) break;
      for (auto& [g, v] : pw) b_inv[g] += (k % 2 == 0 ? 1.0 : -1.0) * v / nf.b0;
    }
  }

  FormalSeries w = h0 + series.tail(3);
  nf.tau = FormalSeries(n1, n2, series.z2_0);
  for (int j = 3; j <= n1; ++j) {
    FormalSeries rj = w.degree_part(j);
    FormalSeries res(n1, n2, series.z2_0), gen(n1, n2, series.z2_0);
    if (rj.max_abs() > 0.0) homological_split(rj, b_inv, n1, n2, series.z2_0, res, gen);
    nf.generators.push_back(gen);
    if (gen.max_abs() > 0.0) {
      nf.tau = nf.tau + gen;
      // w <- exp(i hbar^-1 ad_gen) w, Lie series terminates within the caps
      FormalSeries term = w;
      for (int k = 1; 2 + k * (j - 2) <= n1 + (j - 2); ++k) {
        term = ad_action(gen, term) * (1.0 / k);
        if (term.max_abs() == 0.0) break;
        w = w + term;
      }
    }
  }

  nf.kappa = w - h0;
  // degree <= 2 content of kappa is cancellation residue; scrub it
  for (auto it = nf.kappa.c.begin(); it != nf.kappa.c.end();) {
    if (it->first.degree() < 3 || std::abs(it->second) == 0.0)
      it = nf.kappa.c.erase(it);
    else
      ++it;
  }

  // action-basis table of kappa: terms (m,m,l) -> slow jets
  CSeries kc = to_complex(nf.kappa);
  for (const auto& [k, v] : kc) {
    if (k.m != k.n) {
      if (std::abs(v) > 1e-9 * scale)
        throw std::logic_error("birkhoff produced a non-resonant remainder");
      continue;
    }
    if (std::abs(v.imag()) > 1e-9 * scale)
      throw std::logic_error("resonant remainder has an imaginary part");
    auto key = std::make_pair(k.l, k.m);
    auto it = nf.kappa_action.find(key);
    if (it == nf.kappa_action.end()) it = nf.kappa_action.emplace(key, SlowPoly(n2)).first;
    it->second.add(k.g1, k.g2, v.real());
  }
  // rebuild kappa from the purged table so the stored series is radial by
  // construction (integer binomial expansion of (x^2+xi^2)^m)
  nf.kappa = FormalSeries(n1, n2, series.z2_0);
  for (const auto& [lm, p] : nf.kappa_action) {
    auto [l, m] = lm;
    for (int k = 0; k <= m; ++k) {
      double bb = binom(m, k);
      for (int g1 = 0; g1 <= n2; ++g1)
        for (int g2 = 0; g1 + g2 <= n2; ++g2) {
          double v = p.get(g1, g2);
          if (v != 0.0) nf.kappa.add_term(FSKey{2 * k, 2 * (m - k), l, g1, g2}, v * bb);
        }
    }
  }
  return nf;
}

NormalTrajectory integrate_K(const NormalFormResult& nf, const NormalState& z0, double T,
                             double dt) {
  if (dt <= 0.0 || T <= 0.0) throw std::invalid_argument("integrate_K needs dt > 0, T > 0");
  const double I = std::norm(z0.z1);
  const double r0 = std::abs(z0.z1);
  double phase = std::arg(z0.z1);
  size_t n = static_cast<size_t>(std::llround(T / dt));
  NormalTrajectory tr;
  tr.step = dt;
  tr.times.reserve(n + 1);
  tr.states.reserve(n + 1);
  tr.times.push_back(0.0);
  tr.states.push_back(z0);
  Vec2 z2 = z0.z2;
  for (size_t i = 1; i <= n; ++i) {
    // implicit midpoint for the slow Hamiltonian h(z2) = I f(z2, I)
    auto slow_field = [&](const Vec2& z) {
      Vec2 g = nf.f_grad_z2(z, I);
      return Vec2(I * g.y(), -I * g.x());
    };
    Vec2 zs = z2 + 0.5 * dt * slow_field(z2);
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      Vec2 nx = z2 + 0.5 * dt * slow_field(zs);
      double delta = (nx - zs).norm();
      zs = nx;
      if (delta < 1e-14 * (1.0 + zs.norm())) {
        ok = true;
        break;
      }
    }
    if (!ok) throw std::runtime_error("integrate_K slow stage did not converge");
    z2 = 2.0 * zs - z2;
    // fast frequency -2 dK/dI at the midpoint stage (second-order quadrature)
    double freq = -2.0 * (nf.f_value(zs, I) + I * nf.f_dI(zs, I));
    phase += dt * freq;
    NormalState s;
    s.z1 = std::polar(r0, phase);
    s.z2 = z2;
    if ((z2 - nf.z2_0).norm() > 10.0)
      throw std::runtime_error("integrate_K left the chart domain");
    tr.times.push_back(i * dt);
    tr.states.push_back(s);
  }
  return tr;
}

double reorder_star_powers(NormalFormResult& nf) {
  const int n1 = nf.N1, n2 = nf.N2;
  const int mmax = n1 / 2;
  // star powers of I = |z1|^2: S_m = sum_{r,lam} sig[m][r][lam] I^r hbar^lam
  FormalSeries I = fast_action_series(n1, n2, nf.z2_0);
  std::vector<std::map<std::pair<int, int>, double>> sig(mmax + 1);
  sig[0][{0, 0}] = 1.0;
  FormalSeries sm = I;
  for (int m = 1; m <= mmax; ++m) {
    CSeries cs = to_complex(sm);
    double mx = 0.0;
    for (const auto& [k, v] : cs) mx = std::max(mx, std::abs(v));
    for (const auto& [k, v] : cs) {
      if (k.m != k.n) {
        if (std::abs(v) > 1e-12 * mx)
          throw std::logic_error("star power of I must be radial");
        continue;
      }
      if (std::abs(v.imag()) > 1e-12 * mx)
        throw std::logic_error("star power of I must be real");
      if (v.real() != 0.0) sig[m][{k.m, k.l}] += v.real();
    }
    if (m < mmax) sm = moyal(sm, I);
  }
  // back substitution from the top action power down; the change of basis is
  // unitriangular so it cannot fail at finite truncation
  std::map<std::pair<int, int>, SlowPoly> acc = nf.kappa_action;
  nf.star_coeffs.clear();
  for (int m = mmax; m >= 0; --m) {
    for (int l = 0; 2 * l + 2 * m <= n1; ++l) {
      auto it = acc.find({l, m});
      if (it == acc.end()) continue;
      SlowPoly cstar = it->second;
      bool nonzero = false;
      for (double v : cstar.c) nonzero |= (v != 0.0);
      if (!nonzero) continue;
      nf.star_coeffs[{l, m}] = cstar;
      // subtract cstar * hbar^l * S_m from the accumulator
      for (const auto& [rl, s] : sig[m]) {
        auto [r, lam] = rl;
        if (r == m && lam == 0) {
          // the leading term removes the entry itself
          auto jt = acc.find({l, m});
          if (jt != acc.end()) acc.erase(jt);
          continue;
        }
        auto jt = acc.find({l + lam, r});
        if (jt == acc.end()) jt = acc.emplace(std::make_pair(l + lam, r), SlowPoly(n2)).first;
        for (int g1 = 0; g1 <= n2; ++g1)
          for (int g2 = 0; g1 + g2 <= n2; ++g2)
            jt->second.add(g1, g2, -s * cstar.get(g1, g2));
      }
    }
  }
  // round-trip: expand the star coefficients back and compare
  std::map<std::pair<int, int>, SlowPoly> rebuilt;
  for (const auto& [lm, cstar] : nf.star_coeffs) {
    auto [l, m] = lm;
    for (const auto& [rl, s] : sig[m]) {
      auto [r, lam] = rl;
      auto jt = rebuilt.find({l + lam, r});
      if (jt == rebuilt.end()) jt = rebuilt.emplace(std::make_pair(l + lam, r), SlowPoly(n2)).first;
      for (int g1 = 0; g1 <= n2; ++g1)
        for (int g2 = 0; g1 + g2 <= n2; ++g2) jt->second.add(g1, g2, s * cstar.get(g1, g2));
    }
  }
  double err = 0.0;
  auto probe = [&](const std::map<std::pair<int, int>, SlowPoly>& x,
                   const std::map<std::pair<int, int>, SlowPoly>& y) {
    for (const auto& [lm, p] : x) {
      auto it = y.find(lm);
      for (int g1 = 0; g1 <= n2; ++g1)
        for (int g2 = 0; g1 + g2 <= n2; ++g2) {
          double a = p.get(g1, g2);
          double b = it == y.end() ? 0.0 : it->second.get(g1, g2);
          err = std::max(err, std::abs(a - b));
        }
    }
  };
  probe(rebuilt, nf.kappa_action);
  probe(nf.kappa_action, rebuilt);
  return err;
}

double NormalFormResult::f_value(const Vec2& z2, double I) const {
  double s1 = z2.x() - z2_0.x(), s2 = z2.y() - z2_0.y();
  double f = b_jet.eval(s1, s2);
  for (const auto& [lm, p] : kappa_action) {
    auto [l, m] = lm;
    if (l != 0 || m < 2) continue;
    f += p.eval(s1, s2) * std::pow(I, m - 1);
  }
  return f;
}

double NormalFormResult::f_dI(const Vec2& z2, double I) const {
  double s1 = z2.x() - z2_0.x(), s2 = z2.y() - z2_0.y();
  double d = 0.0;
  for (const auto& [lm, p] : kappa_action) {
    auto [l, m] = lm;
    if (l != 0 || m < 2) continue;
    d += p.eval(s1, s2) * (m - 1) * std::pow(I, m - 2);
  }
  return d;
}

Vec2 NormalFormResult::f_grad_z2(const Vec2& z2, double I) const {
  double s1 = z2.x() - z2_0.x(), s2 = z2.y() - z2_0.y();
  Vec2 g(b_jet.d1().eval(s1, s2), b_jet.d2().eval(s1, s2));
  for (const auto& [lm, p] : kappa_action) {
    auto [l, m] = lm;
    if (l != 0 || m < 2) continue;
    double w = std::pow(I, m - 1);
    g.x() += p.d1().eval(s1, s2) * w;
    g.y() += p.d2().eval(s1, s2) * w;
  }
  return g;
}

double NormalFormResult::eval_K(const NormalState& z, int order) const {
  double I = std::norm(z.z1);
  double s1 = z.z2.x() - z2_0.x(), s2 = z.z2.y() - z2_0.y();
  double k = b_jet.eval(s1, s2) * I;
  for (const auto& [lm, p] : kappa_action) {
    auto [l, m] = lm;
    if (l != 0 || 2 * m > order) continue;
    k += p.eval(s1, s2) * std::pow(I, m);
  }
  return k;
}

EigCoeffs eigenvalue_expansion(const NormalFormResult& nf, const MagneticField& field) {
  EigCoeffs e;
  Vec2 qmin = field.argmin_on_domain();
  Mat2 h = field.hess(qmin);
  double det = h.determinant();
  if (det <= 1e-10 || h(0, 0) <= 0.0)
    throw std::invalid_argument("eigenvalue_expansion: degenerate Hessian at the minimum");
  e.b_min = field.eval(qmin);
  e.c1 = std::sqrt(det) / (2.0 * e.b_min);
  // hbar^2 band constant at the basepoint: the (0,2), (1,1) and (2,0) star
  // coefficients all feed the first band at the same order
  double c0 = 0.0;
  for (auto lm : {std::pair{0, 2}, std::pair{1, 1}, std::pair{2, 0}}) {
    auto it = nf.star_coeffs.find(lm);
    if (it != nf.star_coeffs.end()) c0 += it->second.get(0, 0);
  }
  e.c0 = c0;
  return e;
}

// ---------------------------------------------------------------------------

TruncatedTransform::TruncatedTransform(const MagneticField& field, const NormalFormResult& nf,
                                       int order)
    : order_(order) {
  if (order < 2 || order > nf.N1)
    throw std::invalid_argument("transform order outside the normal form range");
  chart_ = nf.chart ? nf.chart : build_chart_jet(field, std::max(nf.N1 + 2, 10),
                                                 std::max(nf.N2, 8));
  for (int j = 3; j <= order; ++j) {
    const FormalSeries& gen = nf.generators[j - 3];
    Jet4 g(chart_->fcap, chart_->scap);
    for (const auto& [k, v] : gen.c) {
      if (k.l != 0) continue;  // classical part drives the point transform
      if (std::abs(v.imag()) > 1e-10 * (1.0 + std::abs(v.real())))
        throw std::logic_error("classical generator has an imaginary part");
      if (v.real() != 0.0) g.add(k.a, k.b, k.g1, k.g2, v.real());
    }
    gens_.push_back(std::move(g));
  }
}

Vec4 TruncatedTransform::flow_generator(const Jet4& gen, Vec4 z, double time) const {
  if (gen.max_abs_coeff() == 0.0) return z;
  const int nsub = 256;
  const double h = time / nsub;
  Jet4 dx1 = gen.derivative(0), dxi1 = gen.derivative(1);
  Jet4 ds1 = gen.derivative(2), ds2 = gen.derivative(3);
  auto fieldv = [&](const Vec4& w) {
    double a = w(0), b = w(1), s1 = w(2) - chart_->z2_0.x(), s2 = w(3) - chart_->z2_0.y();
    Vec4 v;
    v << dxi1.eval(a, b, s1, s2), -dx1.eval(a, b, s1, s2), ds2.eval(a, b, s1, s2),
        -ds1.eval(a, b, s1, s2);
    return v;
  };
  for (int i = 0; i < nsub; ++i) {
    Vec4 zs = z + 0.5 * h * fieldv(z);
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      Vec4 nx = z + 0.5 * h * fieldv(zs);
      double delta = (nx - zs).norm();
      zs = nx;
      if (delta < 1e-14 * (1.0 + zs.norm())) {
        ok = true;
        break;
      }
    }
    if (!ok) throw std::runtime_error("generator flow stage did not converge");
    z = 2.0 * zs - z;
    if (z.head<2>().norm() > 2.0) throw std::runtime_error("generator flow escaped the chart");
  }
  return z;
}

Vec4 TruncatedTransform::forward(const NormalState& zn) const {
  Vec4 z;
  z << zn.z1.real(), zn.z1.imag(), zn.z2.x(), zn.z2.y();
  for (int j = static_cast<int>(gens_.size()) - 1; j >= 0; --j)
    z = flow_generator(gens_[j], z, -1.0);
  return chart_->eval(z);
}

NormalState TruncatedTransform::inverse(const Vec4& w) const {
  Vec4 z = chart_->invert(w);
  for (size_t j = 0; j < gens_.size(); ++j) z = flow_generator(gens_[j], z, 1.0);
  NormalState s;
  s.z1 = cd(z(0), z(1));
  s.z2 = Vec2(z(2), z(3));
  return s;
}

Mat4 TruncatedTransform::jacobian_fd(const NormalState& z, double step) const {
  Mat4 jac;
  Vec4 base;
  base << z.z1.real(), z.z1.imag(), z.z2.x(), z.z2.y();
  for (int j = 0; j < 4; ++j) {
    Vec4 zp = base, zm = base;
    zp(j) += step;
    zm(j) -= step;
    NormalState sp{cd(zp(0), zp(1)), Vec2(zp(2), zp(3))};
    NormalState sm{cd(zm(0), zm(1)), Vec2(zm(2), zm(3))};
    Vec4 col = (forward(sp) - forward(sm)) / (2.0 * step);
    jac.col(j) = col;
  }
  return jac;
}

}  // namespace magwell
