#include "magwell/jets.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace magwell {

Jet4::Jet4(int fmax, int smax) : fmax_(fmax), smax_(smax) {
  c_.assign(static_cast<size_t>(nfast()) * nslow(), 0.0);
}

int Jet4::nfast() const { return (fmax_ + 1) * (fmax_ + 2) / 2; }
int Jet4::nslow() const { return (smax_ + 1) * (smax_ + 2) / 2; }

int Jet4::fidx(int a, int b) const {
  // triangular enumeration: a from 0..fmax, b from 0..fmax-a
  return a * (fmax_ + 1) - a * (a - 1) / 2 + b;
}
int Jet4::sidx(int cs, int ds) const { return cs * (smax_ + 1) - cs * (cs - 1) / 2 + ds; }

double Jet4::get(int a, int b, int cs, int ds) const {
  if (a < 0 || b < 0 || cs < 0 || ds < 0 || a + b > fmax_ || cs + ds > smax_) return 0.0;
  return c_[static_cast<size_t>(fidx(a, b)) * nslow() + sidx(cs, ds)];
}

void Jet4::set(int a, int b, int cs, int ds, double v) {
  if (a < 0 || b < 0 || cs < 0 || ds < 0 || a + b > fmax_ || cs + ds > smax_)
    throw std::out_of_range("Jet4::set index outside caps");
  c_[static_cast<size_t>(fidx(a, b)) * nslow() + sidx(cs, ds)] = v;
}

void Jet4::add(int a, int b, int cs, int ds, double v) {
  if (a < 0 || b < 0 || cs < 0 || ds < 0 || a + b > fmax_ || cs + ds > smax_) return;
  c_[static_cast<size_t>(fidx(a, b)) * nslow() + sidx(cs, ds)] += v;
}

Jet4 Jet4::constant(double v, int fmax, int smax) {
  Jet4 j(fmax, smax);
  j.set(0, 0, 0, 0, v);
  return j;
}

Jet4 Jet4::variable(int var, int fmax, int smax) {
  Jet4 j(fmax, smax);
  switch (var) {
    case 0: j.set(1, 0, 0, 0, 1.0); break;
    case 1: j.set(0, 1, 0, 0, 1.0); break;
    case 2: j.set(0, 0, 1, 0, 1.0); break;
    case 3: j.set(0, 0, 0, 1, 1.0); break;
    default: throw std::invalid_argument("Jet4::variable index");
  }
  return j;
}

Jet4 Jet4::from_slow_poly(const Poly2& p, int fmax, int smax) {
  Jet4 j(fmax, smax);
  for (int i = 0; i <= p.degree(); ++i)
    for (int k = 0; k <= p.degree(); ++k) {
      double v = p.get(i, k);
      if (v != 0.0 && i + k <= smax) j.set(0, 0, i, k, v);
    }
  return j;
}

Jet4& Jet4::operator+=(const Jet4& o) {
  if (o.fmax_ != fmax_ || o.smax_ != smax_) throw std::invalid_argument("Jet4 cap mismatch");
  for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet4& Jet4::operator-=(const Jet4& o) {
  if (o.fmax_ != fmax_ || o.smax_ != smax_) throw std::invalid_argument("Jet4 cap mismatch");
  for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet4 Jet4::operator+(const Jet4& o) const {
  Jet4 r = *this;
  r += o;
  return r;
}
Jet4 Jet4::operator-(const Jet4& o) const {
  Jet4 r = *this;
  r -= o;
  return r;
}

Jet4 Jet4::operator*(double s) const {
  Jet4 r = *this;
  for (auto& v : r.c_) v *= s;
  return r;
}
Jet4& Jet4::operator*=(double s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Jet4 Jet4::operator*(const Jet4& o) const {
  if (o.fmax_ != fmax_ || o.smax_ != smax_) throw std::invalid_argument("Jet4 cap mismatch");
  Jet4 r(fmax_, smax_);
  const int ns = nslow();
  for (int a1 = 0; a1 <= fmax_; ++a1)
    for (int b1 = 0; a1 + b1 <= fmax_; ++b1) {
      const double* blkA = &c_[static_cast<size_t>(fidx(a1, b1)) * ns];
      for (int a2 = 0; a1 + a2 <= fmax_; ++a2)
        for (int b2 = 0; a1 + b1 + a2 + b2 <= fmax_; ++b2) {
          const double* blkB = &o.c_[static_cast<size_t>(fidx(a2, b2)) * ns];
          double* blkR = &r.c_[static_cast<size_t>(fidx(a1 + a2, b1 + b2)) * ns];
          // slow-block convolution
          for (int c1 = 0; c1 <= smax_; ++c1)
            for (int d1 = 0; c1 + d1 <= smax_; ++d1) {
              double va = blkA[sidx(c1, d1)];
              if (va == 0.0) continue;
              for (int c2 = 0; c1 + c2 <= smax_; ++c2)
                for (int d2 = 0; c1 + d1 + c2 + d2 <= smax_; ++d2) {
                  double vb = blkB[sidx(c2, d2)];
                  if (vb != 0.0) blkR[sidx(c1 + c2, d1 + d2)] += va * vb;
                }
            }
        }
    }
  return r;
}

Jet4 Jet4::derivative(int var) const {
  Jet4 r(fmax_, smax_);
  for (int a = 0; a <= fmax_; ++a)
    for (int b = 0; a + b <= fmax_; ++b)
      for (int cs = 0; cs <= smax_; ++cs)
        for (int ds = 0; cs + ds <= smax_; ++ds) {
          double v = get(a, b, cs, ds);
          if (v == 0.0) continue;
          switch (var) {
            case 0:
              if (a > 0) r.add(a - 1, b, cs, ds, a * v);
              break;
            case 1:
              if (b > 0) r.add(a, b - 1, cs, ds, b * v);
              break;
            case 2:
              if (cs > 0) r.add(a, b, cs - 1, ds, cs * v);
              break;
            case 3:
              if (ds > 0) r.add(a, b, cs, ds - 1, ds * v);
              break;
          }
        }
  return r;
}

double Jet4::eval(double x1, double xi1, double s1, double s2) const {
  // powers precomputed; sum in fixed enumeration order for determinism
  std::vector<double> px(fmax_ + 1, 1.0), pb(fmax_ + 1, 1.0), ps1(smax_ + 1, 1.0),
      ps2(smax_ + 1, 1.0);
  for (int i = 1; i <= fmax_; ++i) px[i] = px[i - 1] * x1, pb[i] = pb[i - 1] * xi1;
  for (int i = 1; i <= smax_; ++i) ps1[i] = ps1[i - 1] * s1, ps2[i] = ps2[i - 1] * s2;
  double r = 0.0;
  for (int a = 0; a <= fmax_; ++a)
    for (int b = 0; a + b <= fmax_; ++b)
      for (int cs = 0; cs <= smax_; ++cs)
        for (int ds = 0; cs + ds <= smax_; ++ds) {
          double v = get(a, b, cs, ds);
          if (v != 0.0) r += v * px[a] * pb[b] * ps1[cs] * ps2[ds];
        }
  return r;
}

int Jet4::valuation(double tol) const {
  int best = fmax_ + smax_ + 1;
  for (int a = 0; a <= fmax_; ++a)
    for (int b = 0; a + b <= fmax_; ++b)
      for (int cs = 0; cs <= smax_; ++cs)
        for (int ds = 0; cs + ds <= smax_; ++ds)
          if (std::abs(get(a, b, cs, ds)) > tol) best = std::min(best, a + b + cs + ds);
  return best;
}

double Jet4::max_abs_coeff() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

double Jet4::max_abs_fast_degree(int fdeg) const {
  double m = 0.0;
  for (int a = 0; a <= fmax_; ++a)
    for (int b = 0; a + b <= fmax_; ++b) {
      if (a + b != fdeg) continue;
      for (int cs = 0; cs <= smax_; ++cs)
        for (int ds = 0; cs + ds <= smax_; ++ds) m = std::max(m, std::abs(get(a, b, cs, ds)));
    }
  return m;
}

Jet4 Jet4::truncated_fast(int fcap) const {
  Jet4 r(fmax_, smax_);
  for (int a = 0; a <= fmax_; ++a)
    for (int b = 0; a + b <= fmax_; ++b) {
      if (a + b > fcap) continue;
      for (int cs = 0; cs <= smax_; ++cs)
        for (int ds = 0; cs + ds <= smax_; ++ds) r.set(a, b, cs, ds, get(a, b, cs, ds));
    }
  return r;
}

Jet4 Jet4::compose_shifted(const std::array<Jet4, 4>& disp) const {
  for (const auto& d : disp) {
    if (d.fmax() != fmax_ || d.smax() != smax_) throw std::invalid_argument("Jet4 cap mismatch");
    if (d.get(0, 0, 0, 0) != 0.0)
      throw std::invalid_argument("Jet4::compose_shifted needs zero constant term");
  }
  // Taylor expansion sum_k D^k(this) * prod disp_i^{k_i} / k!; memoized powers
  // and derivative jets keyed by the multi-index.
  std::map<std::array<int, 4>, Jet4> vpow, deriv;
  std::array<int, 4> zero{0, 0, 0, 0};
  vpow[zero] = Jet4::constant(1.0, fmax_, smax_);
  deriv[zero] = *this;
  std::array<int, 4> val{};
  for (int i = 0; i < 4; ++i) val[i] = std::max(1, disp[i].valuation());

  Jet4 result = *this;
  int maxk = fmax_ + smax_;
  std::vector<std::array<int, 4>> frontier{zero};
  for (int level = 1; level <= maxk; ++level) {
    std::vector<std::array<int, 4>> next;
    std::map<std::array<int, 4>, bool> seen;
    for (const auto& k : frontier) {
      for (int i = 0; i < 4; ++i) {
        std::array<int, 4> k2 = k;
        k2[i]++;
        if (seen.count(k2)) continue;
        seen[k2] = true;
        // total valuation bound: if the product's lowest degree exceeds the
        // caps, the term is identically zero after truncation
        int lowdeg = 0;
        for (int j = 0; j < 4; ++j) lowdeg += k2[j] * val[j];
        if (lowdeg > fmax_ + smax_) continue;
        // build power product from a predecessor
        std::array<int, 4> pred = k2;
        pred[i]--;
        const Jet4& pv = vpow.at(pred);
        Jet4 vp = pv * disp[i];
        if (vp.max_abs_coeff() == 0.0) continue;
        // derivative jet
        const Jet4& pd = deriv.at(pred);
        Jet4 dj = pd.derivative(i);
        double fact = 1.0;
        for (int j = 0; j < 4; ++j)
          for (int m = 2; m <= k2[j]; ++m) fact *= m;
        if (dj.max_abs_coeff() != 0.0) result += (dj * vp) * (1.0 / fact);
        vpow[k2] = std::move(vp);
        deriv[k2] = std::move(dj);
        next.push_back(k2);
      }
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }
  return result;
}

Jet4 Jet4::compose_univariate(const std::vector<double>& coeffs, const Jet4& u) {
  if (u.get(0, 0, 0, 0) != 0.0)
    throw std::invalid_argument("compose_univariate needs zero constant term");
  Jet4 r = Jet4::constant(coeffs.empty() ? 0.0 : coeffs.back(), u.fmax(), u.smax());
  for (int k = static_cast<int>(coeffs.size()) - 2; k >= 0; --k) {
    r = r * u;
    r.add(0, 0, 0, 0, coeffs[k]);
  }
  return r;
}

Jet4 Jet4::compose_poly2(const Poly2& p, const Jet4& q1, const Jet4& q2) {
  int fmax = q1.fmax(), smax = q1.smax();
  Jet4 r(fmax, smax);
  for (int i = p.degree(); i >= 0; --i) {
    Jet4 row(fmax, smax);
    for (int j = p.degree(); j >= 0; --j) {
      row = row * q2;
      row.add(0, 0, 0, 0, p.get(i, j));
    }
    r = r * q1;
    r += row;
  }
  return r;
}

std::vector<double> inv_sqrt_series(double c0, int n) {
  if (c0 <= 0.0) throw std::invalid_argument("inv_sqrt_series needs positive base");
  // (c0+u)^(-1/2) = c0^(-1/2) sum binom(-1/2,k) (u/c0)^k
  std::vector<double> r(n + 1);
  double coef = 1.0 / std::sqrt(c0);
  double binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    r[k] = coef * binom / std::pow(c0, k);
    binom *= (-0.5 - k) / (k + 1);
  }
  return r;
}

std::vector<double> reciprocal_series(double c0, int n) {
  if (c0 == 0.0) throw std::invalid_argument("reciprocal_series needs nonzero base");
  std::vector<double> r(n + 1);
  for (int k = 0; k <= n; ++k) r[k] = (k % 2 == 0 ? 1.0 : -1.0) / std::pow(c0, k + 1);
  return r;
}

}  // namespace magwell
