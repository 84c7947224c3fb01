#include "magwell/poly2.hpp"

#include <cmath>
#include <stdexcept>

namespace magwell {

int Poly2::at(int i, int j) const {
  if (i < 0 || j < 0 || i > deg_ || j > deg_) throw std::out_of_range("Poly2 index");
  return i * (deg_ + 1) + j;
}

double Poly2::eval(double x, double y) const {
  // Horner in x, inner Horner in y.
  double r = 0.0;
  for (int i = deg_; i >= 0; --i) {
    double row = 0.0;
    for (int j = deg_; j >= 0; --j) row = row * y + c_[i * (deg_ + 1) + j];
    r = r * x + row;
  }
  return r;
}

Poly2 Poly2::dx() const {
  Poly2 r(deg_);
  for (int i = 1; i <= deg_; ++i)
    for (int j = 0; j <= deg_; ++j)
      if (get(i, j) != 0.0) r.set(i - 1, j, i * get(i, j));
  return r;
}

Poly2 Poly2::dy() const {
  Poly2 r(deg_);
  for (int i = 0; i <= deg_; ++i)
    for (int j = 1; j <= deg_; ++j)
      if (get(i, j) != 0.0) r.set(i, j - 1, j * get(i, j));
  return r;
}

Poly2 Poly2::integrate_x() const {
  Poly2 r(deg_ + 1);
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; j <= deg_; ++j)
      if (get(i, j) != 0.0) r.set(i + 1, j, get(i, j) / (i + 1));
  return r;
}

Poly2 Poly2::integrate_y() const {
  Poly2 r(deg_ + 1);
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; j <= deg_; ++j)
      if (get(i, j) != 0.0) r.set(i, j + 1, get(i, j) / (j + 1));
  return r;
}

Poly2 Poly2::operator*(const Poly2& o) const {
  Poly2 r(deg_ + o.deg_);
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; j <= deg_; ++j) {
      double a = get(i, j);
      if (a == 0.0) continue;
      for (int k = 0; k <= o.deg_; ++k)
        for (int l = 0; l <= o.deg_; ++l) {
          double b = o.get(k, l);
          if (b != 0.0) r.add(i + k, j + l, a * b);
        }
    }
  return r;
}

Poly2 Poly2::operator+(const Poly2& o) const {
  Poly2 r(std::max(deg_, o.deg_));
  for (int i = 0; i <= r.deg_; ++i)
    for (int j = 0; j <= r.deg_; ++j) r.set(i, j, get(i, j) + o.get(i, j));
  return r;
}

Poly2 Poly2::operator-(const Poly2& o) const { return *this + o.scaled(-1.0); }

Poly2 Poly2::scaled(double s) const {
  Poly2 r = *this;
  for (auto& v : r.c_) v *= s;
  return r;
}

Poly2 Poly2::shifted(double x0, double y0) const {
  // Binomial expansion of (x0+u)^i (y0+v)^j.
  Poly2 r(deg_);
  std::vector<std::vector<double>> binom(deg_ + 1, std::vector<double>(deg_ + 1, 0.0));
  for (int n = 0; n <= deg_; ++n) {
    binom[n][0] = 1.0;
    for (int k = 1; k <= n; ++k) binom[n][k] = binom[n - 1][k - 1] + (k <= n - 1 ? binom[n - 1][k] : 0.0);
  }
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; j <= deg_; ++j) {
      double a = get(i, j);
      if (a == 0.0) continue;
      for (int u = 0; u <= i; ++u) {
        double px = binom[i][u] * std::pow(x0, i - u);
        for (int v = 0; v <= j; ++v) r.add(u, v, a * px * binom[j][v] * std::pow(y0, j - v));
      }
    }
  return r;
}

Poly2 Poly2::trimmed() const {
  int d = 0;
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; j <= deg_; ++j)
      if (get(i, j) != 0.0) d = std::max(d, std::max(i, j));
  Poly2 r(d);
  for (int i = 0; i <= d; ++i)
    for (int j = 0; j <= d; ++j) r.set(i, j, get(i, j));
  return r;
}

bool Poly2::is_zero(double tol) const {
  for (double v : c_)
    if (std::abs(v) > tol) return false;
  return true;
}

}  // namespace magwell
