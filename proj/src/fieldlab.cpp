#include "magwell/fieldlab.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace magwell {

namespace {

// 4th-order central differences for non-polynomial fields; step follows the
// domain scale so truncation and roundoff stay balanced at double precision.
double fd_step(const Vec2& q) { return 1e-4 * (1.0 + q.norm()); }

double fd_dx(const std::function<double(const Vec2&)>& f, const Vec2& q, int axis) {
  double h = fd_step(q);
  Vec2 e = Vec2::Zero();
  e(axis) = 1.0;
  return (-f(q + 2 * h * e) + 8 * f(q + h * e) - 8 * f(q - h * e) + f(q - 2 * h * e)) / (12 * h);
}

double fd_dxx(const std::function<double(const Vec2&)>& f, const Vec2& q, int axis) {
  double h = fd_step(q);
  Vec2 e = Vec2::Zero();
  e(axis) = 1.0;
  return (-f(q + 2 * h * e) + 16 * f(q + h * e) - 30 * f(q) + 16 * f(q - h * e) -
          f(q - 2 * h * e)) /
         (12 * h * h);
}

double fd_dxy(const std::function<double(const Vec2&)>& f, const Vec2& q) {
  double h = fd_step(q);
  Vec2 ex(h, 0), ey(0, h);
  return (f(q + ex + ey) - f(q + ex - ey) - f(q - ex + ey) + f(q - ex - ey)) / (4 * h * h);
}

}  // namespace

struct MagneticField::Impl {
  std::function<double(const Vec2&)> f;
  std::optional<Poly2> poly;  // set when descriptor is polynomial (post-flip)
  Box box;
  std::optional<Confinement> conf;
  bool flipped = false;
  bool constant = false;
  std::string desc;
};

namespace {

void validate_field(const MagneticField::Impl& im) {
  // sign check on a sampling grid
  const int n = 41;
  double b00 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec2 q(im.box.lo + (im.box.hi - im.box.lo) * i / (n - 1),
             im.box.lo + (im.box.hi - im.box.lo) * j / (n - 1));
      double b = im.f(q);
      if (i == 0 && j == 0) b00 = b;
      if (b == 0.0 || b * b00 < 0.0)
        throw std::invalid_argument("field vanishes or changes sign on domain box");
    }
  if (b00 < 0.0) throw std::logic_error("field not sign-normalized");
}

std::shared_ptr<const MagneticField::Impl> finalize(MagneticField::Impl im,
                                                    std::optional<Box> requested) {
  if (requested) {
    im.box = *requested;
  } else if (im.conf) {
    im.box = Box{-im.conf->m0 - 1.0, im.conf->m0 + 1.0};
  } else {
    im.box = Box{-5.0, 5.0};
  }
  // orient so B > 0; remember the flip
  Vec2 center(0.5 * (im.box.lo + im.box.hi), 0.5 * (im.box.lo + im.box.hi));
  if (im.f(center) < 0.0) {
    im.flipped = true;
    auto base = im.f;
    im.f = [base](const Vec2& q) { return -base(q); };
    if (im.poly) im.poly = im.poly->scaled(-1.0);
  }
  validate_field(im);
  return std::make_shared<const MagneticField::Impl>(std::move(im));
}

}  // namespace

MagneticField MagneticField::constant(double b0, std::optional<Box> box) {
  if (b0 == 0.0) throw std::invalid_argument("constant field must be nonzero");
  Impl im;
  im.poly = Poly2::constant(b0);
  Poly2 p = *im.poly;
  im.f = [p](const Vec2& q) { return p.eval(q); };
  im.constant = true;
  im.conf = Confinement{std::abs(b0), 0.0};
  std::ostringstream os;
  os << "constant:" << b0;
  im.desc = os.str();
  return MagneticField(finalize(std::move(im), box));
}

MagneticField MagneticField::polynomial(const Poly2& p, std::optional<Box> box) {
  Impl im;
  im.poly = p.trimmed();
  Poly2 pp = *im.poly;
  im.f = [pp](const Vec2& q) { return pp.eval(q); };
  im.constant = pp.degree() == 0;
  im.desc = "poly";
  return MagneticField(finalize(std::move(im), box));
}

MagneticField MagneticField::radial(const std::vector<double>& r2_coeffs, std::optional<Box> box) {
  Poly2 p(2 * static_cast<int>(r2_coeffs.size()));
  // (x^2+y^2)^k expanded binomially
  for (size_t k = 0; k < r2_coeffs.size(); ++k) {
    if (r2_coeffs[k] == 0.0) continue;
    double binom = 1.0;
    for (size_t j = 0; j <= k; ++j) {
      p.add(2 * static_cast<int>(k - j), 2 * static_cast<int>(j), r2_coeffs[k] * binom);
      binom *= double(k - j) / double(j + 1);
    }
  }
  Impl im;
  im.poly = p.trimmed();
  Poly2 pp = *im.poly;
  im.f = [pp](const Vec2& q) { return pp.eval(q); };
  im.constant = pp.degree() == 0;
  im.desc = "radial";
  // increasing radial profiles are confining
  bool nonneg = r2_coeffs[0] > 0.0;
  bool growing = false;
  for (size_t k = 1; k < r2_coeffs.size(); ++k) {
    if (r2_coeffs[k] < 0.0) nonneg = false;
    if (r2_coeffs[k] > 0.0) growing = true;
  }
  if (nonneg && growing) {
    double m0 = 2.0, b_at = 0.0;
    for (size_t k = 0; k < r2_coeffs.size(); ++k) b_at += r2_coeffs[k] * std::pow(m0 * m0, k);
    im.conf = Confinement{b_at, m0};
  }
  return MagneticField(finalize(std::move(im), box));
}

MagneticField MagneticField::fig2(std::optional<Box> box) {
  Poly2 p(4);
  p.set(0, 0, 2.0);
  p.set(2, 0, 1.0);
  p.set(0, 2, 1.0);
  p.set(3, 0, 1.0 / 3.0);
  p.set(4, 0, 1.0 / 20.0);
  Impl im;
  im.poly = p;
  im.f = [p](const Vec2& q) { return p.eval(q); };
  im.conf = Confinement{3.0, 1.5};  // B >= 3 outside |q| >= 1.5
  im.desc = "fig2";
  return MagneticField(finalize(std::move(im), box));
}

MagneticField MagneticField::custom(std::function<double(const Vec2&)> f, Box box,
                                    std::optional<Confinement> conf) {
  Impl im;
  im.f = std::move(f);
  im.conf = conf;
  im.desc = "custom";
  return MagneticField(finalize(std::move(im), box));
}

double MagneticField::eval(const Vec2& q) const { return impl_->f(q); }

Vec2 MagneticField::grad(const Vec2& q) const {
  if (impl_->poly) return Vec2(impl_->poly->dx().eval(q), impl_->poly->dy().eval(q));
  return Vec2(fd_dx(impl_->f, q, 0), fd_dx(impl_->f, q, 1));
}

Mat2 MagneticField::hess(const Vec2& q) const {
  Mat2 h;
  if (impl_->poly) {
    h(0, 0) = impl_->poly->dx().dx().eval(q);
    h(1, 1) = impl_->poly->dy().dy().eval(q);
    h(0, 1) = h(1, 0) = impl_->poly->dx().dy().eval(q);
  } else {
    h(0, 0) = fd_dxx(impl_->f, q, 0);
    h(1, 1) = fd_dxx(impl_->f, q, 1);
    h(0, 1) = h(1, 0) = fd_dxy(impl_->f, q);
  }
  return h;
}

const Box& MagneticField::domain() const { return impl_->box; }
const std::optional<Confinement>& MagneticField::confinement() const { return impl_->conf; }
bool MagneticField::sign_flipped() const { return impl_->flipped; }
bool MagneticField::is_constant() const { return impl_->constant; }
const Poly2* MagneticField::poly() const { return impl_->poly ? &*impl_->poly : nullptr; }
std::string MagneticField::descriptor() const { return impl_->desc; }

double MagneticField::max_on_domain() const {
  const int n = 101;
  double m = -1e300;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec2 q(impl_->box.lo + impl_->box.length() * i / (n - 1),
             impl_->box.lo + impl_->box.length() * j / (n - 1));
      m = std::max(m, impl_->f(q));
    }
  return m;
}

double MagneticField::min_on_domain() const {
  return eval(argmin_on_domain());
}

Vec2 MagneticField::argmin_on_domain() const {
  if (impl_->constant)
    return Vec2(0.5 * (impl_->box.lo + impl_->box.hi), 0.5 * (impl_->box.lo + impl_->box.hi));
  const int n = 101;
  Vec2 best(0, 0);
  double bm = 1e300;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec2 q(impl_->box.lo + impl_->box.length() * i / (n - 1),
             impl_->box.lo + impl_->box.length() * j / (n - 1));
      double v = impl_->f(q);
      if (v < bm) bm = v, best = q;
    }
  // Newton refinement on grad B = 0 (interior minima only)
  Vec2 q = best;
  for (int it = 0; it < 60; ++it) {
    Vec2 g = grad(q);
    Mat2 h = hess(q);
    if (std::abs(h.determinant()) < 1e-14) break;
    Vec2 step = h.fullPivLu().solve(g);
    q -= step;
    if (!impl_->box.contains(q)) return best;
    if (step.norm() < 1e-14) break;
  }
  return eval(q) <= bm ? q : best;
}

// ---------------------------------------------------------------------------

struct VectorPotential::Impl {
  std::function<Vec2(const Vec2&)> a;
  std::function<Mat2(const Vec2&)> ja;
  GaugeTag tag;
  std::optional<Poly2> a1, a2;
};

VectorPotential build_potential(const MagneticField& field, GaugeTag gauge) {
  auto im = std::make_shared<VectorPotential::Impl>();
  im->tag = gauge;
  switch (gauge) {
    case GaugeTag::landau_x: {
      if (const Poly2* p = field.poly()) {
        // A1 = 0, A2(q1,q2) = int_0^{q1} B(s,q2) ds, exact
        Poly2 a2 = p->integrate_x();
        Poly2 da2 = a2.dy();
        im->a1 = Poly2::constant(0.0);
        im->a2 = a2;
        Poly2 b = *p;
        im->a = [a2](const Vec2& q) { return Vec2(0.0, a2.eval(q)); };
        im->ja = [b, da2](const Vec2& q) {
          Mat2 m;
          m << 0, 0, b.eval(q), da2.eval(q);
          return m;
        };
      } else {
        MagneticField f = field;
        im->a = [f](const Vec2& q) {
          double a2 = adaptive_simpson([&](double s) { return f.eval(Vec2(s, q.y())); }, 0.0,
                                       q.x());
          return Vec2(0.0, a2);
        };
        im->ja = [f](const Vec2& q) {
          double da2_dq2 = adaptive_simpson(
              [&](double s) { return f.grad(Vec2(s, q.y())).y(); }, 0.0, q.x());
          Mat2 m;
          m << 0, 0, f.eval(q), da2_dq2;
          return m;
        };
      }
      break;
    }
    case GaugeTag::symmetric: {
      if (!field.is_constant())
        throw std::invalid_argument("symmetric gauge requires a constant field");
      double b0 = field.eval(Vec2(0, 0));
      im->a1 = Poly2(1);
      im->a1->set(0, 1, -b0 / 2);
      im->a2 = Poly2(1);
      im->a2->set(1, 0, b0 / 2);
      im->a = [b0](const Vec2& q) { return Vec2(-b0 * q.y() / 2, b0 * q.x() / 2); };
      im->ja = [b0](const Vec2&) {
        Mat2 m;
        m << 0, -b0 / 2, b0 / 2, 0;
        return m;
      };
      break;
    }
    case GaugeTag::custom:
      throw std::invalid_argument("custom gauge has no builder");
  }
  VectorPotential v;
  v.impl_ = im;
  return v;
}

Vec2 VectorPotential::eval(const Vec2& q) const { return impl_->a(q); }
Mat2 VectorPotential::jac(const Vec2& q) const { return impl_->ja(q); }
GaugeTag VectorPotential::gauge() const { return impl_->tag; }
const Poly2* VectorPotential::poly_a1() const { return impl_->a1 ? &*impl_->a1 : nullptr; }
const Poly2* VectorPotential::poly_a2() const { return impl_->a2 ? &*impl_->a2 : nullptr; }

// ---------------------------------------------------------------------------

struct DarbouxChart::Impl {
  MagneticField field;
  std::optional<Poly2> xi2;  // exact int_0^{q2} B(q1,s) ds for polynomial B
  Box box;
  explicit Impl(MagneticField f) : field(std::move(f)), box(field.domain()) {}
};

DarbouxChart darboux_chart(const MagneticField& field) {
  if (field.min_on_domain() <= 0.0)
    throw std::invalid_argument("darboux chart needs B > 0 on the domain");
  auto im = std::make_shared<DarbouxChart::Impl>(field);
  if (const Poly2* p = field.poly()) im->xi2 = p->integrate_y();
  DarbouxChart c;
  c.impl_ = im;
  return c;
}

Vec2 DarbouxChart::forward(const Vec2& q) const {
  double xi2;
  if (impl_->xi2) {
    xi2 = impl_->xi2->eval(q);
  } else {
    const MagneticField& f = impl_->field;
    xi2 = adaptive_simpson([&](double s) { return f.eval(Vec2(q.x(), s)); }, 0.0, q.y());
  }
  return Vec2(q.x(), xi2);
}

Vec2 DarbouxChart::inverse(const Vec2& z2) const {
  // xi2 is strictly increasing in q2 (B > 0): safeguarded Newton
  double q1 = z2.x(), target = z2.y();
  double lo = impl_->box.lo, hi = impl_->box.hi;
  auto g = [&](double q2) { return forward(Vec2(q1, q2)).y() - target; };
  double flo = g(lo), fhi = g(hi);
  if (flo > 0.0 || fhi < 0.0) throw std::runtime_error("darboux inverse outside domain box");
  double q2 = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    double val = g(q2);
    if (val > 0.0)
      hi = q2;
    else
      lo = q2;
    double der = impl_->field.eval(Vec2(q1, q2));
    double next = q2 - val / der;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
    if (std::abs(next - q2) < 1e-15 * (1.0 + std::abs(q2))) {
      q2 = next;
      break;
    }
    q2 = next;
  }
  return Vec2(q1, q2);
}

double DarbouxChart::jac_det(const Vec2& q) const { return impl_->field.eval(q); }
const Poly2* DarbouxChart::poly_xi2() const { return impl_->xi2 ? &*impl_->xi2 : nullptr; }
const Box& DarbouxChart::domain() const { return impl_->box; }

// ---------------------------------------------------------------------------

MagneticField make_field(const std::string& descriptor, std::optional<Box> box) {
  if (descriptor == "fig2") return MagneticField::fig2(box);
  auto colon = descriptor.find(':');
  std::string kind = descriptor.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : descriptor.substr(colon + 1);
  if (kind == "constant") {
    if (args.empty()) throw std::invalid_argument("constant field needs a value");
    return MagneticField::constant(std::stod(args), box);
  }
  if (kind == "radial") {
    std::vector<double> cs;
    std::stringstream ss(args);
    std::string tok;
    while (std::getline(ss, tok, ',')) cs.push_back(std::stod(tok));
    if (cs.empty()) throw std::invalid_argument("radial field needs coefficients");
    return MagneticField::radial(cs, box);
  }
  if (kind == "poly") {
    // poly:i,j,c;i,j,c;...
    Poly2 p(8);
    std::stringstream ss(args);
    std::string term;
    bool any = false;
    while (std::getline(ss, term, ';')) {
      std::stringstream ts(term);
      std::string si, sj, sc;
      if (!std::getline(ts, si, ',') || !std::getline(ts, sj, ',') || !std::getline(ts, sc, ','))
        throw std::invalid_argument("poly term must be i,j,c");
      p.add(std::stoi(si), std::stoi(sj), std::stod(sc));
      any = true;
    }
    if (!any) throw std::invalid_argument("poly field needs terms");
    return MagneticField::polynomial(p, box);
  }
  throw std::invalid_argument("unknown field descriptor: " + descriptor);
}

PhaseState sigma_embed(const MagneticField&, const VectorPotential& pot, const Vec2& q) {
  return PhaseState{q, pot.eval(q)};
}

SymplecticFrame frame_at(const MagneticField& field, const VectorPotential& pot, const Vec2& q) {
  double b = field.eval(q);
  if (b == 0.0) throw std::invalid_argument("frame_at needs B != 0");
  Mat2 jt = pot.jac(q).transpose();
  double sb = std::sqrt(std::abs(b));
  Vec2 t1 = jt * Vec2(1, 0), t2 = jt * Vec2(0, 1);
  SymplecticFrame fr;
  fr.u1 << 1.0 / sb, 0.0, t1.x() / sb, t1.y() / sb;
  double c = sb / b;  // = 1/sqrt(B) for B>0, carries the sign otherwise
  fr.v1 << 0.0, c, c * t2.x(), c * t2.y();
  return fr;
}

Mat2 transversal_hessian(const MagneticField& field, const VectorPotential& pot, const Vec2& q) {
  if (field.eval(q) == 0.0) throw std::invalid_argument("transversal_hessian needs B != 0");
  SymplecticFrame fr = frame_at(field, pot, q);
  Vec2 a = pot.eval(q);
  Vec4 base;
  base << q.x(), q.y(), a.x(), a.y();
  auto H = [&](const Vec4& w) {
    Vec2 qq(w(0), w(1)), pp(w(2), w(3));
    return (pp - pot.eval(qq)).squaredNorm();
  };
  double h = 1e-3 * (1.0 + q.norm());
  if (h == 0.0 || base.norm() + h == base.norm())
    throw std::runtime_error("transversal_hessian step underflow");
  auto second = [&](const Vec4& d) {
    // 4th-order central second derivative along d
    return (-H(base + 2 * h * d) + 16 * H(base + h * d) - 30 * H(base) + 16 * H(base - h * d) -
            H(base - 2 * h * d)) /
           (12 * h * h);
  };
  auto mixed = [&](const Vec4& d1, const Vec4& d2) {
    return (H(base + h * d1 + h * d2) - H(base + h * d1 - h * d2) - H(base - h * d1 + h * d2) +
            H(base - h * d1 - h * d2)) /
           (4 * h * h);
  };
  Mat2 m;
  m(0, 0) = second(fr.u1);
  m(1, 1) = second(fr.v1);
  m(0, 1) = m(1, 0) = mixed(fr.u1, fr.v1);
  return m;
}

namespace {
double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fb, double fm, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6 * (fa + 4 * flm + fm);
  double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth > 48) throw std::runtime_error("adaptive_simpson failed to converge");
  if (std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson_rec(f, a, m, fa, fm, flm, left, tol / 2, depth + 1) +
         simpson_rec(f, m, b, fm, fb, frm, right, tol / 2, depth + 1);
}
}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return simpson_rec(f, a, b, fa, fb, fm, whole, tol, 0);
}

}  // namespace magwell
