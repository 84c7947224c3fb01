#include "magwell/specwell.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

namespace magwell {

DiscreteOperator assemble_magnetic_laplacian(const MagneticField& field,
                                             const VectorPotential& pot, double hbar, Box box,
                                             int n) {
  if (n < 64) throw std::invalid_argument("assemble_magnetic_laplacian needs n >= 64");
  if (hbar <= 0.0) throw std::invalid_argument("hbar must be positive");
  // when the well region {B <= C1} is compact it must sit inside the box
  // with room for the eigenfunction length scale; for flat fields the box
  // itself is the domain under study
  const auto& conf = field.confinement();
  double c1 = 1.25 * field.min_on_domain();
  if (conf && conf->c_tilde1 > c1) {
    double margin = 2.0 * std::sqrt(hbar / field.min_on_domain());
    const int probe = 64;
    for (int i = 0; i <= probe; ++i)
      for (int j = 0; j <= probe; ++j) {
        Vec2 q(box.lo + box.length() * i / probe, box.lo + box.length() * j / probe);
        if (field.eval(q) <= c1 && !box.contains(q, margin))
          throw std::invalid_argument("box too small: well region touches the boundary");
      }
  }

  DiscreteOperator op;
  op.kind = OperatorKind::magnetic_laplacian_2d;
  op.hbar = hbar;
  op.grid.box = box;
  op.grid.n = n;
  op.grid.h = box.length() / (n + 1);
  const double h = op.grid.h;
  const double kin = hbar * hbar / (h * h);

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(5ull * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int id = op.grid.index(i, j);
      trip.emplace_back(id, id, cplx(4.0 * kin, 0.0));
      double x = op.grid.x(i), y = op.grid.y(j);
      if (i + 1 < n) {
        // hop in +x: phase exp(-i/hbar * A(mid) . dl), dl = (h, 0)
        Vec2 a = pot.eval(Vec2(x + 0.5 * h, y));
        double theta = a.x() * h / hbar;
        cplx hop = -kin * std::exp(cplx(0.0, -theta));
        trip.emplace_back(id, op.grid.index(i + 1, j), hop);
        trip.emplace_back(op.grid.index(i + 1, j), id, std::conj(hop));
      }
      if (j + 1 < n) {
        Vec2 a = pot.eval(Vec2(x, y + 0.5 * h));
        double theta = a.y() * h / hbar;
        cplx hop = -kin * std::exp(cplx(0.0, -theta));
        trip.emplace_back(id, op.grid.index(i, j + 1), hop);
        trip.emplace_back(op.grid.index(i, j + 1), id, std::conj(hop));
      }
    }
  }
  op.matrix.resize(n * n, n * n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  return op;
}

namespace {

struct Lcg {
  uint64_t s;
  explicit Lcg(uint64_t seed) : s(seed) {}
  uint64_t next() {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    return s;
  }
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
};

// Thick-restart Lanczos on op_apply (the shift-inverted action); returns the
// k dominant eigenpairs of the inverted operator.
struct LanczosOut {
  std::vector<double> nu;  // eigenvalues of the inverted operator, descending
  std::vector<Eigen::VectorXcd> vecs;
};

LanczosOut lanczos_dominant(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
                            int dim, int k, double tol, int max_basis, uint64_t seed,
                            int iter_cap) {
  int m = max_basis > 0 ? max_basis : std::min(dim, std::max(3 * k + 20, 40));
  m = std::min(m, dim);
  std::vector<Eigen::VectorXcd> V;
  V.reserve(m + 1);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);

  Lcg rng(seed);
  Eigen::VectorXcd v0(dim);
  for (int i = 0; i < dim; ++i) v0(i) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  v0.normalize();
  V.push_back(v0);

  Eigen::MatrixXd Tmat = Eigen::MatrixXd::Zero(m, m);
  int j = 0;            // basis size beyond the retained block
  int total_iters = 0;
  double last_worst = 1e300;
  std::vector<double> ritz_res;

  // thick-restart bookkeeping: after a restart the projected matrix is
  // diag(theta_1..theta_p) with coupling row b_i in the new Lanczos vector
  Eigen::VectorXd coupling;
  int thick = 0;

  while (true) {
    // expand the Lanczos basis past the retained Ritz block
    int base = thick;
    while (base + j < m) {
      int cur = base + j;
      Eigen::VectorXcd w = apply(V[cur]);
      total_iters++;
      cplx a = V[cur].dot(w);
      w -= a.real() * V[cur];
      if (cur > 0 && j > 0) w -= beta(cur - 1) * V[cur - 1];
      if (j == 0 && thick > 0)
        for (int i = 0; i < thick; ++i) w -= coupling(i) * V[i];
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= cur; ++i) w -= V[i].dot(w) * V[i];
      alpha(cur) = a.real();
      double b = w.norm();
      beta(cur) = b;
      if (b < 1e-14) {
        // invariant subspace found; pad with a random orthogonal vector
        Eigen::VectorXcd r(dim);
        for (int i = 0; i < dim; ++i) r(i) = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
        for (int pass = 0; pass < 2; ++pass)
          for (int i = 0; i <= cur; ++i) r -= V[i].dot(r) * V[i];
        r.normalize();
        V.push_back(r);
      } else {
        V.push_back(w / b);
      }
      ++j;
      if (total_iters > iter_cap)
        throw std::runtime_error("eigensolver iteration cap exceeded without convergence");
    }

    // projected matrix
    int mm = base + j;
    Tmat.setZero();
    for (int i = 0; i < thick; ++i) {
      Tmat(i, i) = alpha(i);
      Tmat(i, thick) = coupling(i);
      Tmat(thick, i) = coupling(i);
    }
    for (int i = thick; i < mm; ++i) {
      Tmat(i, i) = alpha(i);
      if (i + 1 < mm) {
        Tmat(i, i + 1) = beta(i);
        Tmat(i + 1, i) = beta(i);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tmat.topLeftCorner(mm, mm));
    Eigen::VectorXd theta = es.eigenvalues();   // ascending
    Eigen::MatrixXd s = es.eigenvectors();

    // dominant in magnitude: an interior shift makes both signs of theta
    // relevant (eigenvalues on either side of sigma)
    std::vector<int> cols(mm);
    for (int i = 0; i < mm; ++i) cols[i] = i;
    std::sort(cols.begin(), cols.end(),
              [&](int a, int b) { return std::abs(theta(a)) > std::abs(theta(b)); });

    ritz_res.assign(k, 0.0);
    bool all_ok = true;
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      int col = cols[i];
      double res = std::abs(beta(mm - 1) * s(mm - 1, col));
      ritz_res[i] = res;
      double rel = res / std::max(1.0, std::abs(theta(col)));
      worst = std::max(worst, rel);
      if (rel > tol) all_ok = false;
    }
    if (all_ok || total_iters > iter_cap) {
      if (!all_ok)
        throw std::runtime_error("eigensolver iteration cap exceeded without convergence");
      LanczosOut out;
      for (int i = 0; i < k; ++i) {
        int col = cols[i];
        out.nu.push_back(theta(col));
        Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dim);
        for (int r = 0; r < mm; ++r) y += s(r, col) * V[r];
        y.normalize();
        out.vecs.push_back(std::move(y));
      }
      return out;
    }

    // quasi-degenerate clusters (flat wells, Landau levels) only resolve once
    // the basis spans the whole cluster: grow it when progress stalls, within
    // a memory bound on the stored basis
    int mem_cap = std::max(m, static_cast<int>(1.2e8 / std::max(1, dim)));
    if (worst > 0.5 * last_worst && m < std::min(dim, mem_cap)) {
      m = std::min({dim, mem_cap, 2 * m});
      alpha.conservativeResize(m);
      beta.conservativeResize(m);
      Tmat = Eigen::MatrixXd::Zero(m, m);
    }
    last_worst = worst;

    // thick restart: keep the (k + extra) Ritz vectors largest in magnitude
    int keep = std::min(mm - 1, k + std::max(4, k / 2));
    std::vector<Eigen::VectorXcd> newV;
    newV.reserve(m + 1);
    Eigen::VectorXd newAlpha = Eigen::VectorXd::Zero(m);
    coupling = Eigen::VectorXd::Zero(keep);
    for (int i = 0; i < keep; ++i) {
      int col = cols[i];
      Eigen::VectorXcd y = Eigen::VectorXcd::Zero(dim);
      for (int r = 0; r < mm; ++r) y += s(r, col) * V[r];
      newAlpha(i) = theta(col);
      coupling(i) = beta(mm - 1) * s(mm - 1, col);
      newV.push_back(std::move(y));
    }
    newV.push_back(V[mm]);  // residual direction continues the recurrence
    V = std::move(newV);
    alpha = newAlpha;
    beta.setZero();
    thick = keep;
    j = 0;
  }
}

SpectralResult shift_invert_eigs(const DiscreteOperator& op, double sigma, int k,
                                 const EigsOptions& opts, bool largest_from_above) {
  SpMat shifted = op.matrix;
  if (sigma != 0.0) {
    SpMat eye(op.dim(), op.dim());
    eye.setIdentity();
    shifted = op.matrix - sigma * eye;
  }
  Eigen::SimplicialLDLT<SpMat> ldlt(shifted);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("sparse factorization failed at the requested shift");
  auto apply = [&](const Eigen::VectorXcd& v) { return Eigen::VectorXcd(ldlt.solve(v)); };

  int iter_cap = 100 * std::max(k, 1) + 1200;
  LanczosOut lz = lanczos_dominant(apply, op.dim(), k, 1e-10, opts.max_basis, opts.seed, iter_cap);

  SpectralResult res;
  res.hbar = op.hbar;
  res.grid_n = op.grid.n;
  std::vector<int> order(lz.nu.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::vector<double> lam(lz.nu.size());
  for (size_t i = 0; i < lz.nu.size(); ++i) lam[i] = sigma + 1.0 / lz.nu[i];
  std::sort(order.begin(), order.end(), [&](int a, int b) { return lam[a] < lam[b]; });
  for (int idx : order) {
    const Eigen::VectorXcd& v = lz.vecs[idx];
    Eigen::VectorXcd mv = op.matrix * v;
    double l = v.dot(mv).real();  // Rayleigh quotient refines the Ritz value
    double r = (mv - l * v).norm();
    if (r > std::max(opts.tol * 100.0, 1e-8) * std::max(1.0, std::abs(l)))
      throw std::runtime_error("eigenpair residual above tolerance");
    res.eigenvalues.push_back(l);
    res.residual_norms.push_back(r);
    if (opts.want_vectors) res.eigenvectors.push_back(v);
  }
  (void)largest_from_above;
  return res;
}

}  // namespace

SpectralResult lowest_eigenpairs(const DiscreteOperator& op, int k, const EigsOptions& opts) {
  if (k <= 0 || k >= op.dim()) throw std::invalid_argument("lowest_eigenpairs needs 0 < k << dim");
  if (op.kind == OperatorKind::weyl_1d) {
    // dense path: the 1d quantizer produces moderate dimensions
    Eigen::MatrixXcd dense(op.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
    SpectralResult res;
    res.hbar = op.hbar;
    res.grid_n = static_cast<int>(dense.rows());
    for (int i = 0; i < k; ++i) {
      double l = es.eigenvalues()(i);
      Eigen::VectorXcd v = es.eigenvectors().col(i);
      res.eigenvalues.push_back(l);
      res.residual_norms.push_back((dense * v - l * v).norm());
      if (opts.want_vectors) res.eigenvectors.push_back(v);
    }
    return res;
  }
  return shift_invert_eigs(op, 0.0, k, opts, false);
}

SpectralResult lowest_eigenpairs(const MagneticField& field, const VectorPotential& pot,
                                 double hbar, Box box, int n, int k, const EigsOptions& opts) {
  DiscreteOperator op = assemble_magnetic_laplacian(field, pot, hbar, box, n);
  SpectralResult res = lowest_eigenpairs(op, k, opts);
  if (opts.partner_n > 0 && opts.partner_n != n) {
    DiscreteOperator op2 = assemble_magnetic_laplacian(field, pot, hbar, box, opts.partner_n);
    EigsOptions o2 = opts;
    o2.partner_n = 0;
    o2.want_vectors = false;
    SpectralResult r2 = lowest_eigenpairs(op2, k, o2);
    res.partner_n = opts.partner_n;
    res.eigenvalues_refined = r2.eigenvalues;
    double err = 0.0;
    for (int i = 0; i < k; ++i)
      err = std::max(err, std::abs(res.eigenvalues[i] - r2.eigenvalues[i]));
    res.discretization_error_estimate = err;
  }
  return res;
}

SpectralResult eigenpairs_in_window(const DiscreteOperator& op, double lo, double hi,
                                    const EigsOptions& opts) {
  if (!(lo < hi)) throw std::invalid_argument("empty window");
  int expected = count_below(op, hi) - count_below(op, lo);
  SpectralResult res;
  res.hbar = op.hbar;
  res.grid_n = op.grid.n;
  if (expected == 0) return res;
  double sigma = 0.5 * (lo + hi);
  // near-degenerate doublets emerge late from the Krylov space; grow the
  // request until the window population matches the factorization inertia
  for (int attempt = 0, k = expected + 4; attempt < 3; ++attempt, k += expected / 2 + 4) {
    SpectralResult all = shift_invert_eigs(op, sigma, k, opts, false);
    res.eigenvalues.clear();
    res.residual_norms.clear();
    res.eigenvectors.clear();
    for (size_t i = 0; i < all.eigenvalues.size(); ++i) {
      double l = all.eigenvalues[i];
      if (l >= lo && l <= hi) {
        res.eigenvalues.push_back(l);
        res.residual_norms.push_back(all.residual_norms[i]);
        if (opts.want_vectors && i < all.eigenvectors.size())
          res.eigenvectors.push_back(all.eigenvectors[i]);
      }
    }
    if (static_cast<int>(res.eigenvalues.size()) == expected) {
      std::sort(res.eigenvalues.begin(), res.eigenvalues.end());
      return res;
    }
  }
  throw std::runtime_error("window eigenvalue count disagrees with factorization inertia");
}

int count_below(const DiscreteOperator& op, double threshold) {
  SpMat eye(op.dim(), op.dim());
  eye.setIdentity();
  SpMat shifted = op.matrix - threshold * eye;
  Eigen::SimplicialLDLT<SpMat> ldlt(shifted);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("sparse factorization failed at the counting threshold");
  const auto& d = ldlt.vectorD();
  int count = 0;
  for (int i = 0; i < d.size(); ++i)
    if (d(i).real() < 0.0) ++count;
  return count;
}

namespace {

// in-place radix-2 FFT, sign = +1 for the synthesis convention used below
void fft_radix2(std::vector<cplx>& a, int sign) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = sign * 2.0 * M_PI / double(len);
    cplx wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        cplx u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace

DiscreteOperator weyl_quantize_1d(const std::function<double(double, double)>& symbol,
                                  double hbar, double lo, double hi, int n, int pad) {
  if (n < 8 || (n & (n - 1)) != 0)
    throw std::invalid_argument("weyl_quantize_1d needs a power-of-two grid");
  if (!(hi > lo)) throw std::invalid_argument("empty 1d box");
  if (hbar <= 0.0) throw std::invalid_argument("hbar must be positive");
  const int P = pad * n;  // padded period in points
  const double h = (hi - lo) / n;
  const double L = P * h;

  // aliasing guards: (i) the symbol value must not wrap discontinuously at
  // the Nyquist frequency, (ii) it must be resolved by the position grid
  {
    double ximax = M_PI * hbar / h;
    double scale = 1e-12, jump = 0.0, wiggle = 0.0;
    for (int m = 0; m < 2 * n - 1; ++m) {
      double xm = lo + 0.5 * h * m;
      double ap = symbol(xm, ximax), am = symbol(xm, -ximax), a0 = symbol(xm, 0.0);
      scale = std::max({scale, std::abs(ap), std::abs(a0)});
      jump = std::max(jump, std::abs(ap - am));
    }
    for (int m = 0; m + 1 < 2 * n - 1; ++m) {
      double xa = lo + 0.5 * h * m, xb = xa + 0.5 * h;
      // two incommensurate probe offsets so oscillations cannot hide between
      // the samples
      for (double frac : {1.0 / 3.0, 2.0 / 5.0})
        for (double xi : {0.0, 0.5 * ximax}) {
          double mid = symbol(xa + frac * (xb - xa), xi);
          double lin = (1 - frac) * symbol(xa, xi) + frac * symbol(xb, xi);
          wiggle = std::max(wiggle, std::abs(mid - lin));
        }
    }
    if (jump > 0.02 * scale || wiggle > 0.1 * scale)
      throw std::runtime_error("aliasing detected: symbol bandwidth exceeds the grid Nyquist");
  }

  // kernel row per midpoint: K(m,d) = (1/P) sum_k a(x_m, xi_k) e^{2pi i k d/P}
  // with x_j = lo + j h, midpoints x_m = lo + m h/2, xi_k = 2 pi hbar k / L
  Eigen::MatrixXcd kernel(2 * n - 1, P);
  for (int m = 0; m < 2 * n - 1; ++m) {
    double xm = lo + 0.5 * h * m;
    std::vector<cplx> row(P);
    for (int k = 0; k < P; ++k) {
      int kk = k < P / 2 ? k : k - P;
      row[k] = symbol(xm, 2.0 * M_PI * hbar * kk / L);
    }
    fft_radix2(row, +1);
    for (int d = 0; d < P; ++d) kernel(m, d) = row[d] / double(P);
  }

  Eigen::MatrixXcd M(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      int d = j - l;
      int dd = d >= 0 ? d : d + P;
      M(j, l) = kernel(j + l, dd);
    }
  Eigen::MatrixXcd Mh = 0.5 * (M + M.adjoint());

  DiscreteOperator op;
  op.kind = OperatorKind::weyl_1d;
  op.hbar = hbar;
  op.box1d_lo = lo;
  op.box1d_hi = hi;
  op.matrix = Mh.sparseView();
  op.grid.n = n;
  op.grid.h = h;
  return op;
}

int counting_function(const SpectralResult& result, double threshold) {
  int c = 0;
  for (double l : result.eigenvalues)
    if (l <= threshold) ++c;
  return c;
}

double localization_profile(const Eigen::VectorXcd& eigvec, const Grid2& grid,
                            const MagneticField& field, double region_threshold) {
  double norm2 = eigvec.squaredNorm();
  if (std::abs(norm2 - 1.0) > 1e-6)
    throw std::invalid_argument("localization_profile expects a normalized eigenvector");
  double outside = 0.0;
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j) {
      if (field.eval(Vec2(grid.x(i), grid.y(j))) > region_threshold)
        outside += std::norm(eigvec(grid.index(i, j)));
    }
  return outside;
}

std::vector<double> gap_statistics(const SpectralResult& result, double lo, double hi) {
  std::vector<double> in;
  for (double l : result.eigenvalues)
    if (l >= lo && l <= hi) in.push_back(l);
  std::sort(in.begin(), in.end());
  std::vector<double> gaps;
  for (size_t i = 1; i < in.size(); ++i) gaps.push_back(in[i] - in[i - 1]);
  std::sort(gaps.begin(), gaps.end());
  return gaps;
}

}  // namespace magwell
