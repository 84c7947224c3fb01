#pragma once

#include <Eigen/Sparse>
#include <complex>
#include <functional>
#include <optional>

#include "magwell/fieldlab.hpp"

namespace magwell {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;

/// Uniform grid of interior points of a square box (Dirichlet boundary).
struct Grid2 {
  Box box;
  int n = 0;       // points per side
  double h = 0.0;  // spacing = length / (n+1)
  double x(int i) const { return box.lo + (i + 1) * h; }
  double y(int j) const { return box.lo + (j + 1) * h; }
  int index(int i, int j) const { return i * n + j; }
  int dim() const { return n * n; }
};

enum class OperatorKind { magnetic_laplacian_2d, weyl_1d };

/// Sparse (2d) or dense-backed (1d) Hermitian operator with grid metadata.
struct DiscreteOperator {
  SpMat matrix;
  OperatorKind kind = OperatorKind::magnetic_laplacian_2d;
  double hbar = 0.0;
  Grid2 grid;          // 2d case
  double box1d_lo = 0, box1d_hi = 0;  // 1d case
  int dim() const { return static_cast<int>(matrix.rows()); }
  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const { return matrix * v; }
};

struct SpectralResult {
  std::vector<double> eigenvalues;  // ascending
  std::vector<Eigen::VectorXcd> eigenvectors;
  std::vector<double> residual_norms;
  double discretization_error_estimate = 0.0;
  std::vector<double> eigenvalues_refined;  // partner-grid values when computed
  double hbar = 0.0;
  int grid_n = 0;
  int partner_n = 0;
};

/// Five-point magnetic stencil with unit-modulus link phases from midpoint
/// quadrature of A along each edge; Dirichlet truncation.
DiscreteOperator assemble_magnetic_laplacian(const MagneticField& field,
                                             const VectorPotential& pot, double hbar, Box box,
                                             int n);

struct EigsOptions {
  double tol = 1e-10;          // residual tolerance on the original operator
  int max_basis = 0;           // 0: automatic
  uint64_t seed = 0x9e3779b97f4a7c15ull;
  bool want_vectors = false;
  int partner_n = 0;           // 0: no refinement pair
};

/// k lowest eigenpairs by shift-invert Lanczos (LDLT factorization, full
/// reorthogonalization, thick restart). When opts.partner_n > 0 a second
/// assembly at that grid provides the Richardson error estimate.
SpectralResult lowest_eigenpairs(const DiscreteOperator& op, int k, const EigsOptions& opts = {});
SpectralResult lowest_eigenpairs(const MagneticField& field, const VectorPotential& pot,
                                 double hbar, Box box, int n, int k,
                                 const EigsOptions& opts = {});

/// Eigenvalues inside [lo, hi] by shift-invert at the window center; the
/// window population is verified against the factorization inertia.
SpectralResult eigenpairs_in_window(const DiscreteOperator& op, double lo, double hi,
                                    const EigsOptions& opts = {});

/// Number of eigenvalues below the threshold, from the inertia of the
/// shifted LDLT factorization (exact for the discrete operator).
int count_below(const DiscreteOperator& op, double threshold);

/// Discrete Weyl quantization of a real symbol a(x2, xi2) on a periodically
/// padded grid; returns a dense Hermitian matrix in sparse storage.
DiscreteOperator weyl_quantize_1d(const std::function<double(double, double)>& symbol,
                                  double hbar, double lo, double hi, int n, int pad = 2);

/// Count of computed eigenvalues <= threshold.
int counting_function(const SpectralResult& result, double threshold);

/// L2 mass of a normalized grid eigenvector on {B > region_threshold}.
double localization_profile(const Eigen::VectorXcd& eigvec, const Grid2& grid,
                            const MagneticField& field, double region_threshold);

/// Sorted consecutive gaps among eigenvalues inside the window.
std::vector<double> gap_statistics(const SpectralResult& result, double lo, double hi);

}  // namespace magwell
