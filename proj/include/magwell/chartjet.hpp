#pragma once

#include <array>
#include <memory>

#include "magwell/fieldlab.hpp"
#include "magwell/jets.hpp"

namespace magwell {

// Polynomial model of the normal-bundle chart around a slow basepoint:
// the linear bundle map (x1,xi1,z2) -> j(z2) + x1 u1(z2) + xi1 v1(z2),
// corrected order by order in the fast variables until its pullback of the
// canonical form matches omega0 within the truncation caps. Components are
// truncated polynomials; the map restricted to {z1=0} is the exact embedding
// of the zero-energy surface.
struct SymplecticChartJet {
  Vec2 q0;            // field-space basepoint (minimum of B by default)
  Vec2 z2_0;          // chart image of q0
  double b0 = 0.0;    // B at the basepoint
  int fcap = 0, scap = 0;
  std::array<Jet4, 4> psi;                   // map components (q1,q2,p1,p2)
  std::array<std::array<Jet4, 4>, 4> dpsi;   // dpsi[i][j] = d psi_i / d z_j
  Jet4 b_slow;                               // B(g^{-1}(z2)) as a slow jet
  Jet4 h_hat;                                // Taylor of H o psi
  double defect_after = 0.0;                 // residual pullback defect coeff

  Vec4 eval(const Vec4& z) const;
  Mat4 jacobian(const Vec4& z) const;
  /// Newton inversion of the polynomial map; throws if it fails to converge.
  Vec4 invert(const Vec4& w) const;
  /// Normal slow coordinates from chart coordinates: the second component is
  /// reflected about the basepoint to keep one symplectic orientation on
  /// both the fast and the slow pair.
  Vec2 normal_slow_from_chart(const Vec2& z2_chart) const {
    return Vec2(z2_chart.x(), 2.0 * z2_0.y() - z2_chart.y());
  }
};

/// Builds the corrected chart jet for a field whose descriptor admits exact
/// Taylor data (built-in polynomial/constant/radial). basepoint defaults to
/// argmin B.
std::shared_ptr<const SymplecticChartJet> build_chart_jet(
    const MagneticField& field, int fcap, int scap,
    std::optional<Vec2> basepoint = std::nullopt);

}  // namespace magwell
