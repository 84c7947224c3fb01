#pragma once

#include "magwell/benchlib.hpp"
#include "magwell/starbirk.hpp"

namespace magwell {

/// The formal pipeline for one field, built once and shared by experiments.
struct NfBundle {
  MagneticField field;
  VectorPotential pot;
  std::shared_ptr<const SymplecticChartJet> chart;
  FormalSeries series;
  NormalFormResult nf;
  double star_roundtrip = 0.0;
};

NfBundle build_nf(const MagneticField& field, int n1, int n2);

/// Classical truncation: keeps hbar^0 action terms of degree <= order.
NormalFormResult truncate_classical(const NormalFormResult& nf, int order);

/// Decay exponent of |H o Phi_N - K_N| along fast rays at a slow offset.
double residual_decay_exponent(const MagneticField& field, const VectorPotential& pot,
                               const TruncatedTransform& tr, const NormalFormResult& nf, int order,
                               const Vec2& slow_offset);

}  // namespace magwell
