#pragma once

#include <complex>
#include <string>
#include <vector>

#include "magwell/fieldlab.hpp"

namespace magwell {

enum class Integrator { implicit_midpoint, boris };

/// Sampled solution curve of the canonical equations, one state per step.
struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseState> states;
  std::vector<double> energy;
  std::string integrator_tag;
  double step = 0.0;
};

/// Fast-loop decomposition of a phase point: drifting center, Larmor radius,
/// leading-order adiabatic action.
struct GuidingRecord {
  Vec2 center;
  double radius = 0.0;
  double action = 0.0;
  double field_at_center = 0.0;
};

/// Point in normal coordinates: complex fast variable z1 = x1 + i xi1 and
/// slow pair z2 = (x2, xi2).
struct NormalState {
  std::complex<double> z1;
  Vec2 z2;
};

struct NormalTrajectory {
  std::vector<double> times;
  std::vector<NormalState> states;
  double step = 0.0;
};

double hamiltonian(const MagneticField& field, const VectorPotential& pot, const PhaseState& s);
/// Velocity through the canonical identification: qdot = 2 (p - A(q)).
Vec2 velocity(const VectorPotential& pot, const PhaseState& s);

Trajectory integrate_H(const MagneticField& field, const VectorPotential& pot,
                       const PhaseState& s0, double T, double dt,
                       Integrator method = Integrator::implicit_midpoint);

GuidingRecord guiding_center(const MagneticField& field, const VectorPotential& pot,
                             const PhaseState& s);

/// d(t) between a physical trajectory and a normal-form trajectory mapped
/// back through a coordinate transform; Euclidean norm on R^4 in the original
/// coordinates. Grids must agree.
std::vector<double> compare_flows(const Trajectory& traj_h, const NormalTrajectory& traj_k,
                                  const std::function<Vec4(const NormalState&)>& transform);

/// Turning events of the projected motion: local extrema of the velocity
/// component along the local drift direction. Diagnostic only.
std::vector<double> mirror_points(const MagneticField& field, const VectorPotential& pot,
                                  const Trajectory& traj);

/// Energy drift diagnostics: max pointwise |H-H0|/H0 and the secular drift
/// (difference of window means at both ends).
struct EnergyDrift {
  double max_relative = 0.0;
  double secular_relative = 0.0;
};
EnergyDrift energy_drift(const Trajectory& traj);

/// Writes the trajectory CSV schema: t,q1,q2,p1,p2,H,c1,c2,I,B_at_c.
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const MagneticField& field, const VectorPotential& pot);

}  // namespace magwell
