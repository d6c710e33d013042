#pragma once

#include <vector>

#include "semiprop/hamiltonian.hpp"
#include "semiprop/types.hpp"

namespace semiprop {

/// Dense-output snapshot along a trajectory: flow point, action and the
/// tangent-map blocks at time s.
struct FlowCheckpoint {
  double s = 0.0;
  PhasePoint z;
  double action = 0.0;
  Mat A, B, C, D;
  Complex det_M;  // det(C - B - i(A + D))
};

/// A single integrated trajectory: endpoint, action S(t, z0), monodromy
/// blocks A, B, C, D of d kappa_t, and the branch-continued Herman-Kluk
/// prefactor det^{1/2} M_t.
struct TrajectoryRecord {
  double t = 0.0;
  PhasePoint z0;
  PhasePoint zt;
  double action = 0.0;
  Mat A, B, C, D;
  Complex prefactor;       // det^{1/2} M_t continued from the principal value at t = 0
  double branch_arg = 0.0; // continuously tracked arg det M_s at s = t
  std::vector<double> caustic_times;  // zeros of det B_s on (0, t)
  std::vector<FlowCheckpoint> checkpoints;
  double tol = 0.0;

  int dim() const { return z0.dim(); }
  CMat hk_matrix() const;  // M_t = C - B - i(A + D)
  Complex det_M() const;

  /// Residuals of the three symplectic block identities and of det = 1.
  double symplectic_residual() const;
  double tangent_det_error() const;
};

/// Integrate Hamilton's equations together with the variational equations and
/// the action from 0 to t (t may be negative), with adaptive error control to
/// tol.  Checkpoints are spaced finely enough that the argument of det M_s
/// moves by less than pi/4 between neighbors, so the prefactor branch is
/// well-defined.
TrajectoryRecord integrate_flow(const HamiltonianModel& model, const PhasePoint& z0, double t,
                                double tol);

/// det^{1/2} M_t on the branch continued from the principal value of
/// det^{1/2} M_0 = ((-2i)^d)^{1/2} at t = 0.
Complex hk_prefactor(const TrajectoryRecord& traj);

/// Y_t = A + D + i(B - C), Z_t = A - D + i(B + C).  Asserts Y*Y - Z*Z = 4I
/// and smallest singular value of Y >= 2 within tolerance.
struct AuxiliaryMatrices {
  CMat Y, Z;
};
AuxiliaryMatrices auxiliary_matrices(const TrajectoryRecord& traj);

struct OmegaEstimate {
  std::vector<double> times;
  std::vector<double> omega;  // monotone envelope of max tangent-map norm, >= 1
  double gamma_fit = 0.0;     // log-linear rate fitted on the tail
};

/// Estimate the flow-derivative growth function omega(t) over [0, T] from the
/// given sample set of initial conditions.
OmegaEstimate estimate_omega(const HamiltonianModel& model, double T,
                             const std::vector<PhasePoint>& samples, double tol);

/// Debug dump: columns s, q.., p.., S, vec(A..D), Re/Im det^{1/2} M_s.
void dump_trajectory_csv(const TrajectoryRecord& traj, const std::string& path);

}  // namespace semiprop
