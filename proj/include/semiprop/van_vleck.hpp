#pragma once

#include <vector>

#include "semiprop/flow.hpp"
#include "semiprop/hamiltonian.hpp"

namespace semiprop {

struct ClassicalBranch {
  Vec eta;                // momentum root of q_t(y, eta) = x
  TrajectoryRecord traj;  // flow from (y, eta)
  double action = 0;
  Mat mixed_hessian;  // d^2 S / dx dy = -B_t^{-1}
  int maslov = 0;
  std::vector<Complex> b_coeffs;  // filled by compute_corrections
  double cond_B = 0;              // ||B_t^{-1}||, the hbar^{-delta} diagnostic
};

struct BranchSearchDiag {
  int starts = 0;
  int discarded_starts = 0;
  int degenerate_roots = 0;
  double start_spacing = 0;
};

std::vector<ClassicalBranch> find_branches(const HamiltonianModel& model, double t,
                                           const Vec& x, const Vec& y, const Vec& p_lo,
                                           const Vec& p_hi, double tol = 1e-10,
                                           BranchSearchDiag* diag = nullptr);

// Integer theta with e^{-i pi theta/2} = det^{1/2}M_t (-det M_t det B_t)^{-1/2}
// / |det B_t^{-1}|^{1/2}, cross-checked against the caustic count.
int maslov_index(const TrajectoryRecord& traj);

struct HessianPhi {
  CMat E;     // (1/i) d^2 Phi / dz^2 at the branch
  CMat Einv;  // closed-form block inverse, checked against a direct solve
};

HessianPhi hessian_phi(const TrajectoryRecord& traj);

// Fills branch.b_coeffs with (b_0 .. b_{order-1}) via the stationary-phase
// engine on jets of the HK integrand at the critical point.
void compute_corrections(const HamiltonianModel& model, double t, const Vec& x,
                         ClassicalBranch& branch, int order);

struct VanVleckResult {
  Complex value{0, 0};
  bool no_classical_path = false;
};

VanVleckResult vanvleck_kernel(const std::vector<ClassicalBranch>& branches, double hbar,
                               int order, int dim);

}  // namespace semiprop
