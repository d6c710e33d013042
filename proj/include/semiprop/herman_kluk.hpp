#pragma once

#include <functional>
#include <string>
#include <vector>

#include "semiprop/flow.hpp"
#include "semiprop/hamiltonian.hpp"
#include "semiprop/wavefunction.hpp"

namespace semiprop {

struct PhaseSpaceQuadrature {
  std::vector<PhasePoint> nodes;
  std::vector<double> weights;
  std::vector<bool> on_boundary;  // outer shell of a tensor grid
  std::string spec;
};

// Tensor grid of initial points over [q_lo,q_hi] x [p_lo,p_hi], given spacing.
PhaseSpaceQuadrature tensor_quadrature(const Vec& q_lo, const Vec& q_hi, const Vec& p_lo,
                                       const Vec& p_hi, double spacing);

// Default box for kernel evaluation: centers covering the Gaussian-effective
// region around y (position) and the momentum window, spacing sqrt(hbar)/3.
PhaseSpaceQuadrature suggest_quadrature(double hbar, const Vec& q_center, double q_radius,
                                        const Vec& p_center, double p_radius);

struct ThetaMultiplier {
  std::function<double(const Vec&)> theta;
  Vec p_lo, p_hi;  // support box: theta vanishes outside
};

Complex hk_phase(const TrajectoryRecord& traj, const Vec& x, const Vec& y);

// Per-node trajectory cache shared across evaluation points at fixed t.
std::vector<TrajectoryRecord> compute_node_trajectories(const HamiltonianModel& model,
                                                        const PhaseSpaceQuadrature& quad,
                                                        double t, double tol = 1e-10);

struct HkReport {
  double boundary_fraction = 0.0;  // |integrand| mass carried by boundary nodes
  bool coverage_warning = false;
};

Complex hk_kernel(const HamiltonianModel& model, double hbar, double t, const Vec& x,
                  const Vec& y, const PhaseSpaceQuadrature& quad,
                  const ThetaMultiplier* theta = nullptr, double tol = 1e-6,
                  const std::vector<TrajectoryRecord>* cache = nullptr,
                  HkReport* report = nullptr);

WaveFunction propagate_hk(const HamiltonianModel& model, const WaveFunction& psi0, double t,
                          const PhaseSpaceQuadrature& quad,
                          const ThetaMultiplier* theta = nullptr, int threads = 0,
                          HkReport* report = nullptr);

// hbar-scaled Fourier multiplier: transform, multiply by theta(p), invert.
WaveFunction apply_theta(const WaveFunction& psi, const ThetaMultiplier& theta);

}  // namespace semiprop
