#pragma once

#include <functional>

#include "semiprop/types.hpp"
#include "semiprop/wavefunction.hpp"

namespace semiprop {

// (2 pi i hbar t)^{-d/2} e^{i|x-y|^2 / (2 hbar t)}, i^{-d/2} = e^{-i pi d/4}.
Complex free_kernel(double t, const Vec& x, const Vec& y, double hbar);

// Harmonic oscillator kernel in d=1 with the Maslov branch folded in.
Complex mehler_kernel(double t, double x, double y, double omega, double hbar);

// Inverted oscillator H = p^2/2 - gamma^2 q^2/2 in d=1 (no caustics).
Complex hyperbolic_kernel(double t, double x, double y, double gamma, double hbar);

using Potential = std::function<double(const Vec&)>;

// Strang splitting for H = |p|^2/2 + V(q) on the periodic grid of psi0.
WaveFunction split_step_propagate(const Potential& V, const WaveFunction& psi0, double t,
                                  int steps);

// Approximate kernel column K_t(., y): a band-limited delta at y (narrow
// Gaussian of width 2*spacing deconvolved in Fourier space, band tapered)
// propagated by split-step.  Comparisons are certified only for classical
// momenta inside p_inner.
struct KernelColumn {
  WaveFunction column;
  double p_inner = 0;  // untapered band
  double p_outer = 0;  // hard cutoff (Gaussian transform >= 1e-6)
  bool certified(const Vec& eta) const;
};

KernelColumn kernel_column(const Potential& V, double t, const Vec& y,
                           const WaveFunction& grid, int steps);

// Value at a grid point (x must lie on the grid to within 1e-9 * spacing).
Complex grid_value(const WaveFunction& psi, const Vec& x);

}  // namespace semiprop
