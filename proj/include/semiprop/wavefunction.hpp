#pragma once

#include <string>
#include <vector>

#include "semiprop/types.hpp"

namespace semiprop {

// Complex values on a uniform position grid, row-major storage.
struct WaveFunction {
  int dim = 0;
  double hbar = 1.0;
  Vec origin;
  Vec spacing;
  std::vector<int> counts;
  std::vector<Complex> values;

  std::size_t size() const;
  double cell_volume() const;
  Vec point(std::size_t flat) const;
  void validate() const;
};

WaveFunction make_grid(int dim, double hbar, const Vec& origin, const Vec& spacing,
                       const std::vector<int>& counts);

Complex inner_product(const WaveFunction& a, const WaveFunction& b);
double l2_norm(const WaveFunction& psi);

// Fraction of |psi|^2 on the outermost grid layer (periodic-artifact guard).
double boundary_mass(const WaveFunction& psi);

void save_wavefunction(const WaveFunction& psi, const std::string& path);
WaveFunction load_wavefunction(const std::string& path);

// Normalized Gaussian packet centered at (q0, p0) with the HK width |x-q0|^2/(2 hbar).
WaveFunction gaussian_packet(const WaveFunction& grid, const Vec& q0, const Vec& p0);

}  // namespace semiprop
