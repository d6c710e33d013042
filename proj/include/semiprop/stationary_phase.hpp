#pragma once

#include <functional>
#include <vector>

#include "semiprop/jet.hpp"
#include "semiprop/types.hpp"

namespace semiprop {

/// Growth exponents of an hbar-dependent phase family and the derived
/// quantities rho = sigma + nu + mu and the per-order exponent gain
/// 1 - 5 mu - 6 sigma - 2 nu (must be positive).
struct SpParameters {
  double mu = 0.0;
  double nu = 0.0;
  double sigma = 0.0;
  double rho = 0.0;
  double exponent_gain = 1.0;
};

SpParameters validate_parameters(double mu, double nu, double sigma);

struct SpExpansion {
  std::vector<Complex> terms;         // term j includes the common prefactor
  std::vector<Complex> partial_sums;
  Complex prefactor;                  // (2 pi hbar)^{n/2} e^{i phi(0)/hbar} / det^{1/2}((1/i) Hess)
  double predicted_error_exponent = 0.0;  // k * gain + rho * n
};

/// Branch-correct square root of the determinant of a complex symmetric
/// matrix in the closure of {Re E positive definite}: product of principal
/// square roots of the eigenvalues (args within [-pi/2, pi/2]); positive for
/// real positive definite E.
Complex det_sqrt_branch(const CMat& E);

/// Asymptotic expansion of int e^{i phi/hbar} u dx to k terms about the
/// critical point at 0.  Term j sums over l - m = j, 2l >= 3m (equivalently
/// m = 0..2j, l = j + m) of i^{-j} 2^{-l} / (l! m!) <Hinv D, D>^l (g^m u)|_0.
SpExpansion sp_expansion(const Jet& phase, const Jet& amplitude, double hbar, int k,
                         const SpParameters* params = nullptr);

struct QuadratureBox {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct QuadratureResult {
  Complex value;
  double achieved_tol = 0.0;
  bool converged = true;
};

using ScalarField = std::function<Complex(const Vec&)>;

/// Brute-force adaptive quadrature of e^{i phase/hbar} amplitude over the box
/// (n = 1 or 2); the independent ground truth for the expansion.
QuadratureResult oracle_quadrature(const ScalarField& phase_fn, const ScalarField& amplitude_fn,
                                   double hbar, const QuadratureBox& domain, double tol);

}  // namespace semiprop
