#pragma once

#include <vector>

#include "semiprop/types.hpp"

namespace semiprop {

/// Truncated multivariate Taylor polynomial at a base point: coefficients
/// c_alpha = d^alpha f(0)/alpha! for all multi-indices |alpha| <= order.
/// Arithmetic truncates at the (smaller) order of the operands.
class Jet {
 public:
  Jet() = default;
  Jet(int nvars, int order);

  static Jet constant(int nvars, int order, Complex value);
  static Jet variable(int nvars, int order, int which);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int num_terms() const { return static_cast<int>(coeffs_.size()); }

  Complex coeff(const std::vector<int>& alpha) const;
  void set_coeff(const std::vector<int>& alpha, Complex value);
  const std::vector<int>& exponents(int slot) const;
  Complex coeff_at(int slot) const { return coeffs_[slot]; }
  void set_coeff_at(int slot, Complex value) { coeffs_[slot] = value; }

  Complex value_at_zero() const { return coeffs_[0]; }

  Jet operator+(const Jet& other) const;
  Jet operator-(const Jet& other) const;
  Jet operator*(const Jet& other) const;
  Jet scaled(Complex factor) const;
  Jet derivative(int var) const;        // order drops by one
  Jet truncated(int new_order) const;   // drop or zero-pad coefficients
  Jet pow(int n) const;
  Jet exp() const;                      // exp of the jet (uses its constant term)

 private:
  int nvars_ = 0;
  int order_ = 0;
  std::vector<Complex> coeffs_;
};

/// Apply < Ainv D, D >^ell with D = (1/i) d/dx, i.e. ell applications of
/// -sum_ab Ainv(a,b) d_a d_b.  Requires f.order >= 2 ell.
Jet apply_quadratic_form_power(const CMat& Ainv, const Jet& f, int ell);

/// Cubic-and-higher remainder g = phi - phi(0) - (1/2) <H x, x> with
/// H = d^2 phi(0): zeroes every coefficient of total degree <= 2.  Errors if
/// the linear part of phi is nonzero (critical-point precondition).
Jet build_g(const Jet& phase);

/// Hessian d^2 phi(0) read off the degree-2 coefficients.
CMat jet_hessian(const Jet& phase);

}  // namespace semiprop
