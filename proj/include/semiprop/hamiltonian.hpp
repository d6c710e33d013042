#pragma once

#include <functional>
#include <string>
#include <vector>

#include "semiprop/types.hpp"

namespace semiprop {

/// Classical Hamiltonian H(t, z) with analytic first and second derivatives
/// in z = (q, p).  Gradient order is (dH/dq, dH/dp); the Hessian uses the same
/// block ordering.  Builtin models are autonomous but the interface carries t.
struct HamiltonianModel {
  int dim = 0;
  std::string name;
  std::function<double(double, const PhasePoint&)> eval;
  std::function<Vec(double, const PhasePoint&)> grad;
  std::function<Mat(double, const PhasePoint&)> hess;
  // Optional bound on sup ||Hess H||; <= 0 means unknown.
  double subquad_bound = 0.0;
};

/// Construct a builtin model by name.
///   free:              H = |p|^2/2                     (params: d copies ignored; d = max(1, #params))
///   harmonic:          H = (|p|^2 + w^2 |q|^2)/2       (params: w per axis, d = #params)
///   inverted_harmonic: H = (|p|^2 - g^2 |q|^2)/2       (params: g per axis)
///   quartic:           H = |p|^2/2 + |q|^2/2 + l |q|^4 (params: l, d = 1)
HamiltonianModel builtin_model(const std::string& name, const std::vector<double>& params);

struct GradientCheckEntry {
  PhasePoint z;
  double grad_deviation = 0.0;  // max relative deviation, grad vs central differences
  double hess_deviation = 0.0;
  double hess_asymmetry = 0.0;
  bool ok = true;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;
  double max_grad_deviation = 0.0;
  double max_hess_deviation = 0.0;
  bool all_ok = true;
};

/// Compare grad/hess against central finite differences of eval at the given
/// sample points.  Deviations above tol are flagged, not fatal.
GradientCheckReport check_gradients(const HamiltonianModel& model,
                                    const std::vector<PhasePoint>& samples, double tol);

}  // namespace semiprop
