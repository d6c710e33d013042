#include "semiprop/van_vleck.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "semiprop/herman_kluk.hpp"
#include "semiprop/jet.hpp"
#include "semiprop/stationary_phase.hpp"

namespace semiprop {

namespace {

double sigma_min(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().minCoeff();
}

struct FlowEval {
  Vec qt;
  Mat B;
};

FlowEval eval_flow(const HamiltonianModel& model, const Vec& y, const Vec& p, double t) {
  const TrajectoryRecord traj = integrate_flow(model, PhasePoint(y, p), t, 1e-12);
  return {traj.zt.q, traj.B};
}

}  // namespace

HessianPhi hessian_phi(const TrajectoryRecord& traj) {
  const int d = traj.dim();
  const Complex i1(0, 1);
  const CMat A = traj.A.cast<Complex>();
  const CMat B = traj.B.cast<Complex>();
  const CMat AC = traj.A.cast<Complex>() + i1 * traj.C.cast<Complex>();
  const CMat BD = traj.B.cast<Complex>() + i1 * traj.D.cast<Complex>();
  const CMat Id = CMat::Identity(d, d);

  HessianPhi h;
  h.E = CMat(2 * d, 2 * d);
  h.E.topLeftCorner(d, d) = AC.transpose() * A + Id;
  h.E.topRightCorner(d, d) = AC.transpose() * B;
  h.E.bottomLeftCorner(d, d) = BD.transpose() * A - i1 * Id;
  h.E.bottomRightCorner(d, d) = BD.transpose() * B;

  if (sigma_min(traj.B) < 1e-12) throw Error("hessian_phi: singular B_t");
  const AuxiliaryMatrices aux = auxiliary_matrices(traj);
  const CMat W = aux.Y.adjoint().inverse();  // Y^{-*}
  const CMat T = Id - aux.Z.transpose() * W;
  const Mat Binv_r = traj.B.inverse();
  const CMat Binv = Binv_r.cast<Complex>();
  h.Einv = CMat(2 * d, 2 * d);
  h.Einv.topLeftCorner(d, d) = 0.5 * T;
  h.Einv.topRightCorner(d, d) = 0.5 * i1 * (Id + aux.Z.transpose() * W);
  h.Einv.bottomLeftCorner(d, d) = Binv * (W - 0.5 * A * T);
  // Bottom-right from the first block row of E * Einv = I:
  // (AC^T A + I) Q + AC^T B S = 0  =>  S = -B^{-1}(AC^{-T} + A) Q.
  const CMat Q = h.Einv.topRightCorner(d, d);
  h.Einv.bottomRightCorner(d, d) =
      -Binv * (AC.transpose().inverse() + A) * Q;

  const CMat direct = h.E.inverse();
  if ((h.Einv - direct).norm() > 1e-8 * direct.norm())
    throw Error("hessian_phi: block inverse disagrees with direct solve");
  const Complex detE = h.E.determinant();
  const Complex expected =
      (d % 2 ? -1.0 : 1.0) * traj.det_M() * traj.B.determinant();
  if (std::abs(detE - expected) > 1e-8 * std::abs(expected))
    throw Error("hessian_phi: determinant factorization violated");
  return h;
}

int maslov_index(const TrajectoryRecord& traj) {
  const int d = traj.dim();
  if (sigma_min(traj.B) < 1e-10) throw Error("maslov_index: endpoint caustic");
  const HessianPhi h = hessian_phi(traj);

  // arg of the stationary-phase branch of det^{1/2}((1/i) d^2 Phi): principal
  // half-args of the eigenvalues (Re of the Hessian is PSD, so the pointwise
  // principal branch coincides with continuation from s -> 0+).
  Eigen::ComplexEigenSolver<CMat> es(h.E, false);
  double arg_r = 0;
  for (int i = 0; i < 2 * d; ++i) {
    const double a = std::arg(es.eigenvalues()[i]);
    if (a < -kPi / 2 - 1e-9 || a > kPi / 2 + 1e-9)
      throw Error("maslov_index: Hessian eigenvalue off the expected half-plane");
    arg_r += 0.5 * a;
  }

  // e^{-i pi theta/2} = i^d det^{1/2}M_t |det B|^{1/2} / det^{1/2}((1/i)Hess);
  // branch_arg carries the continuous arg of det M_s from s=0.
  const double theta_est =
      -(2.0 / kPi) * (kPi * d / 2.0 + 0.5 * traj.branch_arg - arg_r);
  const long rounded = std::lround(theta_est);
  if (std::abs(theta_est - rounded) * kPi / 2.0 > 0.1)
    throw Error("maslov_index: branch-continuation gap");
  if (traj.t > 0 &&
      rounded != static_cast<long>(traj.caustic_times.size()))
    throw Error("maslov_index: branch relation disagrees with caustic count");
  return static_cast<int>(rounded);
}

std::vector<ClassicalBranch> find_branches(const HamiltonianModel& model, double t,
                                           const Vec& x, const Vec& y, const Vec& p_lo,
                                           const Vec& p_hi, double tol,
                                           BranchSearchDiag* diag) {
  const int d = model.dim;
  if (x.size() != d || y.size() != d || p_lo.size() != d || p_hi.size() != d)
    throw Error("find_branches: dimension mismatch");
  if (!(tol > 0)) throw Error("find_branches: tol must be positive");
  double width_max = 0, width_min = 1e300;
  for (int i = 0; i < d; ++i) {
    if (!(p_hi[i] > p_lo[i])) throw Error("find_branches: empty search box");
    width_max = std::max(width_max, p_hi[i] - p_lo[i]);
    width_min = std::min(width_min, p_hi[i] - p_lo[i]);
  }

  // Injectivity radius estimate r0 = c R1 R2: R1 from ||B^{-1}|| and R2 from a
  // finite-difference second-derivative bound, both sampled on a coarse grid.
  const int ns = 9;
  double r1 = 1e300, k2 = 0;
  {
    std::vector<FlowEval> samples;
    std::vector<Vec> pts;
    std::vector<int> idx(d, 0);
    const std::size_t total = static_cast<std::size_t>(std::pow(ns, d));
    for (std::size_t flat = 0; flat < total; ++flat) {
      Vec p(d);
      std::size_t rest = flat;
      for (int i = 0; i < d; ++i) {
        const int k = static_cast<int>(rest % ns);
        rest /= ns;
        p[i] = p_lo[i] + (p_hi[i] - p_lo[i]) * k / (ns - 1);
      }
      pts.push_back(p);
      samples.push_back(eval_flow(model, y, p, t));
      const double s = sigma_min(samples.back().B);
      if (s > 1e-12) r1 = std::min(r1, s);
    }
    for (std::size_t flat = 0; flat < total; ++flat)
      for (int i = 0; i < d; ++i) {
        const double h = (p_hi[i] - p_lo[i]) / (ns - 1);
        Vec pp = pts[flat] + h * Vec::Unit(d, i), pm = pts[flat] - h * Vec::Unit(d, i);
        if (pp[i] > p_hi[i] + 1e-12 || pm[i] < p_lo[i] - 1e-12) continue;
        const Vec d2 = (eval_flow(model, y, pp, t).qt - 2 * samples[flat].qt +
                        eval_flow(model, y, pm, t).qt) /
                       (h * h);
        k2 = std::max(k2, d2.norm());
      }
  }
  if (r1 > 1e299) throw Error("find_branches: B_t singular across the search box");
  double r0 = k2 > 1e-12 ? 0.5 * r1 / k2 : width_max;
  r0 = std::clamp(r0, width_max / 400.0, width_min);

  std::vector<int> counts(d);
  std::size_t total_starts = 1;
  for (int i = 0; i < d; ++i) {
    counts[i] = std::max(2, static_cast<int>(std::ceil((p_hi[i] - p_lo[i]) / r0)) + 1);
    total_starts *= counts[i];
  }
  if (diag) {
    diag->starts = static_cast<int>(total_starts);
    diag->start_spacing = r0;
  }

  std::vector<Vec> roots;
  const double margin = 0.1 * width_max;
  for (std::size_t flat = 0; flat < total_starts; ++flat) {
    Vec p(d);
    std::size_t rest = flat;
    for (int i = 0; i < d; ++i) {
      const int k = static_cast<int>(rest % counts[i]);
      rest /= counts[i];
      p[i] = p_lo[i] + (p_hi[i] - p_lo[i]) * k / (counts[i] - 1);
    }
    FlowEval fe = eval_flow(model, y, p, t);
    double res = (fe.qt - x).norm();
    bool ok = false, stalled = false;
    for (int iter = 0; iter < 40 && !stalled; ++iter) {
      if (res <= tol) {
        ok = true;
        break;
      }
      if (sigma_min(fe.B) < 1e-12) break;
      const Vec step = fe.B.partialPivLu().solve(x - fe.qt);
      double lambda = 1.0;
      bool improved = false;
      for (int backtrack = 0; backtrack < 10; ++backtrack, lambda *= 0.5) {
        const Vec trial = p + lambda * step;
        bool inside = true;
        for (int i = 0; i < d; ++i)
          if (trial[i] < p_lo[i] - margin || trial[i] > p_hi[i] + margin) inside = false;
        if (!inside) continue;
        const FlowEval fe_trial = eval_flow(model, y, trial, t);
        const double res_trial = (fe_trial.qt - x).norm();
        if (res_trial < res) {
          p = trial;
          fe = fe_trial;
          res = res_trial;
          improved = true;
          break;
        }
      }
      if (!improved) stalled = true;
    }
    if (!ok || res > tol) {
      if (diag) ++diag->discarded_starts;
      continue;
    }
    bool in_box = true;
    for (int i = 0; i < d; ++i)
      if (p[i] < p_lo[i] - tol || p[i] > p_hi[i] + tol) in_box = false;
    if (!in_box) {
      if (diag) ++diag->discarded_starts;
      continue;
    }
    bool duplicate = false;
    for (const Vec& r : roots)
      if ((r - p).norm() < r0) duplicate = true;
    if (!duplicate) roots.push_back(p);
  }

  std::sort(roots.begin(), roots.end(), [](const Vec& a, const Vec& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
  });

  std::vector<ClassicalBranch> branches;
  for (const Vec& eta : roots) {
    TrajectoryRecord traj = integrate_flow(model, PhasePoint(y, eta), t, 1e-12);
    if (sigma_min(traj.B) < 1e-8) {
      if (diag) ++diag->degenerate_roots;
      continue;  // hypothesis violated: degenerate branch excluded
    }
    ClassicalBranch br;
    br.eta = eta;
    br.action = traj.action;
    br.mixed_hessian = -traj.B.inverse();
    if ((br.mixed_hessian * traj.B + Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
      throw Error("find_branches: mixed Hessian inversion failed");
    br.cond_B = 1.0 / sigma_min(traj.B);
    br.maslov = maslov_index(traj);
    br.traj = std::move(traj);
    branches.push_back(std::move(br));
  }
  return branches;
}

void compute_corrections(const HamiltonianModel& model, double t, const Vec& x,
                         ClassicalBranch& branch, int order) {
  if (order < 1) throw Error("compute_corrections: order must be >= 1");
  const int d = model.dim;
  const int n = 2 * d;
  const Vec& y = branch.traj.z0.q;
  const int jet_order = 6;
  const double h = 1e-3;  // flow derivatives are hbar-independent
  const int half = 4, npts = 2 * half + 1;

  // Flow evaluations on the stencil around z0 = (y, eta).
  const std::size_t total = static_cast<std::size_t>(std::pow(npts, n));
  std::vector<Complex> phase_vals(total), amp_vals(total);
  std::vector<std::vector<int>> offsets(total, std::vector<int>(n));
  const Complex center_pref = branch.traj.prefactor;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    Vec q0 = y, p0 = branch.eta;
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rest % npts) - half;
      rest /= npts;
      offsets[flat][i] = k;
      (i < d ? q0[i] : p0[i - d]) += k * h;
    }
    const TrajectoryRecord traj = integrate_flow(model, PhasePoint(q0, p0), t, 1e-12);
    phase_vals[flat] = hk_phase(traj, x, y);
    if (std::abs(std::arg(traj.prefactor / center_pref)) > kPi / 2)
      throw Error("compute_corrections: prefactor branch mismatch across stencil");
    amp_vals[flat] = traj.prefactor;
  }

  // Least-squares Taylor fit in the scaled offsets, degrees 0..6.
  Jet proto(n, jet_order);
  const int nterms = proto.num_terms();
  CMat design(total, nterms);
  for (std::size_t r = 0; r < total; ++r)
    for (int c = 0; c < nterms; ++c) {
      const std::vector<int>& alpha = proto.exponents(c);
      double v = 1;
      for (int i = 0; i < n; ++i)
        for (int e = 0; e < alpha[i]; ++e) v *= offsets[r][i];
      design(r, c) = v;
    }
  const auto qr = design.householderQr();
  const CVec phase_fit = qr.solve(Eigen::Map<CVec>(phase_vals.data(), total));
  const CVec amp_fit = qr.solve(Eigen::Map<CVec>(amp_vals.data(), total));

  Jet phase(n, jet_order), amp(n, jet_order);
  for (int c = 0; c < nterms; ++c) {
    int deg = 0;
    for (int i = 0; i < n; ++i) deg += proto.exponents(c)[i];
    phase.set_coeff_at(c, phase_fit[c] / std::pow(h, deg));
    amp.set_coeff_at(c, amp_fit[c] / std::pow(h, deg));
  }
  // Exact low orders: constant from the branch action, linear zero (critical
  // point), quadratic from the analytic Hessian blocks.
  const HessianPhi hess = hessian_phi(branch.traj);
  const CMat d2phi = Complex(0, 1) * hess.E;
  for (int c = 0; c < nterms; ++c) {
    const std::vector<int>& alpha = proto.exponents(c);
    int deg = 0, a = -1, b = -1;
    for (int i = 0; i < n; ++i) {
      deg += alpha[i];
      if (alpha[i] >= 1) {
        if (a < 0)
          a = i;
        else
          b = i;
      }
      if (alpha[i] == 2) b = i;
    }
    if (deg == 0) phase.set_coeff_at(c, Complex(branch.action, 0));
    if (deg == 1) phase.set_coeff_at(c, Complex(0));
    if (deg == 2) phase.set_coeff_at(c, d2phi(a, b) / (a == b ? 2.0 : 1.0));
  }
  amp.set_coeff_at(0, center_pref);

  const SpExpansion exp = sp_expansion(phase, amp, 1.0, order);
  const Complex q_branch = det_sqrt_branch(hess.E);
  Complex i_pow_d(1, 0);
  for (int i = 0; i < d; ++i) i_pow_d *= Complex(0, 1);
  const int theta = branch.maslov;
  const Complex factor = i_pow_d *
                         std::exp(Complex(0, kPi * theta / 2.0)) *
                         std::sqrt(std::abs(branch.traj.B.determinant())) / q_branch;
  branch.b_coeffs.clear();
  for (int k = 0; k < order; ++k)
    branch.b_coeffs.push_back(exp.terms[k] / exp.prefactor * factor);
}

VanVleckResult vanvleck_kernel(const std::vector<ClassicalBranch>& branches, double hbar,
                               int order, int dim) {
  if (order < 1) throw Error("vanvleck_kernel: order must be >= 1");
  if (!(hbar > 0)) throw Error("vanvleck_kernel: hbar must be positive");
  VanVleckResult result;
  if (branches.empty()) {
    result.no_classical_path = true;  // kernel is O(hbar^inf) here
    return result;
  }
  const Complex lead =
      std::pow(2 * kPi * hbar, -0.5 * dim) * std::exp(Complex(0, -kPi * dim / 4.0));
  for (const ClassicalBranch& br : branches) {
    Complex series(1, 0);  // b_0 = 1
    for (int k = 1; k < order; ++k) {
      if (static_cast<int>(br.b_coeffs.size()) <= k)
        throw Error("vanvleck_kernel: corrections not computed to requested order");
      series += std::pow(hbar, k) * br.b_coeffs[k];
    }
    const double amp = std::sqrt(std::abs(br.mixed_hessian.determinant()));
    result.value += std::exp(Complex(0, br.action / hbar - kPi * br.maslov / 2.0)) * amp *
                    series;
  }
  result.value *= lead;
  return result;
}

}  // namespace semiprop
