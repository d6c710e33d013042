#include "semiprop/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace semiprop {

namespace {

// State layout: [q(d), p(d), S, vec(J) row-major (2d x 2d)].
int state_size(int d) { return 2 * d + 1 + 4 * d * d; }

Vec pack(const PhasePoint& z, double action, const Mat& J) {
  const int d = z.dim();
  Vec y(state_size(d));
  y.head(d) = z.q;
  y.segment(d, d) = z.p;
  y[2 * d] = action;
  for (int i = 0; i < 2 * d; ++i)
    for (int j = 0; j < 2 * d; ++j) y[2 * d + 1 + i * 2 * d + j] = J(i, j);
  return y;
}

void unpack(const Vec& y, int d, PhasePoint& z, double& action, Mat& J) {
  z.q = y.head(d);
  z.p = y.segment(d, d);
  action = y[2 * d];
  J.resize(2 * d, 2 * d);
  for (int i = 0; i < 2 * d; ++i)
    for (int j = 0; j < 2 * d; ++j) J(i, j) = y[2 * d + 1 + i * 2 * d + j];
}

Vec rhs(const HamiltonianModel& model, double s, const Vec& y) {
  const int d = model.dim;
  PhasePoint z;
  double action;
  Mat J;
  unpack(y, d, z, action, J);

  const Vec g = model.grad(s, z);
  const Mat H = model.hess(s, z);
  if (!g.allFinite() || !H.allFinite())
    throw Error("integrate_flow: non-finite derivative values");

  // Linearization K = [[H_pq, H_pp], [-H_qq, -H_qp]] acting on tangent vectors.
  Mat K(2 * d, 2 * d);
  K.topLeftCorner(d, d) = H.bottomLeftCorner(d, d);
  K.topRightCorner(d, d) = H.bottomRightCorner(d, d);
  K.bottomLeftCorner(d, d) = -H.topLeftCorner(d, d);
  K.bottomRightCorner(d, d) = -H.topRightCorner(d, d);

  Vec dy(y.size());
  dy.head(d) = g.tail(d);              // dq/ds = dH/dp
  dy.segment(d, d) = -g.head(d);       // dp/ds = -dH/dq
  dy[2 * d] = z.p.dot(g.tail(d)) - model.eval(s, z);  // dS/ds = p . dH/dp - H
  const Mat dJ = K * J;
  for (int i = 0; i < 2 * d; ++i)
    for (int j = 0; j < 2 * d; ++j) dy[2 * d + 1 + i * 2 * d + j] = dJ(i, j);
  return dy;
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

struct StepResult {
  Vec y;
  double err;
};

StepResult rk45_step(const HamiltonianModel& m, double s, const Vec& y, double h) {
  const Vec k1 = rhs(m, s, y);
  const Vec k2 = rhs(m, s + c2 * h, y + h * (a21 * k1));
  const Vec k3 = rhs(m, s + c3 * h, y + h * (a31 * k1 + a32 * k2));
  const Vec k4 = rhs(m, s + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vec k5 = rhs(m, s + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vec k6 = rhs(m, s + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  Vec y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  const Vec k7 = rhs(m, s + h, y5);
  const Vec errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

  double err2 = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double sc = 1.0 + std::max(std::abs(y[i]), std::abs(y5[i]));
    const double e = errv[i] / sc;
    err2 += e * e;
  }
  return {std::move(y5), std::sqrt(err2 / y.size())};
}

// Advance state in place from s0 to s1, calling on_accept(s, y) after every
// accepted step.  |h| never exceeds max_step.
template <class F>
void integrate_segment(const HamiltonianModel& m, Vec& y, double s0, double s1, double tol,
                       double max_step, F&& on_accept) {
  if (s0 == s1) return;
  const double dir = s1 > s0 ? 1.0 : -1.0;
  double s = s0;
  double h = dir * std::min(max_step, std::max(1e-4, std::abs(s1 - s0) / 16.0));
  int rejects_in_a_row = 0;
  while (dir * (s1 - s) > 0) {
    // Snap to the endpoint once the remainder is at rounding level; otherwise
    // the clamped final step can leave a ~1 ulp sliver that underflows below.
    if (std::abs(s1 - s) < 1e-13 * std::max(1.0, std::abs(s1))) break;
    if (std::abs(h) > std::abs(s1 - s)) h = s1 - s;
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(s)))
      throw Error("integrate_flow: step-size underflow at s = " + std::to_string(s) +
                  " (possible finite-time blowup); last good state retained");
    StepResult st = rk45_step(m, s, y, h);
    const double err = st.err / tol;
    if (err <= 1.0) {
      s += h;
      y = std::move(st.y);
      on_accept(s, y);
      rejects_in_a_row = 0;
      const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 1.0, 5.0);
      h = dir * std::min(max_step, std::abs(h) * fac);
    } else {
      const double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      h *= fac;
      if (++rejects_in_a_row > 200)
        throw Error("integrate_flow: repeated step rejection (non-finite or stiff dynamics)");
    }
  }
}

Complex det_hk_matrix(const Mat& A, const Mat& B, const Mat& C, const Mat& D) {
  const CMat M = (C - B).cast<Complex>() - Complex(0, 1) * (A + D).cast<Complex>();
  return M.determinant();
}

FlowCheckpoint make_checkpoint(int d, double s, const Vec& y) {
  FlowCheckpoint cp;
  cp.s = s;
  Mat J;
  unpack(y, d, cp.z, cp.action, J);
  cp.A = J.topLeftCorner(d, d);
  cp.B = J.topRightCorner(d, d);
  cp.C = J.bottomLeftCorner(d, d);
  cp.D = J.bottomRightCorner(d, d);
  cp.det_M = det_hk_matrix(cp.A, cp.B, cp.C, cp.D);
  return cp;
}

double det_B_at(const HamiltonianModel& m, const FlowCheckpoint& from, double s, double tol) {
  const int d = m.dim;
  Mat J(2 * d, 2 * d);
  J.topLeftCorner(d, d) = from.A;
  J.topRightCorner(d, d) = from.B;
  J.bottomLeftCorner(d, d) = from.C;
  J.bottomRightCorner(d, d) = from.D;
  Vec y = pack(from.z, from.action, J);
  integrate_segment(m, y, from.s, s, tol, 0.25, [](double, const Vec&) {});
  PhasePoint z;
  double action;
  unpack(y, d, z, action, J);
  return J.topRightCorner(d, d).determinant();
}

}  // namespace

CMat TrajectoryRecord::hk_matrix() const {
  return (C - B).cast<Complex>() - Complex(0, 1) * (A + D).cast<Complex>();
}

Complex TrajectoryRecord::det_M() const { return hk_matrix().determinant(); }

double TrajectoryRecord::symplectic_residual() const {
  const int d = dim();
  const Mat I = Mat::Identity(d, d);
  double r = (A.transpose() * C - C.transpose() * A).cwiseAbs().maxCoeff();
  r = std::max(r, (B.transpose() * D - D.transpose() * B).cwiseAbs().maxCoeff());
  r = std::max(r, (A.transpose() * D - C.transpose() * B - I).cwiseAbs().maxCoeff());
  return r;
}

double TrajectoryRecord::tangent_det_error() const {
  const int d = dim();
  Mat J(2 * d, 2 * d);
  J.topLeftCorner(d, d) = A;
  J.topRightCorner(d, d) = B;
  J.bottomLeftCorner(d, d) = C;
  J.bottomRightCorner(d, d) = D;
  return std::abs(J.determinant() - 1.0);
}

TrajectoryRecord integrate_flow(const HamiltonianModel& model, const PhasePoint& z0, double t,
                                double tol) {
  if (tol <= 0) throw Error("integrate_flow: tol must be positive");
  if (model.dim != z0.dim()) throw Error("integrate_flow: dimension mismatch");
  const int d = model.dim;

  double max_step = 0.25;
  for (int attempt = 0;; ++attempt) {
    TrajectoryRecord traj;
    traj.t = t;
    traj.z0 = z0;
    traj.tol = tol;

    Vec y = pack(z0, 0.0, Mat::Identity(2 * d, 2 * d));
    traj.checkpoints.push_back(make_checkpoint(d, 0.0, y));
    integrate_segment(model, y, 0.0, t, tol, max_step, [&](double s, const Vec& ys) {
      traj.checkpoints.push_back(make_checkpoint(d, s, ys));
    });

    const FlowCheckpoint& last = traj.checkpoints.back();
    traj.zt = last.z;
    traj.action = last.action;
    traj.A = last.A;
    traj.B = last.B;
    traj.C = last.C;
    traj.D = last.D;

    // Continuous branch of arg det M_s, starting from the principal argument
    // of det M_0 = (-2i)^d.
    double arg = std::arg(std::pow(Complex(0, -2), d));
    bool too_coarse = false;
    for (size_t k = 1; k < traj.checkpoints.size(); ++k) {
      const double step =
          std::arg(traj.checkpoints[k].det_M / traj.checkpoints[k - 1].det_M);
      if (std::abs(step) >= kPi / 4) {
        too_coarse = true;
        break;
      }
      arg += step;
    }
    if (too_coarse) {
      if (attempt >= 10)
        throw Error("integrate_flow: cannot resolve prefactor branch (arg det M moves too fast)");
      max_step *= 0.5;
      continue;
    }
    traj.branch_arg = arg;
    traj.prefactor = std::sqrt(std::abs(last.det_M)) * std::exp(Complex(0, arg / 2.0));

    // Caustics: sign changes of det B_s between checkpoints, bisection-refined.
    for (size_t k = 1; k < traj.checkpoints.size(); ++k) {
      const double f0 = traj.checkpoints[k - 1].B.determinant();
      const double f1 = traj.checkpoints[k].B.determinant();
      if (f0 == 0.0 || f0 * f1 >= 0.0) continue;
      double lo = traj.checkpoints[k - 1].s, hi = traj.checkpoints[k].s;
      double flo = f0;
      for (int it = 0; it < 48 && std::abs(hi - lo) > 1e-12 * (1.0 + std::abs(t)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = det_B_at(model, traj.checkpoints[k - 1], mid, tol);
        if (flo * fm <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      traj.caustic_times.push_back(0.5 * (lo + hi));
    }
    return traj;
  }
}

Complex hk_prefactor(const TrajectoryRecord& traj) {
  if (traj.checkpoints.size() < 1) throw Error("hk_prefactor: trajectory has no checkpoints");
  double arg = std::arg(std::pow(Complex(0, -2), traj.dim()));
  for (size_t k = 1; k < traj.checkpoints.size(); ++k) {
    const double step = std::arg(traj.checkpoints[k].det_M / traj.checkpoints[k - 1].det_M);
    if (std::abs(step) >= kPi / 2)
      throw Error("hk_prefactor: checkpoint spacing too coarse for branch tracking; "
                  "re-integrate with denser output");
    arg += step;
  }
  return std::sqrt(std::abs(traj.checkpoints.back().det_M)) * std::exp(Complex(0, arg / 2.0));
}

AuxiliaryMatrices auxiliary_matrices(const TrajectoryRecord& traj) {
  const int d = traj.dim();
  const Complex i1(0, 1);
  AuxiliaryMatrices aux;
  aux.Y = (traj.A + traj.D).cast<Complex>() + i1 * (traj.B - traj.C).cast<Complex>();
  aux.Z = (traj.A - traj.D).cast<Complex>() + i1 * (traj.B + traj.C).cast<Complex>();
  const CMat resid =
      aux.Y.adjoint() * aux.Y - aux.Z.adjoint() * aux.Z - 4.0 * CMat::Identity(d, d);
  if (resid.cwiseAbs().maxCoeff() > 1e-6)
    throw Error("auxiliary_matrices: Y*Y - Z*Z = 4I violated (symplecticity failure)");
  Eigen::JacobiSVD<CMat> svd(aux.Y);
  if (svd.singularValues().minCoeff() < 2.0 - 1e-6)
    throw Error("auxiliary_matrices: smallest singular value of Y below 2");
  return aux;
}

OmegaEstimate estimate_omega(const HamiltonianModel& model, double T,
                             const std::vector<PhasePoint>& samples, double tol) {
  if (samples.empty() || T <= 0) throw Error("estimate_omega: need samples and T > 0");
  const int d = model.dim;
  const int nt = 64;
  OmegaEstimate est;
  est.times.resize(nt + 1);
  est.omega.assign(nt + 1, 1.0);
  for (int k = 0; k <= nt; ++k) est.times[k] = T * k / nt;

  for (const auto& z : samples) {
    Vec y = pack(z, 0.0, Mat::Identity(2 * d, 2 * d));
    for (int k = 1; k <= nt; ++k) {
      integrate_segment(model, y, est.times[k - 1], est.times[k], tol, 0.25,
                        [](double, const Vec&) {});
      PhasePoint zt;
      double action;
      Mat J;
      unpack(y, d, zt, action, J);
      Eigen::JacobiSVD<Mat> svd(J);
      est.omega[k] = std::max(est.omega[k], svd.singularValues().maxCoeff());
    }
  }
  for (int k = 1; k <= nt; ++k) est.omega[k] = std::max(est.omega[k], est.omega[k - 1]);

  // Log-linear fit on the tail t >= T/2.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = 0; k <= nt; ++k) {
    if (est.times[k] < T / 2) continue;
    const double x = est.times[k], yv = std::log(est.omega[k]);
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
    ++n;
  }
  est.gamma_fit = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
  return est;
}

void dump_trajectory_csv(const TrajectoryRecord& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("dump_trajectory_csv: cannot open " + path);
  const int d = traj.dim();
  out << "s";
  for (int i = 0; i < d; ++i) out << ",q" << i;
  for (int i = 0; i < d; ++i) out << ",p" << i;
  out << ",S";
  for (const char* b : {"A", "B", "C", "D"})
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out << "," << b << i << j;
  out << ",re_prefactor,im_prefactor\n";
  out.precision(17);

  double arg = std::arg(std::pow(Complex(0, -2), d));
  Complex prev = traj.checkpoints.front().det_M;
  for (const auto& cp : traj.checkpoints) {
    if (&cp != &traj.checkpoints.front()) {
      arg += std::arg(cp.det_M / prev);
      prev = cp.det_M;
    }
    const Complex pf = std::sqrt(std::abs(cp.det_M)) * std::exp(Complex(0, arg / 2.0));
    out << cp.s;
    for (int i = 0; i < d; ++i) out << "," << cp.z.q[i];
    for (int i = 0; i < d; ++i) out << "," << cp.z.p[i];
    out << "," << cp.action;
    for (const Mat* b : {&cp.A, &cp.B, &cp.C, &cp.D})
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out << "," << (*b)(i, j);
    out << "," << pf.real() << "," << pf.imag() << "\n";
  }
}

}  // namespace semiprop
