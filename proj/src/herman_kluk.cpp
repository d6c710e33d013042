#include "semiprop/herman_kluk.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <sstream>
#include <thread>

#include <fftw3.h>

namespace semiprop {

PhaseSpaceQuadrature tensor_quadrature(const Vec& q_lo, const Vec& q_hi, const Vec& p_lo,
                                       const Vec& p_hi, double spacing) {
  const int d = static_cast<int>(q_lo.size());
  if (q_hi.size() != d || p_lo.size() != d || p_hi.size() != d)
    throw Error("tensor_quadrature: dimension mismatch");
  if (!(spacing > 0)) throw Error("tensor_quadrature: spacing must be positive");

  std::vector<double> lo(2 * d), hi(2 * d);
  for (int i = 0; i < d; ++i) {
    lo[i] = q_lo[i];
    hi[i] = q_hi[i];
    lo[d + i] = p_lo[i];
    hi[d + i] = p_hi[i];
  }
  std::vector<int> counts(2 * d);
  std::vector<double> step(2 * d);
  double weight = 1.0;
  std::size_t total = 1;
  for (int i = 0; i < 2 * d; ++i) {
    if (!(hi[i] > lo[i])) throw Error("tensor_quadrature: empty box");
    counts[i] = std::max(2, static_cast<int>(std::ceil((hi[i] - lo[i]) / spacing)));
    step[i] = (hi[i] - lo[i]) / counts[i];
    weight *= step[i];
    total *= counts[i];
  }
  if (total > (std::size_t{1} << 24)) throw Error("tensor_quadrature: node count too large");

  PhaseSpaceQuadrature quad;
  quad.nodes.reserve(total);
  quad.weights.assign(total, weight);
  quad.on_boundary.reserve(total);
  std::ostringstream spec;
  spec << "tensor d=" << d << " spacing=" << spacing << " counts=";
  for (int i = 0; i < 2 * d; ++i) spec << (i ? "x" : "") << counts[i];
  quad.spec = spec.str();

  std::vector<int> idx(2 * d, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vec q(d), p(d);
    bool edge = false;
    for (int i = 0; i < 2 * d; ++i) {
      const double c = lo[i] + (idx[i] + 0.5) * step[i];
      (i < d ? q[i] : p[i - d]) = c;
      if (idx[i] == 0 || idx[i] == counts[i] - 1) edge = true;
    }
    quad.nodes.emplace_back(q, p);
    quad.on_boundary.push_back(edge);
    for (int i = 2 * d - 1; i >= 0; --i) {
      if (++idx[i] < counts[i]) break;
      idx[i] = 0;
    }
  }
  return quad;
}

PhaseSpaceQuadrature suggest_quadrature(double hbar, const Vec& q_center, double q_radius,
                                        const Vec& p_center, double p_radius) {
  const int d = static_cast<int>(q_center.size());
  const Vec ones = Vec::Ones(d);
  return tensor_quadrature(q_center - q_radius * ones, q_center + q_radius * ones,
                           p_center - p_radius * ones, p_center + p_radius * ones,
                           std::sqrt(hbar) / 3.0);
}

Complex hk_phase(const TrajectoryRecord& traj, const Vec& x, const Vec& y) {
  const Vec& q = traj.z0.q;
  const Vec& p = traj.z0.p;
  const Vec& qt = traj.zt.q;
  const Vec& pt = traj.zt.p;
  const double re = traj.action + pt.dot(x - qt) - p.dot(y - q);
  const double im = 0.5 * ((x - qt).squaredNorm() + (y - q).squaredNorm());
  return Complex(re, im);
}

std::vector<TrajectoryRecord> compute_node_trajectories(const HamiltonianModel& model,
                                                        const PhaseSpaceQuadrature& quad,
                                                        double t, double tol) {
  std::vector<TrajectoryRecord> trajs(quad.nodes.size());
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned nthreads =
      std::min<std::size_t>(std::min<unsigned>(hw, 16), (quad.nodes.size() + 63) / 64);
  if (nthreads <= 1) {
    for (std::size_t k = 0; k < quad.nodes.size(); ++k)
      trajs[k] = integrate_flow(model, quad.nodes[k], t, tol);
    return trajs;
  }
  std::vector<std::thread> workers;
  std::exception_ptr failure;
  std::mutex fail_mutex;
  for (unsigned w = 0; w < nthreads; ++w)
    workers.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < quad.nodes.size(); k += nthreads)
          trajs[k] = integrate_flow(model, quad.nodes[k], t, tol);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  for (auto& th : workers) th.join();
  if (failure) std::rethrow_exception(failure);
  return trajs;
}

namespace {

double theta_value(const ThetaMultiplier* theta, const Vec& p) {
  if (!theta) return 1.0;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] < theta->p_lo[i] || p[i] > theta->p_hi[i]) return 0.0;
  return theta->theta(p);
}

Complex hk_normalization(int d) {
  // c_d = i^{d/2}, fixed by the t=0 identity calibration.
  return std::exp(Complex(0, kPi * d / 4.0));
}

}  // namespace

Complex hk_kernel(const HamiltonianModel& model, double hbar, double t, const Vec& x,
                  const Vec& y, const PhaseSpaceQuadrature& quad, const ThetaMultiplier* theta,
                  double tol, const std::vector<TrajectoryRecord>* cache, HkReport* report) {
  const int d = model.dim;
  if (x.size() != d || y.size() != d) throw Error("hk_kernel: dimension mismatch");
  if (!(hbar > 0)) throw Error("hk_kernel: hbar must be positive");

  std::vector<TrajectoryRecord> local;
  if (!cache) {
    local = compute_node_trajectories(model, quad, t);
    cache = &local;
  }
  if (cache->size() != quad.nodes.size()) throw Error("hk_kernel: cache size mismatch");

  Complex sum(0);
  double abs_total = 0, abs_edge = 0;
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
    const double th = theta_value(theta, quad.nodes[k].p);
    if (th == 0.0) continue;
    const TrajectoryRecord& traj = (*cache)[k];
    const Complex phi = hk_phase(traj, x, y);
    if (phi.imag() < -1e-12) throw Error("hk_kernel: Im Phi negative");
    if (phi.imag() / hbar > 46.0) continue;  // e^{-46} below double noise
    const Complex term =
        quad.weights[k] * std::exp(Complex(0, 1) * phi / hbar) * traj.prefactor * th;
    sum += term;
    const double a = std::abs(term);
    abs_total += a;
    if (quad.on_boundary[k]) abs_edge += a;
  }

  const double edge_fraction = abs_total > 0 ? abs_edge / abs_total : 0.0;
  if (report) {
    report->boundary_fraction = edge_fraction;
    report->coverage_warning = edge_fraction > tol;
  }
  return hk_normalization(d) * std::pow(2 * kPi * hbar, -1.5 * d) * sum;
}

WaveFunction propagate_hk(const HamiltonianModel& model, const WaveFunction& psi0, double t,
                          const PhaseSpaceQuadrature& quad, const ThetaMultiplier* theta,
                          int threads, HkReport* report) {
  psi0.validate();
  const int d = model.dim;
  if (psi0.dim != d) throw Error("propagate_hk: dimension mismatch");
  const double hbar = psi0.hbar;

  const std::vector<TrajectoryRecord> trajs = compute_node_trajectories(model, quad, t);

  // Per-node overlap with psi0, then a weighted amplitude reused for every x.
  struct NodeTerm {
    Vec qt, pt;
    double action;
    Complex amp;
    bool edge;
  };
  std::vector<NodeTerm> terms;
  terms.reserve(quad.nodes.size());
  double amp_total = 0, amp_edge = 0;
  for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
    const double th = theta_value(theta, quad.nodes[k].p);
    if (th == 0.0) continue;
    const Vec& qk = quad.nodes[k].q;
    const Vec& pk = quad.nodes[k].p;
    Complex overlap(0);
    for (std::size_t i = 0; i < psi0.values.size(); ++i) {
      if (psi0.values[i] == Complex(0)) continue;
      const Vec y = psi0.point(i);
      const Vec dy = y - qk;
      const double decay = dy.squaredNorm() / (2 * hbar);
      if (decay > 46.0) continue;
      overlap += std::exp(Complex(-decay, -pk.dot(dy) / hbar)) * psi0.values[i];
    }
    overlap *= psi0.cell_volume();
    NodeTerm nt;
    nt.qt = trajs[k].zt.q;
    nt.pt = trajs[k].zt.p;
    nt.action = trajs[k].action;
    nt.amp = quad.weights[k] * overlap * trajs[k].prefactor * th;
    nt.edge = quad.on_boundary[k];
    const double a = std::abs(nt.amp);
    amp_total += a;
    if (nt.edge) amp_edge += a;
    if (a > 0) terms.push_back(std::move(nt));
  }
  if (report) {
    report->boundary_fraction = amp_total > 0 ? amp_edge / amp_total : 0.0;
    report->coverage_warning = report->boundary_fraction > 1e-6;
  }

  WaveFunction out = psi0;
  const Complex scale = hk_normalization(d) * std::pow(2 * kPi * hbar, -1.5 * d);
  auto eval_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vec x = out.point(i);
      Complex sum(0);
      for (const NodeTerm& nt : terms) {
        const Vec dx = x - nt.qt;
        const double decay = dx.squaredNorm() / (2 * hbar);
        if (decay > 46.0) continue;
        sum += nt.amp * std::exp(Complex(-decay, (nt.action + nt.pt.dot(dx)) / hbar));
      }
      out.values[i] = scale * sum;
    }
  };

  const std::size_t n = out.values.size();
  unsigned nthreads = threads > 0 ? static_cast<unsigned>(threads)
                                  : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min<std::size_t>(std::min<unsigned>(nthreads, 16), std::max<std::size_t>(1, n / 64));
  if (nthreads <= 1) {
    eval_range(0, n);
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (unsigned w = 0; w < nthreads; ++w)
      workers.emplace_back(eval_range, w * chunk, std::min(n, (w + 1) * chunk));
    for (auto& th : workers) th.join();
  }
  return out;
}

WaveFunction apply_theta(const WaveFunction& psi, const ThetaMultiplier& theta) {
  psi.validate();
  const int d = psi.dim;
  if (theta.p_lo.size() != d || theta.p_hi.size() != d)
    throw Error("apply_theta: support box dimension mismatch");
  for (int i = 0; i < d; ++i) {
    const double p_max = std::max(std::abs(theta.p_lo[i]), std::abs(theta.p_hi[i]));
    if (kPi * psi.hbar / psi.spacing[i] <= p_max)
      throw Error("apply_theta: grid Nyquist momentum below theta support");
  }

  const std::size_t n = psi.values.size();
  std::vector<Complex> storage(psi.values);
  fftw_complex* buf = reinterpret_cast<fftw_complex*>(storage.data());
  std::vector<int> dims(psi.counts.begin(), psi.counts.end());
  fftw_plan fwd = fftw_plan_dft(d, dims.data(), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft(d, dims.data(), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);

  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t rest = flat;
    Vec p(d);
    for (int i = d - 1; i >= 0; --i) {
      int k = static_cast<int>(rest % psi.counts[i]);
      rest /= psi.counts[i];
      if (k >= psi.counts[i] / 2) k -= psi.counts[i];
      p[i] = 2 * kPi * psi.hbar * k / (psi.counts[i] * psi.spacing[i]);
    }
    const double th = theta_value(&theta, p);
    buf[flat][0] *= th;
    buf[flat][1] *= th;
  }

  fftw_execute(bwd);
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);

  WaveFunction out = psi;
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = Complex(buf[i][0], buf[i][1]) / static_cast<double>(n);
  return out;
}

}  // namespace semiprop
