#include "semiprop/reference.hpp"

#include <cmath>
#include <vector>

#include <fftw3.h>

namespace semiprop {

Complex free_kernel(double t, const Vec& x, const Vec& y, double hbar) {
  if (t == 0) throw Error("free_kernel: t must be nonzero");
  const int d = static_cast<int>(x.size());
  if (y.size() != d) throw Error("free_kernel: dimension mismatch");
  const double mod = std::pow(2 * kPi * hbar * std::abs(t), -0.5 * d);
  const double branch = (t > 0 ? -1.0 : 1.0) * kPi * d / 4.0;
  return mod * std::exp(Complex(0, (x - y).squaredNorm() / (2 * hbar * t) + branch));
}

Complex mehler_kernel(double t, double x, double y, double omega, double hbar) {
  const double s = std::sin(omega * t);
  if (std::abs(s) < 1e-8) throw Error("mehler_kernel: caustic, |sin(omega t)| < 1e-8");
  const double mod = std::pow(2 * kPi * hbar * std::abs(s) / omega, -0.5);
  const long maslov = static_cast<long>(std::floor(omega * t / kPi));
  const double phase = omega * ((x * x + y * y) * std::cos(omega * t) - 2 * x * y) /
                           (2 * hbar * s) -
                       kPi / 4.0 - kPi * maslov / 2.0;
  return mod * std::exp(Complex(0, phase));
}

Complex hyperbolic_kernel(double t, double x, double y, double gamma, double hbar) {
  if (t == 0) throw Error("hyperbolic_kernel: t must be nonzero");
  const double sh = std::sinh(gamma * t);
  const double mod = std::pow(2 * kPi * hbar * std::abs(sh) / gamma, -0.5);
  const double branch = (t > 0 ? -1.0 : 1.0) * kPi / 4.0;
  const double phase =
      gamma * ((x * x + y * y) * std::cosh(gamma * t) - 2 * x * y) / (2 * hbar * sh);
  return mod * std::exp(Complex(0, phase + branch));
}

namespace {

struct FftPair {
  std::vector<Complex> storage;
  fftw_complex* buf = nullptr;
  fftw_plan fwd = nullptr, bwd = nullptr;

  explicit FftPair(const std::vector<int>& counts) {
    std::size_t n = 1;
    for (int c : counts) n *= static_cast<std::size_t>(c);
    storage.resize(n);
    buf = reinterpret_cast<fftw_complex*>(storage.data());
    std::vector<int> dims(counts.begin(), counts.end());
    fwd = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buf, buf,
                        FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buf, buf,
                        FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPair() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;
};

// Momentum of FFT mode `flat` (signed convention), row-major.
Vec mode_momentum(const WaveFunction& psi, std::size_t flat) {
  Vec p(psi.dim);
  for (int i = psi.dim - 1; i >= 0; --i) {
    int k = static_cast<int>(flat % psi.counts[i]);
    flat /= psi.counts[i];
    if (k >= psi.counts[i] / 2) k -= psi.counts[i];
    p[i] = 2 * kPi * psi.hbar * k / (psi.counts[i] * psi.spacing[i]);
  }
  return p;
}

void check_momentum_resolution(const WaveFunction& psi) {
  // Nyquist guard: spectral mass in the top 10% of modes must be negligible.
  const std::size_t n = psi.values.size();
  FftPair fft(psi.counts);
  for (std::size_t i = 0; i < n; ++i) {
    fft.buf[i][0] = psi.values[i].real();
    fft.buf[i][1] = psi.values[i].imag();
  }
  fftw_execute(fft.fwd);
  double total = 0, tail = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    const double m = fft.buf[flat][0] * fft.buf[flat][0] + fft.buf[flat][1] * fft.buf[flat][1];
    total += m;
    std::size_t rest = flat;
    for (int i = psi.dim - 1; i >= 0; --i) {
      int k = static_cast<int>(rest % psi.counts[i]);
      rest /= psi.counts[i];
      if (k >= psi.counts[i] / 2) k -= psi.counts[i];
      if (std::abs(k) > 0.45 * psi.counts[i]) {
        tail += m;
        break;
      }
    }
  }
  if (total > 0 && tail / total > 1e-8)
    throw Error("split_step_propagate: momentum support not resolved (Nyquist)");
}

// C-infinity taper: 1 on [0, a], 0 on [1, inf), smooth in between.
double smooth_taper(double s, double a) {
  if (s <= a) return 1.0;
  if (s >= 1.0) return 0.0;
  const double u = (s - a) / (1.0 - a);
  const double f1 = std::exp(-1.0 / (1.0 - u));
  const double f0 = std::exp(-1.0 / u);
  return f1 / (f0 + f1);
}

}  // namespace

WaveFunction split_step_propagate(const Potential& V, const WaveFunction& psi0, double t,
                                  int steps) {
  psi0.validate();
  if (steps < 1) throw Error("split_step_propagate: steps must be >= 1");
  if (boundary_mass(psi0) > 1e-8)
    throw Error("split_step_propagate: wave mass touches the grid boundary");
  check_momentum_resolution(psi0);

  const std::size_t n = psi0.values.size();
  const double dt = t / steps;
  const double hbar = psi0.hbar;

  std::vector<Complex> half_v(n), full_v(n), kin(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = V(psi0.point(i));
    half_v[i] = std::exp(Complex(0, -v * dt / (2 * hbar)));
    full_v[i] = half_v[i] * half_v[i];
    kin[i] = std::exp(Complex(0, -mode_momentum(psi0, i).squaredNorm() * dt / (2 * hbar)));
  }

  FftPair fft(psi0.counts);
  std::vector<Complex> psi(psi0.values);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) psi[i] *= half_v[i];
  for (int s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      fft.buf[i][0] = psi[i].real();
      fft.buf[i][1] = psi[i].imag();
    }
    fftw_execute(fft.fwd);
    for (std::size_t i = 0; i < n; ++i) {
      const Complex v = Complex(fft.buf[i][0], fft.buf[i][1]) * kin[i];
      fft.buf[i][0] = v.real();
      fft.buf[i][1] = v.imag();
    }
    fftw_execute(fft.bwd);
    const bool last = s + 1 == steps;
    for (std::size_t i = 0; i < n; ++i)
      psi[i] = Complex(fft.buf[i][0], fft.buf[i][1]) * inv_n * (last ? half_v[i] : full_v[i]);
  }

  WaveFunction out = psi0;
  out.values = std::move(psi);
  const double drift = std::abs(l2_norm(out) - l2_norm(psi0));
  if (drift > 1e-10 * std::max(1.0, l2_norm(psi0)))
    throw Error("split_step_propagate: mass drift exceeds tolerance");
  return out;
}

bool KernelColumn::certified(const Vec& eta) const {
  for (int i = 0; i < eta.size(); ++i)
    if (std::abs(eta[i]) > p_inner) return false;
  return true;
}

KernelColumn kernel_column(const Potential& V, double t, const Vec& y,
                           const WaveFunction& grid, int steps) {
  grid.validate();
  const int d = grid.dim;
  if (y.size() != d) throw Error("kernel_column: dimension mismatch");
  const double hbar = grid.hbar;
  double spacing_max = 0;
  for (int i = 0; i < d; ++i) spacing_max = std::max(spacing_max, grid.spacing[i]);
  const double w = 2.0 * spacing_max;  // deconvolved source Gaussian width

  // Hard band: where the Gaussian transform e^{-w^2 p^2 / 2 hbar^2} >= 1e-6;
  // smooth taper over the outer 30% keeps the truncation error superpolynomial.
  const double p_outer = hbar / w * std::sqrt(2.0 * std::log(1e6));
  const double p_inner = 0.7 * p_outer;

  // Band-limited delta at y, built directly in the Fourier domain.
  const std::size_t n = grid.size();
  FftPair fft(grid.counts);
  const double cell = grid.cell_volume();
  for (std::size_t flat = 0; flat < n; ++flat) {
    const Vec p = mode_momentum(grid, flat);
    double mask = 1.0;
    for (int i = 0; i < d; ++i) mask *= smooth_taper(std::abs(p[i]) / p_outer, 0.7);
    if (mask == 0.0) {
      fft.buf[flat][0] = fft.buf[flat][1] = 0;
      continue;
    }
    const Complex coeff =
        mask / (static_cast<double>(n) * cell) *
        std::exp(Complex(0, p.dot(grid.origin - y) / hbar));
    fft.buf[flat][0] = coeff.real();
    fft.buf[flat][1] = coeff.imag();
  }
  fftw_execute(fft.bwd);

  WaveFunction delta = grid;
  for (std::size_t i = 0; i < n; ++i)
    delta.values[i] = Complex(fft.buf[i][0], fft.buf[i][1]);

  KernelColumn result;
  result.column = split_step_propagate(V, delta, t, steps);
  result.p_inner = p_inner;
  result.p_outer = p_outer;
  return result;
}

Complex grid_value(const WaveFunction& psi, const Vec& x) {
  if (x.size() != psi.dim) throw Error("grid_value: dimension mismatch");
  std::size_t flat = 0;
  for (int i = 0; i < psi.dim; ++i) {
    const double u = (x[i] - psi.origin[i]) / psi.spacing[i];
    const long k = std::lround(u);
    if (std::abs(u - k) > 1e-9 || k < 0 || k >= psi.counts[i])
      throw Error("grid_value: point not on the grid");
    flat = flat * psi.counts[i] + static_cast<std::size_t>(k);
  }
  return psi.values[flat];
}

}  // namespace semiprop
