#include "doctest.h"
#include "semiprop/reference.hpp"

#include <cmath>

using namespace semiprop;

namespace {

Vec vec1(double x) {
  Vec v(1);
  v << x;
  return v;
}

WaveFunction line_grid(double hbar, double lo, double hi, int n) {
  Vec origin = vec1(lo), spacing = vec1((hi - lo) / n);
  return make_grid(1, hbar, origin, spacing, {n});
}

}  // namespace

TEST_CASE("free kernel closed form") {
  const double hbar = 0.2, t = 1.5;
  const Complex k = free_kernel(t, vec1(1.0), vec1(0.2), hbar);
  const double amp = 1.0 / std::sqrt(2 * kPi * hbar * t);
  const double phase = 0.64 / (2 * hbar * t) - kPi / 4;
  CHECK(std::abs(k - amp * std::exp(Complex(0, phase))) < 1e-12);
  // Negative times: conjugate branch.
  const Complex km = free_kernel(-t, vec1(1.0), vec1(0.2), hbar);
  CHECK(std::abs(km - std::conj(k)) < 1e-12);
}

TEST_CASE("Mehler kernel at the quarter period is the Fourier kernel") {
  const double hbar = 0.1;
  const double x = 0.6, y = -0.3;
  const Complex k = mehler_kernel(kPi / 2, x, y, 1.0, hbar);
  const Complex want =
      std::exp(Complex(0, -x * y / hbar - kPi / 4)) / std::sqrt(2 * kPi * hbar);
  CHECK(std::abs(k - want) < 1e-12);
  CHECK_THROWS_AS(mehler_kernel(kPi, 0.1, 0.2, 1.0, hbar), Error);  // caustic
}

TEST_CASE("Mehler approaches the free kernel at short times") {
  const double hbar = 0.1, t = 1e-3;
  const Complex m = mehler_kernel(t, 0.31, 0.3, 1.0, hbar);
  const Complex f = free_kernel(t, vec1(0.31), vec1(0.3), hbar);
  // Difference is O((x^2+y^2) t / hbar) in the phase.
  CHECK(std::abs(m - f) < 1e-3 * std::abs(f));
}

TEST_CASE("hyperbolic kernel reduces to free as gamma -> 0") {
  const double hbar = 0.1, t = 0.8;
  const Complex h = hyperbolic_kernel(t, 0.5, -0.2, 1e-6, hbar);
  const Complex f = free_kernel(t, vec1(0.5), vec1(-0.2), hbar);
  CHECK(std::abs(h - f) < 1e-8 * std::abs(f));
}

TEST_CASE("split step reproduces the free Gaussian spread") {
  const double hbar = 0.1, t = 1.0;
  const WaveFunction grid = line_grid(hbar, -12.0, 12.0, 512);
  const WaveFunction psi0 = gaussian_packet(grid, vec1(0.0), vec1(0.5));
  const WaveFunction psi = split_step_propagate([](const Vec&) { return 0.0; }, psi0, t, 200);
  // Exact evolution of the HK-width Gaussian: sigma^2 -> hbar (1 + i t).
  double max_err = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double x = psi.point(i)[0];
    const Complex s2 = hbar * Complex(1.0, t);
    const Complex arg = -(x - 0.5 * t) * (x - 0.5 * t) / (2.0 * s2) +
                        Complex(0, (0.5 * x - 0.125 * t) / hbar);
    const Complex want = std::pow(kPi * hbar, -0.25) * std::sqrt(hbar / s2) * std::exp(arg);
    max_err = std::max(max_err, std::abs(psi.values[i] - want));
  }
  CHECK(max_err < 1e-6);
  CHECK(l2_norm(psi) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("split step sees the harmonic revival") {
  const double hbar = 0.1;
  const WaveFunction grid = line_grid(hbar, -10.0, 10.0, 512);
  const WaveFunction psi0 = gaussian_packet(grid, vec1(0.8), vec1(0.0));
  const WaveFunction psi = split_step_propagate(
      [](const Vec& q) { return 0.5 * q[0] * q[0]; }, psi0, 2 * kPi, 2000);
  // Full period: psi = e^{-i omega t / 2} psi0 = -psi0.
  double max_err = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    max_err = std::max(max_err, std::abs(psi.values[i] + psi0.values[i]));
  }
  CHECK(max_err < 1e-4);
}

TEST_CASE("split step self-converges at second order") {
  const double hbar = 0.1, t = 1.0;
  const WaveFunction grid = line_grid(hbar, -10.0, 10.0, 256);
  const WaveFunction psi0 = gaussian_packet(grid, vec1(0.5), vec1(0.3));
  const Potential V = [](const Vec& q) { return 0.5 * q[0] * q[0] + 0.1 * std::pow(q[0], 4); };
  const WaveFunction coarse = split_step_propagate(V, psi0, t, 100);
  const WaveFunction mid = split_step_propagate(V, psi0, t, 200);
  const WaveFunction fine = split_step_propagate(V, psi0, t, 800);
  double e_coarse = 0, e_mid = 0;
  for (std::size_t i = 0; i < psi0.size(); ++i) {
    e_coarse = std::max(e_coarse, std::abs(coarse.values[i] - fine.values[i]));
    e_mid = std::max(e_mid, std::abs(mid.values[i] - fine.values[i]));
  }
  CHECK(e_mid < 0.30 * e_coarse);  // O(dt^2): ratio ~ 0.25
}

TEST_CASE("kernel column for V = 0 matches the free kernel") {
  const double hbar = 0.1, t = 2.0;
  const WaveFunction grid = line_grid(hbar, -16.0, 16.0, 1024);
  const KernelColumn col =
      kernel_column([](const Vec&) { return 0.0; }, t, vec1(0.0), grid, 1024);
  for (double x : {0.5, 1.0, -0.25}) {
    const Complex got = grid_value(col.column, vec1(x));
    const Complex want = free_kernel(t, vec1(x), vec1(0.0), hbar);
    const double eta = x / t;  // classical momentum of the connecting path
    REQUIRE(col.certified(vec1(eta)));
    CHECK(std::abs(got - want) < 1e-3 * std::abs(want));
  }
}

TEST_CASE("grid_value requires an on-grid point") {
  const WaveFunction grid = line_grid(0.1, -1.0, 1.0, 16);
  WaveFunction psi = grid;
  psi.values.assign(psi.size(), Complex(1));
  CHECK(grid_value(psi, vec1(-1.0 + 3 * 0.125)) == Complex(1));
  CHECK_THROWS_AS(grid_value(psi, vec1(0.01)), Error);
}
