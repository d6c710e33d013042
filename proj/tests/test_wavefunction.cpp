#include "doctest.h"
#include "semiprop/wavefunction.hpp"

#include <cmath>
#include <cstdio>

using namespace semiprop;

namespace {

WaveFunction packet_1d(double hbar, double q0, double p0) {
  Vec origin(1), spacing(1), q(1), p(1);
  origin << -10.0;
  spacing << 0.05;
  q << q0;
  p << p0;
  const WaveFunction grid = make_grid(1, hbar, origin, spacing, {400});
  return gaussian_packet(grid, q, p);
}

}  // namespace

TEST_CASE("grid bookkeeping") {
  Vec origin(2), spacing(2);
  origin << -1.0, -2.0;
  spacing << 0.5, 1.0;
  const WaveFunction g = make_grid(2, 0.1, origin, spacing, {4, 3});
  CHECK(g.size() == 12);
  CHECK(g.cell_volume() == doctest::Approx(0.5));
  const Vec x = g.point(1 * 3 + 2);  // (i, j) = (1, 2)
  CHECK(x[0] == doctest::Approx(-0.5));
  CHECK(x[1] == doctest::Approx(0.0));
}

TEST_CASE("gaussian packet is normalized with the right mean momentum") {
  const double hbar = 0.1;
  const WaveFunction psi = packet_1d(hbar, 0.3, 0.8);
  CHECK(l2_norm(psi) == doctest::Approx(1.0).epsilon(1e-8));

  // <psi | x | psi> = q0.
  Complex xbar = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    xbar += std::conj(psi.values[i]) * psi.point(i)[0] * psi.values[i];
  }
  xbar *= psi.cell_volume();
  CHECK(xbar.real() == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(boundary_mass(psi) < 1e-12);
}

TEST_CASE("inner product of displaced packets matches the closed form") {
  const double hbar = 0.1;
  const WaveFunction a = packet_1d(hbar, 0.0, 0.0);
  const WaveFunction b = packet_1d(hbar, 0.4, 0.0);
  // |<a|b>| = exp(-|dq|^2 / (4 hbar)) for equal widths.
  CHECK(std::abs(inner_product(a, b)) ==
        doctest::Approx(std::exp(-0.16 / (4 * hbar))).epsilon(1e-8));
}

TEST_CASE("save/load round trip") {
  const WaveFunction psi = packet_1d(0.05, -0.2, 1.3);
  const std::string path = "test_wavefunction_roundtrip.wf";
  save_wavefunction(psi, path);
  const WaveFunction back = load_wavefunction(path);
  std::remove(path.c_str());

  REQUIRE(back.size() == psi.size());
  CHECK(back.dim == psi.dim);
  CHECK(back.hbar == doctest::Approx(psi.hbar));
  CHECK(back.origin[0] == doctest::Approx(psi.origin[0]));
  CHECK(back.spacing[0] == doctest::Approx(psi.spacing[0]));
  double max_err = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    max_err = std::max(max_err, std::abs(psi.values[i] - back.values[i]));
  }
  CHECK(max_err < 1e-12);
}

TEST_CASE("boundary mass flags support touching the edge") {
  Vec origin(1), spacing(1);
  origin << 0.0;
  spacing << 1.0;
  WaveFunction g = make_grid(1, 1.0, origin, spacing, {8});
  g.values.assign(8, Complex(0));
  g.values[0] = Complex(1);
  CHECK(boundary_mass(g) == doctest::Approx(1.0));

  WaveFunction bad = g;
  bad.counts = {7};
  CHECK_THROWS_AS(bad.validate(), Error);
}
