#include "doctest.h"
#include "semiprop/hamiltonian.hpp"

#include <random>

using namespace semiprop;

TEST_CASE("builtin free particle") {
  const HamiltonianModel m = builtin_model("free", {});
  CHECK(m.dim == 1);
  Vec q(1), p(1);
  q << 0.3;
  p << 2.0;
  CHECK(m.eval(0, PhasePoint(q, p)) == doctest::Approx(2.0));
  const Vec g = m.grad(0, PhasePoint(q, p));
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(2.0));
}

TEST_CASE("harmonic and inverted harmonic") {
  const HamiltonianModel h = builtin_model("harmonic", {2.0});
  Vec q(1), p(1);
  q << 1.0;
  p << 0.0;
  CHECK(h.eval(0, PhasePoint(q, p)) == doctest::Approx(2.0));  // omega^2 q^2 / 2
  const HamiltonianModel inv = builtin_model("inverted_harmonic", {1.0});
  CHECK(inv.eval(0, PhasePoint(q, p)) == doctest::Approx(-0.5));
}

TEST_CASE("quartic curvature at the origin") {
  const HamiltonianModel m = builtin_model("quartic", {0.1});
  Vec q(1), p(1);
  q << 0.0;
  p << 0.0;
  const Mat h = m.hess(0, PhasePoint(q, p));
  CHECK(h(0, 0) == doctest::Approx(1.0));
  CHECK(h(1, 1) == doctest::Approx(1.0));
  q << 1.0;
  CHECK(m.hess(0, PhasePoint(q, p))(0, 0) == doctest::Approx(1.0 + 12 * 0.1));
}

TEST_CASE("unknown model and bad params rejected") {
  CHECK_THROWS_AS(builtin_model("bogus", {}), Error);
  CHECK_THROWS_AS(builtin_model("quartic", {}), Error);
  CHECK_THROWS_AS(builtin_model("harmonic", {std::nan("")}), Error);
}

TEST_CASE("gradient check against finite differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const char* name : {"free", "harmonic", "inverted_harmonic", "quartic"}) {
    std::vector<double> params;
    if (std::string(name) == "harmonic" || std::string(name) == "inverted_harmonic")
      params = {1.3};
    if (std::string(name) == "quartic") params = {0.1};
    const HamiltonianModel m = builtin_model(name, params);
    std::vector<PhasePoint> pts;
    for (int i = 0; i < 10; ++i) {
      Vec q(m.dim), p(m.dim);
      for (int j = 0; j < m.dim; ++j) {
        q[j] = u(rng);
        p[j] = u(rng);
      }
      pts.emplace_back(q, p);
    }
    const GradientCheckReport report = check_gradients(m, pts, 1e-6);
    CHECK(report.all_ok);
    CHECK(report.max_grad_deviation < 1e-6);
  }
}
