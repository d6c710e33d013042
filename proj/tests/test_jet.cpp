#include "doctest.h"
#include "semiprop/jet.hpp"

#include <cmath>

using namespace semiprop;

TEST_CASE("jet arithmetic basics") {
  const Jet x = Jet::variable(2, 4, 0);
  const Jet y = Jet::variable(2, 4, 1);
  const Jet f = x * x + y.scaled(3.0);
  CHECK(f.coeff({2, 0}) == Complex(1));
  CHECK(f.coeff({0, 1}) == Complex(3));
  CHECK(f.coeff({1, 1}) == Complex(0));
  const Jet g = f * f;
  CHECK(g.coeff({4, 0}) == Complex(1));
  CHECK(g.coeff({2, 1}) == Complex(6));
  CHECK(g.coeff({0, 2}) == Complex(9));
}

TEST_CASE("derivative and truncation") {
  const Jet x = Jet::variable(1, 5, 0);
  const Jet f = x.pow(4).scaled(2.0);  // 2 x^4
  const Jet df = f.derivative(0);      // 8 x^3
  CHECK(df.order() == 4);
  CHECK(df.coeff({3}) == Complex(8));
  const Jet padded = df.truncated(6);
  CHECK(padded.order() == 6);
  CHECK(padded.coeff({3}) == Complex(8));
  CHECK(padded.coeff({6}) == Complex(0));
}

TEST_CASE("exp matches the scalar series") {
  const Jet x = Jet::variable(1, 6, 0);
  const Jet e = (x.scaled(Complex(0, 1))).exp();  // e^{ix}
  for (int k = 0; k <= 6; ++k) {
    Complex expected = std::pow(Complex(0, 1), k);
    double fact = 1;
    for (int j = 2; j <= k; ++j) fact *= j;
    CHECK(std::abs(e.coeff({k}) - expected / fact) < 1e-14);
  }
}

TEST_CASE("quadratic form power is the Laplace-type operator") {
  // Ainv = [[1]], f = x^2: <Ainv D, D> f = -f'' = -2.
  CMat a(1, 1);
  a << Complex(1);
  const Jet x = Jet::variable(1, 2, 0);
  const Jet result = apply_quadratic_form_power(a, x * x, 1);
  CHECK(result.value_at_zero() == Complex(-2));
  CHECK_THROWS_AS(apply_quadratic_form_power(a, x * x, 2), Error);  // order too low
}

TEST_CASE("build_g strips through quadratic order") {
  Jet phase(1, 4);
  phase.set_coeff({0}, Complex(1.5));
  phase.set_coeff({2}, Complex(0.5));
  phase.set_coeff({3}, Complex(1.0));
  phase.set_coeff({4}, Complex(0.25));
  const Jet g = build_g(phase);
  CHECK(g.coeff({0}) == Complex(0));
  CHECK(g.coeff({2}) == Complex(0));
  CHECK(g.coeff({3}) == Complex(1.0));
  CHECK(g.coeff({4}) == Complex(0.25));

  Jet bad = phase;
  bad.set_coeff({1}, Complex(1e-6));
  CHECK_THROWS_AS(build_g(bad), Error);
}

TEST_CASE("jet_hessian reads degree-two coefficients") {
  Jet phase(2, 2);
  phase.set_coeff({2, 0}, Complex(0.5));
  phase.set_coeff({1, 1}, Complex(2.0, 1.0));
  phase.set_coeff({0, 2}, Complex(1.5));
  const CMat h = jet_hessian(phase);
  CHECK(h(0, 0) == Complex(1.0));
  CHECK(h(0, 1) == Complex(2.0, 1.0));
  CHECK(h(1, 0) == Complex(2.0, 1.0));
  CHECK(h(1, 1) == Complex(3.0));
}
