#include "doctest.h"
#include "semiprop/van_vleck.hpp"
#include "semiprop/reference.hpp"

#include <cmath>

using namespace semiprop;

namespace {

Vec vec1(double x) {
  Vec v(1);
  v << x;
  return v;
}

}  // namespace

TEST_CASE("free-particle branch has the closed-form data") {
  const HamiltonianModel model = builtin_model("free", {});
  const std::vector<ClassicalBranch> branches =
      find_branches(model, 2.0, vec1(1.0), vec1(0.0), vec1(-3.0), vec1(3.0));
  REQUIRE(branches.size() == 1);
  const ClassicalBranch& b = branches[0];
  CHECK(b.eta[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(b.action == doctest::Approx(0.25).epsilon(1e-9));       // S = (x-y)^2 / (2t)
  CHECK(b.mixed_hessian(0, 0) == doctest::Approx(-0.5).epsilon(1e-9));  // -1/t
  CHECK(b.maslov == 0);
}

TEST_CASE("harmonic branch momentum at a quarter period") {
  // q_t = y cos t + eta sin t; at t = pi/2, x = eta, so eta = x.
  const HamiltonianModel model = builtin_model("harmonic", {1.0});
  const std::vector<ClassicalBranch> branches =
      find_branches(model, kPi / 2, vec1(0.7), vec1(0.3), vec1(-3.0), vec1(3.0));
  REQUIRE(branches.size() == 1);
  CHECK(branches[0].eta[0] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(branches[0].maslov == 0);
}

TEST_CASE("maslov index steps at harmonic caustics") {
  const HamiltonianModel model = builtin_model("harmonic", {1.0});
  const PhasePoint z0(vec1(0.4), vec1(-0.2));
  for (double t : {0.5, 2.0, 4.0, 7.0, 9.5}) {
    const TrajectoryRecord traj = integrate_flow(model, z0, t, 1e-12);
    CHECK(maslov_index(traj) == static_cast<int>(std::floor(t / kPi)));
  }
}

TEST_CASE("hessian identities on a harmonic trajectory") {
  const HamiltonianModel model = builtin_model("harmonic", {1.0});
  const TrajectoryRecord traj = integrate_flow(model, PhasePoint(vec1(0.2), vec1(1.1)), 1.3, 1e-12);
  const HessianPhi h = hessian_phi(traj);
  CHECK((h.E * h.Einv - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
  const Complex det_e = h.E.determinant();
  const Complex want = -traj.det_M() * Complex(traj.B.determinant());
  CHECK(std::abs(det_e - want) < 1e-9);
}

TEST_CASE("van Vleck matches Mehler away from caustics") {
  const HamiltonianModel model = builtin_model("harmonic", {1.0});
  const double hbar = 0.1;
  for (double t : {0.7, 2.5, 4.0}) {
    std::vector<ClassicalBranch> branches =
        find_branches(model, t, vec1(0.6), vec1(-0.1), vec1(-6.0), vec1(6.0));
    REQUIRE(branches.size() == 1);
    const VanVleckResult res = vanvleck_kernel(branches, hbar, 1, 1);
    const Complex want = mehler_kernel(t, 0.6, -0.1, 1.0, hbar);
    CHECK(std::abs(res.value - want) < 1e-8 * std::abs(want) + 1e-12);
  }
}

TEST_CASE("corrections are trivial for quadratic Hamiltonians") {
  const HamiltonianModel model = builtin_model("harmonic", {1.0});
  std::vector<ClassicalBranch> branches =
      find_branches(model, 1.1, vec1(0.4), vec1(0.1), vec1(-5.0), vec1(5.0));
  REQUIRE(branches.size() == 1);
  compute_corrections(model, 1.1, vec1(0.4), branches[0], 3);
  REQUIRE(branches[0].b_coeffs.size() == 3);
  CHECK(std::abs(branches[0].b_coeffs[0] - Complex(1)) < 1e-10);
  CHECK(std::abs(branches[0].b_coeffs[1]) < 1e-4);  // finite-difference jets
}

TEST_CASE("empty branch set raises the no-path flag") {
  const VanVleckResult res = vanvleck_kernel({}, 0.1, 1, 1);
  CHECK(res.no_classical_path);
  CHECK(res.value == Complex(0));
}

TEST_CASE("no branch reaches far targets through a narrow momentum box") {
  const HamiltonianModel model = builtin_model("free", {});
  // x - y = 8 over t = 1 needs eta = 8, outside [-1, 1].
  const std::vector<ClassicalBranch> branches =
      find_branches(model, 1.0, vec1(8.0), vec1(0.0), vec1(-1.0), vec1(1.0));
  CHECK(branches.empty());
}

TEST_CASE("quartic branch count agrees with a dense scan") {
  const HamiltonianModel model = builtin_model("quartic", {0.1});
  const double t = 6.0;
  const Vec x = vec1(0.0), y = vec1(0.0);
  const Vec p_lo = vec1(-3.0), p_hi = vec1(3.0);
  const std::vector<ClassicalBranch> branches = find_branches(model, t, x, y, p_lo, p_hi);

  // Oracle: dense scan of eta -> q_t(y, eta) with sign-change bisection.
  const auto endpoint = [&](double eta) {
    return integrate_flow(model, PhasePoint(y, vec1(eta)), t, 1e-12).zt.q[0];
  };
  std::vector<double> roots;
  const int n = 3000;
  double prev_eta = p_lo[0];
  double prev_f = endpoint(prev_eta);
  for (int i = 1; i <= n; ++i) {
    const double eta = p_lo[0] + (p_hi[0] - p_lo[0]) * i / n;
    const double f = endpoint(eta);
    if (prev_f == 0.0 || prev_f * f < 0) {
      double lo = prev_eta, hi = eta, flo = prev_f;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = endpoint(mid);
        if (flo * fm <= 0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_eta = eta;
    prev_f = f;
  }

  REQUIRE(branches.size() == roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    CHECK(branches[i].eta[0] == doctest::Approx(roots[i]).epsilon(1e-6));
  }
}
