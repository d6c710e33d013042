// Acceptance gate: one line per criterion, exit code = number of failures.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "semiprop/experiment.hpp"
#include "semiprop/flow.hpp"
#include "semiprop/herman_kluk.hpp"
#include "semiprop/reference.hpp"
#include "semiprop/van_vleck.hpp"

using namespace semiprop;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Vec vec1(double x) {
  Vec v(1);
  v << x;
  return v;
}

std::vector<HamiltonianModel> builtin_suite() {
  return {builtin_model("free", {}), builtin_model("harmonic", {1.0}),
          builtin_model("inverted_harmonic", {1.0}), builtin_model("quartic", {0.1})};
}

std::vector<TrajectoryRecord> random_trajectories(int count, unsigned seed) {
  const std::vector<HamiltonianModel> models = builtin_suite();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  std::uniform_real_distribution<double> time_dist(-5.0, 5.0);
  std::vector<TrajectoryRecord> trajs;
  while (static_cast<int>(trajs.size()) < count) {
    const HamiltonianModel& model = models[trajs.size() % models.size()];
    double t = time_dist(rng);
    if (std::abs(t) < 0.05) t = 0.5;
    trajs.push_back(
        integrate_flow(model, PhasePoint(vec1(coord(rng)), vec1(coord(rng))), t, 1e-10));
  }
  return trajs;
}

// Quadratic Hamiltonian H = z.Qz/2 with a random symmetric Q.
HamiltonianModel random_quadratic(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  Mat q0(2 * d, 2 * d);
  for (int i = 0; i < 2 * d; ++i)
    for (int j = 0; j <= i; ++j) q0(i, j) = q0(j, i) = entry(rng);
  q0 += 1.5 * Mat::Identity(2 * d, 2 * d);  // keep the flow moderate
  HamiltonianModel model;
  model.dim = d;
  model.name = "random_quadratic";
  const Mat q = q0;
  const auto pack = [d](const PhasePoint& z) {
    Vec v(2 * d);
    v << z.q, z.p;
    return v;
  };
  model.eval = [q, pack](double, const PhasePoint& z) {
    const Vec v = pack(z);
    return 0.5 * v.dot(q * v);
  };
  model.grad = [q, pack](double, const PhasePoint& z) -> Vec { return q * pack(z); };
  model.hess = [q](double, const PhasePoint&) { return q; };
  return model;
}

// --- criteria ---------------------------------------------------------------

bool criterion_symplectic(const std::vector<TrajectoryRecord>& trajs) {
  for (const TrajectoryRecord& traj : trajs) {
    if (traj.symplectic_residual() > 1e-7) return false;
    if (traj.tangent_det_error() > 1e-7) return false;
  }
  return true;
}

bool criterion_y_bound(const std::vector<TrajectoryRecord>& trajs) {
  for (const TrajectoryRecord& traj : trajs) {
    const AuxiliaryMatrices aux = auxiliary_matrices(traj);
    const Eigen::JacobiSVD<CMat> svd(aux.Y);
    if (svd.singularValues().minCoeff() < 2.0 - 1e-6) return false;
    const CMat defect = aux.Y.adjoint() * aux.Y - aux.Z.adjoint() * aux.Z -
                        4.0 * CMat::Identity(traj.dim(), traj.dim());
    if (defect.cwiseAbs().maxCoeff() > 1e-6) return false;
  }
  return true;
}

bool criterion_hk_identity() {
  const double hbar = 0.1;
  const HamiltonianModel model = builtin_model("harmonic", {1.0});
  const WaveFunction grid = make_grid(1, hbar, vec1(-6.0), vec1(0.05), {240});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    const Vec q0 = vec1(coord(rng)), p0 = vec1(coord(rng));
    const WaveFunction psi0 = gaussian_packet(grid, q0, p0);
    const PhaseSpaceQuadrature quad = suggest_quadrature(hbar, q0, 3.5, p0, 3.5);
    const WaveFunction psi = propagate_hk(model, psi0, 0.0, quad);
    WaveFunction diff = psi;
    for (std::size_t j = 0; j < diff.size(); ++j) diff.values[j] -= psi0.values[j];
    if (l2_norm(diff) / l2_norm(psi0) >= 1e-6) return false;
  }
  return true;
}

bool criterion_quadratic_exactness() {
  const double x = 0.5, y = 0.2;
  for (double hbar : {0.2, 0.1, 0.05}) {
    for (double t : {0.7, 1.0, 2.5}) {
      for (const std::string& name : {std::string("free"), std::string("harmonic")}) {
        const HamiltonianModel model =
            name == "free" ? builtin_model("free", {}) : builtin_model("harmonic", {1.0});
        const Complex want = name == "free" ? free_kernel(t, vec1(x), vec1(y), hbar)
                                            : mehler_kernel(t, x, y, 1.0, hbar);
        const PhaseSpaceQuadrature quad =
            suggest_quadrature(hbar, vec1(y), 4.0, vec1(0.0), 5.0);
        const Complex hk = hk_kernel(model, hbar, t, vec1(x), vec1(y), quad);
        if (std::abs(hk - want) > 1e-4 * std::abs(want)) return false;

        const std::vector<ClassicalBranch> branches =
            find_branches(model, t, vec1(x), vec1(y), vec1(-6.0), vec1(6.0));
        if (branches.size() != 1) return false;
        const VanVleckResult vv = vanvleck_kernel(branches, hbar, 1, 1);
        if (std::abs(vv.value - want) > 1e-8 * std::abs(want)) return false;
      }
    }
  }
  return true;
}

bool criterion_maslov() {
  const HamiltonianModel model = builtin_model("harmonic", {1.0});
  const PhasePoint z0(vec1(0.4), vec1(-0.2));
  for (double t : {0.5, 2.0, 4.0, 7.0, 9.5}) {
    const TrajectoryRecord traj = integrate_flow(model, z0, t, 1e-12);
    const int theta = maslov_index(traj);
    if (theta != static_cast<int>(std::floor(t / kPi))) return false;
    if (theta != static_cast<int>(traj.caustic_times.size())) return false;
  }
  return true;
}

bool criterion_hessian_identities() {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> time_dist(0.3, 3.0);
  int done = 0;
  while (done < 50) {
    const int d = 1 + (done % 2);
    const HamiltonianModel model = random_quadratic(d, rng);
    Vec q(d), p(d);
    for (int i = 0; i < d; ++i) {
      q[i] = coord(rng);
      p[i] = coord(rng);
    }
    const TrajectoryRecord traj =
        integrate_flow(model, PhasePoint(q, p), time_dist(rng), 1e-12);
    const Eigen::JacobiSVD<Mat> svd(traj.B);
    if (svd.singularValues().minCoeff() < 1e-3) continue;  // too close to a caustic

    const HessianPhi h = hessian_phi(traj);
    const CMat direct = h.E.inverse();
    if ((h.Einv - direct).cwiseAbs().maxCoeff() >
        1e-8 * direct.cwiseAbs().maxCoeff())
      return false;
    const Complex det_e = h.E.determinant();
    const Complex want =
        (d % 2 ? -1.0 : 1.0) * traj.det_M() * Complex(traj.B.determinant());
    if (std::abs(det_e - want) > 1e-8 * std::abs(want)) return false;
    ++done;
  }
  return true;
}

// Shared statphase helper: run the CLI batch runner, read the fitted exponents.
bool statphase_fits(const std::string& config_text, std::vector<double>& slopes) {
  const fs::path dir = fs::temp_directory_path() / "semiprop_acceptance_sp";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "config.ini";
  std::ofstream(cfg) << config_text;
  run_command("statphase-check", cfg.string(), dir.string(), 1, 1);
  std::ifstream in(dir / "statphase.json");
  if (!in) return false;
  json summary;
  in >> summary;
  slopes.clear();
  for (const auto& entry : summary["fits"]) slopes.push_back(entry["fitted_exponent"]);
  fs::remove_all(dir);
  return true;
}

bool criterion_statphase_classical() {
  std::vector<double> slopes;
  // epsilon = 0.28 keeps the second critical point of x^2/2 + x^3 outside the
  // bump; the Gaussian core suppresses the edge remainder in the fit window.
  if (!statphase_fits("[statphase]\nmu = 0\nnu = 0\nsigma = 0\nk_list = 1 2 3\n"
                      "epsilon = 0.28\ncore = 0.08\n",
                      slopes))
    return false;
  if (slopes.size() != 3) return false;
  for (int k = 1; k <= 3; ++k)
    if (slopes[k - 1] < k - 0.2) return false;
  return true;
}

bool criterion_statphase_hbar_dependent() {
  std::vector<double> slopes;
  if (!statphase_fits("[statphase]\nmu = 0.05\nnu = 0.02\nsigma = 0.05\nk_list = 2\n",
                      slopes))
    return false;
  const double gain = 1 - 5 * 0.05 - 6 * 0.05 - 2 * 0.02;
  return slopes.size() == 1 && slopes[0] >= 2 * gain - 0.1;
}

bool criterion_anharmonic() {
  const HamiltonianModel model = builtin_model("quartic", {0.1});
  const double t = 2.0, lambda = 0.1;
  const Vec y = vec1(0.0);
  const Potential V = [lambda](const Vec& q) {
    return 0.5 * q[0] * q[0] + lambda * std::pow(q[0], 4);
  };
  // Fixed momentum band across hbar (spacing = hbar/2.5) so the same three
  // classical branches sit in the filter's flat region at every hbar; the
  // error is aggregated over several x to average out branch interference.
  const std::vector<double> xs = {0.28, 0.4, 0.52, 0.6, 0.72};
  std::vector<double> hbars = {0.1, 0.05, 0.025}, errors;
  for (double hbar : hbars) {
    const double sp = hbar / 2.5;
    const int n = static_cast<int>(std::lround(20.0 / sp));
    const WaveFunction grid = make_grid(1, hbar, vec1(-10.0), vec1(sp), {n});
    const KernelColumn column = kernel_column(V, t, y, grid, 8192);
    double num = 0, den = 0;
    for (double xv : xs) {
      std::vector<ClassicalBranch> branches =
          find_branches(model, t, vec1(xv), y, vec1(-5.0), vec1(5.0));
      if (branches.empty()) return false;
      for (const ClassicalBranch& br : branches)
        if (!column.certified(br.eta)) return false;
      const Complex vv = vanvleck_kernel(branches, hbar, 1, 1).value;
      const Complex ref = grid_value(column.column, vec1(xv));
      num += std::norm(vv - ref);
      den += std::norm(ref);
    }
    errors.push_back(std::sqrt(num / den));
  }
  const RateFit fit = fit_rate(hbars, errors, 0.0);
  return fit.points_used == 3 && fit.slope >= 0.8;
}

bool criterion_ehrenfest() {
  const HamiltonianModel model = builtin_model("inverted_harmonic", {1.0});
  const double x = 0.7, y = 0.2;
  for (double hbar : {0.1, 0.05, 0.025, 0.0125}) {
    const double t = 0.25 * std::log(1.0 / hbar);
    const std::vector<ClassicalBranch> branches =
        find_branches(model, t, vec1(x), vec1(y), vec1(-5.0), vec1(5.0));
    if (branches.size() != 1) return false;
    const Complex vv = vanvleck_kernel(branches, hbar, 1, 1).value;
    const Complex want = hyperbolic_kernel(t, x, y, 1.0, hbar);
    if (std::abs(vv - want) > 1e-6 * std::abs(want)) return false;
  }
  std::vector<PhasePoint> samples;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) samples.emplace_back(vec1(0.7 * i), vec1(0.7 * j));
  const OmegaEstimate omega = estimate_omega(model, 8.0, samples, 1e-10);
  return std::abs(omega.gamma_fit - 1.0) <= 0.05;
}

bool criterion_empty_branch() {
  const HamiltonianModel model = builtin_model("free", {});
  // x - y = 8 over t = 1 needs eta = 8, outside [-1, 1].
  const std::vector<ClassicalBranch> branches =
      find_branches(model, 1.0, vec1(8.0), vec1(0.0), vec1(-1.0), vec1(1.0));
  const VanVleckResult res = vanvleck_kernel(branches, 0.1, 1, 1);
  return branches.empty() && res.no_classical_path && res.value == Complex(0);
}

}  // namespace

int main() {
  const std::vector<TrajectoryRecord> trajs = random_trajectories(50, 7);
  const std::vector<std::pair<std::string, std::function<bool()>>> criteria = {
      {"symplectic integrity", [&] { return criterion_symplectic(trajs); }},
      {"Y-matrix bound", [&] { return criterion_y_bound(trajs); }},
      {"HK identity at t=0", criterion_hk_identity},
      {"quadratic exactness", criterion_quadratic_exactness},
      {"Maslov index", criterion_maslov},
      {"Hessian identities", criterion_hessian_identities},
      {"stationary phase, classical", criterion_statphase_classical},
      {"stationary phase, hbar-dependent", criterion_statphase_hbar_dependent},
      {"anharmonic convergence", criterion_anharmonic},
      {"Ehrenfest-time stability", criterion_ehrenfest},
      {"empty-branch behavior", criterion_empty_branch},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    bool ok = false;
    std::string detail;
    try {
      ok = criteria[i].second();
    } catch (const std::exception& e) {
      detail = e.what();
    }
    if (!ok) ++failures;
    std::cout << "[criterion " << (i + 1) << "] " << (ok ? "PASS" : "FAIL") << " - "
              << criteria[i].first;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
  }
  return failures;
}
