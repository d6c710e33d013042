#include "semiprop/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "json.hpp"

#include "semiprop/flow.hpp"
#include "semiprop/hamiltonian.hpp"
#include "semiprop/herman_kluk.hpp"
#include "semiprop/jet.hpp"
#include "semiprop/reference.hpp"
#include "semiprop/stationary_phase.hpp"
#include "semiprop/van_vleck.hpp"
#include "semiprop/wavefunction.hpp"

using json = nlohmann::json;

namespace semiprop {

// --- Config ------------------------------------------------------------

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return from_string(text.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const std::size_t last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']') throw Error("config: malformed section at line " +
                                          std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config: expected key = value at line " + std::to_string(lineno));
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string& s) {
      const std::size_t a = s.find_first_not_of(" \t");
      const std::size_t b = s.find_last_not_of(" \t");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    strip(key);
    strip(value);
    if (key.empty()) throw Error("config: empty key at line " + std::to_string(lineno));
    cfg.set(section.empty() ? key : section + "." + key, value);
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  consumed_[key] = false;
}

bool Config::has(const std::string& key) const {
  const auto it = values_.find(key);
  if (it != values_.end()) consumed_[key] = true;
  return it != values_.end();
}

std::string Config::get_str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error("config: missing required key '" + key + "'");
  consumed_[key] = true;
  return it->second;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_str(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  const std::string s = get_str(key);
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw Error("config: key '" + key + "' is not a number");
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
  const double v = get_double(key);
  if (v != std::floor(v)) throw Error("config: key '" + key + "' is not an integer");
  return static_cast<int>(v);
}

int Config::get_int(const std::string& key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::istringstream in(get_str(key));
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw Error("config: key '" + key + "' is not a list of numbers");
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
  return has(key) ? get_doubles(key) : fallback;
}

std::vector<std::string> Config::get_words(const std::string& key) const {
  std::istringstream in(get_str(key));
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

void Config::check_all_consumed() const {
  for (const auto& [key, used] : consumed_)
    if (!used) throw Error("config: unknown key '" + key + "'");
}

// --- Rate fitting ------------------------------------------------------

RateFit fit_rate(const std::vector<double>& hbars, const std::vector<double>& errors,
                 double floor) {
  if (hbars.size() != errors.size()) throw Error("fit_rate: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    if (errors[i] < 10 * floor) continue;  // oracle noise
    lx.push_back(std::log(hbars[i]));
    ly.push_back(std::log(errors[i]));
  }
  RateFit fit;
  fit.points_used = static_cast<int>(lx.size());
  if (lx.size() < 2) return fit;
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  if (lx.size() > 2) {
    double ss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      ss += r * r;
    }
    fit.stderr_slope = std::sqrt(ss / (n - 2) * n / denom);
  }
  return fit;
}

// --- Runners -----------------------------------------------------------

namespace {

namespace fs = std::filesystem;

HamiltonianModel model_from_config(const Config& cfg) {
  std::vector<double> params;
  if (cfg.has("model.params")) params = cfg.get_doubles("model.params");
  return builtin_model(cfg.get_str("model.name"), params);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::vector<std::pair<Vec, Vec>> parse_points(const Config& cfg, const std::string& key,
                                              int d) {
  const std::vector<double> flat = cfg.get_doubles(key);
  if (flat.empty() || flat.size() % (2 * d) != 0)
    throw Error("config: '" + key + "' must hold x,y pairs of dimension " +
                std::to_string(d));
  std::vector<std::pair<Vec, Vec>> points;
  for (std::size_t i = 0; i < flat.size(); i += 2 * d) {
    Vec x(d), y(d);
    for (int j = 0; j < d; ++j) {
      x[j] = flat[i + j];
      y[j] = flat[i + d + j];
    }
    points.emplace_back(x, y);
  }
  return points;
}

PhaseSpaceQuadrature quadrature_from_config(const Config& cfg, double hbar, int d) {
  const std::vector<double> qc = cfg.get_doubles("quadrature.q_center");
  const std::vector<double> pc = cfg.get_doubles("quadrature.p_center");
  if (static_cast<int>(qc.size()) != d || static_cast<int>(pc.size()) != d)
    throw Error("config: quadrature centers must have model dimension");
  const double qr = cfg.get_double("quadrature.q_radius");
  const double pr = cfg.get_double("quadrature.p_radius");
  const double divisor = cfg.get_double("quadrature.spacing_divisor", 3.0);
  const Vec q_center = Eigen::Map<const Vec>(qc.data(), d);
  const Vec p_center = Eigen::Map<const Vec>(pc.data(), d);
  const Vec ones = Vec::Ones(d);
  return tensor_quadrature(q_center - qr * ones, q_center + qr * ones, p_center - pr * ones,
                           p_center + pr * ones, std::sqrt(hbar) / divisor);
}

Potential potential_from_model(const HamiltonianModel& model) {
  return [model](const Vec& q) {
    return model.eval(0.0, PhasePoint(q, Vec::Zero(q.size())));
  };
}

Complex closed_form_kernel(const HamiltonianModel& model, double hbar, double t,
                           const Vec& x, const Vec& y, const std::vector<double>& params) {
  if (model.name == "free") return free_kernel(t, x, y, hbar);
  if (model.dim != 1)
    throw Error("closed_form: only d=1 closed forms are available");
  if (model.name == "harmonic") return mehler_kernel(t, x[0], y[0], params.at(0), hbar);
  if (model.name == "inverted_harmonic")
    return hyperbolic_kernel(t, x[0], y[0], params.at(0), hbar);
  throw Error("closed_form: no closed-form kernel for model '" + model.name + "'");
}

std::string format_vec(const Vec& v) {
  std::ostringstream out;
  out.precision(17);
  for (int i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  return out.str();
}

int run_flow_check(const Config& cfg, const fs::path& out, int /*threads*/,
                   unsigned long seed) {
  const HamiltonianModel model = model_from_config(cfg);
  const int samples = cfg.get_int("flow.samples", 20);
  const double t_max = cfg.get_double("flow.t", 5.0);
  const double tol = cfg.get_double("flow.tol", 1e-10);
  const double omega_horizon = cfg.get_double("flow.omega_horizon", 10.0);
  const int omega_samples = cfg.get_int("flow.omega_samples", 8);
  cfg.check_all_consumed();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::uniform_real_distribution<double> time_dist(-t_max, t_max);

  std::vector<PhasePoint> grad_pts;
  for (int i = 0; i < samples; ++i) {
    Vec q(model.dim), p(model.dim);
    for (int j = 0; j < model.dim; ++j) {
      q[j] = coord(rng);
      p[j] = coord(rng);
    }
    grad_pts.emplace_back(q, p);
  }
  const GradientCheckReport grad = check_gradients(model, grad_pts, 1e-6);

  double max_symp = 0, max_det = 0;
  for (int i = 0; i < samples; ++i) {
    Vec q(model.dim), p(model.dim);
    for (int j = 0; j < model.dim; ++j) {
      q[j] = coord(rng);
      p[j] = coord(rng);
    }
    const TrajectoryRecord traj =
        integrate_flow(model, PhasePoint(q, p), time_dist(rng), tol);
    max_symp = std::max(max_symp, traj.symplectic_residual());
    max_det = std::max(max_det, traj.tangent_det_error());
    if (i == 0) dump_trajectory_csv(traj, (out / "trajectory.csv").string());
  }

  std::vector<PhasePoint> omega_pts;
  for (int i = 0; i < omega_samples; ++i) {
    Vec q(model.dim), p(model.dim);
    for (int j = 0; j < model.dim; ++j) {
      q[j] = coord(rng);
      p[j] = coord(rng);
    }
    omega_pts.emplace_back(q, p);
  }
  const OmegaEstimate omega = estimate_omega(model, omega_horizon, omega_pts, tol);

  json report;
  report["model"] = model.name;
  report["gradients_ok"] = grad.all_ok;
  report["max_gradient_deviation"] = grad.max_grad_deviation;
  report["max_symplectic_residual"] = max_symp;
  report["max_tangent_det_error"] = max_det;
  report["gamma_fit"] = omega.gamma_fit;
  report["pass"] = grad.all_ok && max_symp <= 1e-7 && max_det <= 1e-7;
  write_file(out / "flow_check.json", report.dump(2) + "\n");
  return report["pass"].get<bool>() ? 0 : 1;
}

int run_hk_kernel(const Config& cfg, const fs::path& out, int /*threads*/,
                  unsigned long /*seed*/) {
  const HamiltonianModel model = model_from_config(cfg);
  const double hbar = cfg.get_double("kernel.hbar");
  const double t = cfg.get_double("kernel.t");
  const double tol = cfg.get_double("kernel.tol", 1e-6);
  const auto points = parse_points(cfg, "kernel.points", model.dim);
  const PhaseSpaceQuadrature quad = quadrature_from_config(cfg, hbar, model.dim);
  cfg.check_all_consumed();

  const std::vector<TrajectoryRecord> cache = compute_node_trajectories(model, quad, t);
  std::ostringstream csv;
  csv.precision(17);
  csv << "x y re im\n";
  bool warned = false;
  for (const auto& [x, y] : points) {
    HkReport report;
    const Complex k = hk_kernel(model, hbar, t, x, y, quad, nullptr, tol, &cache, &report);
    warned = warned || report.coverage_warning;
    csv << format_vec(x) << " " << format_vec(y) << " " << k.real() << " " << k.imag()
        << "\n";
  }
  write_file(out / "kernel.csv", csv.str());
  json summary;
  summary["points"] = points.size();
  summary["quadrature"] = quad.spec;
  summary["coverage_warning"] = warned;
  write_file(out / "hk_kernel.json", summary.dump(2) + "\n");
  return 0;
}

int run_vanvleck(const Config& cfg, const fs::path& out, int /*threads*/,
                 unsigned long /*seed*/) {
  const HamiltonianModel model = model_from_config(cfg);
  const int d = model.dim;
  const double hbar = cfg.get_double("kernel.hbar");
  const double t = cfg.get_double("kernel.t");
  const int order = cfg.get_int("kernel.order", 1);
  const auto points = parse_points(cfg, "kernel.points", d);
  const std::vector<double> lo = cfg.get_doubles("search.p_lo");
  const std::vector<double> hi = cfg.get_doubles("search.p_hi");
  const double tol = cfg.get_double("search.tol", 1e-10);
  if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
    throw Error("config: search box must have model dimension");
  cfg.check_all_consumed();

  const Vec p_lo = Eigen::Map<const Vec>(lo.data(), d);
  const Vec p_hi = Eigen::Map<const Vec>(hi.data(), d);

  std::ostringstream csv;
  csv.precision(17);
  csv << "x y eta S theta sqrt_det_mixed kernel_re kernel_im no_classical_path\n";
  for (const auto& [x, y] : points) {
    std::vector<ClassicalBranch> branches = find_branches(model, t, x, y, p_lo, p_hi, tol);
    if (order > 1)
      for (ClassicalBranch& br : branches) compute_corrections(model, t, x, br, order);
    const VanVleckResult k = vanvleck_kernel(branches, hbar, order, d);
    if (branches.empty()) {
      csv << format_vec(x) << " " << format_vec(y) << " nan nan nan nan " << k.value.real()
          << " " << k.value.imag() << " 1\n";
      continue;
    }
    for (const ClassicalBranch& br : branches)
      csv << format_vec(x) << " " << format_vec(y) << " " << format_vec(br.eta) << " "
          << br.action << " " << br.maslov << " "
          << std::sqrt(std::abs(br.mixed_hessian.determinant())) << " " << k.value.real()
          << " " << k.value.imag() << " 0\n";
  }
  write_file(out / "vanvleck.csv", csv.str());
  return 0;
}

int run_propagate(const Config& cfg, const fs::path& out, int threads,
                  unsigned long /*seed*/) {
  const HamiltonianModel model = model_from_config(cfg);
  const int d = model.dim;
  const double hbar = cfg.get_double("state.hbar");
  const std::vector<double> q0v = cfg.get_doubles("state.q0");
  const std::vector<double> p0v = cfg.get_doubles("state.p0");
  const std::vector<double> lov = cfg.get_doubles("grid.lo");
  const std::vector<double> hiv = cfg.get_doubles("grid.hi");
  const std::vector<double> cv = cfg.get_doubles("grid.counts");
  const double t = cfg.get_double("propagate.t");
  const std::string method = cfg.get_str("propagate.method");
  if (static_cast<int>(q0v.size()) != d || static_cast<int>(p0v.size()) != d ||
      static_cast<int>(lov.size()) != d || static_cast<int>(hiv.size()) != d ||
      static_cast<int>(cv.size()) != d)
    throw Error("config: state/grid entries must have model dimension");

  std::vector<int> counts(d);
  Vec origin(d), spacing(d);
  for (int i = 0; i < d; ++i) {
    counts[i] = static_cast<int>(cv[i]);
    origin[i] = lov[i];
    spacing[i] = (hiv[i] - lov[i]) / (counts[i] - 1);
  }
  const WaveFunction grid = make_grid(d, hbar, origin, spacing, counts);
  const Vec q0 = Eigen::Map<const Vec>(q0v.data(), d);
  const Vec p0 = Eigen::Map<const Vec>(p0v.data(), d);
  const WaveFunction psi0 = gaussian_packet(grid, q0, p0);

  WaveFunction psi_t;
  if (method == "hk") {
    const PhaseSpaceQuadrature quad = quadrature_from_config(cfg, hbar, d);
    cfg.check_all_consumed();
    psi_t = propagate_hk(model, psi0, t, quad, nullptr, threads);
  } else if (method == "split_step") {
    const int steps = cfg.get_int("propagate.steps", 512);
    cfg.check_all_consumed();
    psi_t = split_step_propagate(potential_from_model(model), psi0, t, steps);
  } else {
    throw Error("config: propagate.method must be hk or split_step");
  }

  save_wavefunction(psi0, (out / "psi0.wf").string());
  save_wavefunction(psi_t, (out / "psi_t.wf").string());
  json summary;
  summary["method"] = method;
  summary["norm_initial"] = l2_norm(psi0);
  summary["norm_final"] = l2_norm(psi_t);
  write_file(out / "propagate.json", summary.dump(2) + "\n");
  return 0;
}

// Bump exp(-1/(1 - (x/a)^2)) on |x| < a.
double bump(double x, double a) {
  const double s = x / a;
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

Jet bump_jet(double a, int order) {
  Jet inner(1, order);
  inner.set_coeff({0}, Complex(-1, 0));
  for (int m = 2; m <= order; m += 2)
    inner.set_coeff({m}, Complex(-std::pow(a, -m), 0));  // -(x/a)^2/(1-(x/a)^2) - 1
  return inner.exp();
}

int run_statphase_check(const Config& cfg, const fs::path& out, int /*threads*/,
                        unsigned long /*seed*/) {
  const double mu = cfg.get_double("statphase.mu", 0.0);
  const double nu = cfg.get_double("statphase.nu", 0.0);
  const double sigma = cfg.get_double("statphase.sigma", 0.0);
  std::vector<double> k_list = cfg.get_doubles("statphase.k_list", {1, 2, 3});
  std::vector<double> hbars = cfg.get_doubles("statphase.hbar_list", {});
  if (hbars.empty())
    for (int e = 4; e <= 10; ++e) hbars.push_back(std::pow(2.0, -e));
  const double epsilon = cfg.get_double("statphase.epsilon", 0.35);
  // Optional Gaussian core e^{-x^2/2 core^2}: damps the bump-edge (Gevrey)
  // contribution below the power-law terms so the fits see clean slopes.
  const double core = cfg.get_double("statphase.core", 0.0);
  const double oracle_tol = cfg.get_double("statphase.oracle_tol", 1e-13);
  cfg.check_all_consumed();

  const SpParameters params = validate_parameters(mu, nu, sigma);

  std::ostringstream csv;
  csv.precision(17);
  csv << "hbar k error predicted_error_exponent\n";
  json summary;
  summary["mu"] = mu;
  summary["nu"] = nu;
  summary["sigma"] = sigma;
  summary["exponent_gain"] = params.exponent_gain;
  summary["phase_family"] = "0.5 hbar^-mu x^2 + hbar^-nu x^3 (window = 1 on the support)";
  summary["sigma_choice"] = "second-derivative scale hbar^-mu, so sigma bound uses mu";
  bool all_pass = true;

  for (double kd : k_list) {
    const int k = static_cast<int>(kd);
    std::vector<double> errors;
    for (double hbar : hbars) {
      const double a = epsilon * std::pow(hbar, params.rho);
      const double c2 = 0.5 * std::pow(hbar, -mu);
      const double c3 = std::pow(hbar, -nu);

      const int order = std::max(3, 6 * (k - 1));
      Jet phase(1, order);
      phase.set_coeff({2}, Complex(c2, 0));
      phase.set_coeff({3}, Complex(c3, 0));
      const double s_core = core * std::pow(hbar, params.rho);
      Jet amp = bump_jet(a, order);
      if (core > 0) {
        Jet gauss(1, order);
        gauss.set_coeff({2}, Complex(-0.5 / (s_core * s_core), 0));
        amp = amp * gauss.exp();
      }
      const SpExpansion exp = sp_expansion(phase, amp, hbar, k, &params);

      const auto phase_fn = [c2, c3](const Vec& x) {
        return Complex(c2 * x[0] * x[0] + c3 * x[0] * x[0] * x[0], 0);
      };
      const auto amp_fn = [a, core, s_core](const Vec& x) {
        double v = bump(x[0], a);
        if (core > 0) v *= std::exp(-0.5 * x[0] * x[0] / (s_core * s_core));
        return Complex(v, 0);
      };
      QuadratureBox box;
      box.lo = {-a};
      box.hi = {a};
      const QuadratureResult oracle =
          oracle_quadrature(phase_fn, amp_fn, hbar, box, oracle_tol);

      const double err = std::abs(exp.partial_sums[k - 1] - oracle.value);
      errors.push_back(err);
      csv << hbar << " " << k << " " << err << " " << exp.predicted_error_exponent << "\n";
    }
    const RateFit fit = fit_rate(hbars, errors, oracle_tol);
    const double required = k * params.exponent_gain - 0.1;
    json entry;
    entry["k"] = k;
    entry["fitted_exponent"] = fit.slope;
    entry["stderr"] = fit.stderr_slope;
    entry["points_used"] = fit.points_used;
    entry["required_exponent"] = required;
    entry["pass"] = fit.points_used >= 2 && fit.slope >= required;
    all_pass = all_pass && entry["pass"].get<bool>();
    summary["fits"].push_back(entry);
  }
  summary["pass"] = all_pass;
  write_file(out / "statphase.csv", csv.str());
  write_file(out / "statphase.json", summary.dump(2) + "\n");
  return all_pass ? 0 : 1;
}

int run_sweep(const Config& cfg, const fs::path& out, int /*threads*/,
              unsigned long /*seed*/) {
  const HamiltonianModel model = model_from_config(cfg);
  std::vector<double> params;
  if (cfg.has("model.params")) params = cfg.get_doubles("model.params");
  const int d = model.dim;
  const std::vector<double> hbars = cfg.get_doubles("sweep.hbar_list");
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    if (!(hbars[i] > 0) || hbars[i] > 1)
      throw Error("config: sweep.hbar_list values must lie in (0, 1]");
    if (i && hbars[i] >= hbars[i - 1])
      throw Error("config: sweep.hbar_list must be strictly decreasing");
  }
  const bool ehrenfest = cfg.has("sweep.ehrenfest_c");
  const double ehrenfest_c = ehrenfest ? cfg.get_double("sweep.ehrenfest_c") : 0.0;
  if (ehrenfest && !(ehrenfest_c > 0))
    throw Error("config: sweep.ehrenfest_c must be positive");
  const std::vector<double> t_list =
      ehrenfest ? std::vector<double>{} : cfg.get_doubles("sweep.t_list");
  const auto points = parse_points(cfg, "sweep.points", d);
  const std::vector<std::string> methods = cfg.get_words("sweep.methods");
  if (methods.empty()) throw Error("config: sweep.methods must be nonempty");
  const int order = cfg.get_int("sweep.order", 1);
  const double error_floor = cfg.get_double("sweep.error_floor", 1e-9);

  std::string reference;
  for (const std::string& m : methods)
    if (m == "closed_form") reference = m;
  if (reference.empty())
    for (const std::string& m : methods)
      if (m == "split_step") reference = m;
  if (reference.empty()) reference = methods.front();

  const bool need_vv =
      std::find(methods.begin(), methods.end(), std::string("vanvleck")) != methods.end();
  Vec p_lo, p_hi;
  double newton_tol = 1e-10;
  if (need_vv) {
    const std::vector<double> lo = cfg.get_doubles("search.p_lo");
    const std::vector<double> hi = cfg.get_doubles("search.p_hi");
    p_lo = Eigen::Map<const Vec>(lo.data(), d);
    p_hi = Eigen::Map<const Vec>(hi.data(), d);
    newton_tol = cfg.get_double("search.tol", 1e-10);
  }
  const bool need_ss =
      std::find(methods.begin(), methods.end(), std::string("split_step")) != methods.end();
  double ss_lo = 0, ss_hi = 0;
  int ss_counts = 0, ss_steps = 0;
  if (need_ss) {
    ss_lo = cfg.get_double("split.lo");
    ss_hi = cfg.get_double("split.hi");
    ss_counts = cfg.get_int("split.counts");
    ss_steps = cfg.get_int("split.steps", 1024);
    if (d != 1) throw Error("config: split_step sweeps support d=1 only");
  }
  const bool need_hk =
      std::find(methods.begin(), methods.end(), std::string("hk")) != methods.end();
  double hk_q_radius = 0, hk_p_radius = 0, hk_divisor = 3.0, hk_tol = 1e-6;
  if (need_hk) {
    hk_q_radius = cfg.get_double("quadrature.q_radius");
    hk_p_radius = cfg.get_double("quadrature.p_radius");
    hk_divisor = cfg.get_double("quadrature.spacing_divisor", 3.0);
    hk_tol = cfg.get_double("kernel.tol", 1e-6);
  }
  cfg.check_all_consumed();

  struct Row {
    double hbar, t;
    Vec x, y;
    std::map<std::string, Complex> values;
    double cond_B = 0;
    std::string error;
  };
  std::vector<Row> rows;

  for (double hbar : hbars) {
    const std::vector<double> times =
        ehrenfest ? std::vector<double>{ehrenfest_c * std::log(1.0 / hbar)} : t_list;
    for (double t : times)
      for (const auto& [x, y] : points) {
        Row row;
        row.hbar = hbar;
        row.t = t;
        row.x = x;
        row.y = y;
        try {
          KernelColumn column;
          bool have_column = false;
          for (const std::string& m : methods) {
            if (m == "closed_form") {
              row.values[m] = closed_form_kernel(model, hbar, t, x, y, params);
            } else if (m == "vanvleck") {
              std::vector<ClassicalBranch> branches =
                  find_branches(model, t, x, y, p_lo, p_hi, newton_tol);
              if (order > 1)
                for (ClassicalBranch& br : branches)
                  compute_corrections(model, t, x, br, order);
              for (const ClassicalBranch& br : branches)
                row.cond_B = std::max(row.cond_B, br.cond_B);
              row.values[m] = vanvleck_kernel(branches, hbar, order, d).value;
            } else if (m == "hk") {
              const Vec mid = 0.5 * (x + y);
              const PhaseSpaceQuadrature quad = tensor_quadrature(
                  y - Vec::Constant(d, hk_q_radius), y + Vec::Constant(d, hk_q_radius),
                  mid - Vec::Constant(d, hk_p_radius), mid + Vec::Constant(d, hk_p_radius),
                  std::sqrt(hbar) / hk_divisor);
              row.values[m] = hk_kernel(model, hbar, t, x, y, quad, nullptr, hk_tol);
            } else if (m == "split_step") {
              if (!have_column) {
                const int n = ss_counts;
                WaveFunction grid = make_grid(
                    1, hbar, Vec::Constant(1, ss_lo),
                    Vec::Constant(1, (ss_hi - ss_lo) / n), std::vector<int>{n});
                column = kernel_column(potential_from_model(model), t, y, grid, ss_steps);
                have_column = true;
              }
              // nearest grid point to x
              const double u =
                  (x[0] - column.column.origin[0]) / column.column.spacing[0];
              Vec xg(1);
              xg[0] = column.column.origin[0] +
                      std::lround(u) * column.column.spacing[0];
              row.values[m] = grid_value(column.column, xg);
            } else {
              throw Error("config: unknown method '" + m + "'");
            }
          }
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        rows.push_back(std::move(row));
      }
  }

  std::ostringstream csv;
  csv.precision(17);
  csv << "hbar t x y method re im rel_error_vs_" << reference << " cond_B error\n";
  for (const Row& row : rows) {
    const auto ref_it = row.values.find(reference);
    for (const std::string& m : methods) {
      const auto it = row.values.find(m);
      csv << row.hbar << " " << row.t << " " << format_vec(row.x) << " "
          << format_vec(row.y) << " " << m << " ";
      if (it == row.values.end()) {
        csv << "nan nan nan";
      } else {
        csv << it->second.real() << " " << it->second.imag() << " ";
        if (m != reference && ref_it != row.values.end() &&
            std::abs(ref_it->second) > 0)
          csv << std::abs(it->second - ref_it->second) / std::abs(ref_it->second);
        else
          csv << "nan";
      }
      csv << " " << row.cond_B << " " << (row.error.empty() ? "-" : row.error) << "\n";
    }
  }
  write_file(out / "sweep.csv", csv.str());

  json summary;
  summary["reference"] = reference;
  summary["rows"] = rows.size();
  for (const std::string& m : methods) {
    if (m == reference) continue;
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
      std::vector<double> hs, errs;
      for (const Row& row : rows) {
        if (!row.error.empty()) continue;
        if ((row.x - points[pi].first).norm() > 0 ||
            (row.y - points[pi].second).norm() > 0)
          continue;
        const auto it = row.values.find(m);
        const auto ref_it = row.values.find(reference);
        if (it == row.values.end() || ref_it == row.values.end()) continue;
        if (std::abs(ref_it->second) == 0) continue;
        hs.push_back(row.hbar);
        errs.push_back(std::abs(it->second - ref_it->second) / std::abs(ref_it->second));
      }
      if (hs.size() < 2) continue;
      const RateFit fit = fit_rate(hs, errs, error_floor);
      double max_err = 0;
      for (double e : errs) max_err = std::max(max_err, e);
      json entry;
      entry["method"] = m;
      entry["point"] = pi;
      entry["fitted_order"] = fit.slope;
      entry["stderr"] = fit.stderr_slope;
      entry["points_used"] = fit.points_used;
      entry["max_rel_error"] = max_err;
      if (max_err < 10 * error_floor) entry["note"] = "exact";
      summary["fits"].push_back(entry);
    }
  }
  if (ehrenfest) {
    // budget diagnostics: cond_B ~ hbar^-delta along t(hbar), omega ~ hbar^-lambda
    std::vector<double> hs, conds;
    for (const Row& row : rows)
      if (row.error.empty() && row.cond_B > 0) {
        hs.push_back(row.hbar);
        conds.push_back(row.cond_B);
      }
    if (hs.size() >= 2) {
      const RateFit delta_fit = fit_rate(hs, conds, 0.0);
      std::vector<PhasePoint> omega_pts;
      for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
          omega_pts.emplace_back(Vec::Constant(d, 0.7 * i), Vec::Constant(d, 0.7 * j));
      const OmegaEstimate omega = estimate_omega(
          model, ehrenfest_c * std::log(1.0 / hbars.back()), omega_pts, 1e-10);
      const double lambda_fit = ehrenfest_c * omega.gamma_fit;
      summary["delta_fit"] = -delta_fit.slope;
      summary["lambda_fit"] = lambda_fit;
      summary["ehrenfest_margin"] = 6 * (-delta_fit.slope) + 24 * lambda_fit;
      summary["gamma_fit"] = omega.gamma_fit;
    }
  }
  write_file(out / "sweep.json", summary.dump(2) + "\n");
  return 0;
}

}  // namespace

int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_dir, int threads, unsigned long seed) {
  const fs::path out(out_dir.empty() ? "." : out_dir);
  fs::create_directories(out);
  std::ostringstream log;
  log << "command: " << command << "\nconfig: " << config_path << "\nseed: " << seed
      << "\nthreads: " << threads << "\n";
  int status = 0;
  try {
    const Config cfg = Config::load(config_path);
    if (command == "flow-check")
      status = run_flow_check(cfg, out, threads, seed);
    else if (command == "hk-kernel")
      status = run_hk_kernel(cfg, out, threads, seed);
    else if (command == "vanvleck")
      status = run_vanvleck(cfg, out, threads, seed);
    else if (command == "propagate")
      status = run_propagate(cfg, out, threads, seed);
    else if (command == "statphase-check")
      status = run_statphase_check(cfg, out, threads, seed);
    else if (command == "sweep")
      status = run_sweep(cfg, out, threads, seed);
    else
      throw Error("unknown subcommand '" + command + "'");
    log << "status: " << status << "\n";
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    status = 2;
  }
  write_file(out / "run.log", log.str());
  return status;
}

}  // namespace semiprop
