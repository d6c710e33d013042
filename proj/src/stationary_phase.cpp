#include "semiprop/stationary_phase.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace semiprop {

SpParameters validate_parameters(double mu, double nu, double sigma) {
  if (mu < 0 || nu < 0 || sigma < 0)
    throw Error("validate_parameters: exponents must be nonnegative");
  SpParameters p;
  p.mu = mu;
  p.nu = nu;
  p.sigma = sigma;
  p.rho = sigma + nu + mu;
  p.exponent_gain = 1.0 - 5.0 * mu - 6.0 * sigma - 2.0 * nu;
  if (p.exponent_gain <= 0) {
    std::ostringstream msg;
    msg << "validate_parameters: constraint 1 > 5 mu + 6 sigma + 2 nu violated: "
        << "5*" << mu << " + 6*" << sigma << " + 2*" << nu << " = "
        << 5 * mu + 6 * sigma + 2 * nu;
    throw Error(msg.str());
  }
  return p;
}

Complex det_sqrt_branch(const CMat& E) {
  if (E.rows() != E.cols()) throw Error("det_sqrt_branch: matrix must be square");
  if ((E - E.transpose()).cwiseAbs().maxCoeff() >
      1e-8 * std::max(1.0, E.cwiseAbs().maxCoeff()))
    throw Error("det_sqrt_branch: matrix must be symmetric");
  Eigen::ComplexEigenSolver<CMat> solver(E, /*computeEigenvectors=*/false);
  Complex result(1.0, 0.0);
  for (int i = 0; i < E.rows(); ++i) {
    const Complex lam = solver.eigenvalues()[i];
    const double a = std::arg(lam);
    if (a < -kPi / 2 - 1e-9 || a > kPi / 2 + 1e-9)
      throw Error("det_sqrt_branch: eigenvalue argument outside [-pi/2, pi/2]");
    result *= std::sqrt(std::abs(lam)) * std::exp(Complex(0, a / 2.0));
  }
  return result;
}

SpExpansion sp_expansion(const Jet& phase, const Jet& amplitude, double hbar, int k,
                         const SpParameters* params) {
  if (k < 1) throw Error("sp_expansion: k must be >= 1");
  if (phase.nvars() != amplitude.nvars()) throw Error("sp_expansion: nvars mismatch");
  if (phase.order() < 2) throw Error("sp_expansion: phase order must be >= 2");
  const int n = phase.nvars();

  const Complex phi0 = phase.value_at_zero();
  if (phi0.imag() < -1e-12)
    throw Error("sp_expansion: Im phi(0) negative");

  const CMat H = jet_hessian(phase);
  const Complex i1(0, 1);
  Eigen::FullPivLU<CMat> lu(H);
  if (!lu.isInvertible()) throw Error("sp_expansion: singular phase Hessian");
  const CMat Hinv = lu.inverse();

  SpExpansion result;
  result.prefactor = std::pow(2.0 * kPi * hbar, 0.5 * n) * std::exp(i1 * phi0 / hbar) /
                     det_sqrt_branch(H / i1);

  // Work at the order needed for the largest operator power (l <= 3(k-1)).
  const int work_order = std::max(2, 6 * (k - 1));
  const Jet u = amplitude.truncated(work_order);
  std::vector<Jet> g_pow;  // g^m
  g_pow.push_back(Jet::constant(n, work_order, Complex(1)));
  if (k >= 2) {
    const Jet g = build_g(phase.truncated(work_order));
    for (int m = 1; m <= 2 * (k - 1); ++m) g_pow.push_back(g_pow.back() * g);
  }

  std::vector<double> fact{1.0};
  for (int i = 1; i <= 3 * k; ++i) fact.push_back(fact.back() * i);

  for (int j = 0; j < k; ++j) {
    Complex lj(0, 0);
    for (int m = 0; m <= 2 * j; ++m) {
      const int ell = j + m;
      const Jet gm_u = g_pow[m] * u;
      const Complex val = apply_quadratic_form_power(Hinv, gm_u, ell).value_at_zero();
      Complex i_pow_minus_j(1, 0);
      for (int r = 0; r < j; ++r) i_pow_minus_j *= Complex(0, -1);
      lj += i_pow_minus_j * std::pow(2.0, -ell) / (fact[ell] * fact[m]) * val;
    }
    result.terms.push_back(result.prefactor * std::pow(hbar, j) * lj);
    result.partial_sums.push_back(result.terms.back() +
                                  (j ? result.partial_sums.back() : Complex(0)));
  }

  const double gain = params ? params->exponent_gain : 1.0;
  const double rho = params ? params->rho : 0.0;
  result.predicted_error_exponent = k * gain + rho * n;
  return result;
}

namespace {

// 21-point Gauss-Legendre rule on [-1, 1], computed once by Newton iteration.
struct GaussRule {
  std::vector<double> x, w;
};

const GaussRule& gauss21() {
  static const GaussRule rule = [] {
    const int n = 21;
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
      double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
          const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      r.x[i] = x;
      r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
  }();
  return rule;
}

struct OracleContext {
  const ScalarField* phase;
  const ScalarField* amplitude;
  double hbar;
  double tol_density;  // absolute tolerance per unit measure
  int max_depth;
  double worst_defect = 0.0;
  bool converged = true;
};

Complex integrand(const OracleContext& ctx, const Vec& x) {
  const Complex phi = (*ctx.phase)(x);
  const Complex u = (*ctx.amplitude)(x);
  if (u == Complex(0)) return Complex(0);
  return std::exp(Complex(0, 1) * phi / ctx.hbar) * u;
}

Complex cell_rule_1d(const OracleContext& ctx, double lo, double hi) {
  const auto& g = gauss21();
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  Complex sum(0);
  Vec x(1);
  for (size_t i = 0; i < g.x.size(); ++i) {
    x[0] = mid + half * g.x[i];
    sum += g.w[i] * integrand(ctx, x);
  }
  return sum * half;
}

Complex adapt_1d(OracleContext& ctx, double lo, double hi, Complex whole, int depth) {
  const double mid = 0.5 * (lo + hi);
  const Complex left = cell_rule_1d(ctx, lo, mid);
  const Complex right = cell_rule_1d(ctx, mid, hi);
  const double defect = std::abs(left + right - whole);
  if (defect <= ctx.tol_density * (hi - lo) || depth >= ctx.max_depth) {
    if (defect > ctx.tol_density * (hi - lo)) {
      ctx.converged = false;
      ctx.worst_defect = std::max(ctx.worst_defect, defect);
    }
    return left + right;
  }
  return adapt_1d(ctx, lo, mid, left, depth + 1) + adapt_1d(ctx, mid, hi, right, depth + 1);
}

Complex cell_rule_2d(const OracleContext& ctx, const Vec& lo, const Vec& hi) {
  const auto& g = gauss21();
  Complex sum(0);
  Vec x(2);
  const double mx = 0.5 * (lo[0] + hi[0]), hx = 0.5 * (hi[0] - lo[0]);
  const double my = 0.5 * (lo[1] + hi[1]), hy = 0.5 * (hi[1] - lo[1]);
  for (size_t i = 0; i < g.x.size(); ++i)
    for (size_t j = 0; j < g.x.size(); ++j) {
      x[0] = mx + hx * g.x[i];
      x[1] = my + hy * g.x[j];
      sum += g.w[i] * g.w[j] * integrand(ctx, x);
    }
  return sum * hx * hy;
}

Complex adapt_2d(OracleContext& ctx, const Vec& lo, const Vec& hi, Complex whole, int depth) {
  const Vec mid = 0.5 * (lo + hi);
  Complex parts(0);
  Complex sub[4];
  int idx = 0;
  for (int ix = 0; ix < 2; ++ix)
    for (int iy = 0; iy < 2; ++iy) {
      Vec l(2), h(2);
      l[0] = ix ? mid[0] : lo[0];
      h[0] = ix ? hi[0] : mid[0];
      l[1] = iy ? mid[1] : lo[1];
      h[1] = iy ? hi[1] : mid[1];
      sub[idx] = cell_rule_2d(ctx, l, h);
      parts += sub[idx];
      ++idx;
    }
  const double measure = (hi[0] - lo[0]) * (hi[1] - lo[1]);
  const double defect = std::abs(parts - whole);
  if (defect <= ctx.tol_density * measure || depth >= ctx.max_depth) {
    if (defect > ctx.tol_density * measure) {
      ctx.converged = false;
      ctx.worst_defect = std::max(ctx.worst_defect, defect);
    }
    return parts;
  }
  Complex total(0);
  idx = 0;
  for (int ix = 0; ix < 2; ++ix)
    for (int iy = 0; iy < 2; ++iy) {
      Vec l(2), h(2);
      l[0] = ix ? mid[0] : lo[0];
      h[0] = ix ? hi[0] : mid[0];
      l[1] = iy ? mid[1] : lo[1];
      h[1] = iy ? hi[1] : mid[1];
      total += adapt_2d(ctx, l, h, sub[idx], depth + 1);
      ++idx;
    }
  return total;
}

// Crude bound on |grad phase| from samples, to size the initial cells so the
// 21-point rule sees several nodes per local wavelength.
double estimate_max_gradient(const ScalarField& phase, const QuadratureBox& box) {
  const int n = static_cast<int>(box.lo.size());
  const int samples = 65;
  double gmax = 0.0;
  if (n == 1) {
    const double h = (box.hi[0] - box.lo[0]) / (samples - 1);
    Vec x(1);
    for (int i = 0; i + 1 < samples; ++i) {
      x[0] = box.lo[0] + i * h;
      const Complex f0 = phase(x);
      x[0] += h;
      gmax = std::max(gmax, std::abs(phase(x) - f0) / h);
    }
  } else {
    const int s = 17;
    Vec x(2);
    for (int i = 0; i + 1 < s; ++i)
      for (int j = 0; j + 1 < s; ++j) {
        const double hx = (box.hi[0] - box.lo[0]) / (s - 1);
        const double hy = (box.hi[1] - box.lo[1]) / (s - 1);
        x[0] = box.lo[0] + i * hx;
        x[1] = box.lo[1] + j * hy;
        const Complex f0 = phase(x);
        x[0] += hx;
        const Complex fx = phase(x);
        x[0] -= hx;
        x[1] += hy;
        const Complex fy = phase(x);
        gmax = std::max(gmax, std::hypot(std::abs(fx - f0) / hx, std::abs(fy - f0) / hy));
      }
  }
  return gmax;
}

}  // namespace

QuadratureResult oracle_quadrature(const ScalarField& phase_fn, const ScalarField& amplitude_fn,
                                   double hbar, const QuadratureBox& domain, double tol) {
  const int n = static_cast<int>(domain.lo.size());
  if (n < 1 || n > 2 || domain.hi.size() != domain.lo.size())
    throw Error("oracle_quadrature: domain must be a box in 1 or 2 variables");
  if (hbar <= 0 || tol <= 0) throw Error("oracle_quadrature: hbar and tol must be positive");

  double measure = 1.0;
  for (int i = 0; i < n; ++i) {
    if (domain.hi[i] <= domain.lo[i]) throw Error("oracle_quadrature: empty box");
    measure *= domain.hi[i] - domain.lo[i];
  }

  OracleContext ctx;
  ctx.phase = &phase_fn;
  ctx.amplitude = &amplitude_fn;
  ctx.hbar = hbar;
  ctx.tol_density = tol / measure;
  ctx.max_depth = 26;

  const double gmax = estimate_max_gradient(phase_fn, domain);
  // about 8 rule nodes per local wavelength 2 pi hbar / |grad phi|
  const double target_cell =
      gmax > 0 ? 21.0 * 2.0 * kPi * hbar / (8.0 * gmax) : measure;

  QuadratureResult res;
  if (n == 1) {
    const double width = domain.hi[0] - domain.lo[0];
    int cells = std::clamp(static_cast<int>(std::ceil(width / target_cell)), 4, 1 << 13);
    Complex total(0);
    for (int c = 0; c < cells; ++c) {
      const double lo = domain.lo[0] + width * c / cells;
      const double hi = domain.lo[0] + width * (c + 1) / cells;
      total += adapt_1d(ctx, lo, hi, cell_rule_1d(ctx, lo, hi), 0);
    }
    res.value = total;
  } else {
    const double wx = domain.hi[0] - domain.lo[0];
    const double wy = domain.hi[1] - domain.lo[1];
    int cx = std::clamp(static_cast<int>(std::ceil(wx / target_cell)), 2, 128);
    int cy = std::clamp(static_cast<int>(std::ceil(wy / target_cell)), 2, 128);
    Complex total(0);
    for (int a = 0; a < cx; ++a)
      for (int b = 0; b < cy; ++b) {
        Vec lo(2), hi(2);
        lo[0] = domain.lo[0] + wx * a / cx;
        hi[0] = domain.lo[0] + wx * (a + 1) / cx;
        lo[1] = domain.lo[1] + wy * b / cy;
        hi[1] = domain.lo[1] + wy * (b + 1) / cy;
        total += adapt_2d(ctx, lo, hi, cell_rule_2d(ctx, lo, hi), 0);
      }
    res.value = total;
  }
  res.converged = ctx.converged;
  res.achieved_tol = ctx.converged ? tol : ctx.worst_defect;
  return res;
}

}  // namespace semiprop
