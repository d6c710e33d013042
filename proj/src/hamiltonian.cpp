#include "semiprop/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

namespace semiprop {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

HamiltonianModel make_free(int d) {
  HamiltonianModel m;
  m.dim = d;
  m.name = "free";
  m.subquad_bound = 1.0;
  m.eval = [](double, const PhasePoint& z) { return 0.5 * z.p.squaredNorm(); };
  m.grad = [d](double, const PhasePoint& z) {
    Vec g = Vec::Zero(2 * d);
    g.tail(d) = z.p;
    return g;
  };
  m.hess = [d](double, const PhasePoint&) {
    Mat h = Mat::Zero(2 * d, 2 * d);
    h.bottomRightCorner(d, d).setIdentity();
    return h;
  };
  return m;
}

// sign = +1 harmonic, -1 inverted; freq per axis.
HamiltonianModel make_quadratic(const std::vector<double>& freq, double sign,
                                const std::string& name) {
  const int d = static_cast<int>(freq.size());
  Vec w2(d);
  for (int i = 0; i < d; ++i) w2[i] = sign * freq[i] * freq[i];
  HamiltonianModel m;
  m.dim = d;
  m.name = name;
  m.subquad_bound = std::max(1.0, w2.cwiseAbs().maxCoeff());
  m.eval = [w2](double, const PhasePoint& z) {
    return 0.5 * (z.p.squaredNorm() + z.q.cwiseProduct(w2.cwiseProduct(z.q)).sum());
  };
  m.grad = [w2, d](double, const PhasePoint& z) {
    Vec g(2 * d);
    g.head(d) = w2.cwiseProduct(z.q);
    g.tail(d) = z.p;
    return g;
  };
  m.hess = [w2, d](double, const PhasePoint&) {
    Mat h = Mat::Zero(2 * d, 2 * d);
    h.topLeftCorner(d, d) = w2.asDiagonal();
    h.bottomRightCorner(d, d).setIdentity();
    return h;
  };
  return m;
}

HamiltonianModel make_quartic(double lambda) {
  HamiltonianModel m;
  m.dim = 1;
  m.name = "quartic";
  m.subquad_bound = 0.0;  // not globally subquadratic for lambda > 0
  m.eval = [lambda](double, const PhasePoint& z) {
    const double q = z.q[0], p = z.p[0];
    return 0.5 * p * p + 0.5 * q * q + lambda * q * q * q * q;
  };
  m.grad = [lambda](double, const PhasePoint& z) {
    const double q = z.q[0];
    Vec g(2);
    g[0] = q + 4.0 * lambda * q * q * q;
    g[1] = z.p[0];
    return g;
  };
  m.hess = [lambda](double, const PhasePoint& z) {
    const double q = z.q[0];
    Mat h = Mat::Zero(2, 2);
    h(0, 0) = 1.0 + 12.0 * lambda * q * q;
    h(1, 1) = 1.0;
    return h;
  };
  return m;
}

}  // namespace

HamiltonianModel builtin_model(const std::string& name, const std::vector<double>& params) {
  if (!all_finite(params)) throw Error("builtin_model: non-finite parameter");
  if (name == "free") {
    return make_free(params.empty() ? 1 : static_cast<int>(params.size()));
  }
  if (name == "harmonic") {
    if (params.empty()) throw Error("builtin_model: harmonic needs at least one frequency");
    return make_quadratic(params, +1.0, "harmonic");
  }
  if (name == "inverted_harmonic") {
    if (params.empty()) throw Error("builtin_model: inverted_harmonic needs at least one rate");
    return make_quadratic(params, -1.0, "inverted_harmonic");
  }
  if (name == "quartic") {
    if (params.size() != 1) throw Error("builtin_model: quartic takes a single coupling");
    return make_quartic(params[0]);
  }
  throw Error("builtin_model: unknown model name '" + name + "'");
}

GradientCheckReport check_gradients(const HamiltonianModel& model,
                                    const std::vector<PhasePoint>& samples, double tol) {
  if (samples.empty()) throw Error("check_gradients: samples must be nonempty");
  const int d = model.dim;
  const double h = 1e-5;
  GradientCheckReport report;

  auto eval_at = [&](const PhasePoint& z, int i, double delta) {
    PhasePoint zs = z;
    if (i < d)
      zs.q[i] += delta;
    else
      zs.p[i - d] += delta;
    return model.eval(0.0, zs);
  };
  auto grad_at = [&](const PhasePoint& z, int i, double delta) {
    PhasePoint zs = z;
    if (i < d)
      zs.q[i] += delta;
    else
      zs.p[i - d] += delta;
    return model.grad(0.0, zs);
  };

  for (const auto& z : samples) {
    GradientCheckEntry e;
    e.z = z;
    const Vec g = model.grad(0.0, z);
    const Mat H = model.hess(0.0, z);
    const double gscale = std::max(1.0, g.cwiseAbs().maxCoeff());
    const double hscale = std::max(1.0, H.cwiseAbs().maxCoeff());
    for (int i = 0; i < 2 * d; ++i) {
      const double fd = (eval_at(z, i, h) - eval_at(z, i, -h)) / (2.0 * h);
      e.grad_deviation = std::max(e.grad_deviation, std::abs(fd - g[i]) / gscale);
      const Vec col = (grad_at(z, i, h) - grad_at(z, i, -h)) / (2.0 * h);
      e.hess_deviation =
          std::max(e.hess_deviation, (col - H.col(i)).cwiseAbs().maxCoeff() / hscale);
    }
    e.hess_asymmetry = (H - H.transpose()).cwiseAbs().maxCoeff();
    e.ok = e.grad_deviation <= tol && e.hess_deviation <= tol && e.hess_asymmetry <= 1e-10;
    report.max_grad_deviation = std::max(report.max_grad_deviation, e.grad_deviation);
    report.max_hess_deviation = std::max(report.max_hess_deviation, e.hess_deviation);
    report.all_ok = report.all_ok && e.ok;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace semiprop
