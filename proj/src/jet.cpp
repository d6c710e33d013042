#include "semiprop/jet.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

namespace semiprop {

namespace {

// Enumeration of multi-indices with |alpha| <= order, graded lexicographic.
struct IndexTable {
  std::vector<std::vector<int>> exps;
  std::map<std::vector<int>, int> slot;
};

void enumerate(int nvars, int remaining, std::vector<int>& cur, IndexTable& tab) {
  if (static_cast<int>(cur.size()) == nvars) {
    tab.slot[cur] = static_cast<int>(tab.exps.size());
    tab.exps.push_back(cur);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    cur.push_back(e);
    enumerate(nvars, remaining - e, cur, tab);
    cur.pop_back();
  }
}

const IndexTable& table(int nvars, int order) {
  static std::map<std::pair<int, int>, IndexTable> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(nvars, order);
  auto it = cache.find(key);
  if (it == cache.end()) {
    IndexTable tab;
    std::vector<int> cur;
    // grade by total degree so slot 0 is the constant term
    for (int deg = 0; deg <= order; ++deg) {
      IndexTable all;
      std::vector<int> c2;
      enumerate(nvars, deg, c2, all);
      for (auto& e : all.exps)
        if (std::accumulate(e.begin(), e.end(), 0) == deg) {
          tab.slot[e] = static_cast<int>(tab.exps.size());
          tab.exps.push_back(e);
        }
    }
    it = cache.emplace(key, std::move(tab)).first;
  }
  return it->second;
}

int degree(const std::vector<int>& alpha) {
  return std::accumulate(alpha.begin(), alpha.end(), 0);
}

}  // namespace

Jet::Jet(int nvars, int order) : nvars_(nvars), order_(order) {
  if (nvars < 1 || order < 0) throw Error("Jet: need nvars >= 1 and order >= 0");
  coeffs_.assign(table(nvars, order).exps.size(), Complex(0));
}

Jet Jet::constant(int nvars, int order, Complex value) {
  Jet j(nvars, order);
  j.coeffs_[0] = value;
  return j;
}

Jet Jet::variable(int nvars, int order, int which) {
  Jet j(nvars, order);
  std::vector<int> alpha(nvars, 0);
  alpha[which] = 1;
  j.set_coeff(alpha, Complex(1));
  return j;
}

Complex Jet::coeff(const std::vector<int>& alpha) const {
  const auto& tab = table(nvars_, order_);
  auto it = tab.slot.find(alpha);
  if (it == tab.slot.end()) throw Error("Jet::coeff: multi-index out of range");
  return coeffs_[it->second];
}

void Jet::set_coeff(const std::vector<int>& alpha, Complex value) {
  const auto& tab = table(nvars_, order_);
  auto it = tab.slot.find(alpha);
  if (it == tab.slot.end()) throw Error("Jet::set_coeff: multi-index out of range");
  coeffs_[it->second] = value;
}

const std::vector<int>& Jet::exponents(int slot) const {
  return table(nvars_, order_).exps[slot];
}

Jet Jet::operator+(const Jet& other) const {
  if (nvars_ != other.nvars_ || order_ != other.order_)
    throw Error("Jet: dimension/order mismatch");
  Jet r = *this;
  for (size_t i = 0; i < coeffs_.size(); ++i) r.coeffs_[i] += other.coeffs_[i];
  return r;
}

Jet Jet::operator-(const Jet& other) const { return *this + other.scaled(Complex(-1)); }

Jet Jet::scaled(Complex factor) const {
  Jet r = *this;
  for (auto& c : r.coeffs_) c *= factor;
  return r;
}

Jet Jet::operator*(const Jet& other) const {
  if (nvars_ != other.nvars_ || order_ != other.order_)
    throw Error("Jet: dimension/order mismatch");
  const auto& tab = table(nvars_, order_);
  Jet r(nvars_, order_);
  std::vector<int> sum(nvars_);
  for (size_t i = 0; i < coeffs_.size(); ++i) {
    if (coeffs_[i] == Complex(0)) continue;
    const auto& ea = tab.exps[i];
    const int da = degree(ea);
    for (size_t j = 0; j < other.coeffs_.size(); ++j) {
      if (other.coeffs_[j] == Complex(0)) continue;
      const auto& eb = tab.exps[j];
      if (da + degree(eb) > order_) continue;
      for (int v = 0; v < nvars_; ++v) sum[v] = ea[v] + eb[v];
      r.coeffs_[tab.slot.at(sum)] += coeffs_[i] * other.coeffs_[j];
    }
  }
  return r;
}

Jet Jet::derivative(int var) const {
  if (order_ == 0) return Jet(nvars_, 0);
  const auto& tab = table(nvars_, order_);
  Jet r(nvars_, order_ - 1);
  const auto& rtab = table(nvars_, order_ - 1);
  for (size_t i = 0; i < coeffs_.size(); ++i) {
    const auto& e = tab.exps[i];
    if (e[var] == 0 || coeffs_[i] == Complex(0)) continue;
    std::vector<int> de = e;
    de[var] -= 1;
    if (degree(de) > order_ - 1) continue;
    r.coeffs_[rtab.slot.at(de)] += coeffs_[i] * double(e[var]);
  }
  return r;
}

Jet Jet::truncated(int new_order) const {
  Jet r(nvars_, new_order);
  const auto& tab = table(nvars_, order_);
  const auto& rtab = table(nvars_, new_order);
  for (size_t i = 0; i < coeffs_.size(); ++i) {
    const auto& e = tab.exps[i];
    if (degree(e) > new_order) continue;
    r.coeffs_[rtab.slot.at(e)] = coeffs_[i];
  }
  return r;
}

Jet Jet::pow(int n) const {
  Jet r = Jet::constant(nvars_, order_, Complex(1));
  for (int i = 0; i < n; ++i) r = r * (*this);
  return r;
}

Jet Jet::exp() const {
  const Complex c0 = coeffs_[0];
  Jet nil = *this;
  nil.coeffs_[0] = Complex(0);
  Jet sum = Jet::constant(nvars_, order_, Complex(1));
  Jet term = Jet::constant(nvars_, order_, Complex(1));
  for (int n = 1; n <= order_; ++n) {
    term = term * nil;
    sum = sum + term.scaled(1.0 / std::tgamma(n + 1.0));
  }
  return sum.scaled(std::exp(c0));
}

Jet apply_quadratic_form_power(const CMat& Ainv, const Jet& f, int ell) {
  if (ell < 0) throw Error("apply_quadratic_form_power: ell must be >= 0");
  if (f.order() < 2 * ell)
    throw Error("apply_quadratic_form_power: insufficient jet order");
  if (Ainv.rows() != f.nvars() || Ainv.cols() != f.nvars())
    throw Error("apply_quadratic_form_power: matrix dimension mismatch");
  Jet cur = f;
  for (int k = 0; k < ell; ++k) {
    Jet next(cur.nvars(), cur.order() - 2);
    for (int a = 0; a < cur.nvars(); ++a) {
      const Jet da = cur.derivative(a);
      for (int b = 0; b < cur.nvars(); ++b) {
        if (Ainv(a, b) == Complex(0)) continue;
        // D_a D_b = -d_a d_b
        next = next + da.derivative(b).scaled(-Ainv(a, b));
      }
    }
    cur = std::move(next);
  }
  return cur;
}

Jet build_g(const Jet& phase) {
  if (phase.order() < 3) throw Error("build_g: phase order must be >= 3");
  std::vector<int> alpha(phase.nvars(), 0);
  for (int v = 0; v < phase.nvars(); ++v) {
    alpha.assign(phase.nvars(), 0);
    alpha[v] = 1;
    if (std::abs(phase.coeff(alpha)) > 1e-12)
      throw Error("build_g: phase has nonzero linear part (not a critical point)");
  }
  Jet g = phase;
  for (int slot = 0; slot < g.num_terms(); ++slot) {
    int deg = 0;
    for (int e : g.exponents(slot)) deg += e;
    if (deg <= 2) g.set_coeff_at(slot, Complex(0));
  }
  return g;
}

CMat jet_hessian(const Jet& phase) {
  const int n = phase.nvars();
  if (phase.order() < 2) throw Error("jet_hessian: phase order must be >= 2");
  CMat H(n, n);
  std::vector<int> alpha(n, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      alpha.assign(n, 0);
      alpha[a] += 1;
      alpha[b] += 1;
      H(a, b) = phase.coeff(alpha) * (a == b ? 2.0 : 1.0);
    }
  return H;
}

}  // namespace semiprop
